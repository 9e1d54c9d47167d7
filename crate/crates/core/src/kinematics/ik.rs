//! Damped-least-squares inverse kinematics.
//!
//! Two solver shapes mirror the two embodiments: a per-arm solve against a
//! rotation + translation target (X1), and a whole-body solve that stacks
//! both arms with the torso lift and enforces static balance (H1).

use nalgebra::{DMatrix, DVector};

use super::balance::com_in_support;
use super::chain::KinematicChain;
use super::robot::{Arm, FullConfig, RobotModel};
use super::KinematicsError;
use crate::geometry::{is_rotation, rotation_log, Mat3, Transform, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub struct DlsConfig {
    pub damping: f64,
    /// Largest per-joint change in one iteration (radians, meters for lift).
    pub max_step: f64,
    pub max_iterations: usize,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
    /// Gain of the pull toward the start configuration, applied in the task
    /// null space of the whole-body solve.
    pub proximal_gain: f64,
}

impl Default for DlsConfig {
    fn default() -> Self {
        DlsConfig {
            damping: 0.05,
            max_step: 0.2,
            max_iterations: 200,
            position_tolerance: 1e-3,
            orientation_tolerance: 1e-2,
            proximal_gain: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IkSolution<Q> {
    pub q: Q,
    pub iterations: usize,
    pub position_error: f64,
    pub orientation_error: f64,
}

/// Translation error and rotation-vector error taking `current` to the target.
pub fn pose_error(current: &Transform, target_rotation: &Mat3, target_translation: &Vec3) -> (Vec3, Vec3) {
    let dp = target_translation - current.translation();
    let dr = rotation_log(&(target_rotation * current.rotation().transpose()));
    (dp, dr)
}

fn error_vector(dp: &Vec3, dr: &Vec3) -> DVector<f64> {
    DVector::from_column_slice(&[dp.x, dp.y, dp.z, dr.x, dr.y, dr.z])
}

/// `J^T (J J^T + lambda^2 I)^-1`
fn damped_pseudo_inverse(j: &DMatrix<f64>, damping: f64) -> DMatrix<f64> {
    let rows = j.nrows();
    let a = j * j.transpose() + DMatrix::identity(rows, rows) * (damping * damping);
    let chol = a.cholesky().expect("damped normal matrix is positive definite");
    j.transpose() * chol.inverse()
}

fn limit_step(dq: &mut DVector<f64>, max_step: f64) {
    let largest = dq.amax();
    if largest > max_step {
        *dq *= max_step / largest;
    }
}

/// Solve one arm for a target given in the torso frame.
pub fn ik_decoupled(
    chain: &KinematicChain,
    target_rotation: &Mat3,
    target_translation: &Vec3,
    q0: &[f64],
    cfg: &DlsConfig,
) -> Result<Option<IkSolution<Vec<f64>>>, KinematicsError> {
    chain.check_dim(q0)?;
    if !is_rotation(target_rotation, 1e-6) {
        return Err(KinematicsError::InvalidRotation);
    }
    let mut q = q0.to_vec();
    chain.clamp(&mut q);
    let mount = Transform::identity();
    for iteration in 0..=cfg.max_iterations {
        let (ee, j) = chain.jacobian(&q, &mount);
        let (dp, dr) = pose_error(&ee, target_rotation, target_translation);
        if dp.norm() < cfg.position_tolerance && dr.norm() < cfg.orientation_tolerance {
            return Ok(Some(IkSolution { q, iterations: iteration, position_error: dp.norm(), orientation_error: dr.norm() }));
        }
        if iteration == cfg.max_iterations {
            break;
        }
        let mut dq = damped_pseudo_inverse(&j, cfg.damping) * error_vector(&dp, &dr);
        limit_step(&mut dq, cfg.max_step);
        for (v, d) in q.iter_mut().zip(dq.iter()) {
            *v += d;
        }
        chain.clamp(&mut q);
    }
    Ok(None)
}

/// Workspace samples tried per arm before an IK target is declared unsolvable.
pub const IK_CANDIDATES: usize = 8;

/// Arm-only joint solution for a ground-frame point at `lift`, trying the
/// `candidates` nearest workspace samples for orientation and seed.
pub fn solve_arm_point(model: &RobotModel, arm: Arm, point: &Vec3, lift: f64, candidates: usize) -> Option<Vec<f64>> {
    let torso = Vec3::new(0.0, 0.0, model.shoulder_height + lift);
    let cfg = DlsConfig::default();
    model.reach_candidates(arm, point, lift, candidates).into_iter().find_map(|c| {
        ik_decoupled(model.chain(arm), &c.rotation, &(point - torso), &c.seed, &cfg).ok().flatten().map(|s| s.q)
    })
}

struct WholeBodyResidual {
    errors: DVector<f64>,
    jacobian: DMatrix<f64>,
    position_error: f64,
    orientation_error: f64,
}

fn whole_body_residual(model: &RobotModel, targets: &[Transform; 2], q: &FullConfig) -> WholeBodyResidual {
    let nl = model.left.dof();
    let nr = model.right.dof();
    let n = nl + nr + 1;
    let mount = model.torso_mount(q.lift);
    let mut jacobian = DMatrix::zeros(12, n);
    let mut errors = DVector::zeros(12);
    let (mut pos, mut ori) = (0.0f64, 0.0f64);
    for arm in Arm::BOTH {
        let (ee, j) = model.chain(arm).jacobian(q.arm(arm), &mount);
        let (dp, dr) = pose_error(&ee, &targets[arm.index()].rotation(), &targets[arm.index()].translation());
        pos = pos.max(dp.norm());
        ori = ori.max(dr.norm());
        let row = 6 * arm.index();
        let col = if arm == Arm::Left { 0 } else { nl };
        jacobian.view_mut((row, col), (6, j.ncols())).copy_from(&j);
        // torso lift translates the whole arm vertically
        jacobian[(row + 2, n - 1)] = 1.0;
        errors.rows_mut(row, 6).copy_from(&error_vector(&dp, &dr));
    }
    WholeBodyResidual { errors, jacobian, position_error: pos, orientation_error: ori }
}

fn clamp_full(model: &RobotModel, q: &mut FullConfig) {
    model.left.clamp(&mut q.left);
    model.right.clamp(&mut q.right);
    q.lift = q.lift.clamp(model.lift_range[0], model.lift_range[1]);
}

fn solve_whole_body_from(
    model: &RobotModel,
    targets: &[Transform; 2],
    start: &FullConfig,
    anchor: &DVector<f64>,
    cfg: &DlsConfig,
) -> Option<IkSolution<FullConfig>> {
    let nl = model.left.dof();
    let nr = model.right.dof();
    let mut q = start.clone();
    clamp_full(model, &mut q);
    for iteration in 0..=cfg.max_iterations {
        let res = whole_body_residual(model, targets, &q);
        if res.position_error < cfg.position_tolerance && res.orientation_error < cfg.orientation_tolerance {
            return Some(IkSolution {
                q,
                iterations: iteration,
                position_error: res.position_error,
                orientation_error: res.orientation_error,
            });
        }
        if iteration == cfg.max_iterations {
            break;
        }
        let pinv = damped_pseudo_inverse(&res.jacobian, cfg.damping);
        let n = pinv.nrows();
        // undamped projector
        let exact = res.jacobian.clone().pseudo_inverse(1e-9).expect("svd pseudo-inverse");
        let null_projector = DMatrix::identity(n, n) - exact * &res.jacobian;
        let current = DVector::from_vec(q.to_vec());
        // proximal pull only during the first half of the budget
        let gain = if iteration < cfg.max_iterations / 2 { cfg.proximal_gain } else { 0.0 };
        let mut dq = &pinv * &res.errors + null_projector * ((anchor - current) * gain);
        limit_step(&mut dq, cfg.max_step);
        let next: Vec<f64> = q.to_vec().iter().zip(dq.iter()).map(|(a, b)| a + b).collect();
        q = FullConfig::from_slice(&next, nl, nr).expect("dimensions fixed by model");
        clamp_full(model, &mut q);
    }
    None
}

/// Solve both arms and the torso lift together for ground-frame targets.
///
/// The iteration pulls toward `q0` inside the task null space, so among
/// solutions it prefers ones near the current joint state. `payload` is the
/// mass carried at each end effector; a converged configuration is rejected
/// unless its center of mass projects inside the support polygon. Starts are
/// tried from `q0` and then from `q0` re-seeded at the lift extremes and midpoint.
pub fn ik_whole_body(
    model: &RobotModel,
    targets: &[Transform; 2],
    q0: &FullConfig,
    payload: [f64; 2],
    cfg: &DlsConfig,
) -> Result<Option<IkSolution<FullConfig>>, KinematicsError> {
    Ok(match ik_whole_body_detailed(model, targets, q0, payload, cfg)? {
        WholeBodyOutcome::Solved(sol) => Some(sol),
        _ => None,
    })
}

#[derive(Clone, Debug)]
pub enum WholeBodyOutcome {
    Solved(IkSolution<FullConfig>),
    /// Some start converged, but every converged configuration was unbalanced.
    Unbalanced,
    NoConvergence,
}

/// [`ik_whole_body`] reporting why no configuration was returned.
pub fn ik_whole_body_detailed(
    model: &RobotModel,
    targets: &[Transform; 2],
    q0: &FullConfig,
    payload: [f64; 2],
    cfg: &DlsConfig,
) -> Result<WholeBodyOutcome, KinematicsError> {
    model.left.check_dim(&q0.left)?;
    model.right.check_dim(&q0.right)?;
    if !targets.iter().all(|t| t.is_valid(1e-6)) {
        return Err(KinematicsError::InvalidRotation);
    }
    let anchor = DVector::from_vec(q0.to_vec());
    let [lo, hi] = model.lift_range;
    let mut starts = vec![q0.clone()];
    for lift in [lo, hi, 0.5 * (lo + hi)] {
        if (lift - q0.lift).abs() > 1e-9 {
            starts.push(FullConfig { lift, ..q0.clone() });
        }
    }
    let mut unbalanced = false;
    for start in &starts {
        if let Some(sol) = solve_whole_body_from(model, targets, start, &anchor, cfg) {
            if com_in_support(model, &sol.q, payload) {
                return Ok(WholeBodyOutcome::Solved(sol));
            }
            unbalanced = true;
        }
    }
    Ok(if unbalanced { WholeBodyOutcome::Unbalanced } else { WholeBodyOutcome::NoConvergence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Embodiment;

    #[test]
    fn fixed_point_needs_no_iterations() {
        let m = RobotModel::builtin(Embodiment::X1);
        let q0 = vec![0.3, 0.2, -0.4, -1.2, 0.5, 0.3];
        let t = m.right.forward_kinematics(&q0).unwrap();
        let sol = ik_decoupled(&m.right, &t.rotation(), &t.translation(), &q0, &DlsConfig::default()).unwrap().unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.q, q0);
    }

    #[test]
    fn unreachable_target_is_absent() {
        let m = RobotModel::builtin(Embodiment::X1);
        let far = Vec3::new(2.0, 0.0, 0.0);
        let sol = ik_decoupled(&m.right, &Mat3::identity(), &far, &m.right.rest, &DlsConfig::default()).unwrap();
        assert!(sol.is_none());
    }

    #[test]
    fn rejects_non_rotation() {
        let m = RobotModel::builtin(Embodiment::X1);
        let bad = Mat3::identity() * 2.0;
        assert!(matches!(
            ik_decoupled(&m.right, &bad, &Vec3::zeros(), &m.right.rest, &DlsConfig::default()),
            Err(KinematicsError::InvalidRotation)
        ));
    }

    #[test]
    fn whole_body_fixed_point() {
        let m = RobotModel::builtin(Embodiment::H1);
        let q0 = m.rest_config(0.1);
        let targets = [
            m.end_effector_pose(Arm::Left, &q0.left, q0.lift).unwrap(),
            m.end_effector_pose(Arm::Right, &q0.right, q0.lift).unwrap(),
        ];
        let sol = ik_whole_body(&m, &targets, &q0, [0.0; 2], &DlsConfig::default()).unwrap().unwrap();
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.q, q0);
    }

    #[test]
    fn small_offset_converges() {
        let m = RobotModel::builtin(Embodiment::X1);
        let q = vec![0.6, 0.1, 0.3, -1.0, -0.4, 0.2];
        let t = m.right.forward_kinematics(&q).unwrap();
        let start: Vec<f64> = q.iter().map(|v| v + 0.15).collect();
        let sol = ik_decoupled(&m.right, &t.rotation(), &t.translation(), &start, &DlsConfig::default()).unwrap().unwrap();
        assert!(sol.position_error < 1e-3 && sol.orientation_error < 1e-2);
    }
}
