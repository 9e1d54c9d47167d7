use dualarm::geometry::{rotation_distance, Mat3, Transform, Vec3};
use dualarm::kinematics::*;
use dualarm::rng::SplitMix64;
use proptest::prelude::*;

type M3 = [[f64; 3]; 3];

fn mul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn apply(a: &M3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

fn rodrigues(axis: [f64; 3], angle: f64) -> M3 {
    let [x, y, z] = axis;
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

fn quat_matrix([w, x, y, z]: [f64; 4]) -> M3 {
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Chain end pose composed term by term: R_base, then per joint R(axis, q) and a translation.
fn fk_oracle(chain: &KinematicChain, q: &[f64]) -> (M3, [f64; 3]) {
    let o = &chain.base_offset.orientation;
    let mut r = quat_matrix([o.w, o.x, o.y, o.z]);
    let mut p = chain.base_offset.position;
    for (l, &a) in chain.links.iter().zip(q) {
        r = mul(&r, &rodrigues(l.axis, a));
        let d = apply(&r, l.offset);
        p = [p[0] + d[0], p[1] + d[1], p[2] + d[2]];
    }
    (r, p)
}

fn random_q(chain: &KinematicChain, rng: &mut SplitMix64) -> Vec<f64> {
    chain.links.iter().map(|l| rng.uniform(l.limits[0], l.limits[1])).collect()
}

fn chains() -> Vec<(String, KinematicChain)> {
    let mut out = vec![];
    for e in [Embodiment::X1, Embodiment::H1] {
        let m = RobotModel::builtin(e);
        out.push((format!("{e}-left"), m.left.clone()));
        out.push((format!("{e}-right"), m.right.clone()));
    }
    out
}

#[test]
fn fk_matches_term_by_term_composition() {
    let mut rng = SplitMix64::new(1);
    for (name, chain) in chains() {
        for _ in 0..500 {
            let q = random_q(&chain, &mut rng);
            let t = forward_kinematics(&chain, &q).unwrap();
            let (r, p) = fk_oracle(&chain, &q);
            let tr = t.rotation();
            let tp = t.translation();
            for i in 0..3 {
                assert!((tp[i] - p[i]).abs() < 1e-9, "{name}");
                for j in 0..3 {
                    assert!((tr[(i, j)] - r[i][j]).abs() < 1e-9, "{name}");
                }
            }
            assert!(t.is_valid(1e-6));
            assert!((tr.determinant() - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn embodiments_match_their_design() {
    let x1 = RobotModel::builtin(Embodiment::X1);
    let h1 = RobotModel::builtin(Embodiment::H1);
    assert_eq!((x1.left.dof(), x1.right.dof()), (6, 6));
    assert_eq!((h1.left.dof(), h1.right.dof()), (7, 7));
    assert_eq!(x1.end_effector, EndEffector::ParallelGripper);
    assert_eq!(h1.end_effector, EndEffector::DexterousHand);
    assert_eq!(x1.payload_limit(), 2.0);
    assert_eq!(h1.payload_limit(), 4.0);
    for m in [&x1, &h1] {
        assert!((m.lift_range[1] - m.lift_range[0] - 0.3).abs() < 1e-12);
    }
}

#[test]
fn decoupled_ik_from_perturbed_starts() {
    let cfg = DlsConfig::default();
    let mut rng = SplitMix64::new(11);
    for (name, chain) in chains() {
        let n = 200;
        let mut solved = 0;
        for _ in 0..n {
            let q = random_q(&chain, &mut rng);
            let t = chain.forward_kinematics(&q).unwrap();
            let mut start: Vec<f64> = q.iter().map(|v| v + rng.uniform(-0.3, 0.3)).collect();
            chain.clamp(&mut start);
            if let Some(sol) = ik_decoupled(&chain, &t.rotation(), &t.translation(), &start, &cfg).unwrap() {
                assert!(sol.iterations <= 200);
                assert!(chain.within_limits(&sol.q));
                let got = chain.forward_kinematics(&sol.q).unwrap();
                assert!((got.translation() - t.translation()).norm() < 1e-3);
                assert!(rotation_distance(&got.rotation(), &t.rotation()) < 1e-2);
                solved += 1;
            }
        }
        assert!(solved as f64 >= 0.95 * n as f64, "{name}: {solved}/{n}");
    }
}

#[test]
fn decoupled_ik_dimension_error() {
    let m = RobotModel::builtin(Embodiment::X1);
    let r = ik_decoupled(&m.right, &Mat3::identity(), &Vec3::zeros(), &[0.0; 3], &DlsConfig::default());
    assert!(matches!(r, Err(KinematicsError::DimensionMismatch { expected: 6, got: 3 })));
}

fn mirror(t: &Transform) -> Transform {
    let m = nalgebra::Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, 1.0, 1.0));
    Transform(m * t.0 * m)
}

#[test]
fn whole_body_symmetric_targets_give_symmetric_solutions() {
    let m = RobotModel::builtin(Embodiment::H1);
    let q0 = m.rest_config(0.1);
    assert_eq!(q0.left, q0.right);
    let mut rng = SplitMix64::new(5);
    let mut checked = 0;
    for _ in 0..20 {
        let q: Vec<f64> = m.right.rest.iter().map(|v| v + rng.uniform(-0.25, 0.25)).collect();
        let mut q = q;
        m.right.clamp(&mut q);
        let right = m.end_effector_pose(Arm::Right, &q, 0.15).unwrap();
        let left = mirror(&right);
        let Some(sol) = ik_whole_body(&m, &[left, right], &q0, [0.0; 2], &DlsConfig::default()).unwrap() else { continue };
        checked += 1;
        for (a, b) in sol.q.left.iter().zip(&sol.q.right) {
            assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", sol.q.left, sol.q.right);
        }
        assert!(com_in_support(&m, &sol.q, [0.0; 2]));
    }
    assert!(checked >= 15, "{checked}");
}

/// CoM from link endpoints computed with truncated chains.
fn com_oracle(m: &RobotModel, q: &FullConfig, payload: [f64; 2]) -> [f64; 3] {
    let mut moment = [m.body_com[0] * m.body_mass, m.body_com[1] * m.body_mass, m.body_com[2] * m.body_mass];
    let mut total = m.body_mass;
    let lift = m.shoulder_height + q.lift;
    for arm in Arm::BOTH {
        let chain = m.chain(arm);
        let qa = q.arm(arm);
        let point = |k: usize| -> [f64; 3] {
            // origin of joint k equals the end of link k-1
            let sub = KinematicChain { links: chain.links[..k].to_vec(), ..chain.clone() };
            let (_, p) = fk_oracle(&sub, &qa[..k]);
            [p[0], p[1], p[2] + lift]
        };
        for (k, l) in chain.links.iter().enumerate() {
            let (a, b) = (point(k), point(k + 1));
            for i in 0..3 {
                moment[i] += 0.5 * (a[i] + b[i]) * l.mass;
            }
            total += l.mass;
        }
        let ee = point(chain.dof());
        for i in 0..3 {
            moment[i] += ee[i] * payload[arm.index()];
        }
        total += payload[arm.index()];
    }
    moment.map(|v| v / total)
}

#[test]
fn center_of_mass_matches_point_mass_oracle() {
    let mut rng = SplitMix64::new(8);
    for e in [Embodiment::X1, Embodiment::H1] {
        let m = RobotModel::builtin(e);
        for _ in 0..200 {
            let q = FullConfig {
                left: random_q(&m.left, &mut rng),
                right: random_q(&m.right, &mut rng),
                lift: rng.uniform(m.lift_range[0], m.lift_range[1]),
            };
            let payload = [rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)];
            let got = center_of_mass(&m, &q, payload);
            let want = com_oracle(&m, &q, payload);
            for i in 0..3 {
                assert!((got[i] - want[i]).abs() < 1e-9);
            }
        }
    }
}

/// Workspace configurations ordered from most to least forward-pointing.
fn forward_reaches(m: &RobotModel, arm: Arm) -> Vec<Vec<f64>> {
    let mut s: Vec<_> = m.workspace(arm).samples().iter().collect();
    s.sort_by(|a, b| (b.position.x - b.position.y.abs()).total_cmp(&(a.position.x - a.position.y.abs())));
    s.into_iter().take(200).map(|w| w.q.clone()).collect()
}

#[test]
fn heavy_load_at_full_extension_tips_the_robot() {
    let cfg = DlsConfig::default();
    for e in [Embodiment::X1, Embodiment::H1] {
        let m = RobotModel::builtin(e);
        let depth = m.support_polygon.iter().map(|v| v[0]).fold(f64::MIN, f64::max);
        assert!((depth - 0.15).abs() < 1e-12);
        let q0 = m.rest_config(0.0);
        let mut found = false;
        for (l, r) in forward_reaches(&m, Arm::Left).into_iter().zip(forward_reaches(&m, Arm::Right)) {
            let q = FullConfig { left: l, right: r, lift: 0.0 };
            let oracle = com_oracle(&m, &q, [10.0, 0.0]);
            assert!(oracle[0] > depth, "{e}: com x {}", oracle[0]);
            assert!(!com_in_support(&m, &q, [10.0, 0.0]));
            let targets = [
                m.end_effector_pose(Arm::Left, &q.left, 0.0).unwrap(),
                m.end_effector_pose(Arm::Right, &q.right, 0.0).unwrap(),
            ];
            let Some(light) = ik_whole_body(&m, &targets, &q0, [0.0, 0.0], &cfg).unwrap() else { continue };
            if com_oracle(&m, &light.q, [10.0, 10.0])[0] <= depth {
                continue;
            }
            assert!(ik_whole_body(&m, &targets, &q0, [10.0, 10.0], &cfg).unwrap().is_none());
            assert!(matches!(ik_whole_body_detailed(&m, &targets, &q0, [10.0, 10.0], &cfg).unwrap(), WholeBodyOutcome::Unbalanced));
            found = true;
            break;
        }
        assert!(found, "{e}: no extended pose solved");
    }
}

#[test]
fn whole_body_results_are_balanced() {
    let m = RobotModel::builtin(Embodiment::H1);
    let mut rng = SplitMix64::new(21);
    let cfg = DlsConfig::default();
    let mut solved = 0;
    for _ in 0..60 {
        let q = FullConfig { left: random_q(&m.left, &mut rng), right: random_q(&m.right, &mut rng), lift: rng.uniform(0.0, 0.3) };
        let payload = [rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0)];
        let targets =
            [m.end_effector_pose(Arm::Left, &q.left, q.lift).unwrap(), m.end_effector_pose(Arm::Right, &q.right, q.lift).unwrap()];
        if let Some(sol) = ik_whole_body(&m, &targets, &m.rest_config(0.15), payload, &cfg).unwrap() {
            solved += 1;
            assert!(com_in_support(&m, &sol.q, payload));
            assert!(m.config_within_limits(&sol.q));
        }
    }
    assert!(solved > 0);
}

proptest! {
    #[test]
    fn waypoints_respect_limits(seed in any::<u64>(), n in 2usize..40) {
        let m = RobotModel::builtin(Embodiment::H1);
        let mut rng = SplitMix64::new(seed);
        let a = FullConfig { left: random_q(&m.left, &mut rng), right: random_q(&m.right, &mut rng), lift: rng.uniform(0.0, 0.3) };
        let b = FullConfig { left: random_q(&m.left, &mut rng), right: random_q(&m.right, &mut rng), lift: rng.uniform(0.0, 0.3) };
        let traj = interpolate_trajectory(&a.to_vec(), &b.to_vec(), n, DEFAULT_STEP_BOUND).unwrap();
        prop_assert!(traj.len() >= n);
        prop_assert_eq!(&traj.waypoints[0], &a.to_vec());
        prop_assert_eq!(traj.waypoints.last().unwrap(), &b.to_vec());
        prop_assert!(traj.max_step() <= DEFAULT_STEP_BOUND + 1e-12);
        for w in &traj.waypoints {
            let q = FullConfig::from_slice(w, 7, 7).unwrap();
            prop_assert!(m.config_within_limits(&q));
        }
    }

    #[test]
    fn fk_ik_round_trip(seed in any::<u64>(), which in 0usize..4) {
        let (_, chain) = chains().swap_remove(which);
        let mut rng = SplitMix64::new(seed);
        let q = random_q(&chain, &mut rng);
        let t = chain.forward_kinematics(&q).unwrap();
        let sol = ik_decoupled(&chain, &t.rotation(), &t.translation(), &q, &DlsConfig::default()).unwrap().unwrap();
        let got = chain.forward_kinematics(&sol.q).unwrap();
        prop_assert!((got.translation() - t.translation()).norm() < 1e-3);
        prop_assert!(rotation_distance(&got.rotation(), &t.rotation()) < 1e-2);
    }
}
