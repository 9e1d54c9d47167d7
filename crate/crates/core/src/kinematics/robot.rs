use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::chain::KinematicChain;
use super::workspace::Workspace;
use super::KinematicsError;
use crate::geometry::{Mat3, Transform, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embodiment {
    H1,
    X1,
}

impl Embodiment {
    pub fn end_effector(self) -> EndEffector {
        match self {
            Embodiment::H1 => EndEffector::DexterousHand,
            Embodiment::X1 => EndEffector::ParallelGripper,
        }
    }

    pub fn parse(s: &str) -> Option<Embodiment> {
        match s.to_ascii_lowercase().as_str() {
            "h1" => Some(Embodiment::H1),
            "x1" => Some(Embodiment::X1),
            _ => None,
        }
    }
}

impl fmt::Display for Embodiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Embodiment::H1 => "h1",
            Embodiment::X1 => "x1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndEffector {
    DexterousHand,
    ParallelGripper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Left, Arm::Right];

    pub fn index(self) -> usize {
        match self {
            Arm::Left => 0,
            Arm::Right => 1,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Left => Arm::Right,
            Arm::Right => Arm::Left,
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Left => "left",
            Arm::Right => "right",
        })
    }
}

/// Both arms plus torso lift. Flattened order is `[left.., right.., lift]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullConfig {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub lift: f64,
}

impl FullConfig {
    pub fn arm(&self, arm: Arm) -> &[f64] {
        match arm {
            Arm::Left => &self.left,
            Arm::Right => &self.right,
        }
    }

    pub fn arm_mut(&mut self, arm: Arm) -> &mut Vec<f64> {
        match arm {
            Arm::Left => &mut self.left,
            Arm::Right => &mut self.right,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.left.len() + self.right.len() + 1);
        v.extend_from_slice(&self.left);
        v.extend_from_slice(&self.right);
        v.push(self.lift);
        v
    }

    pub fn from_slice(v: &[f64], left_dof: usize, right_dof: usize) -> Result<FullConfig, KinematicsError> {
        let expected = left_dof + right_dof + 1;
        if v.len() != expected {
            return Err(KinematicsError::DimensionMismatch { expected, got: v.len() });
        }
        Ok(FullConfig {
            left: v[..left_dof].to_vec(),
            right: v[left_dof..left_dof + right_dof].to_vec(),
            lift: v[expected - 1],
        })
    }
}

/// Robot definition as stored on disk. The left arm is the mirror image of
/// `right_arm` across the sagittal plane.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub embodiment: Embodiment,
    pub end_effector: EndEffector,
    /// Height of the torso frame (shoulder mounts) above the floor at zero lift.
    pub shoulder_height: f64,
    pub lift_range: [f64; 2],
    pub body_mass: f64,
    /// Body point mass in the robot ground frame.
    pub body_com: [f64; 3],
    /// Ground-frame support polygon, counter-clockwise.
    pub support_polygon: Vec<[f64; 2]>,
    pub right_arm: KinematicChain,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotFile {
    robots: Vec<RobotSpec>,
}

const BUILTIN_ROBOTS: &str = include_str!("../../data/robots.json");

pub struct RobotModel {
    pub embodiment: Embodiment,
    pub end_effector: EndEffector,
    pub shoulder_height: f64,
    pub lift_range: [f64; 2],
    pub body_mass: f64,
    pub body_com: [f64; 3],
    pub support_polygon: Vec<[f64; 2]>,
    pub left: KinematicChain,
    pub right: KinematicChain,
    workspaces: OnceLock<[Workspace; 2]>,
}

impl fmt::Debug for RobotModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RobotModel").field("embodiment", &self.embodiment).finish_non_exhaustive()
    }
}

impl Clone for RobotModel {
    fn clone(&self) -> Self {
        RobotModel {
            embodiment: self.embodiment,
            end_effector: self.end_effector,
            shoulder_height: self.shoulder_height,
            lift_range: self.lift_range,
            body_mass: self.body_mass,
            body_com: self.body_com,
            support_polygon: self.support_polygon.clone(),
            left: self.left.clone(),
            right: self.right.clone(),
            workspaces: OnceLock::new(),
        }
    }
}

impl RobotModel {
    pub fn from_spec(spec: RobotSpec) -> Result<RobotModel, KinematicsError> {
        spec.right_arm.validate()?;
        if spec.end_effector != spec.embodiment.end_effector() {
            return Err(KinematicsError::RobotFile(format!(
                "{} must use {:?}",
                spec.embodiment,
                spec.embodiment.end_effector()
            )));
        }
        if spec.lift_range[0] > spec.lift_range[1] {
            return Err(KinematicsError::RobotFile("lift_range lo > hi".into()));
        }
        if spec.support_polygon.len() < 3 {
            return Err(KinematicsError::RobotFile("support polygon needs at least 3 vertices".into()));
        }
        Ok(RobotModel {
            embodiment: spec.embodiment,
            end_effector: spec.end_effector,
            shoulder_height: spec.shoulder_height,
            lift_range: spec.lift_range,
            body_mass: spec.body_mass,
            body_com: spec.body_com,
            support_polygon: spec.support_polygon,
            left: spec.right_arm.mirrored(),
            right: spec.right_arm,
            workspaces: OnceLock::new(),
        })
    }

    /// Parse a robot definition file.
    pub fn parse_file(json: &str) -> Result<Vec<RobotModel>, KinematicsError> {
        let file: RobotFile = serde_json::from_str(json).map_err(|e| KinematicsError::RobotFile(e.to_string()))?;
        file.robots.into_iter().map(RobotModel::from_spec).collect()
    }

    /// Shipped model for `embodiment`, shared and cached.
    pub fn builtin(embodiment: Embodiment) -> Arc<RobotModel> {
        static MODELS: OnceLock<HashMap<Embodiment, Arc<RobotModel>>> = OnceLock::new();
        MODELS
            .get_or_init(|| {
                RobotModel::parse_file(BUILTIN_ROBOTS)
                    .expect("shipped robot file is valid")
                    .into_iter()
                    .map(|m| (m.embodiment, Arc::new(m)))
                    .collect()
            })
            .get(&embodiment)
            .cloned()
            .expect("both embodiments are shipped")
    }

    pub fn builtin_file() -> &'static str {
        BUILTIN_ROBOTS
    }

    pub fn chain(&self, arm: Arm) -> &KinematicChain {
        match arm {
            Arm::Left => &self.left,
            Arm::Right => &self.right,
        }
    }

    pub fn payload_limit(&self) -> f64 {
        self.right.payload_limit
    }

    pub fn rest_config(&self, lift: f64) -> FullConfig {
        FullConfig { left: self.left.rest.clone(), right: self.right.rest.clone(), lift }
    }

    pub fn lift_in_range(&self, lift: f64) -> bool {
        lift >= self.lift_range[0] - 1e-9 && lift <= self.lift_range[1] + 1e-9
    }

    pub fn config_within_limits(&self, q: &FullConfig) -> bool {
        self.left.within_limits(&q.left) && self.right.within_limits(&q.right) && self.lift_in_range(q.lift)
    }

    /// Torso frame in the robot ground frame.
    pub fn torso_mount(&self, lift: f64) -> Transform {
        Transform::translation_only(&Vec3::new(0.0, 0.0, self.shoulder_height + lift))
    }

    /// End-effector pose in the robot ground frame.
    pub fn end_effector_pose(&self, arm: Arm, q: &[f64], lift: f64) -> Result<Transform, KinematicsError> {
        let chain = self.chain(arm);
        chain.check_dim(q)?;
        Ok(chain.compose(q, &self.torso_mount(lift), |_| {}))
    }

    pub fn workspace(&self, arm: Arm) -> &Workspace {
        &self.workspaces.get_or_init(|| {
            [Workspace::sample(&self.left, 0x5EED_0001), Workspace::sample(&self.right, 0x5EED_0002)]
        })[arm.index()]
    }

    /// Nearest workspace sample to a ground-frame point at `lift`, if within
    /// the workspace acceptance radius.
    pub fn reach_query(&self, arm: Arm, point: &Vec3, lift: f64) -> Option<ReachCandidate> {
        let local = point - Vec3::new(0.0, 0.0, self.shoulder_height + lift);
        let (idx, dist) = self.workspace(arm).nearest_within(&local)?;
        let sample = &self.workspace(arm).samples()[idx];
        Some(ReachCandidate { seed: sample.q.clone(), rotation: sample.rotation, distance: dist })
    }

    /// The `k` nearest workspace samples to a ground-frame point, nearest first.
    pub fn reach_candidates(&self, arm: Arm, point: &Vec3, lift: f64, k: usize) -> Vec<ReachCandidate> {
        let local = point - Vec3::new(0.0, 0.0, self.shoulder_height + lift);
        let ws = self.workspace(arm);
        ws.nearest_k_within(&local, k)
            .into_iter()
            .map(|(i, d)| ReachCandidate { seed: ws.samples()[i].q.clone(), rotation: ws.samples()[i].rotation, distance: d })
            .collect()
    }

    pub fn reachable(&self, arm: Arm, point: &Vec3, lift: f64) -> bool {
        self.reach_query(arm, point, lift).is_some()
    }
}

/// A workspace hit: the sampled configuration closest to the query point and
/// its end-effector orientation, used as the IK target orientation and seed.
#[derive(Clone, Debug)]
pub struct ReachCandidate {
    pub seed: Vec<f64>,
    pub rotation: Mat3,
    pub distance: f64,
}
