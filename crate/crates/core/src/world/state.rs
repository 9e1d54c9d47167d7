use std::collections::BTreeMap;
use std::hash::Hasher;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::action::Action;
use super::grid::{Cell, Grid};
use super::object::SceneObject;
use crate::contingency::{OutcomeLabel, OutcomeTable};
use crate::geometry::{Transform, Vec3};
use crate::kinematics::{Arm, Embodiment, EndEffector, FullConfig, RobotModel, Trajectory};
use crate::rng::SplitMix64;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerArm<T> {
    pub left: T,
    pub right: T,
}

impl<T> PerArm<T> {
    pub fn get(&self, arm: Arm) -> &T {
        match arm {
            Arm::Left => &self.left,
            Arm::Right => &self.right,
        }
    }

    pub fn get_mut(&mut self, arm: Arm) -> &mut T {
        match arm {
            Arm::Left => &mut self.left,
            Arm::Right => &mut self.right,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub embodiment: Embodiment,
    pub end_effector: EndEffector,
    pub base: BasePose,
    pub torso_lift: f64,
    pub arm_joints: PerArm<Vec<f64>>,
    pub held: PerArm<Option<String>>,
}

impl RobotState {
    pub fn config(&self) -> FullConfig {
        FullConfig { left: self.arm_joints.left.clone(), right: self.arm_joints.right.clone(), lift: self.torso_lift }
    }

    pub fn set_config(&mut self, q: &FullConfig) {
        self.arm_joints.left.clone_from(&q.left);
        self.arm_joints.right.clone_from(&q.right);
        self.torso_lift = q.lift;
    }

    pub fn holder_of(&self, id: &str) -> Vec<Arm> {
        Arm::BOTH.into_iter().filter(|&a| self.held.get(a).as_deref() == Some(id)).collect()
    }

    pub fn is_free(&self, arm: Arm) -> bool {
        self.held.get(arm).is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    /// One base pose per tick.
    Base(Vec<BasePose>),
    Joints(Trajectory),
}

impl Motion {
    pub fn len(&self) -> usize {
        match self {
            Motion::Base(p) => p.len(),
            Motion::Joints(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A scheduled motion and the effects applied when it completes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InFlight {
    pub motion: Motion,
    pub next: usize,
    pub effects: Vec<(Action, OutcomeLabel)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WorldState {
    pub name: String,
    pub objects: BTreeMap<String, SceneObject>,
    pub robot: RobotState,
    pub grid: Grid,
    pub tick: u64,
    pub actions_taken: u64,
    pub rng: SplitMix64,
    pub in_flight: Option<InFlight>,
    #[serde(skip)]
    pub model: Arc<RobotModel>,
    #[serde(skip)]
    pub table: Arc<OutcomeTable>,
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_json() == other.canonical_json()
    }
}

impl WorldState {
    /// Serialization hashed by [`WorldState::digest`].
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("world state serializes")
    }

    /// FNV-1a 64 of the canonical serialization.
    pub fn digest(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        h.write(self.canonical_json().as_bytes());
        h.finish()
    }

    pub fn digest_hex(&self) -> String {
        format!("{:016x}", self.digest())
    }

    pub fn is_idle(&self) -> bool {
        self.in_flight.is_none()
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.get(id)
    }

    pub fn robot_cell(&self) -> Cell {
        self.grid.cell_of(self.robot.base.x, self.robot.base.y).expect("robot base inside grid")
    }

    /// Robot ground frame in world coordinates.
    pub fn base_transform(&self) -> Transform {
        base_transform(&self.robot.base)
    }

    pub fn world_to_robot(&self, p: &Vec3) -> Vec3 {
        let b = &self.robot.base;
        let (s, c) = (libm::sin(b.heading), libm::cos(b.heading));
        let (dx, dy) = (p.x - b.x, p.y - b.y);
        Vec3::new(c * dx + s * dy, -s * dx + c * dy, p.z)
    }

    pub fn robot_to_world(&self, p: &Vec3) -> Vec3 {
        self.base_transform().transform_point(p)
    }

    pub fn end_effector_world(&self, arm: Arm) -> Transform {
        let local = self
            .model
            .end_effector_pose(arm, self.robot.arm_joints.get(arm), self.robot.torso_lift)
            .expect("joint vectors sized by model");
        self.base_transform().compose(&local)
    }

    /// Mass carried by each arm; jointly held objects split evenly.
    pub fn payload(&self) -> [f64; 2] {
        let mut out = [0.0; 2];
        for arm in Arm::BOTH {
            if let Some(id) = self.robot.held.get(arm) {
                let shares = self.robot.holder_of(id).len() as f64;
                out[arm.index()] = self.objects[id].mass / shares;
            }
        }
        out
    }

    /// Move held objects to their end effectors.
    pub fn sync_held(&mut self) {
        let mut moves = Vec::new();
        for arm in Arm::BOTH {
            if let Some(id) = self.robot.held.get(arm) {
                let holders = self.robot.holder_of(id);
                if holders[0] != arm {
                    continue;
                }
                let mut p = Vec3::zeros();
                for &h in &holders {
                    p += self.end_effector_world(h).translation();
                }
                p /= holders.len() as f64;
                moves.push((id.clone(), p));
            }
        }
        for (id, p) in moves {
            let o = self.objects.get_mut(&id).expect("held objects exist");
            let offset = Vec3::from(o.grasp_offset);
            let pos = p - offset;
            o.pose.position = [pos.x, pos.y, pos.z];
        }
    }

    /// Clamp a world point onto the floor inside the grid.
    pub fn floor_point(&self, p: &Vec3) -> Vec3 {
        let [w, h] = self.grid.extent();
        let eps = 1e-6;
        Vec3::new(p.x.clamp(eps, w - eps), p.y.clamp(eps, h - eps), 0.0)
    }
}

pub fn base_transform(b: &BasePose) -> Transform {
    Transform::from_parts(
        &crate::geometry::rotation_about(&Vec3::z(), b.heading),
        &Vec3::new(b.x, b.y, 0.0),
    )
}
