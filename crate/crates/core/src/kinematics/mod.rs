//! Forward kinematics, both inverse-kinematics models, trajectory
//! interpolation and static balance.

mod balance;
mod chain;
mod ik;
mod robot;
mod trajectory;
mod workspace;

pub use balance::{center_of_mass, com_in_support};
pub use chain::{KinematicChain, Link};
pub use ik::{ik_decoupled, ik_whole_body, ik_whole_body_detailed, pose_error, solve_arm_point, IK_CANDIDATES, DlsConfig, IkSolution, WholeBodyOutcome};
pub use robot::{Arm, Embodiment, EndEffector, FullConfig, ReachCandidate, RobotModel, RobotSpec};
pub use trajectory::{ease, interpolate_trajectory, Trajectory, DEFAULT_STEP_BOUND, DEFAULT_WAYPOINTS};
pub use workspace::{Workspace, WorkspaceSample, WORKSPACE_RADIUS, WORKSPACE_SAMPLES};

use crate::geometry::Transform;

#[derive(Debug, thiserror::Error)]
pub enum KinematicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("target rotation is not orthonormal")]
    InvalidRotation,
    #[error("invalid kinematic chain: {0}")]
    InvalidChain(String),
    #[error("trajectory needs at least 2 waypoints, got {0}")]
    WaypointCount(usize),
    #[error("robot definition: {0}")]
    RobotFile(String),
}

/// Forward kinematics of a single chain in its torso frame.
pub fn forward_kinematics(chain: &KinematicChain, q: &[f64]) -> Result<Transform, KinematicsError> {
    chain.forward_kinematics(q)
}
