//! Planners choosing the next action from an observation.

mod oracle;
mod random;
mod remote;

pub use oracle::{ArmMode, OraclePlanner};
pub use random::{well_formed_actions, RandomPlanner};
pub use remote::{serve_planner, RemotePlanner};

use crate::tasks::Task;
use crate::world::{Action, ActionResult, ObservationFrame};

#[derive(Debug, thiserror::Error)]
pub enum PlannerError {
    #[error("planner connection: {0}")]
    Io(#[from] std::io::Error),
    #[error("planner protocol: {0}")]
    Protocol(String),
}

pub trait Planner: Send {
    fn name(&self) -> String;

    fn reset(&mut self, _task: &Task, _seed: u64) -> Result<(), PlannerError> {
        Ok(())
    }

    fn next_action(&mut self, obs: &ObservationFrame, task: &Task, last: Option<&ActionResult>) -> Result<Action, PlannerError>;
}

/// Planner selected by name: `oracle-dual`, `oracle-single`, `random` or
/// `remote:<host:port>`.
pub fn planner_from_name(name: &str) -> Option<Box<dyn Planner>> {
    Some(match name {
        "oracle-dual" => Box::new(OraclePlanner::new(ArmMode::DualArm)),
        "oracle-single" => Box::new(OraclePlanner::new(ArmMode::SingleArm)),
        "random" => Box::new(RandomPlanner::new()),
        other => Box::new(RemotePlanner::new(other.strip_prefix("remote:")?)),
    })
}
