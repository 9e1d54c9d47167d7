//! Task definitions, goal checking, dual-arm composition, suite generation
//! and failure classification.

mod compose;
mod goal;
mod suite;

pub use compose::{compose_dual_task, ComposeMode, OPTIONAL_BUDGET_FACTOR};
pub use goal::{goals_hold, predicate_holds, GoalPredicate, GoalView, HoldSpec, ObjectFacts, ObjectRef};
pub use suite::{generate_task_suite, single_arm_candidates, SuiteConfig, SuiteManifest, SuiteScene};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contingency::Difficulty;
use crate::kinematics::RobotModel;
use crate::world::{Action, ActionKind, ActionResult, FailureReason, WorldState};

pub const DEFAULT_STEP_BUDGET: u32 = 50;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TaskError {
    #[error("object reference {0} matches nothing in the scene")]
    DanglingRef(String),
    #[error("malformed object reference {0}")]
    BadRef(String),
    #[error("composition: {0}")]
    Compose(String),
    #[error("suite generation: {0}")]
    Generation(String),
    #[error("failure classification needs a failed trace")]
    SuccessfulTrace,
    #[error("task file: {0}")]
    File(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskCategory {
    DualEssential,
    DualOptional,
    SingleArm,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 3] = [TaskCategory::DualEssential, TaskCategory::DualOptional, TaskCategory::SingleArm];

    pub fn name(self) -> &'static str {
        match self {
            TaskCategory::DualEssential => "dual_essential",
            TaskCategory::DualOptional => "dual_optional",
            TaskCategory::SingleArm => "single_arm",
        }
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_budget() -> u32 {
    DEFAULT_STEP_BUDGET
}

fn default_difficulty() -> Difficulty {
    Difficulty::Easy
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub category: TaskCategory,
    pub instruction: String,
    pub goals: Vec<GoalPredicate>,
    #[serde(default = "default_budget")]
    pub step_budget: u32,
    #[serde(default = "default_difficulty")]
    pub difficulty: Difficulty,
    /// Scene name the goals refer to.
    pub scene: String,
}

impl Task {
    pub fn parse(json: &str) -> Result<Task, TaskError> {
        let t: Task = serde_json::from_str(json).map_err(|e| TaskError::File(e.to_string()))?;
        if t.step_budget == 0 {
            return Err(TaskError::File(format!("task {} has a zero step budget", t.id)));
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Task, TaskError> {
        let text = std::fs::read_to_string(path).map_err(|e| TaskError::File(format!("{}: {e}", path.display())))?;
        Task::parse(&text)
    }

    /// Check every goal reference resolves in `state`.
    pub fn validate_against(&self, state: &WorldState) -> Result<(), TaskError> {
        goals_hold(&self.goals, state).map(|_| ())
    }
}

/// Whether every goal of `task` holds in `state`.
pub fn goal_satisfied(task: &Task, state: &WorldState) -> Result<bool, TaskError> {
    goals_hold(&task.goals, state)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: Action,
    pub result: ActionResult,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub task_id: String,
    pub seed: u64,
    pub steps: Vec<TraceStep>,
    pub success: bool,
    /// Set when the planner broke the protocol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planner_error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCategory {
    Navigation,
    BodyAdjustment,
    Logical,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 3] = [FailureCategory::Navigation, FailureCategory::BodyAdjustment, FailureCategory::Logical];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FailureCategory::Navigation => "navigation",
            FailureCategory::BodyAdjustment => "body_adjustment",
            FailureCategory::Logical => "logical",
        }
    }
}

impl fmt::Display for FailureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const LIFT_SWEEP_STEP: f64 = 0.01;

/// Lift values from `lo` to `hi` inclusive in [`LIFT_SWEEP_STEP`] increments.
pub fn lift_sweep(model: &RobotModel) -> Vec<f64> {
    let [lo, hi] = model.lift_range;
    let n = ((hi - lo) / LIFT_SWEEP_STEP).round() as usize;
    (0..=n).map(|i| (lo + i as f64 * LIFT_SWEEP_STEP).min(hi)).collect()
}

fn fixable_by_lift(result: &ActionResult, model: &RobotModel) -> bool {
    result.reason == Some(FailureReason::OutOfReach)
        && result.probes.iter().any(|p| {
            let point = p.point.into();
            !model.reachable(p.arm, &point, p.lift) && lift_sweep(model).into_iter().any(|l| model.reachable(p.arm, &point, l))
        })
}

/// Navigation if path planning ever failed, else body adjustment if a reach
/// failure could have been fixed by another torso lift, else logical.
pub fn classify_failure(trace: &EpisodeTrace, _task: &Task, model: &RobotModel) -> Result<FailureCategory, TaskError> {
    if trace.success {
        return Err(TaskError::SuccessfulTrace);
    }
    let nav = trace
        .steps
        .iter()
        .any(|s| s.action.kind() == ActionKind::NavigateTo && s.result.reason == Some(FailureReason::NoPath));
    if nav {
        return Ok(FailureCategory::Navigation);
    }
    if trace.steps.iter().any(|s| fixable_by_lift(&s.result, model)) {
        return Ok(FailureCategory::BodyAdjustment);
    }
    Ok(FailureCategory::Logical)
}
