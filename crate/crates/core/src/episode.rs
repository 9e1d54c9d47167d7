//! One task attempt: the step loop shared by the in-process harness and the
//! protocol server.

use serde::{Deserialize, Serialize};

use crate::contingency::Difficulty;
use crate::planner::Planner;
use crate::rng::SplitMix64;
use crate::tasks::{goal_satisfied, EpisodeTrace, Task, TaskError, TraceStep};
use crate::world::{apply_action, observe, run_to_idle, step_tick, Action, ActionResult, ObservationFrame, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeStatus {
    Active,
    Succeeded,
    Failed,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EpisodeError {
    #[error("episode already finished")]
    Terminal,
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub result: ActionResult,
    pub done: bool,
    pub success: bool,
    pub steps_used: u32,
    pub digest: String,
}

#[derive(Clone, Debug)]
pub struct Episode {
    pub world: WorldState,
    pub task: Task,
    pub difficulty: Difficulty,
    pub steps_used: u32,
    pub status: EpisodeStatus,
    pub trace: EpisodeTrace,
    /// When set, motions advance only through [`Episode::tick`].
    pub slow_motion: bool,
    pending: Option<(Action, ActionResult)>,
}

impl Episode {
    /// Start `task` on a freshly loaded `world`, reseeding its generator.
    pub fn new(mut world: WorldState, task: Task, difficulty: Difficulty, seed: u64) -> Result<Episode, TaskError> {
        task.validate_against(&world)?;
        world.rng = SplitMix64::new(seed);
        let trace = EpisodeTrace { task_id: task.id.clone(), seed, steps: vec![], success: false, planner_error: None };
        Ok(Episode {
            world,
            task,
            difficulty,
            steps_used: 0,
            status: EpisodeStatus::Active,
            trace,
            slow_motion: false,
            pending: None,
        })
    }

    pub fn is_done(&self) -> bool {
        self.status != EpisodeStatus::Active
    }

    pub fn observe(&self) -> ObservationFrame {
        observe(&self.world)
    }

    pub fn step(&mut self, action: &Action) -> Result<StepReport, EpisodeError> {
        self.finish_motion();
        if self.is_done() {
            return Err(EpisodeError::Terminal);
        }
        let result = apply_action(&mut self.world, action, self.difficulty);
        self.steps_used += 1;
        self.pending = Some((action.clone(), result.clone()));
        if !self.slow_motion {
            self.finish_motion();
        }
        Ok(StepReport {
            result,
            done: self.is_done(),
            success: self.status == EpisodeStatus::Succeeded,
            steps_used: self.steps_used,
            digest: self.world.digest_hex(),
        })
    }

    /// Advance one tick; settles the last step once its motion completes.
    pub fn tick(&mut self) {
        if self.world.in_flight.is_some() {
            step_tick(&mut self.world);
        }
        if self.world.in_flight.is_none() {
            self.settle();
        }
    }

    fn finish_motion(&mut self) {
        run_to_idle(&mut self.world);
        self.settle();
    }

    fn settle(&mut self) {
        let Some((action, result)) = self.pending.take() else { return };
        let satisfied = goal_satisfied(&self.task, &self.world).unwrap_or(false);
        self.trace.steps.push(TraceStep { action: action.clone(), result, digest: self.world.digest_hex() });
        if satisfied {
            self.status = EpisodeStatus::Succeeded;
        } else if action == Action::Done || self.steps_used >= self.task.step_budget {
            self.status = EpisodeStatus::Failed;
        }
        self.trace.success = self.status == EpisodeStatus::Succeeded;
    }

    /// Mark the episode failed without taking a step.
    pub fn abort(&mut self, reason: String) {
        self.finish_motion();
        if !self.is_done() {
            self.status = EpisodeStatus::Failed;
        }
        self.trace.planner_error = Some(reason);
        self.trace.success = false;
    }
}

/// Drive `planner` on `task` until success, `Done`, or the step budget.
pub fn run_episode(world: WorldState, task: &Task, planner: &mut dyn Planner, difficulty: Difficulty, seed: u64) -> Result<Episode, TaskError> {
    let mut ep = Episode::new(world, task.clone(), difficulty, seed)?;
    if let Err(e) = planner.reset(task, seed) {
        ep.abort(e.to_string());
        return Ok(ep);
    }
    let mut last: Option<ActionResult> = None;
    while !ep.is_done() {
        let obs = ep.observe();
        let action = match planner.next_action(&obs, task, last.as_ref()) {
            Ok(a) => a,
            Err(e) => {
                ep.abort(e.to_string());
                break;
            }
        };
        let report = ep.step(&action).expect("loop only runs while active");
        last = Some(report.result);
    }
    Ok(ep)
}
