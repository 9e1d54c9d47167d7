//! Trial batches, success rates and failure histograms.

mod suite;

use std::hash::Hasher;
use std::net::SocketAddr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contingency::Difficulty;
use crate::episode::{run_episode, Episode};
use crate::kinematics::{Embodiment, RobotModel};
use crate::planner::Planner;
use crate::proprio::{extract_motion_feature, MotionFeature};
use crate::protocol::{ProtocolClient, ResetPayload, Response};
use crate::tasks::{classify_failure, EpisodeTrace, FailureCategory, Task, TaskCategory, TaskError, TraceStep};
use crate::world::{Motion, WorldState};

pub use suite::{aggregate, config_digest, evaluate, write_reports, CategoryStats, EvalConfig, Histogram, LoadedSuite, SuiteReport};

pub const DEFAULT_TRIALS: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Config(String),
}

/// Builds a fresh planner for each trial.
pub type PlannerFactory = dyn Fn() -> Box<dyn Planner> + Send + Sync;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub task_id: String,
    pub category: TaskCategory,
    pub embodiment: Embodiment,
    pub difficulty: Difficulty,
    pub planner: String,
    pub seed: u64,
    pub success: bool,
    pub steps: u32,
    /// Present exactly when the episode failed.
    pub failure_category: Option<FailureCategory>,
    pub planner_error: Option<String>,
    pub final_digest: String,
    pub wall_time_ms: f64,
}

impl EpisodeReport {
    /// Equality on everything but wall time.
    pub fn same_outcome(&self, other: &EpisodeReport) -> bool {
        EpisodeReport { wall_time_ms: 0.0, ..self.clone() } == EpisodeReport { wall_time_ms: 0.0, ..other.clone() }
    }
}

fn report(task: &Task, trace: &EpisodeTrace, meta: ReportMeta) -> Result<EpisodeReport, HarnessError> {
    let failure_category = if trace.success { None } else { Some(classify_failure(trace, task, meta.model)?) };
    Ok(EpisodeReport {
        task_id: task.id.clone(),
        category: task.category,
        embodiment: meta.embodiment,
        difficulty: meta.difficulty,
        planner: meta.planner,
        seed: trace.seed,
        success: trace.success,
        steps: meta.steps,
        failure_category,
        planner_error: trace.planner_error.clone(),
        final_digest: meta.digest,
        wall_time_ms: meta.started.elapsed().as_secs_f64() * 1e3,
    })
}

struct ReportMeta<'a> {
    model: &'a RobotModel,
    embodiment: Embodiment,
    difficulty: Difficulty,
    planner: String,
    steps: u32,
    digest: String,
    started: Instant,
}

pub fn episode_report(ep: &Episode, planner: &str, started: Instant) -> Result<EpisodeReport, HarnessError> {
    report(
        &ep.task,
        &ep.trace,
        ReportMeta {
            model: &ep.world.model,
            embodiment: ep.world.robot.embodiment,
            difficulty: ep.difficulty,
            planner: planner.to_string(),
            steps: ep.steps_used,
            digest: ep.world.digest_hex(),
            started,
        },
    )
}

/// `n` episodes of `task` on copies of `world`, trial `i` seeded
/// `base_seed + i`. Trials run in parallel; reports come back in trial order.
pub fn run_trials(
    world: &WorldState,
    task: &Task,
    planners: &PlannerFactory,
    n: usize,
    base_seed: u64,
    difficulty: Difficulty,
) -> Result<Vec<EpisodeReport>, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Argument("at least one trial is required".into()));
    }
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let started = Instant::now();
            let mut planner = planners();
            let ep = run_episode(world.clone(), task, planner.as_mut(), difficulty, base_seed.wrapping_add(i))?;
            episode_report(&ep, &planner.name(), started)
        })
        .collect()
}

fn expect_ok(r: Response) -> Result<Response, HarnessError> {
    match &r.error {
        Some(e) if !r.ok => Err(HarnessError::Protocol(format!("{}: {}", e.code.as_str(), e.message))),
        _ => Ok(r),
    }
}

/// One episode driven through a protocol server.
pub fn run_remote_episode(
    addr: SocketAddr,
    task: &Task,
    robot: Embodiment,
    planner: &mut dyn Planner,
    difficulty: Difficulty,
    seed: u64,
) -> Result<EpisodeReport, HarnessError> {
    let started = Instant::now();
    let mut client = ProtocolClient::connect(addr)?;
    let mut resp = expect_ok(client.reset(ResetPayload {
        task: task.id.clone(),
        seed,
        difficulty: Some(difficulty),
        robot: Some(robot),
    })?)?;
    let session = resp.session.clone().ok_or_else(|| HarnessError::Protocol("reset returned no session".into()))?;
    let mut trace = EpisodeTrace { task_id: task.id.clone(), seed, steps: vec![], success: false, planner_error: None };
    if let Err(e) = planner.reset(task, seed) {
        trace.planner_error = Some(e.to_string());
    }
    while trace.planner_error.is_none() && resp.done != Some(true) {
        let obs = resp.observation.take().ok_or_else(|| HarnessError::Protocol("response without observation".into()))?;
        let last = trace.steps.last().map(|s| &s.result);
        let action = match planner.next_action(&obs, task, last) {
            Ok(a) => a,
            Err(e) => {
                trace.planner_error = Some(e.to_string());
                break;
            }
        };
        resp = expect_ok(client.step(&session, &action)?)?;
        let result = resp.result.clone().ok_or_else(|| HarnessError::Protocol("step returned no result".into()))?;
        trace.steps.push(TraceStep { action, result, digest: resp.digest.clone().unwrap_or_default() });
    }
    trace.success = resp.success == Some(true) && trace.planner_error.is_none();
    let _ = client.close(&session);
    let model = RobotModel::builtin(robot);
    report(
        task,
        &trace,
        ReportMeta {
            model: &model,
            embodiment: robot,
            difficulty,
            planner: planner.name(),
            steps: resp.steps_used.unwrap_or(0),
            digest: resp.digest.clone().unwrap_or_default(),
            started,
        },
    )
}

/// [`run_trials`] over the wire: same seeds, same report order.
pub fn run_trials_remote(
    addr: SocketAddr,
    task: &Task,
    robot: Embodiment,
    planners: &PlannerFactory,
    n: usize,
    base_seed: u64,
    difficulty: Difficulty,
) -> Result<Vec<EpisodeReport>, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Argument("at least one trial is required".into()));
    }
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut planner = planners();
            run_remote_episode(addr, task, robot, planner.as_mut(), difficulty, base_seed.wrapping_add(i))
        })
        .collect()
}

/// Joint trajectories executed during one slow-motion episode, in order.
pub fn record_motion(
    world: WorldState,
    task: &Task,
    planner: &mut dyn Planner,
    difficulty: Difficulty,
    seed: u64,
) -> Result<Vec<MotionFeature>, HarnessError> {
    let mut ep = Episode::new(world, task.clone(), difficulty, seed)?;
    ep.slow_motion = true;
    planner.reset(task, seed).map_err(|e| HarnessError::Protocol(e.to_string()))?;
    let mut features = Vec::new();
    let mut last = None;
    while !ep.is_done() {
        let Ok(action) = planner.next_action(&ep.observe(), task, last.as_ref()) else { break };
        let Ok(step) = ep.step(&action) else { break };
        if let Some(Motion::Joints(traj)) = ep.world.in_flight.as_ref().map(|f| &f.motion) {
            if !traj.is_empty() {
                features.push(extract_motion_feature(traj).map_err(|e| HarnessError::Argument(e.to_string()))?);
            }
        }
        while ep.world.in_flight.is_some() {
            ep.tick();
        }
        ep.tick();
        last = Some(step.result);
    }
    Ok(features)
}

pub fn success_rate(reports: &[EpisodeReport]) -> Result<f64, HarnessError> {
    if reports.is_empty() {
        return Err(HarnessError::Argument("success rate of an empty report list".into()));
    }
    Ok(reports.iter().filter(|r| r.success).count() as f64 / reports.len() as f64)
}

/// Failed episodes per category, indexed by [`FailureCategory::index`].
pub fn failure_histogram(reports: &[EpisodeReport]) -> [usize; 3] {
    let mut bins = [0; 3];
    for c in reports.iter().filter(|r| !r.success).filter_map(|r| r.failure_category) {
        bins[c.index()] += 1;
    }
    bins
}

pub(crate) fn fnv_hex(bytes: &[u8]) -> String {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    format!("{:016x}", h.finish())
}
