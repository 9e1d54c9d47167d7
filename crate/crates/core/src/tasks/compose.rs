use super::{GoalPredicate, HoldSpec, Task, TaskCategory, TaskError};
use crate::contingency::Difficulty;
use crate::episode::run_episode;
use crate::planner::{ArmMode, OraclePlanner};
use crate::world::{Property, StateFlag, WorldState};

pub const OPTIONAL_BUDGET_FACTOR: f64 = 0.7;
/// Step cap while measuring the serial single-arm plan.
const MEASURE_BUDGET: u32 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComposeMode {
    /// Goals that no single arm can achieve.
    Essential,
    /// Goals under a step budget only parallel arm use can meet.
    Optional,
}

fn all_matches(world: &WorldState, r: &super::ObjectRef, pred: impl Fn(&crate::world::SceneObject) -> bool) -> bool {
    let m: Vec<_> = world.objects.values().filter(|o| r.matches(&o.id, o.category)).collect();
    !m.is_empty() && m.into_iter().all(pred)
}

/// Steps the single-arm oracle needs for `goals` at Easy, if it succeeds.
pub fn serial_steps(goals: &[GoalPredicate], scene: &str, world: &WorldState) -> Option<u32> {
    let probe = Task {
        id: "serial-probe".into(),
        category: TaskCategory::SingleArm,
        instruction: String::new(),
        goals: goals.to_vec(),
        step_budget: MEASURE_BUDGET,
        difficulty: Difficulty::Easy,
        scene: scene.to_string(),
    };
    let mut planner = OraclePlanner::new(ArmMode::SingleArm);
    let ep = run_episode(world.clone(), &probe, &mut planner, Difficulty::Easy, 0).ok()?;
    ep.trace.success.then_some(ep.steps_used)
}

/// Combine single-arm tasks over one scene into a dual-arm task.
///
/// Essential mode needs at least one goal that only a two-arm action can
/// reach: transport of an object too heavy for one arm (`LiftTogether`) or
/// opening a hold-to-open container (`HoldAndOpen`). Optional mode conjoins all goals under a step
/// budget of `OPTIONAL_BUDGET_FACTOR` times the single-arm oracle's serial
/// step count, measured on each of `worlds` and taking the smallest.
pub fn compose_dual_task(singles: &[Task], mode: ComposeMode, worlds: &[&WorldState]) -> Result<Task, TaskError> {
    let first = singles.first().ok_or_else(|| TaskError::Compose("no single-arm tasks to compose".into()))?;
    if worlds.is_empty() {
        return Err(TaskError::Compose("no scene state to compose against".into()));
    }
    for t in singles {
        if t.category != TaskCategory::SingleArm {
            return Err(TaskError::Compose(format!("{} is not a single-arm task", t.id)));
        }
        if t.scene != first.scene {
            return Err(TaskError::Compose(format!("{} is set in {}, not {}", t.id, t.scene, first.scene)));
        }
    }
    for w in worlds {
        if !w.name.is_empty() && w.name != first.scene {
            return Err(TaskError::Compose(format!("scene state {} does not match {}", w.name, first.scene)));
        }
        for t in singles {
            t.validate_against(w)?;
        }
    }
    let ids: Vec<&str> = singles.iter().map(|t| t.id.as_str()).collect();
    let instructions: Vec<&str> = singles.iter().map(|t| t.instruction.as_str()).collect();
    let mut goals: Vec<GoalPredicate> = Vec::new();
    for g in singles.iter().flat_map(|t| &t.goals) {
        if !goals.contains(g) {
            goals.push(g.clone());
        }
    }
    let world = worlds[0];
    match mode {
        ComposeMode::Essential => {
            let mut essential = 0;
            let heavy = |r: &super::ObjectRef| worlds.iter().all(|w| all_matches(w, r, |o| o.has(Property::Heavy)));
            for g in &goals {
                match g {
                    GoalPredicate::ObjectIn { object, .. } if heavy(object) => essential += 1,
                    GoalPredicate::Holding { arm: HoldSpec::Both, object } if heavy(object) => essential += 1,
                    GoalPredicate::ObjectState { object, flag: StateFlag::Open, value: true }
                        if all_matches(world, object, |o| o.has(Property::HoldToOpen)) =>
                    {
                        essential += 1
                    }
                    _ => {}
                }
            }
            if essential == 0 {
                return Err(TaskError::Compose("no heavy or hold-to-open target to make the task dual-arm essential".into()));
            }
            Ok(Task {
                id: ids.join("+"),
                category: TaskCategory::DualEssential,
                instruction: instructions.join(", then "),
                goals,
                step_budget: singles.iter().map(|t| t.step_budget).max().unwrap_or(super::DEFAULT_STEP_BUDGET),
                difficulty: first.difficulty,
                scene: first.scene.clone(),
            })
        }
        ComposeMode::Optional => {
            if singles.len() < 2 {
                return Err(TaskError::Compose("optional composition needs at least two tasks".into()));
            }
            let mut serial = u32::MAX;
            for w in worlds {
                let steps = serial_steps(&goals, &first.scene, w)
                    .ok_or_else(|| TaskError::Compose("the single-arm oracle cannot complete the combined goals".into()))?;
                serial = serial.min(steps);
            }
            let budget = (OPTIONAL_BUDGET_FACTOR * serial as f64).floor() as u32;
            if budget == 0 {
                return Err(TaskError::Compose("serial plan too short for a constrained budget".into()));
            }
            goals.push(GoalPredicate::WithinSteps { budget: budget as u64 });
            Ok(Task {
                id: ids.join("+"),
                category: TaskCategory::DualOptional,
                instruction: format!("{} within {budget} steps", instructions.join(" and ")),
                goals,
                step_budget: budget,
                difficulty: first.difficulty,
                scene: first.scene.clone(),
            })
        }
    }
}
