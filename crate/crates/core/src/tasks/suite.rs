use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{compose_dual_task, ComposeMode, GoalPredicate, ObjectRef, Task, TaskCategory, TaskError, DEFAULT_STEP_BUDGET};
use crate::contingency::Difficulty;
use crate::episode::run_episode;
use crate::kinematics::Embodiment;
use crate::planner::{ArmMode, OraclePlanner};
use crate::rng::SplitMix64;
use crate::contingency::OutcomeTable;
use crate::world::{build_world, scene_name_from_path, LoadOptions, Property, SceneError, SceneFile, StateFlag, WorldState};

/// Tasks requested per category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub dual_essential: usize,
    pub dual_optional: usize,
    pub single_arm: usize,
    /// Candidate draws allowed per requested task before giving up.
    #[serde(default = "default_attempts")]
    pub attempts_per_task: usize,
    /// Every accepted task must be solvable on each of these.
    #[serde(default = "default_embodiments")]
    pub embodiments: Vec<Embodiment>,
}

fn default_attempts() -> usize {
    40
}

fn default_embodiments() -> Vec<Embodiment> {
    vec![Embodiment::X1, Embodiment::H1]
}

impl SuiteConfig {
    pub fn new(dual_essential: usize, dual_optional: usize, single_arm: usize) -> SuiteConfig {
        SuiteConfig {
            dual_essential,
            dual_optional,
            single_arm,
            attempts_per_task: default_attempts(),
            embodiments: default_embodiments(),
        }
    }

    pub fn count(&self, c: TaskCategory) -> usize {
        match c {
            TaskCategory::DualEssential => self.dual_essential,
            TaskCategory::DualOptional => self.dual_optional,
            TaskCategory::SingleArm => self.single_arm,
        }
    }
}

/// Suite manifest: generation inputs plus the task files produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteManifest {
    pub seed: u64,
    pub config: SuiteConfig,
    /// Scene files, relative to the manifest.
    pub scenes: Vec<String>,
    /// Task files, relative to the manifest.
    pub tasks: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct SuiteScene {
    pub name: String,
    pub file: SceneFile,
}

impl SuiteScene {
    pub fn world(&self, embodiment: Embodiment) -> WorldState {
        self.world_with(embodiment, None).expect("suite scenes are validated on load")
    }

    /// Fresh world on `embodiment`, optionally with a replacement outcome table.
    pub fn world_with(&self, embodiment: Embodiment, table: Option<Arc<OutcomeTable>>) -> Result<WorldState, SceneError> {
        let mut w = build_world(&self.file, &LoadOptions { embodiment: Some(embodiment), table, seed: None })?;
        w.name = self.name.clone();
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<SuiteScene, SceneError> {
        let txt = std::fs::read_to_string(path).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))?;
        let file = SceneFile::parse(&txt)?;
        Ok(SuiteScene { name: file.name.clone().unwrap_or_else(|| scene_name_from_path(path)), file })
    }
}

fn single(scene: &str, goals: Vec<GoalPredicate>, instruction: String) -> Task {
    Task {
        id: String::new(),
        category: TaskCategory::SingleArm,
        instruction,
        goals,
        step_budget: DEFAULT_STEP_BUDGET,
        difficulty: Difficulty::Easy,
        scene: scene.to_string(),
    }
}

/// Template single-arm tasks for a scene: transports, openings and fills.
/// Transports of heavy objects and openings of hold-to-open containers are
/// included; they only become solvable after dual-arm composition.
pub fn single_arm_candidates(scene: &str, world: &WorldState) -> Vec<Task> {
    let mut out = Vec::new();
    let objs: Vec<_> = world.objects.values().collect();
    for o in &objs {
        if !o.has(Property::Pickupable) || o.is(StateFlag::Broken) {
            continue;
        }
        for r in &objs {
            if r.id == o.id || o.parent.as_deref() == Some(r.id.as_str()) || !r.has(Property::Receptacle) || r.has(Property::Pickupable) {
                continue;
            }
            out.push(single(
                scene,
                vec![GoalPredicate::ObjectIn { object: ObjectRef::id(&o.id), receptacle: ObjectRef::id(&r.id) }],
                format!("put the {} in the {}", o.category, r.category),
            ));
        }
    }
    for o in &objs {
        if o.has(Property::Openable) && o.is(StateFlag::Closed) {
            out.push(single(
                scene,
                vec![GoalPredicate::ObjectState { object: ObjectRef::id(&o.id), flag: StateFlag::Open, value: true }],
                format!("open the {}", o.category),
            ));
        }
    }
    let sources = objs.iter().any(|s| s.has(Property::Pourable) && s.is(StateFlag::Filled) && s.has(Property::Pickupable));
    for o in &objs {
        if sources && o.has(Property::Pourable) && !o.is(StateFlag::Filled) && !o.is(StateFlag::Broken) {
            out.push(single(
                scene,
                vec![GoalPredicate::ObjectState { object: ObjectRef::id(&o.id), flag: StateFlag::Filled, value: true }],
                format!("fill the {}", o.category),
            ));
        }
    }
    out
}

fn solves(task: &Task, worlds: &[WorldState], mode: ArmMode) -> bool {
    worlds.iter().all(|w| {
        let mut p = OraclePlanner::new(mode);
        run_episode(w.clone(), task, &mut p, Difficulty::Easy, 0).is_ok_and(|ep| ep.trace.success)
    })
}

fn essential_goal(t: &Task, worlds: &[WorldState]) -> bool {
    t.goals.iter().any(|g| match g {
        GoalPredicate::ObjectIn { object, .. } => worlds.iter().all(|w| w.object(&object.0).is_some_and(|o| o.has(Property::Heavy))),
        GoalPredicate::ObjectState { object, flag: StateFlag::Open, value: true } => {
            worlds.iter().all(|w| w.object(&object.0).is_some_and(|o| o.has(Property::HoldToOpen)))
        }
        _ => false,
    })
}

/// Draw a candidate task of `category` from one scene.
fn propose(category: TaskCategory, scene: &SuiteScene, worlds: &[WorldState], rng: &mut SplitMix64) -> Option<Task> {
    let cands = single_arm_candidates(&scene.name, &worlds[0]);
    let plain: Vec<&Task> = cands.iter().filter(|t| !essential_goal(t, worlds)).collect();
    let refs: Vec<&WorldState> = worlds.iter().collect();
    match category {
        TaskCategory::SingleArm => {
            let t = (*plain.get(rng.next_below(plain.len().max(1)))?).clone();
            (solves(&t, worlds, ArmMode::SingleArm) && solves(&t, worlds, ArmMode::DualArm)).then_some(t)
        }
        TaskCategory::DualEssential => {
            let ess: Vec<&Task> = cands.iter().filter(|t| essential_goal(t, worlds)).collect();
            let mut parts = vec![(*ess.get(rng.next_below(ess.len().max(1)))?).clone()];
            if !plain.is_empty() && rng.next_below(2) == 1 {
                parts.insert(0, plain[rng.next_below(plain.len())].clone());
            }
            let t = compose_dual_task(&parts, ComposeMode::Essential, &refs).ok()?;
            (solves(&t, worlds, ArmMode::DualArm) && !solves(&t, worlds, ArmMode::SingleArm)).then_some(t)
        }
        TaskCategory::DualOptional => {
            let transports: Vec<&Task> =
                plain.iter().copied().filter(|t| matches!(t.goals[0], GoalPredicate::ObjectIn { .. })).collect();
            if transports.len() < 2 {
                return None;
            }
            let a = rng.next_below(transports.len());
            let b = rng.next_below(transports.len());
            let object = |t: &Task| match &t.goals[0] {
                GoalPredicate::ObjectIn { object, .. } => object.clone(),
                _ => unreachable!(),
            };
            if object(transports[a]) == object(transports[b]) {
                return None;
            }
            let t = compose_dual_task(&[transports[a].clone(), transports[b].clone()], ComposeMode::Optional, &refs).ok()?;
            solves(&t, worlds, ArmMode::DualArm).then_some(t)
        }
    }
}

fn has_candidates(category: TaskCategory, scene: &SuiteScene, worlds: &[WorldState]) -> bool {
    let cands = single_arm_candidates(&scene.name, &worlds[0]);
    let ess = cands.iter().filter(|t| essential_goal(t, worlds)).count();
    let plain = cands.len() - ess;
    match category {
        TaskCategory::SingleArm => plain > 0,
        TaskCategory::DualEssential => ess > 0,
        TaskCategory::DualOptional => plain >= 2,
    }
}

/// Deterministic suite of oracle-solvable tasks, `{scene}-{category}-{nn}` ids.
pub fn generate_task_suite(scenes: &[SuiteScene], config: &SuiteConfig, seed: u64) -> Result<Vec<Task>, TaskError> {
    if config.embodiments.is_empty() {
        return Err(TaskError::Generation("no embodiments to validate against".into()));
    }
    let worlds: Vec<Vec<WorldState>> =
        scenes.iter().map(|s| config.embodiments.iter().map(|&e| s.world(e)).collect()).collect();
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::new();
    for category in TaskCategory::ALL {
        let want = config.count(category);
        if want == 0 {
            continue;
        }
        let eligible: Vec<usize> = (0..scenes.len()).filter(|&i| has_candidates(category, &scenes[i], &worlds[i])).collect();
        if eligible.is_empty() {
            return Err(TaskError::Generation(format!("no scene supports {category} tasks")));
        }
        let mut seen = BTreeSet::new();
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < want {
            if attempts >= want * config.attempts_per_task {
                return Err(TaskError::Generation(format!(
                    "found only {accepted} of {want} {category} tasks in {attempts} attempts"
                )));
            }
            attempts += 1;
            let si = eligible[rng.next_below(eligible.len())];
            let Some(mut task) = propose(category, &scenes[si], &worlds[si], &mut rng) else { continue };
            let key = (scenes[si].name.clone(), serde_json::to_string(&task.goals).expect("goals serialize"));
            if !seen.insert(key) {
                continue;
            }
            task.id = format!("{}-{}-{:02}", scenes[si].name, category, accepted);
            out.push(task);
            accepted += 1;
        }
    }
    Ok(out)
}
