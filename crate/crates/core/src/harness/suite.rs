use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{failure_histogram, fnv_hex, run_trials, run_trials_remote, EpisodeReport, HarnessError, PlannerFactory};
use crate::contingency::{Difficulty, OutcomeTable};
use crate::kinematics::Embodiment;
use crate::tasks::{SuiteManifest, SuiteScene, Task, TaskCategory};

#[derive(Clone, Debug)]
pub struct LoadedSuite {
    pub manifest: SuiteManifest,
    pub scenes: Vec<SuiteScene>,
    pub tasks: Vec<Task>,
}

impl LoadedSuite {
    /// Reads a manifest and the scene and task files it lists.
    pub fn load(path: &Path) -> Result<LoadedSuite, HarnessError> {
        let txt = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let manifest: SuiteManifest =
            serde_json::from_str(&txt).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let scenes = manifest
            .scenes
            .iter()
            .map(|s| SuiteScene::load(&dir.join(s)).map_err(|e| HarnessError::Config(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let tasks = manifest.tasks.iter().map(|t| Task::load(&dir.join(t))).collect::<Result<Vec<_>, _>>()?;
        let suite = LoadedSuite { manifest, scenes, tasks };
        for t in &suite.tasks {
            let scene = suite.scene(&t.scene)?;
            t.validate_against(&scene.world(Embodiment::X1))?;
        }
        Ok(suite)
    }

    pub fn scene(&self, name: &str) -> Result<&SuiteScene, HarnessError> {
        self.scenes
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| HarnessError::Config(format!("suite has no scene named {name}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub robot: Embodiment,
    pub difficulty: Difficulty,
    pub planner: String,
    pub trials: usize,
    pub seed: u64,
    /// Protocol server hosting the environment instead of the local simulator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub server: Option<SocketAddr>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: TaskCategory,
    pub tasks: usize,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub navigation: usize,
    pub body_adjustment: usize,
    pub logical: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: EvalConfig,
    pub config_digest: String,
    pub trials: usize,
    pub success_rate: f64,
    pub categories: Vec<CategoryStats>,
    pub failure_histogram: Histogram,
    pub episodes: Vec<EpisodeReport>,
}

/// Hash of the run configuration and every task definition.
pub fn config_digest(cfg: &EvalConfig, tasks: &[Task]) -> String {
    let blob = serde_json::json!({ "config": cfg, "tasks": tasks });
    fnv_hex(blob.to_string().as_bytes())
}

/// Runs every suite task `cfg.trials` times and aggregates.
pub fn evaluate(
    suite: &LoadedSuite,
    cfg: &EvalConfig,
    planners: &PlannerFactory,
    table: Option<Arc<OutcomeTable>>,
) -> Result<SuiteReport, HarnessError> {
    if suite.tasks.is_empty() {
        return Err(HarnessError::Config("suite contains no tasks".into()));
    }
    let mut episodes = Vec::with_capacity(suite.tasks.len() * cfg.trials);
    for task in &suite.tasks {
        let reports = match cfg.server {
            Some(addr) => run_trials_remote(addr, task, cfg.robot, planners, cfg.trials, cfg.seed, cfg.difficulty)?,
            None => {
                let world = suite
                    .scene(&task.scene)?
                    .world_with(cfg.robot, table.clone())
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                run_trials(&world, task, planners, cfg.trials, cfg.seed, cfg.difficulty)?
            }
        };
        episodes.extend(reports);
    }
    Ok(aggregate(cfg.clone(), config_digest(cfg, &suite.tasks), &suite.tasks, episodes))
}

pub fn aggregate(config: EvalConfig, config_digest: String, tasks: &[Task], episodes: Vec<EpisodeReport>) -> SuiteReport {
    let mut per: BTreeMap<TaskCategory, CategoryStats> = BTreeMap::new();
    for t in tasks {
        per.entry(t.category)
            .or_insert(CategoryStats { category: t.category, tasks: 0, episodes: 0, successes: 0, success_rate: 0.0 })
            .tasks += 1;
    }
    for e in &episodes {
        if let Some(s) = per.get_mut(&e.category) {
            s.episodes += 1;
            s.successes += e.success as usize;
        }
    }
    for s in per.values_mut() {
        s.success_rate = if s.episodes == 0 { 0.0 } else { s.successes as f64 / s.episodes as f64 };
    }
    let [navigation, body_adjustment, logical] = failure_histogram(&episodes);
    let successes = episodes.iter().filter(|e| e.success).count();
    SuiteReport {
        config,
        config_digest,
        trials: episodes.len(),
        success_rate: if episodes.is_empty() { 0.0 } else { successes as f64 / episodes.len() as f64 },
        categories: per.into_values().collect(),
        failure_histogram: Histogram { navigation, body_adjustment, logical },
        episodes,
    }
}

/// Writes `episodes.csv` and `report.json` under `dir`.
pub fn write_reports(report: &SuiteReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("episodes.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| HarnessError::Io(e.into()))?;
    for e in &report.episodes {
        w.serialize(e).map_err(|e| HarnessError::Io(e.into()))?;
    }
    w.flush()?;
    let json_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Io(e.into()))?;
    std::fs::write(&json_path, json + "\n")?;
    Ok(vec![csv_path, json_path])
}
