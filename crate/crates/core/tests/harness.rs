use std::path::PathBuf;

use dualarm::contingency::Difficulty;
use dualarm::harness::*;
use dualarm::kinematics::Embodiment;
use dualarm::planner::*;
use dualarm::protocol::{Registry, ServerHandle};
use dualarm::tasks::{FailureCategory, SuiteScene, Task, TaskCategory};
use dualarm::world::*;

fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

fn galley() -> (WorldState, Task) {
    let w = load_scene(&asset("scenes/galley.scene.json"), &LoadOptions::default()).unwrap();
    (w, Task::load(&asset("tasks/galley-carry-full-cup.task.json")).unwrap())
}

fn oracle() -> Box<dyn Planner> {
    Box::new(OraclePlanner::new(ArmMode::DualArm))
}

fn random() -> Box<dyn Planner> {
    Box::new(RandomPlanner::new())
}

#[test]
fn oracle_is_perfect_at_easy() {
    for id in ["galley-carry-full-cup", "kitchen-single_arm-01", "living_room-single_arm-02"] {
        let task = Task::load(&asset(&format!("tasks/{id}.task.json"))).unwrap();
        let world = SuiteScene::load(&asset(&format!("scenes/{}.scene.json", task.scene))).unwrap().world(Embodiment::X1);
        let reports = run_trials(&world, &task, &oracle, 50, 100, Difficulty::Easy).unwrap();
        assert_eq!(reports.len(), 50);
        assert_eq!(success_rate(&reports).unwrap(), 1.0, "{id}");
        for (i, r) in reports.iter().enumerate() {
            assert_eq!(r.seed, 100 + i as u64);
            assert!(r.failure_category.is_none());
            assert!(r.steps <= task.step_budget);
        }
    }
}

#[test]
fn random_reports_are_reproducible() {
    let (w, t) = galley();
    let a = run_trials(&w, &t, &random, 50, 9, Difficulty::Medium).unwrap();
    let b = run_trials(&w, &t, &random, 50, 9, Difficulty::Medium).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.same_outcome(y)));
    for r in &a {
        assert_eq!(r.success, r.failure_category.is_none());
        assert!(r.steps <= t.step_budget);
    }
    assert!(run_trials(&w, &t, &random, 0, 0, Difficulty::Easy).is_err());
}

#[test]
fn protocol_path_matches_in_process() {
    let (w, t) = galley();
    let server = ServerHandle::spawn(Registry::from_dirs(&asset("scenes"), &asset("tasks"), None).unwrap()).unwrap();
    for (make, d) in [(oracle as fn() -> Box<dyn Planner>, Difficulty::Medium), (random, Difficulty::Hard)] {
        let local = run_trials(&w, &t, &make, 20, 40, d).unwrap();
        let remote = run_trials_remote(server.addr, &t, Embodiment::X1, &make, 20, 40, d).unwrap();
        for (l, r) in local.iter().zip(&remote) {
            assert!(l.same_outcome(r), "{l:?}\n{r:?}");
        }
    }
}

#[test]
fn success_tracks_difficulty() {
    let (w, t) = galley();
    let n = 10_000;
    let mut last = 1.1;
    for (d, p) in [(Difficulty::Easy, 1.0f64), (Difficulty::Medium, 0.5), (Difficulty::Hard, 0.2)] {
        let rate = success_rate(&run_trials(&w, &t, &oracle, n, 0, d).unwrap()).unwrap();
        // two sampled actions: pick up and place
        let want = p.powi(2);
        let sigma = (want * (1.0 - want) / n as f64).sqrt();
        assert!((rate - want).abs() <= 4.0 * sigma + 1e-12, "{d:?}: {rate} vs {want}");
        assert!(rate < last);
        last = rate;
    }
}

#[test]
fn success_rate_needs_reports() {
    assert!(success_rate(&[]).is_err());
}

#[test]
fn suite_reports_are_consistent_and_written() {
    let suite = LoadedSuite::load(&asset("suite.json")).unwrap();
    let tasks: Vec<Task> = TaskCategory::ALL
        .iter()
        .map(|c| suite.tasks.iter().find(|t| t.category == *c).unwrap().clone())
        .collect();
    let small = LoadedSuite { tasks, ..suite };
    let cfg = EvalConfig {
        robot: Embodiment::X1,
        difficulty: Difficulty::Hard,
        planner: "oracle-single".into(),
        trials: 6,
        seed: 3,
        server: None,
    };
    let make = || planner_from_name("oracle-single").unwrap();
    let report = evaluate(&small, &cfg, &make, None).unwrap();
    assert_eq!(report.trials, 18);
    assert_eq!(report.episodes.len(), 18);
    let failures = report.episodes.iter().filter(|e| !e.success).count();
    let h = report.failure_histogram;
    assert!(failures > 0);
    assert_eq!(h.navigation + h.body_adjustment + h.logical, failures);
    for c in &report.categories {
        assert!((0.0..=1.0).contains(&c.success_rate));
        assert_eq!(c.episodes, 6);
    }
    let essential = report.categories.iter().find(|c| c.category == TaskCategory::DualEssential).unwrap();
    assert_eq!(essential.successes, 0);
    assert_eq!(report.config_digest, config_digest(&cfg, &small.tasks));
    assert_ne!(report.config_digest, config_digest(&EvalConfig { seed: 4, ..cfg.clone() }, &small.tasks));

    let dir = tempfile::tempdir().unwrap();
    let paths = write_reports(&report, dir.path()).unwrap();
    let csv = std::fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(csv.lines().count(), 19);
    assert!(csv.lines().next().unwrap().starts_with("task_id,category,embodiment"));
    let back: SuiteReport = serde_json::from_str(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn histogram_counts_by_category() {
    let (w, t) = galley();
    let mut reports = run_trials(&w, &t, &oracle, 30, 0, Difficulty::Hard).unwrap();
    reports[0].success = false;
    reports[0].failure_category = Some(FailureCategory::Navigation);
    let bins = failure_histogram(&reports);
    let failed = reports.iter().filter(|r| !r.success).count();
    assert_eq!(bins.iter().sum::<usize>(), failed);
    assert!(bins[FailureCategory::Logical.index()] > 0);
}

#[test]
fn recorded_motion_has_joint_rows() {
    let (w, t) = galley();
    let feats = record_motion(w.clone(), &t, &mut OraclePlanner::new(ArmMode::DualArm), Difficulty::Easy, 0).unwrap();
    assert!(!feats.is_empty());
    let cols = w.model.left.dof() + w.model.right.dof() + 1;
    for f in &feats {
        assert!(f.len() >= 2);
        assert_eq!(f.dim(), cols);
    }
}
