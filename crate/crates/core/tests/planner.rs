use std::net::TcpListener;
use std::path::PathBuf;

use dualarm::contingency::Difficulty;
use dualarm::episode::run_episode;
use dualarm::kinematics::{Arm, Embodiment};
use dualarm::planner::*;
use dualarm::tasks::Task;
use dualarm::world::*;

fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

fn scene(name: &str) -> WorldState {
    load_scene(&asset(&format!("scenes/{name}.scene.json")), &LoadOptions::default()).unwrap()
}

fn task(scene: &str, goals: &str) -> Task {
    Task::parse(&format!(r#"{{"id": "t", "category": "single_arm", "instruction": "", "goals": {goals}, "scene": "{scene}"}}"#)).unwrap()
}

fn referenced(a: &Action) -> Vec<&str> {
    match a {
        Action::NavigateTo { target: NavTarget::Object(o) } => vec![o],
        Action::PickUp { object, .. } | Action::Open { object, .. } | Action::Close { object, .. } | Action::LiftTogether { object } => {
            vec![object]
        }
        Action::Place { object, receptacle, .. } => vec![object, receptacle],
        Action::Pour { object, target, .. } => vec![object, target],
        Action::HoldAndOpen { held, container } => vec![held, container],
        Action::Parallel { left, right } => referenced(left).into_iter().chain(referenced(right)).collect(),
        _ => vec![],
    }
}

#[test]
fn oracle_picks_up_an_adjacent_object() {
    let mut w = scene("galley");
    let t = task("galley", r#"[{"type":"object_in","object":"cup_1","receptacle":"sink_1"}]"#);
    let mut p = OraclePlanner::new(ArmMode::DualArm);
    p.reset(&t, 0).unwrap();
    let first = p.next_action(&observe(&w), &t, None).unwrap();
    assert_eq!(first, Action::NavigateTo { target: NavTarget::Object("cup_1".into()) });
    apply_action(&mut w, &first, Difficulty::Easy);
    run_to_idle(&mut w);
    let a = p.next_action(&observe(&w), &t, None).unwrap();
    assert!(matches!(&a, Action::PickUp { object, .. } if object == "cup_1"), "{a}");
}

#[test]
fn oracle_lifts_heavy_objects_together() {
    let t = task("kitchen", r#"[{"type":"object_in","object":"pot_1","receptacle":"table_1"}]"#);
    for e in [Embodiment::X1, Embodiment::H1] {
        let w = load_scene(&asset("scenes/kitchen.scene.json"), &LoadOptions { embodiment: Some(e), ..LoadOptions::default() }).unwrap();
        let ep = run_episode(w.clone(), &t, &mut OraclePlanner::new(ArmMode::DualArm), Difficulty::Easy, 0).unwrap();
        assert!(ep.trace.success, "{e:?}");
        assert!(ep.trace.steps.iter().any(|s| matches!(&s.action, Action::LiftTogether { object } if object == "pot_1")));
        let single = run_episode(w, &t, &mut OraclePlanner::new(ArmMode::SingleArm), Difficulty::Easy, 0).unwrap();
        assert!(!single.trace.success);
        assert!(single.trace.steps.iter().all(|s| !s.action.binds_both_arms()));
    }
}

#[test]
fn oracle_avoids_a_broken_instance() {
    let mut raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(asset("scenes/galley.scene.json")).unwrap()).unwrap();
    let objects = raw["objects"].as_array_mut().unwrap();
    let cup = objects.iter().position(|o| o["id"] == "cup_1").unwrap();
    let mut spare = objects[cup].clone();
    spare["id"] = "cup_2".into();
    spare["position"][0] = serde_json::json!(1.1);
    spare["state"] = serde_json::json!([]);
    objects[cup]["state"] = serde_json::json!(["broken"]);
    objects[cup]["properties"] = serde_json::json!(["pourable", "breakable"]);
    objects.push(spare);
    let w = build_world(&SceneFile::parse(&raw.to_string()).unwrap(), &LoadOptions::default()).unwrap();

    let t = task("galley", r#"[{"type":"object_in","object":"category:cup","receptacle":"sink_1"}]"#);
    let ep = run_episode(w, &t, &mut OraclePlanner::new(ArmMode::DualArm), Difficulty::Easy, 0).unwrap();
    assert!(ep.trace.success);
    assert!(ep.trace.steps.iter().all(|s| !referenced(&s.action).contains(&"cup_1")));
    assert!(ep.trace.steps.iter().any(|s| matches!(&s.action, Action::PickUp { object, .. } if object == "cup_2")));
}

#[test]
fn random_actions_only_reference_visible_objects() {
    let t = task("kitchen", "[]");
    for seed in 0..5 {
        let mut w = scene("kitchen");
        let mut p = RandomPlanner::with_seed(seed);
        p.reset(&t, seed).unwrap();
        for _ in 0..80 {
            let obs = observe(&w);
            let a = p.next_action(&obs, &t, None).unwrap();
            for id in referenced(&a) {
                assert!(obs.object(id).is_some(), "{a} references unseen {id}");
            }
            apply_action(&mut w, &a, Difficulty::Medium);
            run_to_idle(&mut w);
        }
    }
}

#[test]
fn random_choice_is_uniform() {
    let mut w = scene("kitchen");
    apply_action(&mut w, &Action::NavigateTo { target: NavTarget::Object("cup_1".into()) }, Difficulty::Easy);
    run_to_idle(&mut w);
    apply_action(&mut w, &Action::PickUp { object: "cup_1".into(), arm: Arm::Left }, Difficulty::Easy);
    run_to_idle(&mut w);
    let obs = observe(&w);
    let all = well_formed_actions(&obs);
    let k = all.len();
    assert!(k > 10);
    let n = 10_000;
    let mut counts = vec![0usize; k];
    let mut p = RandomPlanner::with_seed(3);
    for _ in 0..n {
        let a = p.choose(&obs);
        counts[all.iter().position(|b| *b == a).expect("choice is well formed")] += 1;
    }
    let q = 1.0 / k as f64;
    let sigma = (n as f64 * q * (1.0 - q)).sqrt();
    for (i, c) in counts.iter().enumerate() {
        assert!((*c as f64 - n as f64 * q).abs() <= 4.0 * sigma, "{} drawn {c} times", all[i]);
    }
}

#[test]
fn random_planner_reseeds_on_reset() {
    let t = task("kitchen", "[]");
    let obs = observe(&scene("kitchen"));
    let draw = |seed| {
        let mut p = RandomPlanner::new();
        p.reset(&t, seed).unwrap();
        (0..50).map(|_| p.next_action(&obs, &t, None).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(draw(9), draw(9));
    assert_ne!(draw(9), draw(10));
}

#[test]
fn remote_planner_matches_in_process() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || serve_planner(listener, || Box::new(OraclePlanner::new(ArmMode::DualArm))));
    let t = Task::load(&asset("tasks/galley-carry-full-cup.task.json")).unwrap();
    for seed in 0..3 {
        let local = run_episode(scene("galley"), &t, &mut OraclePlanner::new(ArmMode::DualArm), Difficulty::Medium, seed).unwrap();
        let mut remote = planner_from_name(&format!("remote:{addr}")).unwrap();
        let far = run_episode(scene("galley"), &t, remote.as_mut(), Difficulty::Medium, seed).unwrap();
        assert_eq!(local.trace, far.trace);
    }
    assert!(planner_from_name("nonsense").is_none());
}
