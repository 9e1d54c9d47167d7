use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::PathBuf;

use dualarm::contingency::Difficulty;
use dualarm::episode::run_episode;
use dualarm::harness::{episode_report, run_remote_episode};
use dualarm::kinematics::Embodiment;
use dualarm::planner::{ArmMode, OraclePlanner, Planner, RandomPlanner};
use dualarm::protocol::*;
use dualarm::tasks::{SuiteScene, Task};
use dualarm::world::{Action, NavTarget};
use serde_json::{json, Value};

fn asset(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(rel)
}

fn registry() -> Registry {
    Registry::from_dirs(&asset("scenes"), &asset("tasks"), None).unwrap()
}

const GALLEY: &str = "galley-carry-full-cup";

fn send(reg: &Registry, req: Value) -> Value {
    serde_json::from_str(&handle_message(reg, &req.to_string())).unwrap()
}

fn reset(reg: &Registry, seed: u64) -> Value {
    send(reg, json!({"type": "reset", "payload": {"task": GALLEY, "seed": seed}}))
}

fn digest(reg: &Registry, s: &str) -> Value {
    let r = send(reg, json!({"type": "observe", "session": s}));
    json!([r["digest"], r["steps_used"]])
}

fn step(reg: &Registry, s: &str, action: &Action) -> Value {
    send(reg, json!({"type": "step", "session": s, "payload": {"action": action}}))
}

#[test]
fn resets_are_byte_identical() {
    let reg = registry();
    let a = reset(&reg, 7);
    let b = reset(&reg, 7);
    assert_ne!(a["session"], b["session"]);
    assert_eq!(a["observation"].to_string(), b["observation"].to_string());
    assert_eq!(a["mpe"], b["mpe"]);
    assert_eq!(a["digest"], b["digest"]);
    assert_eq!(a["done"], false);
    let other = registry();
    assert_eq!(reset(&other, 7).to_string(), a.to_string());
}

#[test]
fn done_ends_and_freezes_the_session() {
    let reg = registry();
    let s = reset(&reg, 1)["session"].as_str().unwrap().to_string();
    let r = step(&reg, &s, &Action::Done);
    assert_eq!((r["ok"].clone(), r["done"].clone(), r["success"].clone()), (json!(true), json!(true), json!(false)));
    let before = digest(&reg, &s);
    let again = step(&reg, &s, &Action::NavigateTo { target: NavTarget::Object("cup_1".into()) });
    assert_eq!(again["ok"], false);
    assert_eq!(again["error"]["code"], "E_TERMINAL");
    assert_eq!(digest(&reg, &s), before);
    assert_eq!(send(&reg, json!({"type": "close", "session": s}))["ok"], true);
    assert_eq!(send(&reg, json!({"type": "observe", "session": s}))["error"]["code"], "E_SESSION");
}

#[test]
fn errors_do_not_mutate() {
    let reg = registry();
    let s = reset(&reg, 2)["session"].as_str().unwrap().to_string();
    step(&reg, &s, &Action::NavigateTo { target: NavTarget::Object("cup_1".into()) });
    let before = digest(&reg, &s);
    let cases = [
        (json!({"type": "step", "session": "s999", "payload": {"action": {"type": "done"}}}), "E_SESSION"),
        (json!({"type": "step", "session": s, "payload": {"action": {"type": "pick_up", "object": "cup_1"}}}), "E_ACTION"),
        (json!({"type": "step", "session": s, "payload": {"action": {"type": "teleport"}}}), "E_ACTION"),
        (json!({"type": "step", "session": s, "payload": {}}), "E_ACTION"),
        (json!({"type": "reset", "payload": {"task": "no-such-task"}}), "E_TASK"),
        (json!({"type": "reset", "payload": {"task": GALLEY, "bogus": 1}}), "E_REQUEST"),
        (json!({"type": "jump"}), "E_REQUEST"),
        (json!({"type": "observe"}), "E_REQUEST"),
        (json!({"type": "close", "session": "s999"}), "E_SESSION"),
    ];
    let sessions = reg.session_count();
    for (req, code) in cases {
        let r = send(&reg, req.clone());
        assert_eq!(r["ok"], false, "{req}");
        assert_eq!(r["error"]["code"], code, "{req}");
        assert_eq!(digest(&reg, &s), before, "{req}");
    }
    assert_eq!(reg.session_count(), sessions);
    let parse: Value = serde_json::from_str(&handle_message(&reg, "{not json")).unwrap();
    assert_eq!(parse["error"]["code"], "E_PARSE");
}

#[test]
fn info_lists_the_catalogue() {
    let reg = registry();
    let r = send(&reg, json!({"type": "info"}));
    let info: ServerInfo = serde_json::from_value(r["info"].clone()).unwrap();
    assert!(info.tasks.iter().any(|t| t.id == GALLEY));
    assert_eq!(info.tasks.len(), reg.tasks().count());
    assert!(info.scenes.contains(&"kitchen".to_string()));
}

fn transcript(seed: u64) -> Vec<Action> {
    let reg = registry();
    let r = reset(&reg, seed);
    let t = reg.task(GALLEY).unwrap().clone();
    let mut p = RandomPlanner::with_seed(seed);
    let mut obs: dualarm::world::ObservationFrame = serde_json::from_value(r["observation"].clone()).unwrap();
    let mut out = Vec::new();
    for _ in 0..15 {
        let a = p.next_action(&obs, &t, None).unwrap();
        let r = step(&reg, r["session"].as_str().unwrap(), &a);
        out.push(a);
        if r["done"] == true {
            break;
        }
        obs = serde_json::from_value(r["observation"].clone()).unwrap();
    }
    out
}

#[test]
fn sessions_are_isolated() {
    let scripts = [transcript(3), transcript(4)];
    let run = |interleave: bool| {
        let reg = registry();
        let mut logs = [Vec::new(), Vec::new()];
        if interleave {
            let ids: Vec<String> = (0..2).map(|i| reset(&reg, 3 + i as u64)["session"].as_str().unwrap().to_string()).collect();
            for k in 0..scripts[0].len().max(scripts[1].len()) {
                for i in [1, 0] {
                    if let Some(a) = scripts[i].get(k) {
                        logs[i].push(step(&reg, &ids[i], a).to_string());
                    }
                }
            }
        } else {
            for i in 0..2 {
                let id = reset(&reg, 3 + i as u64)["session"].as_str().unwrap().to_string();
                for a in &scripts[i] {
                    logs[i].push(step(&reg, &id, a).to_string());
                }
            }
        }
        logs
    };
    assert_eq!(run(true), run(false));
}

#[test]
fn parallel_connections_agree_with_serial() {
    let server = ServerHandle::spawn(registry()).unwrap();
    let go = |seed: u64| {
        let mut c = ProtocolClient::connect(server.addr).unwrap();
        let r = c.reset(ResetPayload { task: GALLEY.into(), seed, difficulty: Some(Difficulty::Medium), robot: None }).unwrap();
        let s = r.session.unwrap();
        let mut digests = vec![];
        for a in transcript(seed) {
            digests.push(c.step(&s, &a).unwrap().digest);
        }
        digests
    };
    let serial: Vec<_> = (0..4).map(go).collect();
    let parallel: Vec<_> = std::thread::scope(|sc| {
        let hs: Vec<_> = (0..4).map(|seed| sc.spawn(move || go(seed))).collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(serial, parallel);
}

#[test]
fn responses_respect_the_size_bound() {
    let mut reg = registry();
    reg.max_message_bytes = 512;
    let lines = [
        json!({"type": "reset", "payload": {"task": GALLEY}}),
        json!({"type": "info"}),
        json!({"type": "observe", "session": "s1"}),
        json!({"type": "step", "session": "s1", "payload": {"action": {"type": "done"}}}),
    ];
    for l in lines {
        let out = handle_message(&reg, &l.to_string());
        assert!(out.len() <= 512, "{} bytes", out.len());
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["ok"] == true || v["error"]["code"].is_string());
    }
    let big = handle_message(&reg, &json!({"type": "reset", "payload": {"task": GALLEY}}).to_string());
    assert!(big.contains("E_SIZE"));

    let server = ServerHandle::spawn(reg).unwrap();
    let mut stream = TcpStream::connect(server.addr).unwrap();
    let huge = format!("{{\"type\":\"info\",\"pad\":\"{}\"}}\n", "x".repeat(4096));
    stream.write_all(huge.as_bytes()).unwrap();
    stream.write_all(b"{\"type\":\"close\",\"session\":\"s77\"}\n").unwrap();
    let mut reader = BufReader::new(stream);
    let mut a = String::new();
    reader.read_line(&mut a).unwrap();
    assert!(a.contains("E_SIZE") && a.len() <= 513);
    let mut b = String::new();
    reader.read_line(&mut b).unwrap();
    assert!(b.contains("E_SESSION"));
}

#[test]
fn oracle_over_the_wire_matches_in_process() {
    let server = ServerHandle::spawn(registry()).unwrap();
    let ids = [GALLEY, "kitchen-dual_essential-02", "living_room-dual_optional-01", "bedroom-single_arm-05"];
    for id in ids {
        let task = Task::load(&asset(&format!("tasks/{id}.task.json"))).unwrap();
        let scene = SuiteScene::load(&asset(&format!("scenes/{}.scene.json", task.scene))).unwrap();
        for (robot, difficulty, seed) in [(Embodiment::X1, Difficulty::Easy, 0), (Embodiment::X1, Difficulty::Medium, 5)] {
            let started = std::time::Instant::now();
            let mut p = OraclePlanner::new(ArmMode::DualArm);
            let ep = run_episode(scene.world(robot), &task, &mut p, difficulty, seed).unwrap();
            let local = episode_report(&ep, &p.name(), started).unwrap();
            let mut p = OraclePlanner::new(ArmMode::DualArm);
            let remote = run_remote_episode(server.addr, &task, robot, &mut p, difficulty, seed).unwrap();
            assert!(local.same_outcome(&remote), "{id}\n{local:?}\n{remote:?}");
            if difficulty == Difficulty::Easy {
                assert!(remote.success, "{id}");
            }
        }
    }
}
