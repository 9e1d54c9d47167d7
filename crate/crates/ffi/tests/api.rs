use std::ffi::{CStr, CString};
use std::ptr;

use dualarm_ffi::*;

fn scene() -> CString {
    CString::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets/scenes/kitchen.scene.json")).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(da_last_error_message()) }.to_str().unwrap().to_string()
}

fn load(seed: u64) -> *mut DaWorld {
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { da_world_load(scene().as_ptr(), seed, false, &mut w) }, DaStatus::Ok);
    w
}

fn digest(w: *mut DaWorld) -> u64 {
    let mut d = 0;
    assert_eq!(unsafe { da_world_digest(w, &mut d) }, DaStatus::Ok);
    d
}

fn act(w: *mut DaWorld, json: &str, d: DaDifficulty) -> (DaStatus, Option<String>) {
    let a = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { da_world_apply_action(w, a.as_ptr(), d, &mut out) };
    let text = (!out.is_null()).then(|| {
        let s = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { da_string_free(out) };
        s
    });
    (status, text)
}

const SCRIPT: [&str; 3] = [
    r#"{"type":"navigate_to","target":{"object":"cup_1"}}"#,
    r#"{"type":"pick_up","object":"cup_1","arm":"left"}"#,
    r#"{"type":"navigate_to","target":{"object":"sink_1"}}"#,
];

fn run(seed: u64) -> Vec<u64> {
    let w = load(seed);
    let mut out = vec![digest(w)];
    for a in SCRIPT {
        assert_eq!(act(w, a, DaDifficulty::Hard).0, DaStatus::Ok);
        assert_eq!(unsafe { da_world_run_to_idle(w, ptr::null_mut()) }, DaStatus::Ok);
        out.push(digest(w));
    }
    unsafe { da_world_free(w) };
    out
}

#[test]
fn replays_are_identical() {
    assert_eq!(run(5), run(5));
}

#[test]
fn digest_matches_the_library() {
    let w = load(5);
    let native = dualarm::world::load_scene(
        std::path::Path::new(scene().to_str().unwrap()),
        &dualarm::world::LoadOptions { seed: Some(5), ..Default::default() },
    )
    .unwrap();
    assert_eq!(digest(w), native.digest());
    unsafe { da_world_free(w) };
}

#[test]
fn ticks_advance_until_idle() {
    let w = load(0);
    let (status, result) = act(w, SCRIPT[0], DaDifficulty::Easy);
    assert_eq!(status, DaStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&result.unwrap()).unwrap();
    let ticks = v["ticks_consumed"].as_u64().unwrap();
    let (busy, none) = act(w, SCRIPT[1], DaDifficulty::Easy);
    assert_eq!((busy, none), (DaStatus::WorldBusy, None));
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { da_world_step_tick(w) }, DaStatus::Ok);
    assert!(last_error().is_empty());
    let mut rest = 0;
    assert_eq!(unsafe { da_world_run_to_idle(w, &mut rest) }, DaStatus::Ok);
    assert_eq!(rest + 1, ticks);
    unsafe { da_world_free(w) };
}

#[test]
fn errors_are_reported_without_side_effects() {
    let w = load(0);
    let before = digest(w);
    for bad in ["{", r#"{"type":"jump"}"#, r#"{"type":"pick_up"}"#] {
        assert_eq!(act(w, bad, DaDifficulty::Easy).0, DaStatus::Action);
        assert!(last_error().starts_with("bad action"));
    }
    assert_eq!(digest(w), before);
    let bytes = [0xffu8, 0];
    let status = unsafe { da_world_apply_action(w, bytes.as_ptr().cast(), DaDifficulty::Easy, ptr::null_mut()) };
    assert_eq!(status, DaStatus::InvalidUtf8);
    assert_eq!(unsafe { da_world_apply_action(w, ptr::null(), DaDifficulty::Easy, ptr::null_mut()) }, DaStatus::NullPointer);
    assert_eq!(unsafe { da_world_step_tick(ptr::null_mut()) }, DaStatus::NullPointer);
    unsafe { da_world_free(w) };
    unsafe { da_world_free(ptr::null_mut()) };
}

#[test]
fn bad_scenes_fail_to_load() {
    let mut w = ptr::null_mut();
    let missing = CString::new("/nonexistent.scene.json").unwrap();
    assert_eq!(unsafe { da_world_load(missing.as_ptr(), 0, true, &mut w) }, DaStatus::Io);
    assert!(w.is_null());
    let dir = std::env::temp_dir().join(format!("dualarm-ffi-{}.scene.json", std::process::id()));
    std::fs::write(&dir, "{\"grid\": 3}").unwrap();
    let bad = CString::new(dir.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { da_world_load(bad.as_ptr(), 0, true, &mut w) }, DaStatus::Scene);
    assert!(last_error().contains("parse"));
    std::fs::remove_file(dir).unwrap();
    assert_eq!(unsafe { da_world_load(bad.as_ptr(), 0, true, ptr::null_mut()) }, DaStatus::NullPointer);
}

#[test]
fn observation_and_helpers() {
    let w = load(0);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { da_world_observe_json(w, &mut out) }, DaStatus::Ok);
    let frame: dualarm::world::ObservationFrame = serde_json::from_str(unsafe { CStr::from_ptr(out) }.to_str().unwrap()).unwrap();
    unsafe { da_string_free(out) };
    assert!(frame.object("cup_1").is_some());
    unsafe { da_world_free(w) };
    assert_eq!(da_mpe_index(0, 4, 4, 4, 4), DaMpeIndex { t: 0, sy: 0, sx: 0 });
    assert_eq!(da_mpe_index(2, 0, 7, 3, 3), DaMpeIndex { t: 2, sy: 1, sx: -1 });
    assert_eq!(unsafe { CStr::from_ptr(da_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
