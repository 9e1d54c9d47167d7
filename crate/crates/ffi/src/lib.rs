//! C interface to the world simulator.
//!
//! Every fallible function returns a [`DaStatus`]; on failure the message is
//! available from [`da_last_error_message`] on the same thread. Strings
//! returned through out-parameters are owned by the caller and released with
//! [`da_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dualarm::contingency::Difficulty;
use dualarm::proprio::mpe_index;
use dualarm::world::{self, Action, LoadOptions, WorldState};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Scene = 4,
    Action = 5,
    WorldBusy = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DaDifficulty {
    Nominal = 0,
    Easy = 1,
    Medium = 2,
    Hard = 3,
}

impl From<DaDifficulty> for Difficulty {
    fn from(d: DaDifficulty) -> Self {
        match d {
            DaDifficulty::Nominal => Difficulty::Nominal,
            DaDifficulty::Easy => Difficulty::Easy,
            DaDifficulty::Medium => Difficulty::Medium,
            DaDifficulty::Hard => Difficulty::Hard,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DaMpeIndex {
    pub t: i64,
    pub sy: i8,
    pub sx: i8,
}

/// Opaque simulator state.
pub struct DaWorld {
    state: WorldState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(DaStatus, String);

fn fail<T>(status: DaStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside dualarm");
            DaStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(DaStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(DaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn world_arg<'a>(w: *mut DaWorld) -> Result<&'a mut DaWorld, Failure> {
    w.as_mut().ok_or(Failure(DaStatus::NullPointer, "world is null".into()))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure(DaStatus::NullPointer, format!("{what} is null")))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Load a scene file. `seed` replaces the file's seed unless `use_file_seed`
/// is true. On success `*out` receives a handle released by [`da_world_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn da_world_load(path: *const c_char, seed: u64, use_file_seed: bool, out: *mut *mut DaWorld) -> DaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let opts = LoadOptions { seed: (!use_file_seed).then_some(seed), ..LoadOptions::default() };
        let state = world::load_scene(Path::new(path), &opts).map_err(|e| {
            let status = if matches!(e, world::SceneError::Io(_)) { DaStatus::Io } else { DaStatus::Scene };
            Failure(status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(DaWorld { state }));
        Ok(())
    })
}

/// # Safety
/// `world` must be null or a handle from [`da_world_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn da_world_free(world: *mut DaWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

/// Apply one action given as JSON. The action's trajectory is scheduled but
/// not run; advance it with [`da_world_step_tick`] or [`da_world_run_to_idle`].
/// If `result_json` is non-null it receives the action result as JSON.
///
/// # Safety
/// `world` must be a live handle and `action_json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn da_world_apply_action(
    world: *mut DaWorld,
    action_json: *const c_char,
    difficulty: DaDifficulty,
    result_json: *mut *mut c_char,
) -> DaStatus {
    guard(|| {
        let w = world_arg(world)?;
        let text = str_arg(action_json, "action_json")?;
        let action: Action = serde_json::from_str(text).or_else(|e| fail(DaStatus::Action, format!("bad action: {e}")))?;
        if !w.state.is_idle() {
            return fail(DaStatus::WorldBusy, "a trajectory is still executing");
        }
        let result = world::apply_action(&mut w.state, &action, difficulty.into());
        if let Some(out) = result_json.as_mut() {
            *out = to_c(serde_json::to_string(&result).expect("result serializes"));
        }
        Ok(())
    })
}

/// Advance the in-flight trajectory by one tick. A no-op when idle.
///
/// # Safety
/// `world` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn da_world_step_tick(world: *mut DaWorld) -> DaStatus {
    guard(|| {
        world::step_tick(&mut world_arg(world)?.state);
        Ok(())
    })
}

/// Tick until idle. `ticks` may be null.
///
/// # Safety
/// `world` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn da_world_run_to_idle(world: *mut DaWorld, ticks: *mut u64) -> DaStatus {
    guard(|| {
        let n = world::run_to_idle(&mut world_arg(world)?.state);
        if let Some(t) = ticks.as_mut() {
            *t = n;
        }
        Ok(())
    })
}

/// Current observation frame as JSON.
///
/// # Safety
/// `world` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn da_world_observe_json(world: *mut DaWorld, out: *mut *mut c_char) -> DaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let frame = world::observe(&world_arg(world)?.state);
        *out = to_c(serde_json::to_string(&frame).expect("frame serializes"));
        Ok(())
    })
}

/// 64-bit state digest; printed as 16 lowercase hex digits it matches the
/// `digest` field of protocol responses.
///
/// # Safety
/// `world` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn da_world_digest(world: *mut DaWorld, out: *mut u64) -> DaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = world_arg(world)?.state.digest();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn da_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn da_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn da_mpe_index(t: i64, x: i64, y: i64, xr: i64, yr: i64) -> DaMpeIndex {
    let m = mpe_index(t, x, y, (xr, yr));
    DaMpeIndex { t: m.t, sy: m.sy, sx: m.sx }
}

#[no_mangle]
pub extern "C" fn da_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
