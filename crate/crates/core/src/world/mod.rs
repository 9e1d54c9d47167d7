//! Scene state, object semantics, action execution and observation.

mod action;
mod exec;
mod grid;
mod object;
mod observe;
mod scene;
mod state;

pub use action::{Action, ActionKind, ActionResult, FailureReason, NavTarget, ReachProbe};
pub use exec::{apply_action, apply_outcome, check_reachability, plan_navigation, run_to_idle, step_tick, ArmSelector, InteractionPose};
pub use grid::{Cell, Grid};
pub use object::{Category, Property, PropertySet, SceneObject, StateFlag, StateSet};
pub use observe::{
    observe, ObservationFrame, VisibleObject, CROP_SIZE, TOKEN_BLOCKED, TOKEN_FREE, TOKEN_OUT_OF_BOUNDS, TOKEN_ROBOT,
    VISIBILITY_RADIUS,
};
pub use scene::{
    build_world, load_scene, load_scene_str, scene_name_from_path, GridSpec, LoadOptions, ObjectSpec, RobotSpawn, SceneError,
    SceneFile,
};
pub use state::{base_transform, BasePose, InFlight, Motion, PerArm, RobotState, WorldState};
