use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{Cell, Grid};
use super::object::{Category, Property, PropertySet, SceneObject, StateFlag, StateSet};
use super::state::{BasePose, PerArm, RobotState, WorldState};
use crate::contingency::OutcomeTable;
use crate::geometry::{Pose, Quat};
use crate::kinematics::{Embodiment, RobotModel};
use crate::rng::SplitMix64;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SceneError {
    #[error("reading scene: {0}")]
    Io(String),
    #[error("scene parse error: {0}")]
    Parse(String),
    #[error("scene integrity error: {0}")]
    Integrity(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub seed: u64,
    #[serde(default)]
    pub name: Option<String>,
    pub grid: GridSpec,
    pub robot: RobotSpawn,
    pub objects: Vec<ObjectSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    #[serde(default)]
    pub blocked_cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpawn {
    pub embodiment: Embodiment,
    pub base: BasePose,
    #[serde(default)]
    pub torso_lift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: String,
    pub category: Category,
    pub position: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Quat>,
    pub mass: f64,
    pub grasp_width: f64,
    #[serde(default)]
    pub grasp_offset: [f64; 3],
    #[serde(default)]
    pub properties: PropertySet,
    #[serde(default)]
    pub state: StateSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Replaces the file's seed.
    pub seed: Option<u64>,
    /// Replaces the file's embodiment.
    pub embodiment: Option<Embodiment>,
    pub table: Option<Arc<OutcomeTable>>,
}

impl SceneFile {
    pub fn parse(json: &str) -> Result<SceneFile, SceneError> {
        serde_json::from_str(json).map_err(|e| SceneError::Parse(e.to_string()))
    }
}

pub fn load_scene(path: &Path, opts: &LoadOptions) -> Result<WorldState, SceneError> {
    let text = std::fs::read_to_string(path).map_err(|e| SceneError::Io(format!("{}: {e}", path.display())))?;
    let mut world = load_scene_str(&text, opts)?;
    if world.name.is_empty() {
        world.name = scene_name_from_path(path);
    }
    Ok(world)
}

/// `bedroom` for `.../bedroom.scene.json`.
pub fn scene_name_from_path(path: &Path) -> String {
    let file = path.file_name().and_then(|f| f.to_str()).unwrap_or("scene");
    file.split('.').next().unwrap_or(file).to_string()
}

pub fn load_scene_str(json: &str, opts: &LoadOptions) -> Result<WorldState, SceneError> {
    build_world(&SceneFile::parse(json)?, opts)
}

fn integrity(msg: String) -> SceneError {
    SceneError::Integrity(msg)
}

pub fn build_world(file: &SceneFile, opts: &LoadOptions) -> Result<WorldState, SceneError> {
    let g = &file.grid;
    if g.width == 0 || g.height == 0 || !(g.cell_size > 0.0 && g.cell_size.is_finite()) {
        return Err(integrity("grid needs positive width, height and cell_size".into()));
    }
    let grid = Grid::with_blocked(g.width, g.height, g.cell_size, &g.blocked_cells)
        .ok_or_else(|| integrity("blocked cell outside the grid".into()))?;

    let embodiment = opts.embodiment.unwrap_or(file.robot.embodiment);
    let model = RobotModel::builtin(embodiment);
    let base = file.robot.base;
    if !(base.x.is_finite() && base.y.is_finite() && base.heading.is_finite()) {
        return Err(integrity("robot base must be finite".into()));
    }
    match grid.cell_of(base.x, base.y) {
        Some(c) if !grid.is_blocked(c) => {}
        Some(c) => return Err(integrity(format!("robot base on blocked cell {c:?}"))),
        None => return Err(integrity("robot base outside the grid".into())),
    }
    if !model.lift_in_range(file.robot.torso_lift) {
        return Err(integrity(format!("torso_lift {} outside {:?}", file.robot.torso_lift, model.lift_range)));
    }
    let rest = model.rest_config(file.robot.torso_lift);
    let robot = RobotState {
        embodiment,
        end_effector: embodiment.end_effector(),
        base,
        torso_lift: file.robot.torso_lift,
        arm_joints: PerArm { left: rest.left, right: rest.right },
        held: PerArm::default(),
    };

    let [w, h] = grid.extent();
    let mut objects = BTreeMap::new();
    for spec in &file.objects {
        let obj = build_object(spec, model.payload_limit())?;
        let [x, y, z] = obj.pose.position;
        if !(x >= 0.0 && x < w && y >= 0.0 && y < h && z >= 0.0 && z.is_finite()) {
            return Err(integrity(format!("object {} lies outside the grid", spec.id)));
        }
        if objects.insert(spec.id.clone(), obj).is_some() {
            return Err(integrity(format!("duplicate object id {}", spec.id)));
        }
    }
    for obj in objects.values() {
        if let Some(p) = &obj.parent {
            let Some(parent) = objects.get(p) else {
                return Err(integrity(format!("object {} has unknown parent {p}", obj.id)));
            };
            if !parent.has(Property::Receptacle) {
                return Err(integrity(format!("parent {p} of {} is not a receptacle", obj.id)));
            }
        }
        // parent chains must terminate
        let mut seen = BTreeSet::new();
        let mut cur = Some(obj.id.as_str());
        while let Some(id) = cur {
            if !seen.insert(id) {
                return Err(integrity(format!("parent cycle through {}", obj.id)));
            }
            cur = objects[id].parent.as_deref();
        }
    }

    Ok(WorldState {
        name: file.name.clone().unwrap_or_default(),
        objects,
        robot,
        grid,
        tick: 0,
        actions_taken: 0,
        rng: SplitMix64::new(opts.seed.unwrap_or(file.seed)),
        in_flight: None,
        model,
        table: opts.table.clone().unwrap_or_else(|| Arc::new(OutcomeTable::builtin())),
    })
}

fn build_object(spec: &ObjectSpec, payload_limit: f64) -> Result<SceneObject, SceneError> {
    let id = &spec.id;
    if id.is_empty() || id.starts_with("category:") {
        return Err(integrity(format!("invalid object id {id:?}")));
    }
    if !(spec.mass > 0.0 && spec.mass.is_finite()) || !(spec.grasp_width >= 0.0 && spec.grasp_width.is_finite()) {
        return Err(integrity(format!("object {id} needs positive mass and non-negative grasp_width")));
    }
    if spec.position.iter().chain(&spec.grasp_offset).any(|v| !v.is_finite()) {
        return Err(integrity(format!("object {id} has non-finite coordinates")));
    }
    let orientation = spec.orientation.unwrap_or(Quat::IDENTITY);
    if (orientation.norm() - 1.0).abs() > 1e-9 {
        return Err(integrity(format!("object {id} orientation is not a unit quaternion")));
    }
    let mut properties = spec.properties.clone();
    let heavy = spec.mass > payload_limit;
    if properties.contains(&Property::Heavy) && !heavy {
        return Err(integrity(format!("object {id} is declared heavy but {} kg is within the {payload_limit} kg payload", spec.mass)));
    }
    if heavy {
        properties.insert(Property::Heavy);
    }
    let state = &spec.state;
    let has = |f| state.contains(&f);
    if has(StateFlag::Broken) && properties.contains(&Property::Pickupable) {
        return Err(integrity(format!("object {id} is broken and pickupable")));
    }
    let openable = properties.contains(&Property::Openable);
    if openable && has(StateFlag::Open) == has(StateFlag::Closed) {
        return Err(integrity(format!("openable object {id} must be exactly one of open, closed")));
    }
    if !openable && (has(StateFlag::Open) || has(StateFlag::Closed)) {
        return Err(integrity(format!("object {id} is not openable but has open/closed state")));
    }
    if properties.contains(&Property::HoldToOpen) && !openable {
        return Err(integrity(format!("object {id} is hold_to_open but not openable")));
    }
    if (has(StateFlag::Filled) || has(StateFlag::Spilled)) && !properties.contains(&Property::Pourable) {
        return Err(integrity(format!("object {id} has liquid state but is not pourable")));
    }
    if has(StateFlag::Filled) && has(StateFlag::Spilled) {
        return Err(integrity(format!("object {id} is both filled and spilled")));
    }
    if spec.parent.as_deref() == Some(id.as_str()) {
        return Err(integrity(format!("object {id} is its own parent")));
    }
    Ok(SceneObject {
        id: id.clone(),
        category: spec.category,
        pose: Pose { position: spec.position, orientation },
        mass: spec.mass,
        grasp_width: spec.grasp_width,
        grasp_offset: spec.grasp_offset,
        properties,
        state: state.clone(),
        parent: spec.parent.clone(),
    })
}
