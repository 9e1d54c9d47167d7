use serde::{Deserialize, Serialize};

use super::grid::Cell;
use super::object::{Category, PropertySet, StateSet};
use super::state::{PerArm, WorldState};
use crate::kinematics::{Arm, Embodiment};

pub const CROP_SIZE: usize = 11;
pub const VISIBILITY_RADIUS: f64 = 5.0;

pub const TOKEN_OUT_OF_BOUNDS: u16 = 0;
pub const TOKEN_FREE: u16 = 1;
pub const TOKEN_BLOCKED: u16 = 2;
pub const TOKEN_ROBOT: u16 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub id: String,
    pub category: Category,
    pub cell: Cell,
    /// World coordinates.
    pub position: [f64; 3],
    pub grasp_point: [f64; 3],
    /// Robot ground frame.
    pub relative_position: [f64; 3],
    pub relative_grasp_point: [f64; 3],
    pub state: StateSet,
    pub properties: PropertySet,
    pub parent: Option<String>,
    pub mass: f64,
    pub grasp_width: f64,
    pub held_by: Vec<Arm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationFrame {
    pub tick: u64,
    pub embodiment: Embodiment,
    /// World cell of the crop's `[0][0]` entry.
    pub crop_origin: Cell,
    /// Rows are y, columns x.
    pub token_grid: Vec<Vec<u16>>,
    /// Robot cell in crop coordinates `(x_r, y_r)`.
    pub robot_centroid: Cell,
    pub robot_cell: Cell,
    pub grid_size: (usize, usize),
    pub cell_size: f64,
    pub torso_lift: f64,
    pub held: PerArm<Option<String>>,
    pub visible_objects: Vec<VisibleObject>,
    /// `[x, y, heading, lift, left joints.., right joints.., left held, right held]`
    pub proprio: Vec<f64>,
}

impl ObservationFrame {
    pub fn object(&self, id: &str) -> Option<&VisibleObject> {
        self.visible_objects.iter().find(|o| o.id == id)
    }

    pub fn base(&self) -> [f64; 3] {
        [self.proprio[0], self.proprio[1], self.proprio[2]]
    }

    /// Joint vector of one arm read back from `proprio`.
    pub fn arm_joints(&self, arm: Arm, left_dof: usize) -> &[f64] {
        let n = self.proprio.len() - 6;
        let right_dof = n - left_dof;
        match arm {
            Arm::Left => &self.proprio[4..4 + left_dof],
            Arm::Right => &self.proprio[4 + left_dof..4 + left_dof + right_dof],
        }
    }
}

fn crop_start(robot: usize, size: usize) -> usize {
    let span = CROP_SIZE.min(size);
    robot.saturating_sub(CROP_SIZE / 2).min(size - span)
}

pub fn observe(state: &WorldState) -> ObservationFrame {
    let grid = &state.grid;
    let rc = state.robot_cell();
    let origin = (crop_start(rc.0, grid.width), crop_start(rc.1, grid.height));
    let (cw, ch) = (CROP_SIZE.min(grid.width), CROP_SIZE.min(grid.height));

    let mut token_grid = vec![vec![TOKEN_OUT_OF_BOUNDS; cw]; ch];
    let mut top: Vec<Option<(f64, &str, Category)>> = vec![None; cw * ch];
    for o in state.objects.values() {
        if !state.robot.holder_of(&o.id).is_empty() {
            continue;
        }
        let Some(c) = grid.cell_of(o.pose.position[0], o.pose.position[1]) else { continue };
        if c.0 < origin.0 || c.1 < origin.1 || c.0 >= origin.0 + cw || c.1 >= origin.1 + ch {
            continue;
        }
        let slot = &mut top[(c.1 - origin.1) * cw + (c.0 - origin.0)];
        let z = o.pose.position[2];
        // highest object shows; BTreeMap order keeps the lowest id on ties
        if slot.is_none_or(|(tz, _, _)| z > tz) {
            *slot = Some((z, &o.id, o.category));
        }
    }
    for (y, row) in token_grid.iter_mut().enumerate() {
        for (x, t) in row.iter_mut().enumerate() {
            let cell = (origin.0 + x, origin.1 + y);
            *t = if cell == rc {
                TOKEN_ROBOT
            } else if let Some((_, _, cat)) = top[y * cw + x] {
                cat.token()
            } else if grid.is_blocked(cell) {
                TOKEN_BLOCKED
            } else {
                TOKEN_FREE
            };
        }
    }

    let base = state.robot.base;
    let mut visible_objects = Vec::new();
    for o in state.objects.values() {
        let held_by = state.robot.holder_of(&o.id);
        let [x, y, _] = o.pose.position;
        let cell = grid.nearest_cell(x, y);
        let near = libm::hypot(x - base.x, y - base.y) <= VISIBILITY_RADIUS;
        if held_by.is_empty() && !(near && grid.line_of_sight(rc, cell)) {
            continue;
        }
        let rel = state.world_to_robot(&o.pose.translation());
        let gp = o.grasp_point();
        let rel_gp = state.world_to_robot(&gp);
        visible_objects.push(VisibleObject {
            id: o.id.clone(),
            category: o.category,
            cell,
            position: o.pose.position,
            grasp_point: [gp.x, gp.y, gp.z],
            relative_position: [rel.x, rel.y, rel.z],
            relative_grasp_point: [rel_gp.x, rel_gp.y, rel_gp.z],
            state: o.state.clone(),
            properties: o.properties.clone(),
            parent: o.parent.clone(),
            mass: o.mass,
            grasp_width: o.grasp_width,
            held_by,
        });
    }

    let r = &state.robot;
    let mut proprio = vec![base.x, base.y, base.heading, r.torso_lift];
    proprio.extend(&r.arm_joints.left);
    proprio.extend(&r.arm_joints.right);
    proprio.push(r.held.left.is_some() as u8 as f64);
    proprio.push(r.held.right.is_some() as u8 as f64);

    ObservationFrame {
        tick: state.tick,
        embodiment: r.embodiment,
        crop_origin: origin,
        token_grid,
        robot_centroid: (rc.0 - origin.0, rc.1 - origin.1),
        robot_cell: rc,
        grid_size: (grid.width, grid.height),
        cell_size: grid.cell_size,
        torso_lift: r.torso_lift,
        held: r.held.clone(),
        visible_objects,
        proprio,
    }
}
