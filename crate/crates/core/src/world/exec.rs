use crate::contingency::{sample_outcome, scale_for_difficulty, Difficulty, OutcomeLabel};
use crate::geometry::{Mat3, Transform, Vec3};
use crate::kinematics::{
    ik_decoupled, ik_whole_body_detailed, IK_CANDIDATES, interpolate_trajectory, Arm, DlsConfig, Embodiment, FullConfig,
    WholeBodyOutcome, DEFAULT_STEP_BOUND, DEFAULT_WAYPOINTS,
};

use super::action::{Action, ActionKind, ActionResult, FailureReason, NavTarget, ReachProbe};
use super::grid::Cell;
use super::object::{Property, StateFlag};
use super::state::{BasePose, InFlight, Motion, WorldState};

/// Which arm(s) a reachability query may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArmSelector {
    Left,
    Right,
    Either,
}

impl From<Arm> for ArmSelector {
    fn from(a: Arm) -> Self {
        match a {
            Arm::Left => ArmSelector::Left,
            Arm::Right => ArmSelector::Right,
        }
    }
}

/// A grasp pose found inside an arm's sampled workspace.
#[derive(Clone, Debug)]
pub struct InteractionPose {
    pub arm: Arm,
    /// End-effector target in world coordinates.
    pub pose: Transform,
    /// Workspace sample configuration nearest the target.
    pub seed: Vec<f64>,
}

/// End-effector pose for the object's grasp point if some selected arm can
/// reach it from the current base pose and torso lift. `Either` prefers the
/// arm whose nearest workspace sample is closer, then the left arm.
pub fn check_reachability(state: &WorldState, object: &str, arm: ArmSelector) -> Option<InteractionPose> {
    let obj = state.object(object)?;
    let local = state.world_to_robot(&obj.grasp_point());
    let arms: &[Arm] = match arm {
        ArmSelector::Left => &[Arm::Left],
        ArmSelector::Right => &[Arm::Right],
        ArmSelector::Either => &Arm::BOTH,
    };
    let mut best: Option<(f64, InteractionPose)> = None;
    for &a in arms {
        if let Some(c) = state.model.reach_query(a, &local, state.robot.torso_lift) {
            if best.as_ref().is_none_or(|(d, _)| c.distance < *d) {
                let pose = state.base_transform().compose(&Transform::from_parts(&c.rotation, &local));
                best = Some((c.distance, InteractionPose { arm: a, pose, seed: c.seed }));
            }
        }
    }
    best.map(|b| b.1)
}

/// Shortest collision-free 4-connected path from the robot's cell.
pub fn plan_navigation(state: &WorldState, goal: Cell) -> Option<Vec<Cell>> {
    state.grid.plan_path(state.robot_cell(), goal)
}

struct ArmTarget {
    arm: Arm,
    /// Robot ground frame.
    point: Vec3,
    /// (orientation, seed) pairs, nearest sample first.
    candidates: Vec<(Mat3, Vec<f64>)>,
}

/// What a single interaction needs once its preconditions hold.
struct Plan {
    targets: Vec<ArmTarget>,
    /// Mass added to each arm while moving.
    extra_payload: [f64; 2],
    sample_on: String,
    verb: String,
}

type Check<T> = Result<T, ActionResult>;

fn fail<T>(msg: String) -> Check<T> {
    Err(ActionResult::precondition(msg))
}

/// Apply an action. Failures that never start a motion consume one tick and
/// leave everything else unchanged; motions are scheduled in flight and their
/// effects land when the last waypoint is reached.
pub fn apply_action(state: &mut WorldState, action: &Action, difficulty: Difficulty) -> ActionResult {
    if state.in_flight.is_some() {
        return ActionResult { ticks_consumed: 0, ..ActionResult::precondition("a motion is still in progress") };
    }
    state.actions_taken += 1;
    let result = match action {
        Action::Done => Ok(ActionResult::new(OutcomeLabel::Success, "episode ended by planner", 0)),
        Action::NavigateTo { target } => navigate(state, target),
        Action::AdjustHeight { delta } => adjust_height(state, *delta),
        _ => interact(state, action, difficulty),
    };
    match result {
        Ok(r) => r,
        Err(r) => {
            state.tick += r.ticks_consumed;
            r
        }
    }
}

/// Advance one tick, moving along the in-flight motion if any.
pub fn step_tick(state: &mut WorldState) {
    state.tick += 1;
    let Some(flight) = state.in_flight.as_mut() else {
        return;
    };
    match &flight.motion {
        Motion::Base(poses) => state.robot.base = poses[flight.next],
        Motion::Joints(traj) => {
            let q = FullConfig::from_slice(&traj.waypoints[flight.next], state.model.left.dof(), state.model.right.dof())
                .expect("trajectory sized by model");
            state.robot.set_config(&q);
        }
    }
    flight.next += 1;
    let finished = flight.next >= flight.motion.len();
    state.sync_held();
    if finished {
        let flight = state.in_flight.take().expect("checked above");
        for (action, outcome) in &flight.effects {
            apply_outcome(state, *outcome, action);
        }
        state.sync_held();
    }
}

/// Step until no motion is in flight; returns the ticks taken.
pub fn run_to_idle(state: &mut WorldState) -> u64 {
    let mut ticks = 0;
    while state.in_flight.is_some() {
        step_tick(state);
        ticks += 1;
    }
    ticks
}

fn navigate(state: &mut WorldState, target: &NavTarget) -> Check<ActionResult> {
    let start = state.robot_cell();
    let base = state.robot.base;
    let (goal, face, label) = match target {
        NavTarget::Cell(c) => {
            if !state.grid.in_bounds(*c) {
                return fail(format!("cell {c:?} is outside the grid"));
            }
            (*c, None, format!("cell ({}, {})", c.0, c.1))
        }
        NavTarget::Object(id) => {
            let Some(obj) = state.object(id) else {
                return fail(format!("no object named {id}"));
            };
            if !state.robot.holder_of(id).is_empty() {
                return fail(format!("{id} is already in hand"));
            }
            let [ox, oy, _] = obj.pose.position;
            let ocell = state.grid.nearest_cell(ox, oy);
            let dist = state.grid.bfs_distances(start);
            let mut best: Option<(usize, usize, usize)> = None;
            for n in state.grid.neighbors(ocell) {
                if let Some(d) = dist[n.1 * state.grid.width + n.0] {
                    let key = (d, n.1, n.0);
                    if best.is_none_or(|b| key < b) {
                        best = Some(key);
                    }
                }
            }
            let Some((_, y, x)) = best else {
                return Err(ActionResult::unreachable(FailureReason::NoPath, format!("no free cell next to {id} can be reached"), vec![]));
            };
            ((x, y), Some([ox, oy]), id.clone())
        }
    };
    let Some(path) = state.grid.plan_path(start, goal) else {
        return Err(ActionResult::unreachable(FailureReason::NoPath, format!("no path to {label}"), vec![]));
    };
    let mut poses = Vec::with_capacity(path.len().max(1));
    let mut prev = start;
    for &c in &path {
        let heading = libm::atan2(c.1 as f64 - prev.1 as f64, c.0 as f64 - prev.0 as f64);
        let [x, y] = state.grid.center(c);
        poses.push(BasePose { x, y, heading });
        prev = c;
    }
    if poses.is_empty() {
        poses.push(base);
    }
    if let Some([fx, fy]) = face {
        let last = poses.last_mut().expect("non-empty");
        last.heading = libm::atan2(fy - last.y, fx - last.x);
    }
    let ticks = poses.len() as u64;
    state.in_flight = Some(InFlight { motion: Motion::Base(poses), next: 0, effects: vec![] });
    Ok(ActionResult::new(OutcomeLabel::Success, format!("moved to {label} in {} cells", path.len()), ticks))
}

fn adjust_height(state: &mut WorldState, delta: f64) -> Check<ActionResult> {
    let lift = state.robot.torso_lift + delta;
    if !delta.is_finite() || !state.model.lift_in_range(lift) {
        return fail(format!(
            "torso lift {lift:.3} m is outside [{}, {}]",
            state.model.lift_range[0], state.model.lift_range[1]
        ));
    }
    let lift = lift.clamp(state.model.lift_range[0], state.model.lift_range[1]);
    let start = state.robot.config();
    let goal = FullConfig { lift, ..start.clone() };
    schedule(state, &start, &goal, vec![]);
    let ticks = state.in_flight.as_ref().map_or(0, |f| f.motion.len() as u64);
    Ok(ActionResult::new(OutcomeLabel::Success, format!("torso lift set to {lift:.3} m"), ticks))
}

fn schedule(state: &mut WorldState, start: &FullConfig, goal: &FullConfig, effects: Vec<(Action, OutcomeLabel)>) {
    let traj = interpolate_trajectory(&start.to_vec(), &goal.to_vec(), DEFAULT_WAYPOINTS, DEFAULT_STEP_BOUND)
        .expect("full configurations share dimensions");
    state.in_flight = Some(InFlight { motion: Motion::Joints(traj), next: 0, effects });
}

fn interact(state: &mut WorldState, action: &Action, difficulty: Difficulty) -> Check<ActionResult> {
    let subs: Vec<&Action> = match action {
        Action::Parallel { left, right } => {
            for (sub, arm) in [(left, Arm::Left), (right, Arm::Right)] {
                let ok = matches!(
                    sub.kind(),
                    ActionKind::PickUp | ActionKind::Place | ActionKind::Open | ActionKind::Close | ActionKind::Pour
                );
                if !ok || sub.arm() != Some(arm) {
                    return fail(format!("parallel needs a single-arm action for the {arm} arm, got {sub}"));
                }
            }
            if left.target() == right.target() {
                return fail("parallel arms must act on different objects".into());
            }
            vec![left, right]
        }
        a => vec![a],
    };
    let plans = subs.iter().map(|a| plan(state, a)).collect::<Check<Vec<Plan>>>()?;
    let mut payload = state.payload();
    for p in &plans {
        payload[0] += p.extra_payload[0];
        payload[1] += p.extra_payload[1];
    }
    let targets: Vec<&ArmTarget> = plans.iter().flat_map(|p| &p.targets).collect();
    let goal = solve(state, &targets, payload)?;
    let mut effects = Vec::new();
    let mut feedback = Vec::new();
    for (sub, plan) in subs.iter().zip(&plans) {
        let obj = &state.objects[&plan.sample_on];
        let kind = sub.kind();
        let dist = scale_for_difficulty(&state.table.lookup(kind, &obj.properties), difficulty, kind);
        let label = sample_outcome(&dist, &mut state.rng);
        feedback.push(describe(sub, &plan.verb, label));
        effects.push(((*sub).clone(), label));
    }
    let outcome = effects.iter().map(|e| e.1).find(|l| *l != OutcomeLabel::Success).unwrap_or(OutcomeLabel::Success);
    let start = state.robot.config();
    schedule(state, &start, &goal, effects);
    let ticks = state.in_flight.as_ref().map_or(0, |f| f.motion.len() as u64);
    Ok(ActionResult::new(outcome, feedback.join("; "), ticks))
}

fn describe(action: &Action, verb: &str, label: OutcomeLabel) -> String {
    let target = action.target().unwrap_or("object");
    match label {
        OutcomeLabel::Success => verb.to_string(),
        OutcomeLabel::Break => format!("{target} broke"),
        OutcomeLabel::Spill => format!("{target} spilled its contents"),
        OutcomeLabel::Drop => format!("{target} was dropped"),
        OutcomeLabel::SlipOpen => format!("grip slipped on {target}"),
        OutcomeLabel::Unreachable | OutcomeLabel::NoOp => format!("{action} had no effect"),
    }
}

fn object_or_fail<'a>(state: &'a WorldState, id: &str) -> Check<&'a crate::world::SceneObject> {
    state.object(id).ok_or_else(|| ActionResult::precondition(format!("no object named {id}")))
}

fn inside_closed(state: &WorldState, id: &str) -> Option<String> {
    let parent = state.objects[id].parent.as_ref()?;
    let p = &state.objects[parent];
    (p.has(Property::Openable) && p.is(StateFlag::Closed)).then(|| parent.clone())
}

fn reach_target(state: &WorldState, arm: Arm, world_point: &Vec3) -> Check<ArmTarget> {
    let local = state.world_to_robot(world_point);
    let lift = state.robot.torso_lift;
    let cands = state.model.reach_candidates(arm, &local, lift, IK_CANDIDATES);
    match cands.is_empty() {
        false => Ok(ArmTarget { arm, point: local, candidates: cands.into_iter().map(|c| (c.rotation, c.seed)).collect() }),
        true => Err(ActionResult::unreachable(
            FailureReason::OutOfReach,
            format!(
                "target at ({:.2}, {:.2}, {:.2}) is out of reach of the {arm} arm",
                world_point.x, world_point.y, world_point.z
            ),
            vec![ReachProbe { arm, point: [local.x, local.y, local.z], lift }],
        )),
    }
}

/// Preconditions and workspace targets for one interaction.
fn plan(state: &WorldState, action: &Action) -> Check<Plan> {
    let robot = &state.robot;
    let mut extra = [0.0; 2];
    match action {
        Action::PickUp { object, arm } => {
            let obj = object_or_fail(state, object)?;
            if let Some(other) = robot.held.get(*arm) {
                return fail(format!("{arm} arm occupied by {other}"));
            }
            if !robot.holder_of(object).is_empty() {
                return fail(format!("{object} is already held"));
            }
            if obj.is(StateFlag::Broken) {
                return fail(format!("{object} is broken"));
            }
            if !obj.has(Property::Pickupable) {
                return fail(format!("{object} cannot be picked up"));
            }
            if obj.has(Property::Heavy) {
                return fail(format!("{object} is too heavy for one arm"));
            }
            if let Some(c) = inside_closed(state, object) {
                return fail(format!("{object} is inside closed {c}"));
            }
            let t = reach_target(state, *arm, &obj.grasp_point())?;
            extra[arm.index()] = obj.mass;
            Ok(Plan { targets: vec![t], extra_payload: extra, sample_on: object.clone(), verb: format!("picked up {object} with {arm} arm") })
        }
        Action::Place { object, receptacle, arm } => {
            object_or_fail(state, object)?;
            let holders = robot.holder_of(object);
            if !holders.contains(arm) {
                return fail(format!("{arm} arm is not holding {object}"));
            }
            let rec = object_or_fail(state, receptacle)?;
            if receptacle == object {
                return fail(format!("cannot place {object} in itself"));
            }
            if !rec.has(Property::Receptacle) {
                return fail(format!("{receptacle} is not a receptacle"));
            }
            if !robot.holder_of(receptacle).is_empty() {
                return fail(format!("{receptacle} is held"));
            }
            if rec.has(Property::Openable) && rec.is(StateFlag::Closed) {
                return fail(format!("{receptacle} is closed"));
            }
            let mut cur = rec.parent.as_deref();
            while let Some(p) = cur {
                if p == object {
                    return fail(format!("{receptacle} is inside {object}"));
                }
                cur = state.objects[p].parent.as_deref();
            }
            let targets = if holders.len() == 2 {
                bimanual_targets(state, &rec.grasp_point(), state.objects[object].grasp_width)?
            } else {
                vec![reach_target(state, *arm, &rec.grasp_point())?]
            };
            Ok(Plan { targets, extra_payload: extra, sample_on: object.clone(), verb: format!("placed {object} in {receptacle}") })
        }
        Action::Open { object, arm } | Action::Close { object, arm } => {
            let opening = matches!(action, Action::Open { .. });
            let obj = object_or_fail(state, object)?;
            if !obj.has(Property::Openable) {
                return fail(format!("{object} cannot be opened or closed"));
            }
            if opening && obj.is(StateFlag::Open) {
                return fail(format!("{object} is already open"));
            }
            if !opening && obj.is(StateFlag::Closed) {
                return fail(format!("{object} is already closed"));
            }
            if opening && obj.has(Property::HoldToOpen) {
                return fail(format!("{object} must be held steady while opening"));
            }
            if let Some(other) = robot.held.get(*arm) {
                return fail(format!("{arm} arm occupied by {other}"));
            }
            if !robot.holder_of(object).is_empty() {
                return fail(format!("{object} is held"));
            }
            let t = reach_target(state, *arm, &obj.grasp_point())?;
            let verb = if opening { format!("opened {object}") } else { format!("closed {object}") };
            Ok(Plan { targets: vec![t], extra_payload: extra, sample_on: object.clone(), verb })
        }
        Action::Pour { object, target, arm } => {
            let obj = object_or_fail(state, object)?;
            if robot.held.get(*arm).as_deref() != Some(object.as_str()) {
                return fail(format!("{arm} arm is not holding {object}"));
            }
            if !obj.has(Property::Pourable) {
                return fail(format!("{object} cannot be poured"));
            }
            if !obj.is(StateFlag::Filled) {
                return fail(format!("{object} is empty"));
            }
            let dst = object_or_fail(state, target)?;
            if target == object {
                return fail(format!("cannot pour {object} into itself"));
            }
            if !(dst.has(Property::Receptacle) || dst.has(Property::Pourable)) {
                return fail(format!("{target} cannot receive liquid"));
            }
            if dst.is(StateFlag::Broken) {
                return fail(format!("{target} is broken"));
            }
            if !robot.holder_of(target).is_empty() {
                return fail(format!("{target} is held"));
            }
            let above = dst.grasp_point() + Vec3::new(0.0, 0.0, 0.1);
            let t = reach_target(state, *arm, &above)?;
            Ok(Plan { targets: vec![t], extra_payload: extra, sample_on: object.clone(), verb: format!("poured {object} into {target}") })
        }
        Action::LiftTogether { object } => {
            let obj = object_or_fail(state, object)?;
            for arm in Arm::BOTH {
                if let Some(other) = robot.held.get(arm) {
                    return fail(format!("{arm} arm occupied by {other}"));
                }
            }
            if obj.is(StateFlag::Broken) {
                return fail(format!("{object} is broken"));
            }
            if !obj.has(Property::Pickupable) {
                return fail(format!("{object} cannot be picked up"));
            }
            if let Some(c) = inside_closed(state, object) {
                return fail(format!("{object} is inside closed {c}"));
            }
            let targets = bimanual_targets(state, &obj.grasp_point(), obj.grasp_width)?;
            extra = [obj.mass / 2.0; 2];
            Ok(Plan { targets, extra_payload: extra, sample_on: object.clone(), verb: format!("lifted {object} with both arms") })
        }
        Action::HoldAndOpen { held, container } => {
            object_or_fail(state, held)?;
            let holders = robot.holder_of(held);
            if holders.len() != 1 {
                return fail(format!("{held} must be held by exactly one arm"));
            }
            let free = holders[0].other();
            if let Some(other) = robot.held.get(free) {
                return fail(format!("{free} arm occupied by {other}"));
            }
            let c = object_or_fail(state, container)?;
            if !c.has(Property::Openable) {
                return fail(format!("{container} cannot be opened"));
            }
            if c.is(StateFlag::Open) {
                return fail(format!("{container} is already open"));
            }
            if container != held && c.parent.as_deref() != Some(held.as_str()) {
                return fail(format!("{container} is not part of {held}"));
            }
            let side = if free == Arm::Left { 1.0 } else { -1.0 };
            let lid = state.world_to_robot(&c.grasp_point()) + Vec3::new(0.0, side * c.grasp_width, 0.0);
            let t = reach_target(state, free, &state.robot_to_world(&lid))?;
            Ok(Plan {
                targets: vec![t],
                extra_payload: extra,
                sample_on: container.clone(),
                verb: format!("held {held} and opened {container}"),
            })
        }
        other => fail(format!("{other} is not an interaction")),
    }
}

/// Grasp targets for both hands on either side of `center`, `width` apart
/// along the robot's lateral axis.
fn bimanual_targets(state: &WorldState, center: &Vec3, width: f64) -> Check<Vec<ArmTarget>> {
    let local = state.world_to_robot(center);
    let half = Vec3::new(0.0, width / 2.0, 0.0);
    let mut out = Vec::new();
    for (arm, p) in [(Arm::Left, local + half), (Arm::Right, local - half)] {
        let world = state.robot_to_world(&p);
        out.push(reach_target(state, arm, &world)?);
    }
    Ok(out)
}

fn solve(state: &WorldState, targets: &[&ArmTarget], payload: [f64; 2]) -> Check<FullConfig> {
    let model = &state.model;
    let current = state.robot.config();
    let cfg = DlsConfig::default();
    let ik_failed = |arms: String| {
        Err(ActionResult::unreachable(FailureReason::IkFailed, format!("no joint solution for the {arms}"), vec![]))
    };
    match state.robot.embodiment {
        Embodiment::X1 => {
            let mut goal = current.clone();
            let torso = Vec3::new(0.0, 0.0, model.shoulder_height + current.lift);
            for t in targets {
                let chain = model.chain(t.arm);
                let sol = t.candidates.iter().find_map(|(rot, seed)| {
                    ik_decoupled(chain, rot, &(t.point - torso), seed, &cfg).expect("valid target")
                });
                match sol {
                    Some(s) => *goal.arm_mut(t.arm) = s.q,
                    None => return ik_failed(format!("{} arm", t.arm)),
                }
            }
            Ok(goal)
        }
        Embodiment::H1 => {
            let mut base = [Transform::identity(); 2];
            for arm in Arm::BOTH {
                base[arm.index()] = model.end_effector_pose(arm, current.arm(arm), current.lift).expect("sized");
            }
            let tries = targets.iter().map(|t| t.candidates.len()).max().unwrap_or(0);
            let mut unbalanced = false;
            for i in 0..tries {
                let mut poses = base;
                let mut q0 = current.clone();
                for t in targets {
                    let (rot, seed) = &t.candidates[i.min(t.candidates.len() - 1)];
                    poses[t.arm.index()] = Transform::from_parts(rot, &t.point);
                    q0.arm_mut(t.arm).clone_from(seed);
                }
                match ik_whole_body_detailed(model, &poses, &q0, payload, &cfg).expect("valid targets") {
                    WholeBodyOutcome::Solved(s) => return Ok(s.q),
                    WholeBodyOutcome::Unbalanced => unbalanced = true,
                    WholeBodyOutcome::NoConvergence => {}
                }
            }
            if unbalanced {
                return Err(ActionResult::unreachable(
                    FailureReason::Balance,
                    "every joint solution would tip the robot over".to_string(),
                    vec![],
                ));
            }
            ik_failed("whole body".into())
        }
    }
}

fn release(state: &mut WorldState, id: &str) {
    for arm in Arm::BOTH {
        if state.robot.held.get(arm).as_deref() == Some(id) {
            *state.robot.held.get_mut(arm) = None;
        }
    }
}

fn drop_to_floor(state: &mut WorldState, id: &str) {
    let holders = state.robot.holder_of(id);
    let p = match holders.first() {
        Some(&arm) => state.end_effector_world(arm).translation(),
        None => state.objects[id].pose.translation(),
    };
    release(state, id);
    let floor = state.floor_point(&p);
    let o = state.objects.get_mut(id).expect("exists");
    o.pose.position = [floor.x, floor.y, 0.0];
    o.parent = None;
}

fn spill(state: &mut WorldState, id: &str) {
    let o = state.objects.get_mut(id).expect("exists");
    o.set(StateFlag::Spilled, true);
    o.set(StateFlag::Filled, false);
}

/// Effect of `outcome` for `action`. Touches only the action's target objects
/// and the robot's held slots.
pub fn apply_outcome(state: &mut WorldState, outcome: OutcomeLabel, action: &Action) {
    use OutcomeLabel as L;
    if let Action::Parallel { left, right } = action {
        apply_outcome(state, outcome, left);
        apply_outcome(state, outcome, right);
        return;
    }
    let Some(target) = action.target().map(str::to_string) else {
        return;
    };
    if !state.objects.contains_key(&target) || matches!(outcome, L::Unreachable | L::NoOp) {
        return;
    }
    match (action, outcome) {
        (Action::NavigateTo { .. }, _) => {}
        (Action::PickUp { object, arm }, L::Success) => {
            *state.robot.held.get_mut(*arm) = Some(object.clone());
            state.objects.get_mut(object).expect("exists").parent = None;
            state.sync_held();
        }
        (Action::LiftTogether { object }, L::Success) => {
            for arm in Arm::BOTH {
                *state.robot.held.get_mut(arm) = Some(object.clone());
            }
            state.objects.get_mut(object).expect("exists").parent = None;
            state.sync_held();
        }
        (Action::Place { object, receptacle, .. }, L::Success | L::Spill) => {
            release(state, object);
            let p = state.objects[receptacle].grasp_point();
            let o = state.objects.get_mut(object).expect("exists");
            let pos = p - nalgebra::Vector3::from(o.grasp_offset);
            o.pose.position = [pos.x, pos.y, pos.z.max(0.0)];
            o.parent = Some(receptacle.clone());
            if outcome == L::Spill {
                spill(state, object);
            }
        }
        (Action::Open { object, .. }, L::Success) | (Action::HoldAndOpen { container: object, .. }, L::Success) => {
            let o = state.objects.get_mut(object).expect("exists");
            o.set(StateFlag::Open, true);
            o.set(StateFlag::Closed, false);
        }
        (Action::Close { object, .. }, L::Success) => {
            let o = state.objects.get_mut(object).expect("exists");
            o.set(StateFlag::Open, false);
            o.set(StateFlag::Closed, true);
        }
        (Action::Pour { object, target, .. }, L::Success) => {
            state.objects.get_mut(object).expect("exists").set(StateFlag::Filled, false);
            let dst = state.objects.get_mut(target).expect("exists");
            if dst.has(Property::Pourable) {
                dst.set(StateFlag::Filled, true);
                dst.set(StateFlag::Spilled, false);
            }
        }
        (_, L::Success) => {}
        (Action::Place { .. }, L::Break) => {
            drop_to_floor(state, &target);
            state.objects.get_mut(&target).expect("exists").mark_broken();
        }
        (_, L::Break) => {
            state.objects.get_mut(&target).expect("exists").mark_broken();
        }
        (Action::Pour { .. } | Action::PickUp { .. }, L::Spill) => spill(state, &target),
        (_, L::Spill) => {
            if state.objects[&target].has(Property::Pourable) {
                spill(state, &target);
            }
        }
        (Action::PickUp { .. } | Action::Place { .. } | Action::LiftTogether { .. }, L::Drop) => {
            drop_to_floor(state, &target)
        }
        (_, L::Drop | L::SlipOpen) => {}
        (_, L::Unreachable | L::NoOp) => {}
    }
}
