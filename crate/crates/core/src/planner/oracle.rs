use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::{Planner, PlannerError};
use crate::contingency::OutcomeLabel;
use crate::geometry::Vec3;
use crate::kinematics::{solve_arm_point, Arm, RobotModel, IK_CANDIDATES};
use crate::tasks::{goals_hold, GoalPredicate, HoldSpec, ObjectRef, Task};
use crate::world::{Action, ActionResult, NavTarget, ObservationFrame, Property, StateFlag, VisibleObject};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArmMode {
    /// One object in hand at a time and no two-arm actions.
    SingleArm,
    DualArm,
}

/// Scripted planner: resolves goals to primitive steps, approaches the
/// target, adjusts torso height when that brings it into reach, and uses the
/// free arm nearest the target. In dual-arm mode it also lifts with both
/// arms, holds containers while opening them and pairs arm motions.
pub struct OraclePlanner {
    mode: ArmMode,
    failures: BTreeMap<String, u32>,
    given_up: BTreeSet<String>,
    last_key: Option<String>,
    last_nav: Option<String>,
    /// Last sighting of every object seen this episode.
    memory: BTreeMap<String, VisibleObject>,
}

const GIVE_UP_AFTER: u32 = 2;
const LIFT_STEP: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
enum Prim {
    Pick { obj: String, arm: Option<Arm> },
    Place { obj: String, rec: String },
    Open { obj: String },
    Close { obj: String },
    HoldOpen { held: String, container: String },
    Lift { obj: String },
    Pour { src: String, dst: String },
}

impl Prim {
    fn key(&self) -> String {
        format!("{self:?}")
    }

    fn two_arm(&self) -> bool {
        matches!(self, Prim::Lift { .. } | Prim::HoldOpen { .. })
    }
}

struct View<'a> {
    obs: &'a ObservationFrame,
    model: Arc<RobotModel>,
    solved: RefCell<HashMap<(Arm, [u64; 4]), bool>>,
}

enum Reach {
    /// Arm and distance from its shoulder.
    Single(Vec<(Arm, f64)>),
    Both,
    None,
}

impl<'a> View<'a> {
    fn obj(&self, id: &str) -> Option<&'a VisibleObject> {
        self.obs.object(id)
    }

    fn can_reach(&self, arm: Arm, p: &Vec3, lift: f64) -> bool {
        let key = (arm, [p.x.to_bits(), p.y.to_bits(), p.z.to_bits(), lift.to_bits()]);
        *self.solved.borrow_mut().entry(key).or_insert_with(|| {
            self.model.reachable(arm, p, lift) && solve_arm_point(&self.model, arm, p, lift, IK_CANDIDATES).is_some()
        })
    }

    fn free_arms(&self) -> Vec<Arm> {
        Arm::BOTH.into_iter().filter(|&a| self.obs.held.get(a).is_none()).collect()
    }

    fn holders(&self, id: &str) -> Vec<Arm> {
        self.obj(id).map(|o| o.held_by.clone()).unwrap_or_default()
    }

    fn held_ids(&self) -> Vec<String> {
        let mut v: Vec<String> = Arm::BOTH.iter().filter_map(|&a| self.obs.held.get(a).clone()).collect();
        v.dedup();
        v
    }

    fn shoulder_distance(&self, arm: Arm, p: &Vec3, lift: f64) -> f64 {
        let s = Vec3::from(self.model.chain(arm).base_offset.position) + Vec3::new(0.0, 0.0, self.model.shoulder_height + lift);
        (p - s).norm()
    }

    /// Arms among `arms` that reach `p` (robot frame), nearest first.
    fn reaching(&self, arms: &[Arm], p: &Vec3, lift: f64) -> Vec<(Arm, f64)> {
        let mut out: Vec<(Arm, f64)> = arms
            .iter()
            .filter(|&&a| self.can_reach(a, p, lift))
            .map(|&a| (a, self.shoulder_distance(a, p, lift)))
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }

    fn bimanual_reach(&self, center: &Vec3, width: f64, lift: f64) -> bool {
        let half = Vec3::new(0.0, width / 2.0, 0.0);
        self.can_reach(Arm::Left, &(center + half), lift) && self.can_reach(Arm::Right, &(center - half), lift)
    }

    fn planar_distance(&self, o: &VisibleObject) -> f64 {
        libm::hypot(o.relative_position[0], o.relative_position[1])
    }

    /// Matching visible object passing `keep`: held first, then nearest, then lowest id.
    fn resolve(&self, r: &ObjectRef, keep: impl Fn(&VisibleObject) -> bool) -> Option<&'a VisibleObject> {
        let mut c: Vec<&VisibleObject> =
            self.obs.visible_objects.iter().filter(|o| r.matches(&o.id, o.category) && keep(o)).collect();
        c.sort_by(|a, b| {
            a.held_by
                .is_empty()
                .cmp(&b.held_by.is_empty())
                .then(self.planar_distance(a).total_cmp(&self.planar_distance(b)))
                .then(a.id.cmp(&b.id))
        });
        c.first().copied()
    }
}

fn rel(p: [f64; 3]) -> Vec3 {
    Vec3::from(p)
}

fn to_robot(base: [f64; 3], p: [f64; 3]) -> [f64; 3] {
    let (s, c) = (libm::sin(base[2]), libm::cos(base[2]));
    let (dx, dy) = (p[0] - base[0], p[1] - base[1]);
    [c * dx + s * dy, -s * dx + c * dy, p[2]]
}

fn is_closed(o: &VisibleObject) -> bool {
    o.properties.contains(&Property::Openable) && o.state.contains(&StateFlag::Closed)
}

impl OraclePlanner {
    pub fn new(mode: ArmMode) -> OraclePlanner {
        OraclePlanner {
            mode,
            failures: BTreeMap::new(),
            given_up: BTreeSet::new(),
            last_key: None,
            last_nav: None,
            memory: BTreeMap::new(),
        }
    }

    /// Whether `o` can still satisfy the state goals placed on `r`.
    fn usable_for(task: &Task, r: &ObjectRef, o: &VisibleObject) -> bool {
        if o.state.contains(&StateFlag::Broken) {
            return false;
        }
        task.goals.iter().all(|g| match g {
            GoalPredicate::ObjectState { object, flag, value } if object == r => {
                let now = o.state.contains(flag);
                now == *value || !matches!(flag, StateFlag::Broken | StateFlag::Spilled | StateFlag::Filled)
            }
            _ => true,
        })
    }

    fn prims(&self, v: &View, task: &Task) -> Vec<Prim> {
        let mut out = Vec::new();
        let obs = v.obs;
        for goal in &task.goals {
            if goals_hold(std::slice::from_ref(goal), obs).unwrap_or(false) {
                continue;
            }
            match goal {
                GoalPredicate::ObjectIn { object, receptacle } => {
                    let Some(rec) = v.resolve(receptacle, |r| {
                        r.properties.contains(&Property::Receptacle) && r.held_by.is_empty()
                    }) else {
                        continue;
                    };
                    let Some(o) = v.resolve(object, |o| o.id != rec.id && Self::usable_for(task, object, o)) else {
                        continue;
                    };
                    if is_closed(rec) && !rec.properties.contains(&Property::HoldToOpen) {
                        out.push(Prim::Open { obj: rec.id.clone() });
                    }
                    if o.held_by.is_empty() {
                        if let Some(c) = o.parent.as_deref().and_then(|p| v.obj(p)) {
                            if is_closed(c) && !c.properties.contains(&Property::HoldToOpen) {
                                out.push(Prim::Open { obj: c.id.clone() });
                            }
                        }
                        if o.properties.contains(&Property::Heavy) {
                            out.push(Prim::Lift { obj: o.id.clone() });
                        } else {
                            out.push(Prim::Pick { obj: o.id.clone(), arm: None });
                        }
                    }
                    if !is_closed(rec) {
                        out.push(Prim::Place { obj: o.id.clone(), rec: rec.id.clone() });
                    }
                }
                GoalPredicate::ObjectState { object, flag, value } => {
                    let opening = (*flag == StateFlag::Open && *value) || (*flag == StateFlag::Closed && !*value);
                    let closing = (*flag == StateFlag::Closed && *value) || (*flag == StateFlag::Open && !*value);
                    if opening || closing {
                        let Some(c) = v.resolve(object, |o| {
                            o.properties.contains(&Property::Openable) && !o.state.contains(&StateFlag::Broken)
                        }) else {
                            continue;
                        };
                        if closing {
                            if c.held_by.is_empty() {
                                out.push(Prim::Close { obj: c.id.clone() });
                            }
                        } else if c.properties.contains(&Property::HoldToOpen) {
                            let parent = c.parent.as_deref().and_then(|p| v.obj(p));
                            let base = match parent {
                                Some(p) if !c.properties.contains(&Property::Pickupable) => p,
                                _ => c,
                            };
                            if !base.held_by.is_empty() {
                                out.push(Prim::HoldOpen { held: base.id.clone(), container: c.id.clone() });
                            } else {
                                out.push(Prim::Pick { obj: base.id.clone(), arm: None });
                                out.push(Prim::HoldOpen { held: base.id.clone(), container: c.id.clone() });
                            }
                        } else {
                            out.push(Prim::Open { obj: c.id.clone() });
                        }
                    } else if *flag == StateFlag::Filled && *value {
                        let Some(t) = v.resolve(object, |o| {
                            o.properties.contains(&Property::Pourable) && !o.state.contains(&StateFlag::Broken)
                        }) else {
                            continue;
                        };
                        let source = |o: &VisibleObject| {
                            o.id != t.id
                                && o.properties.contains(&Property::Pourable)
                                && o.state.contains(&StateFlag::Filled)
                        };
                        let held_src = v.held_ids().into_iter().filter_map(|h| v.obj(&h)).find(|o| source(o));
                        if let Some(s) = held_src {
                            out.push(Prim::Pour { src: s.id.clone(), dst: t.id.clone() });
                        } else if let Some(s) = obs
                            .visible_objects
                            .iter()
                            .filter(|o| {
                                source(o)
                                    && o.properties.contains(&Property::Pickupable)
                                    && !o.properties.contains(&Property::Heavy)
                                    && o.held_by.is_empty()
                            })
                            .min_by(|a, b| v.planar_distance(a).total_cmp(&v.planar_distance(b)).then(a.id.cmp(&b.id)))
                        {
                            out.push(Prim::Pick { obj: s.id.clone(), arm: None });
                            out.push(Prim::Pour { src: s.id.clone(), dst: t.id.clone() });
                        }
                    }
                }
                GoalPredicate::Holding { arm, object } => {
                    let Some(o) = v.resolve(object, |o| {
                        o.properties.contains(&Property::Pickupable) && !o.state.contains(&StateFlag::Broken)
                    }) else {
                        continue;
                    };
                    if !o.held_by.is_empty() {
                        continue;
                    }
                    out.push(match arm {
                        HoldSpec::Both => Prim::Lift { obj: o.id.clone() },
                        HoldSpec::Left => Prim::Pick { obj: o.id.clone(), arm: Some(Arm::Left) },
                        HoldSpec::Right => Prim::Pick { obj: o.id.clone(), arm: Some(Arm::Right) },
                        HoldSpec::Either => Prim::Pick { obj: o.id.clone(), arm: None },
                    });
                }
                GoalPredicate::WithinSteps { .. } => {}
            }
        }
        let mut seen = BTreeSet::new();
        out.retain(|p| seen.insert(p.key()) && !self.given_up.contains(&p.key()));
        if self.mode == ArmMode::SingleArm {
            out.retain(|p| !p.two_arm());
        }
        out
    }

    /// Primitives in the order they should be attempted.
    fn ordered(&self, v: &View, prims: Vec<Prim>) -> Vec<Prim> {
        let free = v.free_arms();
        let held = v.held_ids();
        let rank = |p: &Prim| -> Option<u8> {
            let holding = |id: &str| held.iter().any(|h| h == id);
            match (self.mode, p) {
                (_, Prim::HoldOpen { held, .. }) => (holding(held) && !free.is_empty()).then_some(0),
                (_, Prim::Pour { src, .. }) => holding(src).then_some(1),
                (ArmMode::SingleArm, Prim::Place { obj, .. }) => holding(obj).then_some(2),
                (ArmMode::SingleArm, _) if !held.is_empty() => None,
                (_, Prim::Open { .. } | Prim::Close { .. }) => (!free.is_empty()).then_some(3),
                (_, Prim::Lift { .. }) => (free.len() == 2).then_some(7),
                (_, Prim::Pick { arm: Some(a), .. }) => free.contains(a).then_some(5),
                (_, Prim::Pick { .. }) => (!free.is_empty()).then_some(5),
                (_, Prim::Place { obj, .. }) => holding(obj).then_some(6),
            }
        };
        let mut ranked: Vec<(u8, usize, Prim)> =
            prims.into_iter().enumerate().filter_map(|(i, p)| rank(&p).map(|r| (r, i, p))).collect();
        ranked.sort_by_key(|(r, i, _)| (*r, *i));
        ranked.into_iter().map(|t| t.2).collect()
    }

    /// Point to reach and candidate arms for a primitive at the current pose.
    fn target(&self, v: &View, p: &Prim) -> Option<(Vec3, Vec<Arm>, Option<f64>, Option<String>)> {
        let free = v.free_arms();
        Some(match p {
            Prim::Pick { obj, arm } => {
                let o = v.obj(obj)?;
                let arms = match arm {
                    Some(a) => vec![*a],
                    None => free,
                };
                (rel(o.relative_grasp_point), arms, None, Some(obj.clone()))
            }
            Prim::Place { obj, rec } => {
                let o = v.obj(obj)?;
                let r = v.obj(rec)?;
                let holders = v.holders(obj);
                let width = (holders.len() == 2).then_some(o.grasp_width);
                (rel(r.relative_grasp_point), holders, width, Some(rec.clone()))
            }
            Prim::Open { obj } | Prim::Close { obj } => {
                let o = v.obj(obj)?;
                (rel(o.relative_grasp_point), free, None, Some(obj.clone()))
            }
            Prim::Pour { src, dst } => {
                let d = v.obj(dst)?;
                (rel(d.relative_grasp_point) + Vec3::new(0.0, 0.0, 0.1), v.holders(src), None, Some(dst.clone()))
            }
            Prim::Lift { obj } => {
                let o = v.obj(obj)?;
                (rel(o.relative_grasp_point), Arm::BOTH.to_vec(), Some(o.grasp_width), Some(obj.clone()))
            }
            Prim::HoldOpen { container, .. } => {
                let c = v.obj(container)?;
                let arm = *free.first()?;
                let side = if arm == Arm::Left { 1.0 } else { -1.0 };
                (rel(c.relative_grasp_point) + Vec3::new(0.0, side * c.grasp_width, 0.0), vec![arm], None, None)
            }
        })
    }

    fn reach(&self, v: &View, point: &Vec3, arms: &[Arm], width: Option<f64>, lift: f64) -> Reach {
        match width {
            Some(w) => {
                if v.bimanual_reach(point, w, lift) {
                    Reach::Both
                } else {
                    Reach::None
                }
            }
            None => {
                let r = v.reaching(arms, point, lift);
                if r.is_empty() {
                    Reach::None
                } else {
                    Reach::Single(r)
                }
            }
        }
    }

    fn action_for(p: &Prim, arm: Arm) -> Action {
        match p {
            Prim::Pick { obj, .. } => Action::PickUp { object: obj.clone(), arm },
            Prim::Place { obj, rec } => Action::Place { object: obj.clone(), receptacle: rec.clone(), arm },
            Prim::Open { obj } => Action::Open { object: obj.clone(), arm },
            Prim::Close { obj } => Action::Close { object: obj.clone(), arm },
            Prim::Pour { src, dst } => Action::Pour { object: src.clone(), target: dst.clone(), arm },
            Prim::Lift { obj } => Action::LiftTogether { object: obj.clone() },
            Prim::HoldOpen { held, container } => Action::HoldAndOpen { held: held.clone(), container: container.clone() },
        }
    }

    /// Two single-arm primitives that can run at once from here.
    fn pair(&self, v: &View, first: &Prim, rest: &[Prim]) -> Option<Action> {
        if self.mode != ArmMode::DualArm {
            return None;
        }
        let lift = v.obs.torso_lift;
        let pickish = |p: &Prim| matches!(p, Prim::Pick { arm: None, .. });
        let placeish = |p: &Prim| matches!(p, Prim::Place { .. });
        let compatible = |a: &Prim, b: &Prim| (pickish(a) && pickish(b)) || (placeish(a) && placeish(b));
        for second in rest {
            if !compatible(first, second) {
                continue;
            }
            let (Some((p1, arms1, w1, _)), Some((p2, arms2, w2, _))) = (self.target(v, first), self.target(v, second)) else {
                continue;
            };
            if w1.is_some() || w2.is_some() || first.key() == second.key() {
                continue;
            }
            let mut best: Option<(f64, Arm)> = None;
            for a1 in arms1 {
                let a2 = a1.other();
                if !arms2.contains(&a2) {
                    continue;
                }
                if !(v.can_reach(a1, &p1, lift) && v.can_reach(a2, &p2, lift)) {
                    continue;
                }
                let cost = v.shoulder_distance(a1, &p1, lift) + v.shoulder_distance(a2, &p2, lift);
                if best.is_none_or(|(c, _)| cost < c) {
                    best = Some((cost, a1));
                }
            }
            let Some((_, a1)) = best else { continue };
            let x = Self::action_for(first, a1);
            let y = Self::action_for(second, a1.other());
            let (left, right) = if a1 == Arm::Left { (x, y) } else { (y, x) };
            if left.target() == right.target() {
                continue;
            }
            return Some(Action::Parallel { left: Box::new(left), right: Box::new(right) });
        }
        None
    }

    /// `obs` plus remembered objects that are currently out of sight.
    fn recall(&mut self, obs: &ObservationFrame) -> ObservationFrame {
        for o in &obs.visible_objects {
            self.memory.insert(o.id.clone(), o.clone());
        }
        let mut out = obs.clone();
        let base = obs.base();
        for (id, o) in &self.memory {
            if obs.object(id).is_none() {
                let mut o = o.clone();
                o.relative_position = to_robot(base, o.position);
                o.relative_grasp_point = to_robot(base, o.grasp_point);
                o.held_by.clear();
                out.visible_objects.push(o);
            }
        }
        out
    }

    fn attempt(&mut self, v: &View, p: &Prim, rest: &[Prim]) -> Option<Action> {
        let (point, arms, width, loc) = self.target(v, p)?;
        if arms.is_empty() {
            return None;
        }
        let lift = v.obs.torso_lift;
        if let Some(a) = self.pair(v, p, rest) {
            return Some(a);
        }
        match self.reach(v, &point, &arms, width, lift) {
            Reach::Both => return Some(Self::action_for(p, Arm::Left)),
            Reach::Single(r) => return Some(Self::action_for(p, r[0].0)),
            Reach::None => {}
        }
        // the held object rides along, so lift changes cannot help it
        if !matches!(p, Prim::HoldOpen { .. }) {
            let [lo, hi] = v.model.lift_range;
            let n = ((hi - lo) / LIFT_STEP).round() as usize;
            let mut lifts: Vec<f64> = (0..=n).map(|i| (lo + i as f64 * LIFT_STEP).min(hi)).collect();
            lifts.sort_by(|a, b| (a - lift).abs().total_cmp(&(b - lift).abs()));
            for l in lifts {
                if (l - lift).abs() < 1e-9 {
                    continue;
                }
                if !matches!(self.reach(v, &point, &arms, width, l), Reach::None) {
                    return Some(Action::AdjustHeight { delta: l - lift });
                }
            }
        }
        let loc = loc?;
        if self.last_nav.as_deref() == Some(loc.as_str()) {
            return None;
        }
        self.last_nav = Some(loc.clone());
        Some(Action::NavigateTo { target: NavTarget::Object(loc) })
    }
}

impl Planner for OraclePlanner {
    fn name(&self) -> String {
        match self.mode {
            ArmMode::SingleArm => "oracle-single".into(),
            ArmMode::DualArm => "oracle-dual".into(),
        }
    }

    fn reset(&mut self, _task: &Task, _seed: u64) -> Result<(), PlannerError> {
        *self = OraclePlanner::new(self.mode);
        Ok(())
    }

    fn next_action(&mut self, obs: &ObservationFrame, task: &Task, last: Option<&ActionResult>) -> Result<Action, PlannerError> {
        if let (Some(r), Some(k)) = (last, self.last_key.take()) {
            if matches!(r.outcome, OutcomeLabel::Unreachable | OutcomeLabel::NoOp) {
                let n = self.failures.entry(k.clone()).or_insert(0);
                *n += 1;
                if *n >= GIVE_UP_AFTER {
                    self.given_up.insert(k);
                }
            }
        }
        let obs = &self.recall(obs);
        let v = View { obs, model: RobotModel::builtin(obs.embodiment), solved: RefCell::new(HashMap::new()) };
        let prims = self.ordered(&v, self.prims(&v, task));
        for (i, p) in prims.iter().enumerate() {
            if let Some(a) = self.attempt(&v, p, &prims[i + 1..]) {
                self.last_key = Some(p.key());
                return Ok(a);
            }
            self.given_up.insert(p.key());
        }
        Ok(Action::Done)
    }
}
