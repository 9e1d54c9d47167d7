use super::{Planner, PlannerError};
use crate::kinematics::Arm;
use crate::rng::SplitMix64;
use crate::tasks::Task;
use crate::world::{Action, ActionResult, NavTarget, ObservationFrame, Property};

const HEIGHT_STEP: f64 = 0.1;

/// Every well-formed action over the visible objects, in a fixed order.
/// Well formed means each referenced object is visible and has the kind of
/// affordance the action needs; preconditions are not otherwise checked.
pub fn well_formed_actions(obs: &ObservationFrame) -> Vec<Action> {
    let objs = &obs.visible_objects;
    let has = |o: &crate::world::VisibleObject, p| o.properties.contains(&p);
    let mut out = Vec::new();
    for o in objs.iter().filter(|o| o.held_by.is_empty()) {
        out.push(Action::NavigateTo { target: NavTarget::Object(o.id.clone()) });
    }
    for o in objs.iter().filter(|o| o.held_by.is_empty() && has(o, Property::Pickupable)) {
        for arm in Arm::BOTH {
            out.push(Action::PickUp { object: o.id.clone(), arm });
        }
        out.push(Action::LiftTogether { object: o.id.clone() });
    }
    for arm in Arm::BOTH {
        let Some(h) = obs.held.get(arm) else { continue };
        for r in objs.iter().filter(|r| r.id != *h && has(r, Property::Receptacle)) {
            out.push(Action::Place { object: h.clone(), receptacle: r.id.clone(), arm });
        }
        if obs.object(h).is_some_and(|o| has(o, Property::Pourable)) {
            for t in objs.iter().filter(|t| t.id != *h && (has(t, Property::Receptacle) || has(t, Property::Pourable))) {
                out.push(Action::Pour { object: h.clone(), target: t.id.clone(), arm });
            }
        }
        if obs.held.get(arm.other()).is_none() {
            for c in objs.iter().filter(|c| has(c, Property::Openable) && (c.id == *h || c.parent.as_ref() == Some(h))) {
                out.push(Action::HoldAndOpen { held: h.clone(), container: c.id.clone() });
            }
        }
    }
    for o in objs.iter().filter(|o| has(o, Property::Openable)) {
        for arm in Arm::BOTH {
            out.push(Action::Open { object: o.id.clone(), arm });
            out.push(Action::Close { object: o.id.clone(), arm });
        }
    }
    out.push(Action::AdjustHeight { delta: HEIGHT_STEP });
    out.push(Action::AdjustHeight { delta: -HEIGHT_STEP });
    out.push(Action::Done);
    out
}

/// Uniform choice among [`well_formed_actions`], seeded per episode.
pub struct RandomPlanner {
    rng: SplitMix64,
}

impl RandomPlanner {
    pub fn new() -> RandomPlanner {
        RandomPlanner { rng: SplitMix64::new(0) }
    }

    pub fn with_seed(seed: u64) -> RandomPlanner {
        RandomPlanner { rng: SplitMix64::new(seed).fork(0x9A11) }
    }

    pub fn choose(&mut self, obs: &ObservationFrame) -> Action {
        let mut actions = well_formed_actions(obs);
        let i = self.rng.next_below(actions.len());
        actions.swap_remove(i)
    }
}

impl Default for RandomPlanner {
    fn default() -> Self {
        RandomPlanner::new()
    }
}

impl Planner for RandomPlanner {
    fn name(&self) -> String {
        "random".into()
    }

    fn reset(&mut self, _task: &Task, seed: u64) -> Result<(), PlannerError> {
        *self = RandomPlanner::with_seed(seed);
        Ok(())
    }

    fn next_action(&mut self, obs: &ObservationFrame, _task: &Task, _last: Option<&ActionResult>) -> Result<Action, PlannerError> {
        Ok(self.choose(obs))
    }
}
