use std::fmt;

use serde::{Deserialize, Serialize};

use super::TaskError;
use crate::kinematics::Arm;
use crate::world::{Category, ObservationFrame, StateFlag, StateSet, WorldState};

/// An object id, or `category:<name>` meaning any object of that category.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectRef(pub String);

impl ObjectRef {
    pub fn id(id: &str) -> ObjectRef {
        ObjectRef(id.to_string())
    }

    pub fn category(c: Category) -> ObjectRef {
        ObjectRef(format!("category:{c}"))
    }

    pub fn as_category(&self) -> Option<Category> {
        self.0.strip_prefix("category:").and_then(Category::parse)
    }

    /// Whether this ref is well formed (ids never start with `category:`).
    pub fn is_valid(&self) -> bool {
        !self.0.starts_with("category:") || self.as_category().is_some()
    }

    pub fn matches(&self, id: &str, category: Category) -> bool {
        match self.as_category() {
            Some(c) => c == category,
            None => self.0 == id,
        }
    }
}

impl fmt::Display for ObjectRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldSpec {
    Left,
    Right,
    Either,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GoalPredicate {
    ObjectIn { object: ObjectRef, receptacle: ObjectRef },
    ObjectState { object: ObjectRef, flag: StateFlag, value: bool },
    Holding { arm: HoldSpec, object: ObjectRef },
    WithinSteps { budget: u64 },
}

impl GoalPredicate {
    pub fn refs(&self) -> Vec<&ObjectRef> {
        match self {
            GoalPredicate::ObjectIn { object, receptacle } => vec![object, receptacle],
            GoalPredicate::ObjectState { object, .. } | GoalPredicate::Holding { object, .. } => vec![object],
            GoalPredicate::WithinSteps { .. } => vec![],
        }
    }
}

/// What goal evaluation needs to know about one object.
#[derive(Clone, Debug)]
pub struct ObjectFacts<'a> {
    pub id: &'a str,
    pub category: Category,
    pub parent: Option<&'a str>,
    pub state: &'a StateSet,
    pub held_by: Vec<Arm>,
}

/// Read access to the facts goal predicates are evaluated over.
pub trait GoalView {
    fn facts(&self) -> Vec<ObjectFacts<'_>>;
    /// `None` when the view does not track the step count.
    fn steps_taken(&self) -> Option<u64>;
}

impl GoalView for WorldState {
    fn facts(&self) -> Vec<ObjectFacts<'_>> {
        self.objects
            .values()
            .map(|o| ObjectFacts {
                id: &o.id,
                category: o.category,
                parent: o.parent.as_deref(),
                state: &o.state,
                held_by: self.robot.holder_of(&o.id),
            })
            .collect()
    }

    fn steps_taken(&self) -> Option<u64> {
        Some(self.actions_taken)
    }
}

impl GoalView for ObservationFrame {
    fn facts(&self) -> Vec<ObjectFacts<'_>> {
        self.visible_objects
            .iter()
            .map(|o| ObjectFacts {
                id: &o.id,
                category: o.category,
                parent: o.parent.as_deref(),
                state: &o.state,
                held_by: o.held_by.clone(),
            })
            .collect()
    }

    fn steps_taken(&self) -> Option<u64> {
        None
    }
}

fn matching<'a, 'b>(facts: &'b [ObjectFacts<'a>], r: &ObjectRef) -> Result<Vec<&'b ObjectFacts<'a>>, TaskError> {
    if !r.is_valid() {
        return Err(TaskError::BadRef(r.0.clone()));
    }
    let found: Vec<_> = facts.iter().filter(|f| r.matches(f.id, f.category)).collect();
    if found.is_empty() {
        return Err(TaskError::DanglingRef(r.0.clone()));
    }
    Ok(found)
}

pub fn predicate_holds(goal: &GoalPredicate, facts: &[ObjectFacts<'_>], steps: Option<u64>) -> Result<bool, TaskError> {
    Ok(match goal {
        GoalPredicate::ObjectIn { object, receptacle } => {
            let recs = matching(facts, receptacle)?;
            matching(facts, object)?.iter().any(|o| o.parent.is_some_and(|p| recs.iter().any(|r| r.id == p)))
        }
        GoalPredicate::ObjectState { object, flag, value } => {
            matching(facts, object)?.iter().any(|o| o.state.contains(flag) == *value)
        }
        GoalPredicate::Holding { arm, object } => matching(facts, object)?.iter().any(|o| match arm {
            HoldSpec::Left => o.held_by.contains(&Arm::Left),
            HoldSpec::Right => o.held_by.contains(&Arm::Right),
            HoldSpec::Either => !o.held_by.is_empty(),
            HoldSpec::Both => o.held_by.len() == 2,
        }),
        GoalPredicate::WithinSteps { budget } => steps.is_none_or(|s| s <= *budget),
    })
}

/// Conjunction of `goals` over `view`.
pub fn goals_hold(goals: &[GoalPredicate], view: &dyn GoalView) -> Result<bool, TaskError> {
    let facts = view.facts();
    let steps = view.steps_taken();
    let mut all = true;
    // evaluate every predicate so dangling references always surface
    for g in goals {
        all &= predicate_holds(g, &facts, steps)?;
    }
    Ok(all)
}
