use std::fmt;

use serde::{Deserialize, Serialize};

use super::grid::Cell;
use crate::contingency::OutcomeLabel;
use crate::kinematics::Arm;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NavTarget {
    Object(String),
    Cell(Cell),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    NavigateTo { target: NavTarget },
    PickUp { object: String, arm: Arm },
    Place { object: String, receptacle: String, arm: Arm },
    Open { object: String, arm: Arm },
    Close { object: String, arm: Arm },
    Pour { object: String, target: String, arm: Arm },
    AdjustHeight { delta: f64 },
    LiftTogether { object: String },
    HoldAndOpen { held: String, container: String },
    /// One single-arm action per arm, executed as one motion.
    Parallel { left: Box<Action>, right: Box<Action> },
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    NavigateTo,
    PickUp,
    Place,
    Open,
    Close,
    Pour,
    AdjustHeight,
    LiftTogether,
    HoldAndOpen,
    Parallel,
    Done,
}

impl ActionKind {
    /// Kinds whose outcome is sampled from the outcome table.
    pub fn is_interaction(self) -> bool {
        matches!(
            self,
            ActionKind::PickUp
                | ActionKind::Place
                | ActionKind::Open
                | ActionKind::Close
                | ActionKind::Pour
                | ActionKind::LiftTogether
                | ActionKind::HoldAndOpen
        )
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::NavigateTo { .. } => ActionKind::NavigateTo,
            Action::PickUp { .. } => ActionKind::PickUp,
            Action::Place { .. } => ActionKind::Place,
            Action::Open { .. } => ActionKind::Open,
            Action::Close { .. } => ActionKind::Close,
            Action::Pour { .. } => ActionKind::Pour,
            Action::AdjustHeight { .. } => ActionKind::AdjustHeight,
            Action::LiftTogether { .. } => ActionKind::LiftTogether,
            Action::HoldAndOpen { .. } => ActionKind::HoldAndOpen,
            Action::Parallel { .. } => ActionKind::Parallel,
            Action::Done => ActionKind::Done,
        }
    }

    /// The arm a single-arm action uses.
    pub fn arm(&self) -> Option<Arm> {
        match self {
            Action::PickUp { arm, .. }
            | Action::Place { arm, .. }
            | Action::Open { arm, .. }
            | Action::Close { arm, .. }
            | Action::Pour { arm, .. } => Some(*arm),
            _ => None,
        }
    }

    /// The object whose properties select the outcome distribution.
    pub fn target(&self) -> Option<&str> {
        match self {
            Action::PickUp { object, .. }
            | Action::Place { object, .. }
            | Action::Open { object, .. }
            | Action::Close { object, .. }
            | Action::Pour { object, .. }
            | Action::LiftTogether { object } => Some(object),
            Action::HoldAndOpen { container, .. } => Some(container),
            Action::NavigateTo { target: NavTarget::Object(o) } => Some(o),
            _ => None,
        }
    }

    pub fn binds_both_arms(&self) -> bool {
        matches!(self, Action::LiftTogether { .. } | Action::HoldAndOpen { .. } | Action::Parallel { .. })
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::NavigateTo { target: NavTarget::Object(o) } => write!(f, "navigate_to({o})"),
            Action::NavigateTo { target: NavTarget::Cell((x, y)) } => write!(f, "navigate_to({x},{y})"),
            Action::PickUp { object, arm } => write!(f, "pick_up({object}, {arm})"),
            Action::Place { object, receptacle, arm } => write!(f, "place({object}, {receptacle}, {arm})"),
            Action::Open { object, arm } => write!(f, "open({object}, {arm})"),
            Action::Close { object, arm } => write!(f, "close({object}, {arm})"),
            Action::Pour { object, target, arm } => write!(f, "pour({object}, {target}, {arm})"),
            Action::AdjustHeight { delta } => write!(f, "adjust_height({delta:+.3})"),
            Action::LiftTogether { object } => write!(f, "lift_together({object})"),
            Action::HoldAndOpen { held, container } => write!(f, "hold_and_open({held}, {container})"),
            Action::Parallel { left, right } => write!(f, "parallel({left} | {right})"),
            Action::Done => f.write_str("done"),
        }
    }
}

/// Why a non-sampled failure happened.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    Precondition,
    NoPath,
    OutOfReach,
    IkFailed,
    Balance,
}

/// A failed reach: the grasp point in the robot ground frame and the torso
/// lift at which it was tested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachProbe {
    pub arm: Arm,
    pub point: [f64; 3],
    pub lift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionResult {
    pub outcome: OutcomeLabel,
    pub feedback: String,
    pub ticks_consumed: u64,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<FailureReason>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ReachProbe>,
}

impl ActionResult {
    pub fn new(outcome: OutcomeLabel, feedback: impl Into<String>, ticks: u64) -> ActionResult {
        ActionResult {
            outcome,
            feedback: feedback.into(),
            ticks_consumed: ticks,
            success: outcome == OutcomeLabel::Success,
            reason: None,
            probes: Vec::new(),
        }
    }

    pub fn precondition(feedback: impl Into<String>) -> ActionResult {
        ActionResult { reason: Some(FailureReason::Precondition), ..ActionResult::new(OutcomeLabel::NoOp, feedback, 1) }
    }

    pub fn unreachable(reason: FailureReason, feedback: impl Into<String>, probes: Vec<ReachProbe>) -> ActionResult {
        ActionResult { reason: Some(reason), probes, ..ActionResult::new(OutcomeLabel::Unreachable, feedback, 1) }
    }
}
