//! Stochastic action outcomes: per-(action, properties) outcome
//! distributions, difficulty rescaling, sampling and outcome effects.

mod table;

pub use table::{OutcomeTable, TableEntry};

pub use crate::world::apply_outcome;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rng::SplitMix64;
use crate::world::ActionKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    Success,
    Break,
    Spill,
    Drop,
    SlipOpen,
    /// Deterministic: the target could not be reached.
    Unreachable,
    /// Deterministic: the action was rejected without effect.
    NoOp,
}

impl OutcomeLabel {
    pub fn is_sampleable(self) -> bool {
        !matches!(self, OutcomeLabel::Unreachable | OutcomeLabel::NoOp)
    }

    pub fn name(self) -> &'static str {
        match self {
            OutcomeLabel::Success => "success",
            OutcomeLabel::Break => "break",
            OutcomeLabel::Spill => "spill",
            OutcomeLabel::Drop => "drop",
            OutcomeLabel::SlipOpen => "slip_open",
            OutcomeLabel::Unreachable => "unreachable",
            OutcomeLabel::NoOp => "no_op",
        }
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ContingencyError {
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("label {0} listed more than once")]
    DuplicateLabel(OutcomeLabel),
    #[error("success must be listed exactly once")]
    MissingSuccess,
    #[error("label {0} is deterministic and cannot be sampled")]
    NotSampleable(OutcomeLabel),
    #[error("outcome table: {0}")]
    Table(String),
}

/// Labeled outcomes with probabilities summing to one, in listed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<OutcomeEntry>", into = "Vec<OutcomeEntry>")]
pub struct OutcomeDistribution {
    entries: Vec<(OutcomeLabel, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeEntry {
    pub label: OutcomeLabel,
    pub p: f64,
}

impl TryFrom<Vec<OutcomeEntry>> for OutcomeDistribution {
    type Error = ContingencyError;
    fn try_from(v: Vec<OutcomeEntry>) -> Result<Self, Self::Error> {
        OutcomeDistribution::new(v.into_iter().map(|e| (e.label, e.p)).collect())
    }
}

impl From<OutcomeDistribution> for Vec<OutcomeEntry> {
    fn from(d: OutcomeDistribution) -> Self {
        d.entries.into_iter().map(|(label, p)| OutcomeEntry { label, p }).collect()
    }
}

impl OutcomeDistribution {
    pub fn new(entries: Vec<(OutcomeLabel, f64)>) -> Result<Self, ContingencyError> {
        let mut seen = std::collections::BTreeSet::new();
        for &(label, p) in &entries {
            if !label.is_sampleable() {
                return Err(ContingencyError::NotSampleable(label));
            }
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(ContingencyError::OutOfRange(p));
            }
            if !seen.insert(label) {
                return Err(ContingencyError::DuplicateLabel(label));
            }
        }
        if !seen.contains(&OutcomeLabel::Success) {
            return Err(ContingencyError::MissingSuccess);
        }
        let sum: f64 = entries.iter().map(|e| e.1).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ContingencyError::NotNormalized(sum));
        }
        Ok(OutcomeDistribution { entries })
    }

    pub fn certain_success() -> Self {
        OutcomeDistribution { entries: vec![(OutcomeLabel::Success, 1.0)] }
    }

    pub fn entries(&self) -> &[(OutcomeLabel, f64)] {
        &self.entries
    }

    pub fn probability(&self, label: OutcomeLabel) -> f64 {
        self.entries.iter().find(|e| e.0 == label).map_or(0.0, |e| e.1)
    }

    pub fn success(&self) -> f64 {
        self.probability(OutcomeLabel::Success)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    /// Shipped table probabilities, unscaled.
    Nominal,
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    /// Success rate of sampled actions; `None` keeps the table as shipped.
    pub fn success_multiplier(self) -> Option<f64> {
        match self {
            Difficulty::Nominal => None,
            Difficulty::Easy => Some(1.0),
            Difficulty::Medium => Some(0.5),
            Difficulty::Hard => Some(0.2),
        }
    }

    pub fn parse(s: &str) -> Option<Difficulty> {
        match s.to_ascii_lowercase().as_str() {
            "nominal" => Some(Difficulty::Nominal),
            "easy" => Some(Difficulty::Easy),
            "medium" => Some(Difficulty::Medium),
            "hard" => Some(Difficulty::Hard),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Difficulty::Nominal => "nominal",
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Failure label used when a distribution lists no failure outcomes but the
/// difficulty still demands failure mass.
pub fn fallback_failure(kind: ActionKind) -> OutcomeLabel {
    match kind {
        ActionKind::Open | ActionKind::Close | ActionKind::HoldAndOpen => OutcomeLabel::SlipOpen,
        ActionKind::Pour => OutcomeLabel::Spill,
        _ => OutcomeLabel::Drop,
    }
}

/// Set the success probability to the difficulty's rate and spread the rest
/// over the failure labels in proportion to their original probabilities.
pub fn scale_for_difficulty(dist: &OutcomeDistribution, difficulty: Difficulty, kind: ActionKind) -> OutcomeDistribution {
    let Some(multiplier) = difficulty.success_multiplier() else {
        return dist.clone();
    };
    let success = multiplier.min(1.0);
    let failure_mass = 1.0 - success;
    let original_failure: f64 = dist.entries.iter().filter(|e| e.0 != OutcomeLabel::Success).map(|e| e.1).sum();
    let mut entries: Vec<(OutcomeLabel, f64)> = Vec::with_capacity(dist.entries.len() + 1);
    if original_failure > 0.0 {
        for &(label, p) in &dist.entries {
            let q = if label == OutcomeLabel::Success { success } else { failure_mass * (p / original_failure) };
            entries.push((label, q));
        }
    } else {
        entries.push((OutcomeLabel::Success, success));
        if failure_mass > 0.0 {
            entries.push((fallback_failure(kind), failure_mass));
        }
    }
    OutcomeDistribution { entries }
}

/// Inverse-CDF draw in listed order; always consumes exactly one draw.
pub fn sample_outcome(dist: &OutcomeDistribution, rng: &mut SplitMix64) -> OutcomeLabel {
    let u = rng.next_f64();
    let mut cumulative = 0.0;
    for &(label, p) in &dist.entries {
        cumulative += p;
        if u < cumulative {
            return label;
        }
    }
    // rounding left u above the last cumulative sum
    dist.entries.iter().rev().find(|e| e.1 > 0.0).map_or(OutcomeLabel::Success, |e| e.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use OutcomeLabel::*;

    fn cup_row() -> OutcomeDistribution {
        OutcomeDistribution::new(vec![(Success, 0.8), (Spill, 0.1), (Break, 0.1)]).unwrap()
    }

    #[test]
    fn difficulty_rescaling_rows() {
        let d = cup_row();
        let easy = scale_for_difficulty(&d, Difficulty::Easy, ActionKind::PickUp);
        assert_eq!(easy.entries(), &[(Success, 1.0), (Spill, 0.0), (Break, 0.0)]);
        let medium = scale_for_difficulty(&d, Difficulty::Medium, ActionKind::PickUp);
        assert_eq!(medium.entries(), &[(Success, 0.5), (Spill, 0.25), (Break, 0.25)]);
        let hard = scale_for_difficulty(&d, Difficulty::Hard, ActionKind::PickUp);
        assert_eq!(hard.entries(), &[(Success, 0.2), (Spill, 0.4), (Break, 0.4)]);
        assert_eq!(scale_for_difficulty(&d, Difficulty::Nominal, ActionKind::PickUp), d);
    }

    #[test]
    fn certain_success_gets_fallback_failure() {
        let d = OutcomeDistribution::certain_success();
        let m = scale_for_difficulty(&d, Difficulty::Medium, ActionKind::Open);
        assert_eq!(m.entries(), &[(Success, 0.5), (SlipOpen, 0.5)]);
        let e = scale_for_difficulty(&d, Difficulty::Easy, ActionKind::Open);
        assert_eq!(e.entries(), &[(Success, 1.0)]);
    }

    #[test]
    fn validation() {
        assert_eq!(OutcomeDistribution::new(vec![(Success, 0.5)]), Err(ContingencyError::NotNormalized(0.5)));
        assert_eq!(OutcomeDistribution::new(vec![(Break, 1.0)]), Err(ContingencyError::MissingSuccess));
        assert_eq!(
            OutcomeDistribution::new(vec![(Success, 0.5), (NoOp, 0.5)]),
            Err(ContingencyError::NotSampleable(NoOp))
        );
        assert_eq!(
            OutcomeDistribution::new(vec![(Success, 0.5), (Success, 0.5)]),
            Err(ContingencyError::DuplicateLabel(Success))
        );
    }

    #[test]
    fn certain_outcome_ignores_rng() {
        let d = OutcomeDistribution::certain_success();
        let mut rng = SplitMix64::new(0);
        for _ in 0..1000 {
            assert_eq!(sample_outcome(&d, &mut rng), Success);
        }
    }

    #[test]
    fn one_draw_per_sample() {
        let mut a = SplitMix64::new(5);
        let mut b = SplitMix64::new(5);
        sample_outcome(&cup_row(), &mut a);
        b.next_u64();
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let draw = |seed| {
            let mut rng = SplitMix64::new(seed);
            (0..20).map(|_| sample_outcome(&cup_row(), &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
    }
}
