use serde::{Deserialize, Serialize};

use super::{ContingencyError, OutcomeDistribution};
use crate::world::{ActionKind, PropertySet};

const BUILTIN_TABLE: &str = include_str!("../../data/outcome_table.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub action: ActionKind,
    pub properties: PropertySet,
    pub outcomes: OutcomeDistribution,
}

/// Outcome distributions keyed by (action kind, property set).
///
/// A lookup matches every entry whose property set is contained in the
/// object's properties and returns the one with the most properties; ties go
/// to the first listed. Unmatched lookups are certain successes.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct OutcomeTable {
    entries: Vec<TableEntry>,
}

impl OutcomeTable {
    pub fn new(entries: Vec<TableEntry>) -> Result<OutcomeTable, ContingencyError> {
        for (i, a) in entries.iter().enumerate() {
            if !a.action.is_interaction() {
                return Err(ContingencyError::Table(format!("{:?} actions are not sampled", a.action)));
            }
            if entries[..i].iter().any(|b| b.action == a.action && b.properties == a.properties) {
                return Err(ContingencyError::Table(format!("duplicate entry for {:?} {:?}", a.action, a.properties)));
            }
        }
        Ok(OutcomeTable { entries })
    }

    pub fn from_json(json: &str) -> Result<OutcomeTable, ContingencyError> {
        let entries: Vec<TableEntry> = serde_json::from_str(json).map_err(|e| ContingencyError::Table(e.to_string()))?;
        OutcomeTable::new(entries)
    }

    pub fn builtin() -> OutcomeTable {
        OutcomeTable::from_json(BUILTIN_TABLE).expect("shipped outcome table is valid")
    }

    pub fn builtin_json() -> &'static str {
        BUILTIN_TABLE
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn lookup(&self, action: ActionKind, properties: &PropertySet) -> OutcomeDistribution {
        let mut best: Option<&TableEntry> = None;
        for e in &self.entries {
            if e.action == action
                && e.properties.is_subset(properties)
                && best.is_none_or(|b| e.properties.len() > b.properties.len())
            {
                best = Some(e);
            }
        }
        best.map_or_else(OutcomeDistribution::certain_success, |e| e.outcomes.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contingency::OutcomeLabel::*;
    use crate::world::Property::*;

    fn props(p: &[crate::world::Property]) -> PropertySet {
        p.iter().copied().collect()
    }

    #[test]
    fn cup_row() {
        let t = OutcomeTable::builtin();
        let d = t.lookup(ActionKind::PickUp, &props(&[Pickupable, Pourable, Breakable]));
        assert_eq!(d.entries(), &[(Success, 0.8), (Spill, 0.1), (Break, 0.1)]);
    }

    #[test]
    fn unlisted_is_certain() {
        let t = OutcomeTable::builtin();
        assert_eq!(t.lookup(ActionKind::PickUp, &props(&[])), OutcomeDistribution::certain_success());
        assert_eq!(t.lookup(ActionKind::Pour, &props(&[Heavy])), OutcomeDistribution::certain_success());
    }

    #[test]
    fn most_specific_wins() {
        let t = OutcomeTable::builtin();
        let d = t.lookup(ActionKind::PickUp, &props(&[Breakable, Receptacle]));
        assert_eq!(d.entries(), &[(Success, 0.9), (Break, 0.1)]);
    }

    #[test]
    fn shipped_rows_sum_to_one() {
        let raw: serde_json::Value = serde_json::from_str(BUILTIN_TABLE).unwrap();
        for row in raw.as_array().unwrap() {
            let sum: f64 = row["outcomes"].as_array().unwrap().iter().map(|o| o["p"].as_f64().unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = r#"[{"action":"open","properties":[],"outcomes":[{"label":"success","p":0.7}]}]"#;
        assert!(OutcomeTable::from_json(bad).is_err());
        let nav = r#"[{"action":"navigate_to","properties":[],"outcomes":[{"label":"success","p":1.0}]}]"#;
        assert!(OutcomeTable::from_json(nav).is_err());
    }
}
