use std::collections::{BTreeMap, BTreeSet};

use crate::schema::{Correspondence, ElementId, Side};

/// The shared environment agents publish their beliefs to.
///
/// Nominations and confirmations live for one tick; matches are permanent.
#[derive(Clone, Debug, Default)]
pub struct MatchBoard {
    nominations: BTreeMap<(Side, ElementId), ElementId>,
    confirmations: BTreeMap<(Side, ElementId), ElementId>,
    matched_sources: BTreeMap<ElementId, ElementId>,
    matched_targets: BTreeSet<ElementId>,
}

impl MatchBoard {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops last tick's nominations and confirmations.
    pub fn clear_round(&mut self) {
        self.nominations.clear();
        self.confirmations.clear();
    }

    pub fn nominate(&mut self, side: Side, from: &ElementId, to: &ElementId) {
        self.nominations.insert((side, from.clone()), to.clone());
    }

    pub fn confirm(&mut self, side: Side, from: &ElementId, to: &ElementId) {
        self.confirmations.insert((side, from.clone()), to.clone());
    }

    pub fn nomination(&self, side: Side, from: &ElementId) -> Option<&ElementId> {
        self.nominations.get(&(side, from.clone()))
    }

    /// Agents on the side opposite to `side` whose current nomination is `id`.
    pub fn nominators_of<'a>(&'a self, side: Side, id: &'a ElementId) -> impl Iterator<Item = &'a ElementId> + 'a {
        let from_side = side.opposite();
        self.nominations.iter().filter(move |((s, _), to)| *s == from_side && *to == id).map(|((_, from), _)| from)
    }

    pub fn is_matched(&self, side: Side, id: &ElementId) -> bool {
        match side {
            Side::Source => self.matched_sources.contains_key(id),
            Side::Target => self.matched_targets.contains(id),
        }
    }

    /// All permanent matches, keyed by source id.
    pub fn matches(&self) -> &BTreeMap<ElementId, ElementId> {
        &self.matched_sources
    }

    /// Pairs whose two members confirmed each other this tick. Those pairs
    /// are recorded as matched and ordered by source id.
    pub fn detect_consensus(&mut self) -> Vec<Correspondence> {
        let mut found = Vec::new();
        for ((side, from), to) in &self.confirmations {
            if *side != Side::Source || self.is_matched(Side::Source, from) || self.is_matched(Side::Target, to) {
                continue;
            }
            if self.confirmations.get(&(Side::Target, to.clone())) == Some(from) {
                found.push(Correspondence(from.clone(), to.clone()));
            }
        }
        for pair in &found {
            self.matched_sources.insert(pair.0.clone(), pair.1.clone());
            self.matched_targets.insert(pair.1.clone());
        }
        found
    }
}
