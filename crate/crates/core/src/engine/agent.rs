//! One schema element as a reflexive agent: perceive, decide, act.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::board::MatchBoard;
use super::{ScoreTable, SimulationConfig};
use crate::kernel::{self, AggregationFn, RngStream};
use crate::schema::{ElementId, SchemaElement, Side};
use crate::similarity::MeasureId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Perceiving,
    Deciding,
    Acting,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentStatus {
    Searching,
    /// Confirmed its candidate; the partner has not confirmed back yet.
    Committed,
    Matched,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub element: SchemaElement,
    pub phase: Phase,
    pub candidate: Option<ElementId>,
    pub candidate_streak: u32,
    pub patience_left: u32,
    pub status: AgentStatus,
    pub inbound_nominations: BTreeSet<ElementId>,
    /// Position of the element in its schema.
    pub(crate) slot: usize,
}

impl AgentState {
    pub fn new(element: SchemaElement, slot: usize, cfg: &SimulationConfig) -> Self {
        AgentState {
            element,
            phase: Phase::Perceiving,
            candidate: None,
            candidate_streak: 0,
            patience_left: cfg.patience,
            status: AgentStatus::Searching,
            inbound_nominations: BTreeSet::new(),
            slot,
        }
    }

    pub fn id(&self) -> &ElementId {
        &self.element.id
    }

    pub fn side(&self) -> Side {
        self.element.side
    }

    fn clear_belief(&mut self) {
        self.candidate = None;
        self.candidate_streak = 0;
    }
}

/// What an agent can see of the world during perception.
pub struct Environment<'a> {
    pub(crate) table: &'a ScoreTable,
    pub(crate) board: &'a MatchBoard,
    /// `(id, available)` per slot, indexed by side.
    pub(crate) sources: &'a [(ElementId, bool)],
    pub(crate) targets: &'a [(ElementId, bool)],
}

impl Environment<'_> {
    fn population(&self, side: Side) -> &[(ElementId, bool)] {
        match side {
            Side::Source => self.sources,
            Side::Target => self.targets,
        }
    }

    fn is_available(&self, side: Side, id: &ElementId) -> bool {
        self.population(side).iter().any(|(e, free)| e == id && *free)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Percept {
    pub id: ElementId,
    pub score: f64,
    #[serde(skip)]
    pub(crate) slot: usize,
}

/// Aggregated score per available opposite, ordered by opposite id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerceptTable {
    pub measures: Vec<MeasureId>,
    pub aggregation: Option<AggregationFn>,
    pub entries: Vec<Percept>,
}

impl PerceptTable {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &ElementId) -> Option<f64> {
        self.entries.iter().find(|p| &p.id == id).map(|p| p.score)
    }

    /// Highest score; ties go to the lowest id.
    pub fn best(&self) -> Option<&Percept> {
        self.entries.iter().fold(None, |best: Option<&Percept>, p| match best {
            Some(b) if b.score >= p.score => Some(b),
            _ => Some(p),
        })
    }

    /// Builds a table from explicit scores; entries are sorted by id.
    pub fn from_scores(scores: impl IntoIterator<Item = (ElementId, f64)>) -> Self {
        let mut entries: Vec<Percept> =
            scores.into_iter().enumerate().map(|(slot, (id, score))| Percept { id, score, slot }).collect();
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        PerceptTable { measures: Vec::new(), aggregation: None, entries }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "partner", rename_all = "snake_case")]
pub enum Decision {
    SelectCandidate(ElementId),
    KeepCandidate,
    ResetBeliefs,
    ConfirmConsensus(ElementId),
    NoOp,
}

/// Scores every available opposite under a freshly drawn measure subset and
/// aggregation function, and refreshes the agent's inbound nominations.
///
/// A candidate that has been matched elsewhere is dropped.
pub fn perceive(
    agent: &mut AgentState,
    env: &Environment<'_>,
    rng: &mut RngStream,
    cfg: &SimulationConfig,
) -> PerceptTable {
    agent.phase = Phase::Perceiving;
    let side = agent.side();
    let opposite = side.opposite();
    if let Some(c) = &agent.candidate {
        if !env.is_available(opposite, c) {
            agent.clear_belief();
        }
    }
    agent.inbound_nominations =
        env.board.nominators_of(side, agent.id()).filter(|from| env.is_available(opposite, from)).cloned().collect();

    let available: Vec<(usize, &ElementId)> = env
        .population(opposite)
        .iter()
        .enumerate()
        .filter(|(_, (_, free))| *free)
        .map(|(slot, (id, _))| (slot, id))
        .collect();
    if available.is_empty() {
        return PerceptTable { measures: Vec::new(), aggregation: None, entries: Vec::new() };
    }

    let measures = kernel::draw_measures(rng, &cfg.measure_pool, cfg.measures_per_tick)
        .expect("measures_per_tick validated against the pool");
    let aggregation = kernel::draw_aggregation(rng, measures.len());
    let mut scores = Vec::with_capacity(measures.len());
    let mut entries: Vec<Percept> = available
        .into_iter()
        .map(|(slot, id)| {
            scores.clear();
            scores.extend(measures.iter().map(|&m| env.table.get(m, side, agent.slot, slot)));
            let score = kernel::aggregate(&aggregation, &scores).expect("weights drawn for this arity");
            Percept { id: id.clone(), score, slot }
        })
        .collect();
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    PerceptTable { measures, aggregation: Some(aggregation), entries }
}

pub fn decide(agent: &AgentState, percepts: &PerceptTable, rng: &mut RngStream, cfg: &SimulationConfig) -> Decision {
    deliberate(agent, percepts, rng, cfg).0
}

/// [`decide`], also reporting the threshold drawn for the tick.
pub(crate) fn deliberate(
    agent: &AgentState,
    percepts: &PerceptTable,
    rng: &mut RngStream,
    cfg: &SimulationConfig,
) -> (Decision, Option<f64>) {
    debug_assert_ne!(agent.status, AgentStatus::Matched);
    if agent.patience_left == 0 {
        return (Decision::ResetBeliefs, None);
    }
    let threshold = kernel::draw_threshold(rng, cfg.threshold_interval);
    let best = match percepts.best() {
        Some(best) if best.score >= threshold => best,
        _ => return (Decision::NoOp, Some(threshold)),
    };
    let decision = if agent.candidate.as_ref() == Some(&best.id) {
        let streak = agent.candidate_streak + 1;
        if streak >= cfg.convergence_streak && agent.inbound_nominations.contains(&best.id) {
            Decision::ConfirmConsensus(best.id.clone())
        } else {
            Decision::KeepCandidate
        }
    } else {
        Decision::SelectCandidate(best.id.clone())
    };
    (decision, Some(threshold))
}

/// Applies a decision and publishes the agent's belief to the board.
pub fn act(agent: &mut AgentState, decision: &Decision, board: &mut MatchBoard, cfg: &SimulationConfig) {
    agent.phase = Phase::Acting;
    let side = agent.side();
    agent.status = AgentStatus::Searching;
    match decision {
        Decision::SelectCandidate(id) => {
            agent.candidate = Some(id.clone());
            agent.candidate_streak = 1;
            agent.patience_left = cfg.patience;
        }
        Decision::KeepCandidate => {
            agent.candidate_streak += 1;
            agent.patience_left = agent.patience_left.saturating_sub(1);
        }
        Decision::ConfirmConsensus(id) => {
            debug_assert_eq!(agent.candidate.as_ref(), Some(id));
            agent.candidate_streak += 1;
            agent.patience_left = agent.patience_left.saturating_sub(1);
            agent.status = AgentStatus::Committed;
            board.confirm(side, agent.id(), id);
        }
        Decision::ResetBeliefs => {
            agent.clear_belief();
            agent.patience_left = cfg.patience;
        }
        Decision::NoOp => {
            agent.patience_left = agent.patience_left.saturating_sub(1);
        }
    }
    if let Some(c) = &agent.candidate {
        board.nominate(side, &agent.element.id, c);
    }
}
