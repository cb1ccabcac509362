//! A single simulation run.
//!
//! Ticks are synchronous rounds: every unmatched agent perceives the board as
//! it stood at the end of the previous tick, then every agent decides, then
//! every agent acts, and finally mutual confirmations are turned into
//! matches. Each agent draws from its own sub-stream keyed by
//! `(seed, stream_id, side/id, tick)`, so the outcome does not depend on the
//! order agents are visited in.

mod agent;
mod board;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use agent::{act, decide, perceive, AgentState, AgentStatus, Decision, Environment, Percept, PerceptTable, Phase};
pub use board::MatchBoard;

use crate::error::ConfigError;
use crate::kernel::{AggregationFn, RngStream, ThresholdInterval};
use crate::schema::{Correspondence, ElementId, Scenario, Side};
use crate::similarity::{self, MeasureId, TokenizedName};

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub threshold_interval: ThresholdInterval,
    pub measures_per_tick: usize,
    /// Consecutive selections of the same candidate before an agent may confirm.
    pub convergence_streak: u32,
    /// Ticks an agent holds a belief without consensus before resetting it.
    pub patience: u32,
    pub max_ticks: u32,
    pub measure_pool: Vec<MeasureId>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            threshold_interval: ThresholdInterval::default(),
            measures_per_tick: 3,
            convergence_streak: 3,
            patience: 10,
            max_ticks: 500,
            measure_pool: MeasureId::ALL.to_vec(),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        ThresholdInterval::new(self.threshold_interval.lo(), self.threshold_interval.hi())?;
        let mut pool = self.measure_pool.clone();
        pool.sort();
        pool.dedup();
        if pool.is_empty() || pool.len() != self.measure_pool.len() {
            return Err(ConfigError::OutOfRange {
                name: "measure_pool",
                value: format!("{:?}", self.measure_pool),
                reason: "must list at least one measure, without repeats",
            });
        }
        if self.measures_per_tick == 0 || self.measures_per_tick > pool.len() {
            return Err(ConfigError::OutOfRange {
                name: "measures_per_tick",
                value: self.measures_per_tick.to_string(),
                reason: "must be between 1 and the pool size",
            });
        }
        if self.convergence_streak == 0 {
            return Err(ConfigError::OutOfRange {
                name: "convergence_streak",
                value: "0".into(),
                reason: "must be at least 1",
            });
        }
        if self.convergence_streak > self.patience {
            return Err(ConfigError::OutOfRange {
                name: "patience",
                value: self.patience.to_string(),
                reason: "must be at least convergence_streak",
            });
        }
        if self.max_ticks == 0 {
            return Err(ConfigError::OutOfRange { name: "max_ticks", value: "0".into(), reason: "must be at least 1" });
        }
        Ok(())
    }
}

/// Every measure score between every source and target, computed once per
/// scenario. Scores are stored per perceiving side because Monge-Elkan is
/// asymmetric.
#[derive(Clone, Debug)]
pub struct ScoreTable {
    n_source: usize,
    n_target: usize,
    // [measure][side][perceiver slot][perceived slot]
    scores: Vec<f64>,
}

impl ScoreTable {
    pub fn new(scenario: &Scenario) -> Self {
        let names = |side: Side| -> Vec<TokenizedName> {
            scenario.schema(side).elements().iter().map(|e| similarity::normalize(&e.name)).collect()
        };
        let (src, tgt) = (names(Side::Source), names(Side::Target));
        let (ns, nt) = (src.len(), tgt.len());
        let mut scores = Vec::with_capacity(MeasureId::ALL.len() * 2 * ns * nt);
        for m in MeasureId::ALL {
            for s in &src {
                for t in &tgt {
                    scores.push(similarity::score(m, s, t));
                }
            }
            for t in &tgt {
                for s in &src {
                    scores.push(similarity::score(m, t, s));
                }
            }
        }
        ScoreTable { n_source: ns, n_target: nt, scores }
    }

    /// Score of `measure` as seen by the agent at `from_slot` on `side`
    /// looking at the opposite element at `to_slot`.
    pub fn get(&self, measure: MeasureId, side: Side, from_slot: usize, to_slot: usize) -> f64 {
        let block = self.n_source * self.n_target;
        let m = MeasureId::ALL.iter().position(|x| *x == measure).expect("known measure");
        let base = m * 2 * block;
        match side {
            Side::Source => self.scores[base + from_slot * self.n_target + to_slot],
            Side::Target => self.scores[base + block + from_slot * self.n_source + to_slot],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub source: ElementId,
    pub target: ElementId,
    /// Mean of every aggregated score either agent perceived for the other.
    pub mean_score: f64,
    pub tick: u32,
}

impl MatchedPair {
    pub fn correspondence(&self) -> Correspondence {
        Correspondence(self.source.clone(), self.target.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub seed: u64,
    pub stream_id: u64,
    pub ticks_used: u32,
    /// Sorted by source id.
    pub matched_pairs: Vec<MatchedPair>,
    pub unmatched_source: Vec<ElementId>,
    pub unmatched_target: Vec<ElementId>,
}

/// One line of the per-tick trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceRecord {
    Decision {
        tick: u32,
        side: Side,
        agent: ElementId,
        #[serde(flatten)]
        decision: Decision,
        threshold: Option<f64>,
        measures: Vec<MeasureId>,
        aggregation: Option<AggregationFn>,
        scores: Vec<(ElementId, f64)>,
    },
    Consensus {
        tick: u32,
        source: ElementId,
        target: ElementId,
    },
}

/// A simulation that can be advanced one tick at a time.
pub struct Simulation {
    cfg: SimulationConfig,
    root: RngStream,
    table: Arc<ScoreTable>,
    sources: Vec<AgentState>,
    targets: Vec<AgentState>,
    source_pool: Vec<(ElementId, bool)>,
    target_pool: Vec<(ElementId, bool)>,
    board: MatchBoard,
    tick: u32,
    // (sum, count) per source slot * n_target + target slot
    pair_scores: Vec<(f64, u32)>,
    matched: BTreeMap<ElementId, (ElementId, u32)>,
    trace: Option<Vec<TraceRecord>>,
}

impl Simulation {
    pub fn new(scenario: &Scenario, cfg: SimulationConfig, rng: RngStream) -> Result<Self, ConfigError> {
        Self::with_table(scenario, Arc::new(ScoreTable::new(scenario)), cfg, rng)
    }

    /// Reuses a score table built for `scenario`.
    pub fn with_table(
        scenario: &Scenario,
        table: Arc<ScoreTable>,
        cfg: SimulationConfig,
        rng: RngStream,
    ) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let agents = |side: Side| -> Vec<AgentState> {
            scenario
                .schema(side)
                .elements()
                .iter()
                .enumerate()
                .map(|(slot, e)| AgentState::new(e.clone(), slot, &cfg))
                .collect()
        };
        let pool = |agents: &[AgentState]| agents.iter().map(|a| (a.id().clone(), true)).collect();
        let sources = agents(Side::Source);
        let targets = agents(Side::Target);
        Ok(Simulation {
            source_pool: pool(&sources),
            target_pool: pool(&targets),
            pair_scores: vec![(0.0, 0); sources.len() * targets.len()],
            sources,
            targets,
            cfg,
            root: rng,
            table,
            board: MatchBoard::new(),
            tick: 0,
            matched: BTreeMap::new(),
            trace: None,
        })
    }

    /// Records a [`TraceRecord`] for every decision and consensus.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    pub fn agents(&self, side: Side) -> &[AgentState] {
        match side {
            Side::Source => &self.sources,
            Side::Target => &self.targets,
        }
    }

    pub fn board(&self) -> &MatchBoard {
        &self.board
    }

    /// Matches so far as `source -> target`.
    pub fn matches(&self) -> &BTreeMap<ElementId, ElementId> {
        self.board.matches()
    }

    pub fn is_finished(&self) -> bool {
        self.tick >= self.cfg.max_ticks
            || !self.source_pool.iter().any(|(_, free)| *free)
            || !self.target_pool.iter().any(|(_, free)| *free)
    }

    /// Runs one synchronous round and returns the pairs matched in it.
    pub fn step(&mut self) -> Vec<Correspondence> {
        self.tick += 1;
        let tick = self.tick;
        let n_target = self.targets.len();
        let Simulation {
            cfg,
            root,
            table,
            sources,
            targets,
            source_pool,
            target_pool,
            board,
            pair_scores,
            matched,
            trace,
            ..
        } = &mut *self;

        let mut plans: Vec<(Side, usize, Decision)> = Vec::new();
        {
            let env = Environment { table, board: &*board, sources: &source_pool[..], targets: &target_pool[..] };
            for (side, agents) in [(Side::Source, &mut *sources), (Side::Target, &mut *targets)] {
                for agent in agents.iter_mut().filter(|a| a.status != AgentStatus::Matched) {
                    let mut rng = root.fork(&format!("{side}/{}", agent.id()), u64::from(tick));
                    let percepts = perceive(agent, &env, &mut rng, cfg);
                    for p in &percepts.entries {
                        let idx = match side {
                            Side::Source => agent.slot * n_target + p.slot,
                            Side::Target => p.slot * n_target + agent.slot,
                        };
                        pair_scores[idx].0 += p.score;
                        pair_scores[idx].1 += 1;
                    }
                    agent.phase = Phase::Deciding;
                    let (decision, threshold) = agent::deliberate(agent, &percepts, &mut rng, cfg);
                    if let Some(trace) = trace.as_mut() {
                        trace.push(TraceRecord::Decision {
                            tick,
                            side,
                            agent: agent.id().clone(),
                            decision: decision.clone(),
                            threshold,
                            measures: percepts.measures.clone(),
                            aggregation: percepts.aggregation.clone(),
                            scores: percepts.entries.iter().map(|p| (p.id.clone(), p.score)).collect(),
                        });
                    }
                    plans.push((side, agent.slot, decision));
                }
            }
        }

        board.clear_round();
        for (side, slot, decision) in &plans {
            let agent = match side {
                Side::Source => &mut sources[*slot],
                Side::Target => &mut targets[*slot],
            };
            act(agent, decision, board, cfg);
        }

        let pairs = board.detect_consensus();
        for pair in &pairs {
            for (agents, pool, id, partner) in [
                (&mut *sources, &mut *source_pool, pair.source(), pair.target()),
                (&mut *targets, &mut *target_pool, pair.target(), pair.source()),
            ] {
                let slot = pool.iter().position(|(e, _)| e == id).expect("matched agent exists");
                pool[slot].1 = false;
                let agent = &mut agents[slot];
                agent.status = AgentStatus::Matched;
                agent.candidate = Some(partner.clone());
            }
            matched.insert(pair.source().clone(), (pair.target().clone(), tick));
            if let Some(trace) = trace.as_mut() {
                trace.push(TraceRecord::Consensus {
                    tick,
                    source: pair.source().clone(),
                    target: pair.target().clone(),
                });
            }
        }
        pairs
    }

    pub fn run(mut self) -> SimulationResult {
        while !self.is_finished() {
            self.step();
        }
        self.into_result()
    }

    pub fn into_result(self) -> SimulationResult {
        let n_target = self.targets.len();
        let slot = |pool: &[(ElementId, bool)], id: &ElementId| pool.iter().position(|(e, _)| e == id).unwrap();
        let matched_pairs = self
            .matched
            .iter()
            .map(|(s, (t, tick))| {
                let (sum, count) = self.pair_scores[slot(&self.source_pool, s) * n_target + slot(&self.target_pool, t)];
                MatchedPair {
                    source: s.clone(),
                    target: t.clone(),
                    mean_score: if count == 0 { 0.0 } else { sum / f64::from(count) },
                    tick: *tick,
                }
            })
            .collect();
        let leftovers = |pool: &[(ElementId, bool)]| {
            let mut ids: Vec<ElementId> = pool.iter().filter(|(_, free)| *free).map(|(e, _)| e.clone()).collect();
            ids.sort();
            ids
        };
        SimulationResult {
            seed: self.root.seed(),
            stream_id: self.root.stream_id(),
            ticks_used: self.tick,
            matched_pairs,
            unmatched_source: leftovers(&self.source_pool),
            unmatched_target: leftovers(&self.target_pool),
        }
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        self.trace.take().unwrap_or_default()
    }
}

/// Runs one seeded simulation to completion.
pub fn run_simulation(
    scenario: &Scenario,
    cfg: &SimulationConfig,
    rng: RngStream,
) -> Result<SimulationResult, ConfigError> {
    Ok(Simulation::new(scenario, cfg.clone(), rng)?.run())
}

/// [`run_simulation`] plus the full decision trace.
pub fn run_simulation_traced(
    scenario: &Scenario,
    cfg: &SimulationConfig,
    rng: RngStream,
) -> Result<(SimulationResult, Vec<TraceRecord>), ConfigError> {
    let mut sim = Simulation::new(scenario, cfg.clone(), rng)?;
    sim.enable_trace();
    while !sim.is_finished() {
        sim.step();
    }
    let trace = sim.take_trace();
    Ok((sim.into_result(), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{HeterogeneityBand, Schema};

    fn scenario(src: &[&str], tgt: &[&str], expected: &[(usize, usize)]) -> Scenario {
        let source =
            Schema::new("s", Side::Source, src.iter().enumerate().map(|(i, n)| (format!("s{i}"), *n))).unwrap();
        let target =
            Schema::new("t", Side::Target, tgt.iter().enumerate().map(|(i, n)| (format!("t{i}"), *n))).unwrap();
        let pairs =
            expected.iter().map(|(s, t)| Correspondence::new(format!("s{s}").as_str(), format!("t{t}").as_str()));
        Scenario::new("test", source, target, pairs, HeterogeneityBand::Low).unwrap()
    }

    #[test]
    fn config_validation() {
        let ok = SimulationConfig::default();
        assert!(ok.validate().is_ok());
        let bad = [
            SimulationConfig { measures_per_tick: 0, ..ok.clone() },
            SimulationConfig { measures_per_tick: 6, ..ok.clone() },
            SimulationConfig { convergence_streak: 11, ..ok.clone() },
            SimulationConfig { max_ticks: 0, ..ok.clone() },
            SimulationConfig { measure_pool: vec![], measures_per_tick: 1, ..ok.clone() },
            SimulationConfig {
                measure_pool: vec![MeasureId::JaroWinkler, MeasureId::JaroWinkler],
                measures_per_tick: 1,
                ..ok.clone()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn score_table_matches_direct_scoring() {
        let sc = scenario(&["firstName", "zip"], &["fname", "zipCode", "town"], &[]);
        let table = ScoreTable::new(&sc);
        for m in MeasureId::ALL {
            for (i, s) in sc.source.elements().iter().enumerate() {
                for (j, t) in sc.target.elements().iter().enumerate() {
                    assert_eq!(table.get(m, Side::Source, i, j), similarity::score_names(m, &s.name, &t.name));
                    assert_eq!(table.get(m, Side::Target, j, i), similarity::score_names(m, &t.name, &s.name));
                }
            }
        }
    }

    #[test]
    fn identical_names_all_match() {
        let names = ["customerId", "orderDate", "totalAmount", "shipCity"];
        let sc = scenario(&names, &names, &[(0, 0), (1, 1), (2, 2), (3, 3)]);
        let r = run_simulation(&sc, &SimulationConfig::default(), RngStream::new(5, 0)).unwrap();
        let found: Vec<_> = r.matched_pairs.iter().map(|p| (p.source.to_string(), p.target.to_string())).collect();
        assert_eq!(
            found,
            vec![
                ("s0".into(), "t0".into()),
                ("s1".into(), "t1".into()),
                ("s2".into(), "t2".into()),
                ("s3".into(), "t3".into())
            ]
        );
        assert!(r.unmatched_source.is_empty() && r.unmatched_target.is_empty());
        assert!(r.matched_pairs.iter().all(|p| p.mean_score == 1.0));
    }

    #[test]
    fn stops_when_one_side_is_exhausted() {
        let sc = scenario(&["price"], &["price", "quantity", "weight"], &[(0, 0)]);
        let r = run_simulation(&sc, &SimulationConfig::default(), RngStream::new(1, 0)).unwrap();
        assert_eq!(r.matched_pairs.len(), 1);
        assert_eq!(r.unmatched_target.len(), 2);
        assert!(r.ticks_used < 500);
    }

    #[test]
    fn hopeless_pairs_run_to_max_ticks() {
        let sc = scenario(&["abc"], &["xyz"], &[]);
        let cfg = SimulationConfig { max_ticks: 40, ..SimulationConfig::default() };
        let r = run_simulation(&sc, &cfg, RngStream::new(1, 0)).unwrap();
        assert_eq!(r.ticks_used, 40);
        assert!(r.matched_pairs.is_empty());
        assert_eq!(r.unmatched_source, vec![ElementId::new("s0")]);
    }

    #[test]
    fn trace_is_line_serializable() {
        let sc = scenario(&["price"], &["price"], &[(0, 0)]);
        let (r, trace) = run_simulation_traced(&sc, &SimulationConfig::default(), RngStream::new(2, 0)).unwrap();
        assert_eq!(r.matched_pairs.len(), 1);
        let last = serde_json::to_string(trace.last().unwrap()).unwrap();
        assert!(last.contains("\"event\":\"consensus\""), "{last}");
        let first = serde_json::to_string(&trace[0]).unwrap();
        assert!(first.contains("\"decision\":\"select_candidate\""), "{first}");
    }
}
