//! Meta-simulations: many seeded runs of the same scenario, folded into
//! per-pair occurrence frequencies and a final 1:1 matching.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{ScoreTable, Simulation, SimulationConfig, SimulationResult};
use crate::error::ConfigError;
use crate::kernel::{derive_seed, RngStream};
use crate::schema::{Correspondence, ElementId, Scenario};

#[derive(Clone, Debug, PartialEq)]
pub struct MetaConfig {
    pub n_simulations: u32,
    /// Minimum occurrence frequency for a pair to enter the final matching.
    pub frequency_cutoff: f64,
    pub base: SimulationConfig,
    pub seed: u64,
    /// Worker threads for the runs; `None` uses the global rayon pool. Never
    /// affects the report.
    pub workers: Option<usize>,
}

impl Default for MetaConfig {
    fn default() -> Self {
        MetaConfig {
            n_simulations: 10,
            frequency_cutoff: 0.5,
            base: SimulationConfig::default(),
            seed: 0,
            workers: None,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_simulations == 0 {
            return Err(ConfigError::OutOfRange {
                name: "n_simulations",
                value: "0".into(),
                reason: "must be at least 1",
            });
        }
        if !(self.frequency_cutoff > 0.0 && self.frequency_cutoff <= 1.0) {
            return Err(ConfigError::OutOfRange {
                name: "frequency_cutoff",
                value: self.frequency_cutoff.to_string(),
                reason: "must lie in (0, 1]",
            });
        }
        if self.workers == Some(0) {
            return Err(ConfigError::OutOfRange { name: "workers", value: "0".into(), reason: "must be at least 1" });
        }
        self.base.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStatistic {
    pub source_id: ElementId,
    pub target_id: ElementId,
    pub occurrences: u32,
    pub frequency: f64,
    pub mean_score: f64,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaReport {
    pub scenario: String,
    pub seed: u64,
    pub n_simulations: u32,
    pub frequency_cutoff: f64,
    /// Every pair matched in at least one run, ordered by (source, target).
    pub pairs: Vec<PairStatistic>,
    pub final_matching: Vec<Correspondence>,
    pub runs: Vec<SimulationResult>,
}

impl MetaReport {
    pub fn per_pair_frequency(&self) -> BTreeMap<Correspondence, f64> {
        self.pairs.iter().map(|p| (Correspondence(p.source_id.clone(), p.target_id.clone()), p.frequency)).collect()
    }

    pub fn per_pair_mean_score(&self) -> BTreeMap<Correspondence, f64> {
        self.pairs.iter().map(|p| (Correspondence(p.source_id.clone(), p.target_id.clone()), p.mean_score)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Frequency table with columns
    /// `source_id,target_id,frequency,mean_score,selected`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["source_id", "target_id", "frequency", "mean_score", "selected"]).expect("in-memory write");
        for p in &self.pairs {
            w.write_record([
                p.source_id.to_string(),
                p.target_id.to_string(),
                p.frequency.to_string(),
                p.mean_score.to_string(),
                u8::from(p.selected).to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Runs `cfg.n_simulations` simulations on streams `0..n` of `cfg.seed` and
/// folds them into a report.
pub fn run_meta(scenario: &Scenario, cfg: &MetaConfig) -> Result<MetaReport, ConfigError> {
    cfg.validate()?;
    let table = Arc::new(ScoreTable::new(scenario));
    let run = |stream: u32| {
        Simulation::with_table(
            scenario,
            Arc::clone(&table),
            cfg.base.clone(),
            RngStream::new(cfg.seed, u64::from(stream)),
        )
        .expect("config validated")
        .run()
    };
    let runs: Vec<SimulationResult> = match cfg.workers {
        Some(1) => (0..cfg.n_simulations).map(run).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| (0..cfg.n_simulations).into_par_iter().map(run).collect()),
            Err(_) => (0..cfg.n_simulations).map(run).collect(),
        },
        None => (0..cfg.n_simulations).into_par_iter().map(run).collect(),
    };
    let (freqs, means, counts) = tally(&runs);
    let final_matching = select_final(&freqs, &means, cfg.frequency_cutoff);
    let chosen: BTreeSet<&Correspondence> = final_matching.iter().collect();
    let pairs = freqs
        .iter()
        .map(|(pair, &frequency)| PairStatistic {
            source_id: pair.0.clone(),
            target_id: pair.1.clone(),
            occurrences: counts[pair],
            frequency,
            mean_score: means[pair],
            selected: chosen.contains(pair),
        })
        .collect();
    Ok(MetaReport {
        scenario: scenario.name.clone(),
        seed: cfg.seed,
        n_simulations: cfg.n_simulations,
        frequency_cutoff: cfg.frequency_cutoff,
        pairs,
        final_matching,
        runs,
    })
}

type Tally = (BTreeMap<Correspondence, f64>, BTreeMap<Correspondence, f64>, BTreeMap<Correspondence, u32>);

/// Occurrence frequency and mean per-run score of every matched pair,
/// accumulated in run order.
fn tally(runs: &[SimulationResult]) -> Tally {
    let mut acc: BTreeMap<Correspondence, (u32, f64)> = BTreeMap::new();
    for run in runs {
        for p in &run.matched_pairs {
            let e = acc.entry(p.correspondence()).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += p.mean_score;
        }
    }
    let n = runs.len() as f64;
    let freqs = acc.iter().map(|(k, (c, _))| (k.clone(), f64::from(*c) / n)).collect();
    let means = acc.iter().map(|(k, (c, s))| (k.clone(), s / f64::from(*c))).collect();
    let counts = acc.into_iter().map(|(k, (c, _))| (k, c)).collect();
    (freqs, means, counts)
}

/// Keeps pairs at or above `cutoff`, then resolves conflicts greedily in
/// order of (frequency desc, mean score desc, source asc, target asc).
/// The result is 1:1 and sorted.
pub fn select_final(
    freqs: &BTreeMap<Correspondence, f64>,
    mean_scores: &BTreeMap<Correspondence, f64>,
    cutoff: f64,
) -> Vec<Correspondence> {
    let mean = |p: &Correspondence| mean_scores.get(p).copied().unwrap_or(0.0);
    let mut candidates: Vec<(&Correspondence, f64)> =
        freqs.iter().filter(|(_, f)| **f >= cutoff).map(|(p, f)| (p, *f)).collect();
    candidates.sort_by(|(pa, fa), (pb, fb)| {
        fb.total_cmp(fa).then_with(|| mean(pb).total_cmp(&mean(pa))).then_with(|| pa.cmp(pb))
    });
    let mut used_s = BTreeSet::new();
    let mut used_t = BTreeSet::new();
    let mut out: Vec<Correspondence> = candidates
        .into_iter()
        .filter(|(p, _)| {
            if used_s.contains(p.source()) || used_t.contains(p.target()) {
                return false;
            }
            used_s.insert(p.source().clone());
            used_t.insert(p.target().clone());
            true
        })
        .map(|(p, _)| p.clone())
        .collect();
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCount {
    pub source_id: ElementId,
    pub target_id: ElementId,
    pub count: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatedMeta {
    pub reports: Vec<MetaReport>,
    /// Per pair, how many final matchings contained it.
    pub repeatability: Vec<PairCount>,
}

/// Runs `repetitions` meta-simulations; repetition `r` uses the root seed
/// `derive_seed(cfg.seed, r)`.
pub fn repeat_meta(scenario: &Scenario, cfg: &MetaConfig, repetitions: u32) -> Result<RepeatedMeta, ConfigError> {
    if repetitions == 0 {
        return Err(ConfigError::OutOfRange { name: "repetitions", value: "0".into(), reason: "must be at least 1" });
    }
    let reports = (0..repetitions)
        .map(|r| {
            let cfg = MetaConfig { seed: derive_seed(cfg.seed, u64::from(r)), ..cfg.clone() };
            run_meta(scenario, &cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut counts: BTreeMap<&Correspondence, u32> = BTreeMap::new();
    for report in &reports {
        for pair in &report.final_matching {
            *counts.entry(pair).or_default() += 1;
        }
    }
    let repeatability = counts
        .into_iter()
        .map(|(p, count)| PairCount { source_id: p.0.clone(), target_id: p.1.clone(), count })
        .collect();
    Ok(RepeatedMeta { reports, repeatability })
}
