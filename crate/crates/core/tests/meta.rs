use std::collections::BTreeMap;

use proptest::prelude::*;
use reflex_sm::{
    builtin_fixture, repeat_meta, run_meta, score_matching, sweep_sims, Correspondence, ElementId, HeterogeneityBand,
    MetaConfig, MetaReport, Scenario, Schema, Side, SimulationConfig,
};

/// Counts pair occurrences straight from the retained runs.
fn recount(report: &MetaReport) -> BTreeMap<Correspondence, f64> {
    let mut counts: BTreeMap<Correspondence, u32> = BTreeMap::new();
    for run in &report.runs {
        for p in &run.matched_pairs {
            *counts.entry(Correspondence(p.source.clone(), p.target.clone())).or_default() += 1;
        }
    }
    counts.into_iter().map(|(k, c)| (k, f64::from(c) / f64::from(report.n_simulations))).collect()
}

fn per_source_mass(report: &MetaReport) -> BTreeMap<ElementId, f64> {
    let mut mass: BTreeMap<ElementId, f64> = BTreeMap::new();
    for (pair, f) in report.per_pair_frequency() {
        *mass.entry(pair.0).or_default() += f;
    }
    mass
}

#[test]
fn frequencies_equal_brute_force_recount() {
    for name in ["person", "order", "travel"] {
        let sc = builtin_fixture(name).unwrap();
        let report = run_meta(&sc, &MetaConfig { seed: 5, ..MetaConfig::default() }).unwrap();
        assert_eq!(report.runs.len(), 10);
        assert_eq!(report.per_pair_frequency(), recount(&report));
        assert!(per_source_mass(&report).values().all(|m| *m <= 1.0 + 1e-12));
    }
}

#[test]
fn person_meta_finds_all_six() {
    let person = builtin_fixture("person").unwrap();
    let report = run_meta(&person, &MetaConfig { seed: 7, ..MetaConfig::default() }).unwrap();
    let eval = score_matching(&person.name, &report.final_matching, &person.expected);
    assert_eq!((eval.correct_found, eval.matchings_to_find, eval.spurious_found), (6, 6, 0));
}

#[test]
fn person_is_complete_in_every_repetition() {
    let person = builtin_fixture("person").unwrap();
    let rep = repeat_meta(&person, &MetaConfig { seed: 7, ..MetaConfig::default() }, 3).unwrap();
    assert_eq!(rep.reports.len(), 3);
    for r in &rep.reports {
        let found: Vec<_> = r.final_matching.clone();
        let expected: Vec<_> = person.expected.pairs().iter().cloned().collect();
        assert_eq!(found, expected);
    }
    assert!(rep.repeatability.iter().all(|c| c.count == 3));
    let seeds: std::collections::BTreeSet<u64> = rep.reports.iter().map(|r| r.seed).collect();
    assert_eq!(seeds.len(), 3);
}

#[test]
fn fewer_simulations_do_not_help_on_order() {
    let order = builtin_fixture("order").unwrap();
    let points = sweep_sims(&order, &MetaConfig::default(), &[3, 10], 3).unwrap();
    assert!(points[0].mean_pct_correct <= points[1].mean_pct_correct);
}

#[test]
fn worker_count_does_not_change_the_report() {
    let order = builtin_fixture("order").unwrap();
    let one = run_meta(&order, &MetaConfig { workers: Some(1), ..MetaConfig::default() }).unwrap();
    let many = run_meta(&order, &MetaConfig { workers: Some(4), ..MetaConfig::default() }).unwrap();
    assert_eq!(one.to_json(), many.to_json());
}

const NAMES: [&str; 8] = ["firstName", "fname", "cityName", "city", "zipCode", "zip", "price", "itemPrice"];

fn small_scenario() -> impl Strategy<Value = Scenario> {
    (proptest::sample::subsequence(NAMES.to_vec(), 1..=4), proptest::sample::subsequence(NAMES.to_vec(), 1..=4))
        .prop_map(|(s, t)| {
            let source =
                Schema::new("s", Side::Source, s.iter().enumerate().map(|(i, n)| (format!("s{i}"), *n))).unwrap();
            let target =
                Schema::new("t", Side::Target, t.iter().enumerate().map(|(i, n)| (format!("t{i}"), *n))).unwrap();
            let k = s.len().min(t.len());
            let exp = (0..k).map(|i| Correspondence::new(format!("s{i}").as_str(), format!("t{i}").as_str()));
            Scenario::new("p", source, target, exp, HeterogeneityBand::Medium).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn report_invariants(sc in small_scenario(), seed in any::<u64>(), n in 1u32..6, cutoff in 0.05f64..=1.0) {
        let cfg = MetaConfig {
            n_simulations: n,
            frequency_cutoff: cutoff,
            base: SimulationConfig { max_ticks: 40, ..SimulationConfig::default() },
            seed,
            workers: Some(1),
        };
        let report = run_meta(&sc, &cfg).unwrap();
        prop_assert_eq!(report.per_pair_frequency(), recount(&report));
        for m in per_source_mass(&report).values() {
            prop_assert!(*m <= 1.0 + 1e-12);
        }
        let freq = report.per_pair_frequency();
        let mut targets = std::collections::BTreeSet::new();
        for pair in &report.final_matching {
            prop_assert!(freq[pair] >= cutoff);
            prop_assert!(targets.insert(pair.1.clone()));
        }
        for p in &report.pairs {
            let k = p.frequency * f64::from(n);
            prop_assert!((k - k.round()).abs() < 1e-9);
        }
    }
}
