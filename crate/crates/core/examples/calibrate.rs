//! Fixture calibration report.
//!
//! `cargo run --release -p reflex-sm-core --example calibrate -- <scenario.json | fixture>`
//!
//! Prints the heterogeneity index, per-pair single-run success rates, the
//! 3-vs-10 simulation sweep and how many seeds give a perfect reproduce table.

use std::collections::BTreeMap;

use reflex_sm::{
    builtin_fixture, heterogeneity_index, load_scenario, reproduce, run_simulation, sweep_sims, Correspondence,
    HeterogeneityBand, MetaConfig, RngStream, SimulationConfig,
};

fn main() {
    let arg = std::env::args().nth(1).expect("usage: calibrate <scenario.json | fixture>");
    let scenario = match builtin_fixture(&arg) {
        Some(s) => s,
        None => load_scenario(&arg).expect("scenario loads"),
    };
    let h = heterogeneity_index(&scenario);
    println!(
        "{}: heterogeneity {h:.3} ({:?}, declared {:?})",
        scenario.name,
        HeterogeneityBand::classify(h),
        scenario.band
    );

    let cfg = SimulationConfig::default();
    let runs = 400u64;
    let mut hits: BTreeMap<Correspondence, u32> = BTreeMap::new();
    let mut wrong: BTreeMap<Correspondence, u32> = BTreeMap::new();
    let mut ticks = 0u64;
    for stream in 0..runs {
        let r = run_simulation(&scenario, &cfg, RngStream::new(99, stream)).expect("valid config");
        ticks += u64::from(r.ticks_used);
        for p in &r.matched_pairs {
            let c = p.correspondence();
            if scenario.expected.contains(&c) {
                *hits.entry(c).or_default() += 1;
            } else {
                *wrong.entry(c).or_default() += 1;
            }
        }
    }
    println!("mean ticks {:.1}", ticks as f64 / runs as f64);
    for pair in scenario.expected.pairs().iter() {
        let n = hits.get(pair).copied().unwrap_or(0);
        println!(
            "  {:<24} {:<24} {:.3}",
            name_of(&scenario, pair, true),
            name_of(&scenario, pair, false),
            f64::from(n) / runs as f64
        );
    }
    let mut wrong: Vec<_> = wrong.into_iter().collect();
    wrong.sort_by_key(|e| std::cmp::Reverse(e.1));
    for (pair, n) in wrong.iter().take(8) {
        println!(
            "  wrong {:<18} {:<18} {:.3}",
            name_of(&scenario, pair, true),
            name_of(&scenario, pair, false),
            f64::from(*n) / runs as f64
        );
    }

    let meta = MetaConfig::default();
    let sweep = sweep_sims(&scenario, &meta, &[3, 10], 30).expect("valid config");
    for p in &sweep {
        println!("sweep sims={:<3} mean {:.2}%", p.sims, p.mean_pct_correct * 100.0);
    }
    let mut perfect = Vec::new();
    for seed in 0..20u64 {
        let table = reproduce(std::slice::from_ref(&scenario), &MetaConfig { seed, ..meta.clone() }, 3).expect("valid");
        if table.rows.iter().all(|r| r.pct_correct == 1.0) {
            perfect.push(seed);
        }
    }
    println!("perfect reproduce seeds (of 0..20): {} {:?}", perfect.len(), perfect);
}

fn name_of(s: &reflex_sm::Scenario, pair: &Correspondence, source: bool) -> String {
    let (schema, id) = if source { (&s.source, pair.source()) } else { (&s.target, pair.target()) };
    schema.elements().iter().find(|e| &e.id == id).map(|e| e.name.clone()).unwrap_or_default()
}
