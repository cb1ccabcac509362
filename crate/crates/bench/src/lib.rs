//! Synthetic inputs for the criterion benchmarks.

use reflex_sm::{Correspondence, HeterogeneityBand, Scenario, Schema, Side};

const STEMS: [&str; 12] = [
    "customer", "order", "address", "amount", "city", "date", "phone", "email", "status", "price", "quantity",
    "country",
];
const SUFFIXES: [&str; 4] = ["Id", "Name", "Code", "Value"];

/// A scenario of `n` elements per side where target names are lightly
/// perturbed copies of the source names.
pub fn synthetic_scenario(n: usize) -> Scenario {
    let name = |i: usize| format!("{}{}", STEMS[i % STEMS.len()], SUFFIXES[(i / STEMS.len()) % SUFFIXES.len()]);
    let src = Schema::new("bench source", Side::Source, (0..n).map(|i| (format!("s{i}"), name(i)))).expect("non-empty");
    let tgt = Schema::new(
        "bench target",
        Side::Target,
        (0..n).map(|i| (format!("t{i}"), format!("{}_{}", name(i).to_lowercase(), i / (STEMS.len() * SUFFIXES.len())))),
    )
    .expect("non-empty");
    let expected = (0..n).map(|i| Correspondence::new(format!("s{i}").as_str(), format!("t{i}").as_str()));
    Scenario::new(format!("synthetic-{n}"), src, tgt, expected, HeterogeneityBand::Low).expect("valid")
}
