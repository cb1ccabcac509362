//! Scoring matchings against ground truth and rendering experiment tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::meta::{repeat_meta, MetaConfig};
use crate::schema::{Correspondence, GroundTruthMapping, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario_name: String,
    pub matchings_to_find: usize,
    pub correct_found: usize,
    /// Fraction of expected pairs found; equal to `recall`.
    pub pct_correct: f64,
    pub spurious_found: usize,
    /// Not part of the original protocol, which reported recall only.
    pub precision: f64,
    pub recall: f64,
}

impl EvalReport {
    pub fn percent_label(&self) -> String {
        percent(self.pct_correct)
    }
}

pub fn score_matching(scenario_name: &str, found: &[Correspondence], expected: &GroundTruthMapping) -> EvalReport {
    let found: BTreeSet<&Correspondence> = found.iter().collect();
    let correct = found.iter().filter(|p| expected.contains(p)).count();
    let spurious = found.len() - correct;
    let recall = if expected.is_empty() { 1.0 } else { correct as f64 / expected.len() as f64 };
    let precision = if found.is_empty() { 1.0 } else { correct as f64 / found.len() as f64 };
    EvalReport {
        scenario_name: scenario_name.to_owned(),
        matchings_to_find: expected.len(),
        correct_found: correct,
        pct_correct: recall,
        spurious_found: spurious,
        precision,
        recall,
    }
}

fn percent(fraction: f64) -> String {
    format!("{:.0}%", fraction * 100.0)
}

/// One row of the combined results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub scenario: String,
    pub meta_simulation: usize,
    pub matchings_to_find: usize,
    pub correct_found: usize,
    pub pct_correct: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub rows: Vec<TableRow>,
}

/// Orders results scenario-then-index, keeping scenarios in the order they
/// first appear.
pub fn experiment_table(results: &[(String, usize, EvalReport)]) -> ExperimentTable {
    let mut order: Vec<&str> = Vec::new();
    for (name, _, _) in results {
        if !order.contains(&name.as_str()) {
            order.push(name);
        }
    }
    let mut rows: Vec<TableRow> = results
        .iter()
        .map(|(name, idx, r)| TableRow {
            scenario: name.clone(),
            meta_simulation: *idx,
            matchings_to_find: r.matchings_to_find,
            correct_found: r.correct_found,
            pct_correct: r.pct_correct,
        })
        .collect();
    rows.sort_by_key(|r| (order.iter().position(|n| *n == r.scenario), r.meta_simulation));
    ExperimentTable { rows }
}

const HEADER: [&str; 5] = ["Scenario", "M.S.", "M. to F.", "C.M.F.", "% C.M.F."];

/// Reference results of the COMA matcher on the same three scenarios:
/// (scenario, matchings to find, correct found).
pub const COMA_REFERENCE: [(&str, usize, usize); 3] = [("Person", 6, 5), ("Order", 8, 6), ("Travel", 15, 13)];

impl ExperimentTable {
    pub fn render_text(&self) -> String {
        let cells: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.scenario.clone(),
                    r.meta_simulation.to_string(),
                    r.matchings_to_find.to_string(),
                    r.correct_found.to_string(),
                    percent(r.pct_correct),
                ]
            })
            .collect();
        render_aligned(&HEADER.map(String::from), &cells)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["scenario", "meta_simulation", "matchings_to_find", "correct_found", "pct_correct"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                r.meta_simulation.to_string(),
                r.matchings_to_find.to_string(),
                r.correct_found.to_string(),
                r.pct_correct.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r.deserialize().collect::<Result<Vec<TableRow>, _>>()?;
        Ok(ExperimentTable { rows })
    }

    /// Mean correct-found per scenario next to the COMA reference numbers.
    pub fn render_comparison(&self) -> String {
        let mut cells = Vec::new();
        for (name, to_find, coma) in COMA_REFERENCE {
            let rows: Vec<&TableRow> = self.rows.iter().filter(|r| r.scenario.eq_ignore_ascii_case(name)).collect();
            if rows.is_empty() {
                continue;
            }
            let mean_found = rows.iter().map(|r| r.correct_found as f64).sum::<f64>() / rows.len() as f64;
            let mean_pct = rows.iter().map(|r| r.pct_correct).sum::<f64>() / rows.len() as f64;
            let found = if mean_found.fract() == 0.0 { format!("{mean_found:.0}") } else { format!("{mean_found:.1}") };
            cells.push([
                name.to_owned(),
                to_find.to_string(),
                found,
                percent(mean_pct),
                coma.to_string(),
                percent(coma as f64 / to_find as f64),
            ]);
        }
        let header = ["Scenario", "M. to F.", "C.M.F.", "% C.M.F.", "COMA C.M.F.", "COMA %"].map(String::from);
        render_aligned(&header, &cells)
    }
}

fn render_aligned<const N: usize>(header: &[String; N], rows: &[[String; N]]) -> String {
    let mut widths = header.each_ref().map(|h| h.chars().count());
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String; N]| {
        let mut text = String::new();
        for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(text, "{c:<w$}");
            } else {
                let _ = write!(text, "  {c:>w$}");
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(header);
    for row in rows {
        line(row);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sims: u32,
    /// Mean fraction of expected pairs found, over the repetitions.
    pub mean_pct_correct: f64,
}

/// For each simulation count, runs `repetitions` meta-simulations and
/// averages the fraction of expected pairs found.
pub fn sweep_sims(
    scenario: &Scenario,
    cfg: &MetaConfig,
    sims_values: &[u32],
    repetitions: u32,
) -> Result<Vec<SweepPoint>, ConfigError> {
    if sims_values.is_empty() {
        return Err(ConfigError::OutOfRange {
            name: "sims_values",
            value: "[]".into(),
            reason: "needs at least one simulation count",
        });
    }
    sims_values
        .iter()
        .map(|&n| {
            let rep = repeat_meta(scenario, &MetaConfig { n_simulations: n, ..cfg.clone() }, repetitions)?;
            let total: f64 = rep
                .reports
                .iter()
                .map(|r| score_matching(&scenario.name, &r.final_matching, &scenario.expected).pct_correct)
                .sum();
            Ok(SweepPoint { sims: n, mean_pct_correct: total / rep.reports.len() as f64 })
        })
        .collect()
}

/// Two columns: `sims,mean_pct` with the mean in percent.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("sims,mean_pct\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.sims, p.mean_pct_correct * 100.0);
    }
    out
}

/// Runs `repetitions` meta-simulations on every scenario and collects the
/// combined results table.
pub fn reproduce(scenarios: &[Scenario], cfg: &MetaConfig, repetitions: u32) -> Result<ExperimentTable, ConfigError> {
    let mut results = Vec::new();
    for scenario in scenarios {
        let rep = repeat_meta(scenario, cfg, repetitions)?;
        for (i, report) in rep.reports.iter().enumerate() {
            let eval = score_matching(&scenario.name, &report.final_matching, &scenario.expected);
            results.push((scenario.name.clone(), i + 1, eval));
        }
    }
    Ok(experiment_table(&results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{HeterogeneityBand, Schema, Side};
    use proptest::prelude::*;

    fn six() -> Scenario {
        let src = Schema::new("s", Side::Source, (0..6).map(|i| (format!("s{i}"), format!("a{i}")))).unwrap();
        let tgt = Schema::new("t", Side::Target, (0..6).map(|i| (format!("t{i}"), format!("b{i}")))).unwrap();
        let exp = (0..6).map(|i| Correspondence::new(format!("s{i}").as_str(), format!("t{i}").as_str()));
        Scenario::new("Person", src, tgt, exp, HeterogeneityBand::Medium).unwrap()
    }

    fn pairs(v: &[(usize, usize)]) -> Vec<Correspondence> {
        v.iter().map(|(s, t)| Correspondence::new(format!("s{s}").as_str(), format!("t{t}").as_str())).collect()
    }

    #[test]
    fn perfect_match() {
        let sc = six();
        let found: Vec<_> = sc.expected.pairs().iter().cloned().collect();
        let r = score_matching("Person", &found, &sc.expected);
        assert_eq!((r.matchings_to_find, r.correct_found, r.percent_label()), (6, 6, "100%".to_owned()));
        assert_eq!(r.precision, 1.0);
    }

    #[test]
    fn five_of_six() {
        let sc = six();
        let r = score_matching("Person", &pairs(&[(0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (5, 0)]), &sc.expected);
        assert_eq!(r.correct_found, 5);
        assert_eq!(r.spurious_found, 1);
        assert_eq!(r.percent_label(), "83%");
        assert!((r.precision - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn nothing_found() {
        let r = score_matching("Person", &[], &six().expected);
        assert_eq!((r.correct_found, r.pct_correct, r.precision), (0, 0.0, 1.0));
    }

    fn full_table() -> ExperimentTable {
        let mut results = Vec::new();
        for (name, n) in [("Travel", 15), ("Person", 6), ("Order", 8)] {
            for i in [3, 1, 2] {
                let found = if name == "Order" && i == 2 { n - 1 } else { n };
                results.push((
                    name.to_owned(),
                    i,
                    EvalReport {
                        scenario_name: name.to_owned(),
                        matchings_to_find: n,
                        correct_found: found,
                        pct_correct: found as f64 / n as f64,
                        spurious_found: 0,
                        precision: 1.0,
                        recall: found as f64 / n as f64,
                    },
                ));
            }
        }
        experiment_table(&results)
    }

    #[test]
    fn table_shape_and_order() {
        let table = full_table();
        assert_eq!(table.rows.len(), 9);
        let keys: Vec<_> = table.rows.iter().map(|r| (r.scenario.as_str(), r.meta_simulation)).collect();
        assert_eq!(keys[..4], [("Travel", 1), ("Travel", 2), ("Travel", 3), ("Person", 1)]);
        let text = table.render_text();
        assert_eq!(text.lines().count(), 10);
        assert!(text.lines().next().unwrap().starts_with("Scenario  M.S.  M. to F.  C.M.F.  % C.M.F."));
        assert!(text.contains("Order        2         8       7       88%"), "{text}");
    }

    #[test]
    fn single_row_table() {
        let r = score_matching("Person", &[], &six().expected);
        let table = experiment_table(&[("Person".into(), 1, r)]);
        let text = table.render_text();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("Scenario"));
    }

    #[test]
    fn csv_round_trip() {
        let table = full_table();
        assert_eq!(ExperimentTable::from_csv(&table.to_csv()).unwrap(), table);
    }

    #[test]
    fn comparison_lists_coma_reference() {
        let text = full_table().render_comparison();
        assert!(text.contains("COMA C.M.F."));
        let person = text.lines().find(|l| l.starts_with("Person")).unwrap();
        assert!(person.contains("83%"), "{person}");
        let order = text.lines().find(|l| l.starts_with("Order")).unwrap();
        assert!(order.contains("7.7") && order.contains("75%"), "{order}");
    }

    #[test]
    fn sweep_rejects_empty_values() {
        assert!(sweep_sims(&six(), &MetaConfig::default(), &[], 1).is_err());
        let csv = sweep_csv(&[SweepPoint { sims: 3, mean_pct_correct: 0.875 }]);
        assert_eq!(csv, "sims,mean_pct\n3,87.5\n");
    }

    fn subset() -> impl Strategy<Value = Vec<(usize, usize)>> {
        prop::collection::vec((0usize..8, 0usize..8), 0..12)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn precision_recall_bounded_and_monotone(found in subset(), extra_s in 0usize..8, extra_t in 0usize..8) {
            let sc = six();
            let found = pairs(&found);
            let base = score_matching("p", &found, &sc.expected);
            prop_assert!((0.0..=1.0).contains(&base.precision));
            prop_assert!((0.0..=1.0).contains(&base.recall));
            prop_assert_eq!(base.pct_correct, base.recall);
            prop_assert!(base.correct_found <= base.matchings_to_find);

            let mut more = found.clone();
            more.extend(pairs(&[(extra_s, extra_t)]));
            let after = score_matching("p", &more, &sc.expected);
            let extra = &pairs(&[(extra_s, extra_t)])[0];
            if sc.expected.contains(extra) {
                prop_assert!(after.recall >= base.recall);
            } else {
                prop_assert!(after.precision <= base.precision);
                prop_assert_eq!(after.recall, base.recall);
            }
        }
    }
}
