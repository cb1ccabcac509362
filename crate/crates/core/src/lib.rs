//! Schema matching as a stochastic multi-agent simulation.
//!
//! Every element of a source and a target schema becomes an agent. Each tick,
//! an agent scores the still-unmatched elements of the other schema with a
//! random subset of string measures, aggregates them with a randomly chosen
//! function, and nominates the best one if it clears a random threshold. Two
//! agents that have converged on each other and confirm in the same tick
//! form a match. Repeating the simulation under independent random streams
//! and keeping the frequently found pairs gives the final matching.
//!
//! ```
//! use reflex_sm::{builtin_fixture, run_meta, score_matching, MetaConfig};
//!
//! let person = builtin_fixture("person").unwrap();
//! let report = run_meta(&person, &MetaConfig { seed: 7, ..MetaConfig::default() }).unwrap();
//! let eval = score_matching(&person.name, &report.final_matching, &person.expected);
//! assert_eq!(eval.correct_found, 6);
//! ```

pub mod engine;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod meta;
pub mod schema;
pub mod similarity;

pub use engine::{run_simulation, run_simulation_traced, Simulation, SimulationConfig, SimulationResult, TraceRecord};
pub use error::{ConfigError, KernelError, ScenarioError};
pub use eval::{experiment_table, reproduce, score_matching, sweep_sims, EvalReport, ExperimentTable, SweepPoint};
pub use kernel::{RngStream, ThresholdInterval};
pub use meta::{repeat_meta, run_meta, select_final, MetaConfig, MetaReport, RepeatedMeta};
pub use schema::{
    builtin_fixture, builtin_fixtures, heterogeneity_index, load_scenario, Correspondence, ElementId,
    GroundTruthMapping, HeterogeneityBand, Scenario, Schema, SchemaElement, Side,
};
pub use similarity::{normalize, MeasureId, TokenizedName};
