//! Argument parsing and command dispatch for the `reflex-sm` binary.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use reflex_sm::{
    builtin_fixture, builtin_fixtures, experiment_table, heterogeneity_index, load_scenario, repeat_meta, reproduce,
    run_meta, run_simulation_traced, score_matching, sweep_sims, ConfigError, KernelError, MeasureId, MetaConfig,
    MetaReport, RepeatedMeta, RngStream, Scenario, ScenarioError, SimulationConfig, SimulationResult,
    ThresholdInterval, TraceRecord,
};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "reflex-sm", version, about = "Schema matching by stochastic multi-agent simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in scenarios.
    Fixtures,
    /// Run single simulations and print the pairs they found.
    Run(RunArgs),
    /// Run a meta-simulation and write its report.
    Meta(MetaArgs),
    /// Score a meta-simulation report against its ground truth.
    Eval(EvalArgs),
    /// Compare mean results across simulation counts.
    Sweep(SweepArgs),
    /// Run every built-in scenario and print the combined results table.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ScenarioSource {
    /// Built-in scenario name (see `fixtures`).
    #[arg(long)]
    pub fixture: Option<String>,
    /// Path to a scenario JSON file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimFlags {
    /// Lower end of the acceptance threshold interval.
    #[arg(long, default_value_t = 0.45)]
    pub threshold_lo: f64,
    /// Upper end of the acceptance threshold interval.
    #[arg(long, default_value_t = 0.65)]
    pub threshold_hi: f64,
    /// Measures each agent draws per tick.
    #[arg(long, default_value_t = 3)]
    pub measures_per_tick: usize,
    /// Comma-separated measure pool (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub measures: Vec<MeasureId>,
    /// Consecutive ticks a candidate must stay best before confirming.
    #[arg(long, default_value_t = 3)]
    pub convergence_streak: u32,
    /// Ticks without a new candidate before an agent resets.
    #[arg(long, default_value_t = 10)]
    pub patience: u32,
    /// Hard limit on ticks per simulation.
    #[arg(long, default_value_t = 500)]
    pub max_ticks: u32,
    /// Root seed.
    #[arg(long, env = "REFLEX_SM_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct MetaFlags {
    /// Simulations per meta-simulation.
    #[arg(long, default_value_t = 10)]
    pub sims: u32,
    /// Minimum pair frequency for the final matching.
    #[arg(long, default_value_t = 0.5)]
    pub cutoff: f64,
    /// Worker threads (default: one per core).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioSource,
    #[command(flatten)]
    pub sim: SimFlags,
    /// First stream id.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    /// Number of independent runs, on consecutive streams.
    #[arg(long, default_value_t = 1)]
    pub sims: u32,
    /// Write the results as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every decision and consensus as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetaArgs {
    #[command(flatten)]
    pub scenario: ScenarioSource,
    #[command(flatten)]
    pub sim: SimFlags,
    #[command(flatten)]
    pub meta: MetaFlags,
    /// Independent meta-simulations; more than one runs on seeds derived from --seed.
    #[arg(long, default_value_t = 1)]
    pub repetitions: u32,
    /// Write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the pair frequency table as CSV.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Report JSON saved by the meta command.
    pub report: PathBuf,
    /// Ground truth from a built-in scenario (default: the one named in the report).
    #[arg(long, conflicts_with = "scenario")]
    pub fixture: Option<String>,
    /// Ground truth from a scenario file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Write the table as CSV.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioSource,
    #[command(flatten)]
    pub sim: SimFlags,
    #[command(flatten)]
    pub meta: MetaFlags,
    /// Simulation counts to compare.
    #[arg(long, value_delimiter = ',', default_value = "3,10")]
    pub sims_values: Vec<u32>,
    /// Meta-simulations averaged per count.
    #[arg(long, default_value_t = 30)]
    pub repetitions: u32,
    /// Write `sims,mean_pct` as CSV.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[command(flatten)]
    pub sim: SimFlags,
    #[command(flatten)]
    pub meta: MetaFlags,
    /// Meta-simulations per scenario.
    #[arg(long, default_value_t = 3)]
    pub repetitions: u32,
    /// Write the table as CSV.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: not a meta-simulation report: {source}", path.display())]
    Report { path: PathBuf, source: serde_json::Error },
}

impl CliError {
    /// 1 for bad input values, 2 for anything that failed to load or save.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Kernel(_) | CliError::Invalid(_) => 1,
            CliError::Scenario(_) | CliError::Io { .. } | CliError::Report { .. } => 2,
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli, &mut io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Fixtures => fixtures(out),
        Command::Run(a) => run(a, out),
        Command::Meta(a) => meta(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Reproduce(a) => reproduce_all(a, out),
    }
}

impl SimFlags {
    pub fn config(&self) -> Result<SimulationConfig, CliError> {
        let measure_pool = if self.measures.is_empty() { MeasureId::ALL.to_vec() } else { self.measures.clone() };
        let cfg = SimulationConfig {
            threshold_interval: ThresholdInterval::new(self.threshold_lo, self.threshold_hi)?,
            measures_per_tick: self.measures_per_tick,
            convergence_streak: self.convergence_streak,
            patience: self.patience,
            max_ticks: self.max_ticks,
            measure_pool,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl MetaFlags {
    fn config(&self, sim: &SimFlags) -> Result<MetaConfig, CliError> {
        let cfg = MetaConfig {
            n_simulations: self.sims,
            frequency_cutoff: self.cutoff,
            base: sim.config()?,
            seed: sim.seed,
            workers: self.workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ScenarioSource {
    fn load(&self) -> Result<Scenario, CliError> {
        match (&self.fixture, &self.scenario) {
            (Some(name), _) => fixture_named(name),
            (None, Some(path)) => Ok(load_scenario(path)?),
            (None, None) => Err(CliError::Invalid("one of --fixture or --scenario is required".into())),
        }
    }
}

fn fixture_named(name: &str) -> Result<Scenario, CliError> {
    builtin_fixture(name).ok_or_else(|| {
        let known: Vec<String> = builtin_fixtures().into_iter().map(|s| s.name.to_lowercase()).collect();
        CliError::Invalid(format!("unknown fixture {name:?} (built-ins: {})", known.join(", ")))
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn stdout_err(source: io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn fixtures(out: &mut dyn Write) -> Result<(), CliError> {
    let mut text =
        format!("{:<8} {:>6} {:>6} {:>6}  {:<7} {}\n", "name", "source", "target", "pairs", "band", "heterogeneity");
    for s in builtin_fixtures() {
        let _ = writeln!(
            text,
            "{:<8} {:>6} {:>6} {:>6}  {:<7} {:.3}",
            s.name.to_lowercase(),
            s.source.len(),
            s.target.len(),
            s.expected.len(),
            format!("{:?}", s.band).to_lowercase(),
            heterogeneity_index(&s)
        );
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn name_of(scenario: &Scenario, side: reflex_sm::Side, id: &reflex_sm::ElementId) -> String {
    scenario.schema(side).get(id).map(|e| e.name.clone()).unwrap_or_else(|| id.to_string())
}

#[derive(Serialize)]
struct TraceLine<'a> {
    stream: u64,
    #[serde(flatten)]
    record: &'a TraceRecord,
}

fn run(a: RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = a.scenario.load()?;
    let cfg = a.sim.config()?;
    if a.sims == 0 {
        return Err(ConfigError::OutOfRange { name: "sims", value: "0".into(), reason: "must be at least 1" }.into());
    }
    let mut results: Vec<SimulationResult> = Vec::new();
    let mut trace = String::new();
    for stream in a.stream..a.stream + u64::from(a.sims) {
        let (result, records) = run_simulation_traced(&scenario, &cfg, RngStream::new(a.sim.seed, stream))?;
        if a.trace.is_some() {
            for r in &records {
                let line = TraceLine { stream, record: r };
                trace.push_str(&serde_json::to_string(&line).expect("trace serializes"));
                trace.push('\n');
            }
        }
        results.push(result);
    }

    let mut text = String::new();
    for r in &results {
        let eval = score_matching(
            &scenario.name,
            &r.matched_pairs.iter().map(|p| p.correspondence()).collect::<Vec<_>>(),
            &scenario.expected,
        );
        let _ = writeln!(
            text,
            "{} seed {} stream {}: {} ticks, {}/{} expected pairs",
            scenario.name, r.seed, r.stream_id, r.ticks_used, eval.correct_found, eval.matchings_to_find
        );
        for p in &r.matched_pairs {
            let mark = if scenario.expected.contains(&p.correspondence()) { ' ' } else { '!' };
            let _ = writeln!(
                text,
                "  {mark} {:<20} {:<20} tick {:>3}  mean {:.3}",
                name_of(&scenario, reflex_sm::Side::Source, &p.source),
                name_of(&scenario, reflex_sm::Side::Target, &p.target),
                p.tick,
                p.mean_score
            );
        }
    }
    if let Some(path) = &a.out {
        let json = if results.len() == 1 { to_json(&results[0]) } else { to_json(&results) };
        write_file(path, &json)?;
    }
    if let Some(path) = &a.trace {
        write_file(path, &trace)?;
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn meta(a: MetaArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = a.scenario.load()?;
    let cfg = a.meta.config(&a.sim)?;
    // A single meta-simulation runs on --seed itself.
    let rep = if a.repetitions == 1 {
        let report = run_meta(&scenario, &cfg)?;
        RepeatedMeta { repeatability: Vec::new(), reports: vec![report] }
    } else {
        repeat_meta(&scenario, &cfg, a.repetitions)?
    };

    let mut text = String::new();
    let mut rows = Vec::new();
    for (i, report) in rep.reports.iter().enumerate() {
        let _ = writeln!(
            text,
            "{} meta-simulation {} (seed {}, {} simulations, cutoff {})",
            scenario.name,
            i + 1,
            report.seed,
            report.n_simulations,
            report.frequency_cutoff
        );
        for p in &report.pairs {
            let _ = writeln!(
                text,
                "  {} {:<20} {:<20} freq {:.2}  mean {:.3}",
                if p.selected { '*' } else { ' ' },
                name_of(&scenario, reflex_sm::Side::Source, &p.source_id),
                name_of(&scenario, reflex_sm::Side::Target, &p.target_id),
                p.frequency,
                p.mean_score
            );
        }
        rows.push((
            scenario.name.clone(),
            i + 1,
            score_matching(&scenario.name, &report.final_matching, &scenario.expected),
        ));
    }
    text.push_str(&experiment_table(&rows).render_text());

    if let Some(path) = &a.out {
        let json = if rep.reports.len() == 1 { to_json(&rep.reports[0]) } else { to_json(&rep) };
        write_file(path, &json)?;
    }
    if let Some(path) = &a.out_csv {
        write_file(path, &frequency_csv(&rep))?;
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

/// One report keeps the plain frequency table; several get a leading
/// `meta_simulation` column.
fn frequency_csv(rep: &RepeatedMeta) -> String {
    if let [only] = rep.reports.as_slice() {
        return only.to_csv();
    }
    let mut csv = String::new();
    for (i, report) in rep.reports.iter().enumerate() {
        for (j, line) in report.to_csv().lines().enumerate() {
            match (i, j) {
                (0, 0) => csv.push_str("meta_simulation,"),
                (_, 0) => continue,
                _ => {
                    let _ = write!(csv, "{},", i + 1);
                }
            }
            csv.push_str(line);
            csv.push('\n');
        }
    }
    csv
}

fn read_reports(path: &Path) -> Result<Vec<MetaReport>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    match serde_json::from_str::<MetaReport>(&text) {
        Ok(r) => Ok(vec![r]),
        Err(first) => match serde_json::from_str::<RepeatedMeta>(&text) {
            Ok(rep) => Ok(rep.reports),
            Err(_) => Err(CliError::Report { path: path.to_owned(), source: first }),
        },
    }
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let reports = read_reports(&a.report)?;
    let scenario = match (&a.fixture, &a.scenario) {
        (Some(name), _) => fixture_named(name)?,
        (None, Some(path)) => load_scenario(path)?,
        (None, None) => {
            let name = reports.first().map(|r| r.scenario.as_str()).unwrap_or_default();
            builtin_fixture(name).ok_or_else(|| {
                CliError::Invalid(format!("report is for {name:?}, which is not built in; pass --scenario"))
            })?
        }
    };
    let rows: Vec<_> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            (scenario.name.clone(), i + 1, score_matching(&scenario.name, &r.final_matching, &scenario.expected))
        })
        .collect();
    let table = experiment_table(&rows);
    if let Some(path) = &a.out_csv {
        write_file(path, &table.to_csv())?;
    }
    out.write_all(table.render_text().as_bytes()).map_err(stdout_err)
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = a.scenario.load()?;
    let cfg = a.meta.config(&a.sim)?;
    if let Some(&bad) = a.sims_values.iter().find(|&&n| n == 0) {
        return Err(ConfigError::OutOfRange {
            name: "sims_values",
            value: bad.to_string(),
            reason: "every count must be at least 1",
        }
        .into());
    }
    let points = sweep_sims(&scenario, &cfg, &a.sims_values, a.repetitions)?;
    let mut text = format!("{} over {} repetitions\n", scenario.name, a.repetitions);
    for p in &points {
        let _ = writeln!(text, "  sims {:>4}  mean {:>7.2}%", p.sims, p.mean_pct_correct * 100.0);
    }
    if let Some(path) = &a.out_csv {
        write_file(path, &reflex_sm::eval::sweep_csv(&points))?;
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn reproduce_all(a: ReproduceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.meta.config(&a.sim)?;
    let table = reproduce(&builtin_fixtures(), &cfg, a.repetitions)?;
    if let Some(path) = &a.out_csv {
        write_file(path, &table.to_csv())?;
    }
    let text = format!("{}\n{}", table.render_text(), table.render_comparison());
    out.write_all(text.as_bytes()).map_err(stdout_err)
}
