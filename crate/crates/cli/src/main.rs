//! `sphere-cover`: simulation, verification and bound reports for random
//! partial coverings of the sphere by `N` caps of measure `1/N`.
//!
//! Exit status: 0 on success, 1 on invalid input or a failed verification,
//! 2 on an internal error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sphere_cover::experiments::{
    kolmogorov_distance, read_report, run_replications, verify_all, write_csv_to, write_json_to, Evaluator,
    ExperimentPlan, ExperimentResult, SimulationRun, Standardization, Summary, VerifyBudget,
};
use sphere_cover::oracles::{bound_report, exact_mean, exact_variance_d2, BoundConstants, DEFAULT_QUAD_NODES};
use sphere_cover::{Error, ModelParams};

#[derive(Debug, Parser)]
#[command(
    name = "sphere-cover",
    version,
    about = "Random partial coverings of the unit sphere by N caps of measure 1/N"
)]
#[command(args_conflicts_with_subcommands = true, arg_required_else_help = true)]
struct Cli {
    /// Re-run the command recorded in a JSON report and check that every
    /// number is reproduced
    #[arg(long, value_name = "REPORT")]
    replay: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum CommandKind {
    Simulate,
    Clt,
    VerifyLemmas,
    Bounds,
    MeanVariance,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw R configurations and write the covered volume of each
    Simulate(RunConfig),
    /// Kolmogorov distance of the standardized covered volume to N(0, 1)
    Clt(RunConfig),
    /// Run the property suites and interaction estimates and check every claim
    VerifyLemmas(RunConfig),
    /// Evaluate the intersection probability, interaction and rate bounds
    Bounds(RunConfig),
    /// Compare the sample mean and variance with their exact values
    MeanVariance(RunConfig),
}

impl Command {
    fn split(self) -> (CommandKind, RunConfig) {
        match self {
            Command::Simulate(c) => (CommandKind::Simulate, c),
            Command::Clt(c) => (CommandKind::Clt, c),
            Command::VerifyLemmas(c) => (CommandKind::VerifyLemmas, c),
            Command::Bounds(c) => (CommandKind::Bounds, c),
            Command::MeanVariance(c) => (CommandKind::MeanVariance, c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum EvaluatorChoice {
    /// Exact on the circle unless --M is given, Monte Carlo otherwise
    Auto,
    /// Arc union, d = 2 only
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StandardizationChoice {
    /// Exact moments on the circle, sample moments otherwise
    Auto,
    Oracle,
    Sample,
}

fn at_least<const MIN: usize>(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v < MIN {
        return Err(format!("must be at least {MIN}"));
    }
    Ok(v)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct RunConfig {
    /// Ambient dimension; the sphere is S^{d-1}
    #[arg(long, default_value_t = 2, value_parser = at_least::<2>)]
    d: usize,

    /// Number of caps
    #[arg(long = "N", default_value_t = 100, value_parser = at_least::<1>)]
    #[serde(rename = "N")]
    n: usize,

    /// Replications
    #[arg(long = "R", default_value_t = 10_000, value_parser = at_least::<1>)]
    #[serde(rename = "R")]
    r: usize,

    /// Monte Carlo points per evaluation [default: 256·N when Monte Carlo is used]
    #[arg(long = "M")]
    #[serde(rename = "M")]
    m: Option<u64>,

    /// Covered-volume evaluator
    #[arg(long, value_enum, default_value_t = EvaluatorChoice::Auto)]
    evaluator: EvaluatorChoice,

    /// Moments used to standardize the covered volume
    #[arg(long, value_enum, default_value_t = StandardizationChoice::Auto)]
    standardization: StandardizationChoice,

    /// Root seed; every run is a function of it
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Worker threads, 0 for one per core
    #[arg(long, env = "SPHERE_COVER_THREADS", hide_env_values = true, default_value_t = 0)]
    threads: usize,

    /// Dimension growth rate, d ≤ alpha·ln N
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,

    /// Lower variance constant, in (0, 1)
    #[arg(long, default_value_t = 0.25)]
    c1: f64,

    /// Upper variance constant, in (0, 1)
    #[arg(long, default_value_t = 0.75)]
    c2: f64,

    /// Variance exponent constant, in (1, 2)
    #[arg(long = "C1", value_name = "C1", default_value_t = 1.5)]
    #[serde(rename = "C1")]
    big_c1: f64,

    /// Confidence level of the DKW band
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,

    /// Trials for each verify-lemmas suite [default: depends on d]
    #[arg(long)]
    trials: Option<usize>,

    /// Output file; nothing is written without it
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Output format; with csv the per-replication values go to --output and
    /// the report next to it with a .json extension
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl RunConfig {
    fn params(&self) -> sphere_cover::Result<ModelParams> {
        ModelParams::new(self.d, self.n)
    }

    fn constants(&self) -> sphere_cover::Result<BoundConstants> {
        BoundConstants::new(self.c1, self.c2, self.big_c1, self.alpha)
    }

    fn evaluator(&self) -> sphere_cover::Result<Evaluator> {
        let params = self.params()?;
        let mc = || Evaluator::MonteCarlo {
            points: self.m.unwrap_or(256 * self.n as u64),
        };
        Ok(match self.evaluator {
            EvaluatorChoice::Auto if self.d == 2 && self.m.is_none() => Evaluator::ExactD2,
            EvaluatorChoice::Auto | EvaluatorChoice::MonteCarlo => mc(),
            EvaluatorChoice::Exact if self.m.is_some() => {
                return Err(Error::InvalidParameter(
                    "--M has no effect with the exact evaluator".into(),
                ))
            }
            EvaluatorChoice::Exact => {
                if params.d() != 2 {
                    return Err(Error::InvalidParameter(format!(
                        "the exact evaluator needs d = 2, got d = {}",
                        params.d()
                    )));
                }
                Evaluator::ExactD2
            }
        })
    }

    fn plan(&self) -> sphere_cover::Result<ExperimentPlan> {
        let params = self.params()?;
        let standardization = match self.standardization {
            StandardizationChoice::Auto if self.d == 2 => Standardization::OracleMoments,
            StandardizationChoice::Auto | StandardizationChoice::Sample => Standardization::SampleMoments,
            StandardizationChoice::Oracle => Standardization::OracleMoments,
        };
        let plan = ExperimentPlan::new(params, self.r, self.seed)
            .with_evaluator(self.evaluator()?)
            .with_standardization(standardization)
            .with_threads(self.threads);
        plan.validate()?;
        Ok(plan)
    }

    fn budget(&self) -> sphere_cover::Result<VerifyBudget> {
        let params = self.params()?;
        let mut budget = VerifyBudget::default_for(&params);
        budget.replications = self.r;
        if self.d > 2 {
            budget.mc_points = self.evaluator()?.mc_points();
        } else {
            self.evaluator()?;
        }
        if let Some(t) = self.trials {
            if t == 0 {
                return Err(Error::InvalidParameter("--trials must be at least 1".into()));
            }
            budget.delta_trials = t;
            budget.first_difference_trials = t;
            budget.locality_trials = t;
        }
        Ok(budget)
    }

    /// Where the JSON report goes, if anywhere.
    fn report_path(&self) -> Option<PathBuf> {
        let out = self.output.as_ref()?;
        Some(match self.format {
            Format::Json => out.clone(),
            Format::Csv => {
                let p = out.with_extension("json");
                if p == *out {
                    out.with_extension("report.json")
                } else {
                    p
                }
            }
        })
    }
}

/// Failure classes mapped to exit status.
enum Failure {
    Invalid(String),
    Internal(String),
    /// Verification ran but some claim did not hold.
    Rejected(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDimension(_)
            | Error::InvalidCapCount(_)
            | Error::Domain { .. }
            | Error::WrongDimension { .. }
            | Error::InvalidParameter(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

/// A finished command: its report, the values behind it, and a summary line.
struct Outcome {
    result: ExperimentResult,
    run: Option<SimulationRun>,
    line: String,
}

fn config_value(kind: CommandKind, config: &RunConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    v["command"] = serde_json::to_value(kind).expect("command serializes");
    v
}

fn command_name(kind: CommandKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

fn oracle_moments(params: &ModelParams) -> sphere_cover::Result<(f64, Option<f64>)> {
    let mean = exact_mean(params.n())?;
    let var = if params.d() == 2 && params.n() >= 2 {
        Some(exact_variance_d2(params.n(), DEFAULT_QUAD_NODES)?)
    } else {
        None
    };
    Ok((mean, var))
}

fn execute(kind: CommandKind, config: &RunConfig) -> Result<Outcome, Failure> {
    let params = config.params()?;
    let constants = config.constants()?;
    if config.format == Format::Csv && matches!(kind, CommandKind::Bounds | CommandKind::VerifyLemmas) {
        return Err(Failure::Invalid(format!(
            "{} has no per-replication values; use --format json",
            command_name(kind)
        )));
    }
    let start = Instant::now();
    let mut result = ExperimentResult::new(command_name(kind), config_value(kind, config));
    let head = format!("{} d={} N={}", command_name(kind), config.d, config.n);
    let mut run = None;
    let line = match kind {
        CommandKind::Simulate | CommandKind::MeanVariance | CommandKind::Clt => {
            let plan = config.plan()?;
            let sim = run_replications(&plan)?;
            let summary = Summary::from_run(&sim)?;
            let mut line = format!(
                "{head} R={}: mean={:.6} variance={:.6e}",
                config.r, summary.mean, summary.variance
            );
            if kind == CommandKind::MeanVariance {
                let bounds = bound_report(&params, &constants)?;
                line += &format!(
                    " exact_mean={:.6} mean_z={:.2}",
                    summary.exact_mean,
                    (summary.mean - summary.exact_mean) / summary.standard_error
                );
                match summary.exact_variance {
                    Some(v) => line += &format!(" exact_variance={v:.6e}"),
                    None => line += &format!(" denoised_variance={:.6e}", summary.variance_denoised),
                }
                line += &format!(
                    " sandwich=[{:.3e}, {:.3e}]",
                    bounds.variance_lower, bounds.variance_upper
                );
                result.bounds = Some(bounds);
            }
            if kind == CommandKind::Clt {
                let (mean, var) = oracle_moments(&params)?;
                let bounds = bound_report(&params, &constants)?;
                let clt = kolmogorov_distance(&sim.distribution, plan.standardization, Some(mean), var)?
                    .with_confidence(config.confidence)?
                    .with_theoretical_bound(bounds.shao_zhang_bound);
                line += &format!(
                    " d_K={:.5} dkw={:.5} bound={:.4e}",
                    clt.empirical_dk, clt.dkw_radius, bounds.shao_zhang_bound
                );
                result.clt = Some(clt);
                result.bounds = Some(bounds);
            }
            result.plan = Some(plan);
            result.summary = Some(summary);
            run = Some(sim);
            line
        }
        CommandKind::Bounds => {
            let b = bound_report(&params, &constants)?;
            let line = format!(
                "{head}: p_N={:.6e} p_N_bound={:.6e} variance=[{:.3e}, {:.3e}] shao_zhang={:.4e} rate={:.4e} regime_rate={:.4e}",
                b.p_n, b.p_n_bound, b.variance_lower, b.variance_upper, b.shao_zhang_bound, b.rate_bound, b.regime_bound
            );
            result.bounds = Some(b);
            line
        }
        CommandKind::VerifyLemmas => {
            let budget = config.budget()?;
            let report = verify_all(&params, &constants, &budget, config.seed, config.threads)?;
            let gating = report.entries.iter().filter(|e| e.gating).count();
            let failed = report.failures().count();
            let line = format!(
                "{head}: {}/{gating} checks passed, d_K={:.5}",
                gating - failed,
                report.clt.empirical_dk
            );
            result.bounds = Some(report.bounds);
            result.verification = Some(report);
            line
        }
    };
    result.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(Outcome { result, run, line })
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic<F>(path: &Path, fill: F) -> Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<&File>) -> sphere_cover::Result<()>,
{
    let dir = parent_dir(path);
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Failure::Internal(format!("cannot create a file in {}: {e}", dir.display())))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(|e| Failure::Internal(e.to_string()))?;
    }
    tmp.persist(path)
        .map_err(|e| Failure::Internal(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

fn check_output(config: &RunConfig) -> Result<(), Failure> {
    if let Some(out) = &config.output {
        let dir = parent_dir(out);
        if !dir.is_dir() {
            return Err(Failure::Invalid(format!(
                "output directory {} does not exist",
                dir.display()
            )));
        }
        if out.is_dir() {
            return Err(Failure::Invalid(format!(
                "output path {} is a directory",
                out.display()
            )));
        }
    }
    Ok(())
}

fn run_command(kind: CommandKind, config: &RunConfig) -> Result<(), Failure> {
    check_output(config)?;
    let outcome = execute(kind, config)?;
    if let Some(out) = &config.output {
        if config.format == Format::Csv {
            let values = &outcome.run.as_ref().expect("csv needs replications").values;
            write_atomic(out, |w| write_csv_to(w, values))?;
        }
        let report = config.report_path().expect("output is set");
        write_atomic(&report, |w| write_json_to(w, &outcome.result))?;
    }
    println!("{}", outcome.line);
    if let Some(v) = &outcome.result.verification {
        if !v.passed {
            let ids: Vec<&str> = v.failures().map(|e| e.id.as_str()).collect();
            return Err(Failure::Rejected(format!("failed checks: {}", ids.join(", "))));
        }
    }
    Ok(())
}

/// Numbers that must match on replay: the whole report except timing.
fn comparable(result: &ExperimentResult) -> serde_json::Value {
    let mut v = serde_json::to_value(result).expect("report serializes");
    if let Some(map) = v.as_object_mut() {
        map.remove("elapsed_seconds");
    }
    v
}

fn replay(path: &Path) -> Result<(), Failure> {
    let file = File::open(path).map_err(|e| Failure::Invalid(format!("cannot open {}: {e}", path.display())))?;
    let recorded =
        read_report(std::io::BufReader::new(file)).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let mut config_value = recorded.config.clone();
    let kind: CommandKind = config_value
        .get("command")
        .cloned()
        .and_then(|c| serde_json::from_value(c).ok())
        .ok_or_else(|| Failure::Invalid("report does not record its command".into()))?;
    if let Some(map) = config_value.as_object_mut() {
        map.remove("command");
    }
    let config: RunConfig =
        serde_json::from_value(config_value).map_err(|e| Failure::Invalid(format!("report config: {e}")))?;
    let fresh = execute(kind, &config)?;
    let (a, b) = (comparable(&recorded), comparable(&fresh.result));
    if a == b {
        println!("replay {}: identical ({})", path.display(), fresh.line);
        Ok(())
    } else {
        let keys: Vec<String> = match (a.as_object(), b.as_object()) {
            (Some(x), Some(y)) => x
                .keys()
                .chain(y.keys())
                .filter(|k| x.get(*k) != y.get(*k))
                .cloned()
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect(),
            _ => vec!["<report>".into()],
        };
        Err(Failure::Rejected(format!(
            "replay of {} differs in: {}",
            path.display(),
            keys.join(", ")
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match (cli.replay, cli.command) {
        (Some(path), _) => replay(&path),
        (None, Some(command)) => {
            let (kind, config) = command.split();
            run_command(kind, &config)
        }
        (None, None) => Err(Failure::Invalid("no command given".into())),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Rejected(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
