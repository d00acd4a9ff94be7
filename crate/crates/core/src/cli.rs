//! `cmw` command line: experiment runs with CSV/JSON output, and self-checks.
//!
//! Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CmwError;
use crate::experiments::{
    aggregate, run_adversarial, run_logistic, run_random_intervals, LogisticMapConfig,
    RandomIntervalConfig, TrialPair,
};
use crate::solvers::SolverKind;
use crate::verify::{bounds_suite, equilibrium_suite, psd_suite, solver_suite, SuiteReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cmw", version, about = "Constrained multiplicative weights experiments")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write traces, a summary and a manifest.
    Run {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Run self-check suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Subcommand)]
enum Experiment {
    /// Random intervals on [0, 1], uniform realized losses.
    RandomIntervals(RunArgs),
    /// Online identification of the logistic map parameter.
    Logistic(RunArgs),
    /// Random intervals with worst-case corner losses against each agent.
    Adversarial(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
struct RunArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// exact | m2 | approx | zero
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long = "theta-true")]
    theta_true: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long = "hedge-L")]
    hedge_l: Option<f64>,
    /// Width of the cost histogram bins in the summary.
    #[arg(long = "bin-width")]
    bin_width: Option<f64>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Psd,
    Solvers,
    Bounds,
    Equilibrium,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Games in the bounds suite.
    #[arg(long, default_value_t = 1000)]
    games: usize,
    /// Option count for the equilibrium suite.
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Random instances per suite.
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<CmwError> for CliError {
    fn from(e: CmwError) -> Self {
        match e {
            CmwError::InvalidArgument(_) | CmwError::UseApproximateSolver { .. } | CmwError::ClosedFormRequiresTwo(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Every setting of a run with defaults filled in; written next to the
/// outputs as `config.toml` so the run can be repeated with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRun {
    pub experiment: String,
    pub m: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub solver: String,
    pub c1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    pub jobs: usize,
    pub bin_width: f64,
    #[serde(rename = "hedge_L")]
    pub hedge_l: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_true: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: ResolvedRun,
    pub seed: u64,
    pub version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
    pub replay: String,
}

/// Values read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<String>,
    m: Option<usize>,
    #[serde(rename = "T")]
    horizon: Option<usize>,
    trials: Option<usize>,
    seed: Option<u64>,
    solver: Option<String>,
    c1: Option<f64>,
    c2: Option<f64>,
    jobs: Option<usize>,
    bin_width: Option<f64>,
    #[serde(rename = "hedge_L")]
    hedge_l: Option<f64>,
    x0: Option<f64>,
    theta_true: Option<f64>,
    noise: Option<f64>,
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn resolve(name: &str, args: &RunArgs) -> Result<ResolvedRun, CliError> {
    let file = match &args.config {
        Some(p) => load_file(p)?,
        None => FileConfig::default(),
    };
    if let Some(e) = &file.experiment {
        if e != name {
            return Err(CliError::Usage(format!("config file is for '{e}', not '{name}'")));
        }
    }
    let logistic = name == "logistic";
    if !logistic && (args.x0.is_some() || args.theta_true.is_some() || args.noise.is_some()) {
        return Err(CliError::Usage(format!(
            "--x0, --theta-true and --noise only apply to the logistic run, not '{name}'"
        )));
    }
    let defaults = LogisticMapConfig::default();
    let solver_default = match name {
        "logistic" => "approx",
        _ => "exact",
    };
    let solver = args
        .solver
        .clone()
        .or(file.solver)
        .unwrap_or_else(|| solver_default.to_string());
    let solver_kind: SolverKind = solver.parse()?;
    let mut run = ResolvedRun {
        experiment: name.to_string(),
        m: args.m.or(file.m).unwrap_or(if logistic { defaults.m } else { 10 }),
        horizon: args.horizon.or(file.horizon).unwrap_or(200),
        trials: args.trials.or(file.trials).unwrap_or(if logistic { 1 } else { 100 }),
        seed: args.seed.or(file.seed).unwrap_or(0),
        solver: solver_kind.to_string(),
        c1: args.c1.or(file.c1).unwrap_or(crate::engine::DEFAULT_C1),
        c2: args.c2.or(file.c2),
        jobs: args.jobs.or(file.jobs).unwrap_or(1),
        bin_width: args.bin_width.or(file.bin_width).unwrap_or(1.0),
        hedge_l: 0.0,
        x0: None,
        theta_true: None,
        noise: None,
    };
    if logistic {
        run.x0 = Some(args.x0.or(file.x0).unwrap_or(defaults.x0));
        run.theta_true = Some(args.theta_true.or(file.theta_true).unwrap_or(defaults.theta_true));
        run.noise = Some(args.noise.or(file.noise).unwrap_or(defaults.noise_bound));
        let cfg = logistic_config(&run, None)?;
        run.hedge_l = args.hedge_l.or(file.hedge_l).unwrap_or_else(|| cfg.loss_range());
    } else {
        run.hedge_l = args.hedge_l.or(file.hedge_l).unwrap_or(1.0);
    }
    if run.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if run.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    if !(run.bin_width > 0.0) {
        return Err(CliError::Usage("--bin-width must be positive".into()));
    }
    Ok(run)
}

fn interval_config(run: &ResolvedRun) -> Result<RandomIntervalConfig, CliError> {
    let cfg = RandomIntervalConfig {
        m: run.m,
        horizon: run.horizon,
        trials: run.trials,
        seed: run.seed,
        solver: run.solver.parse()?,
        hedge_l: run.hedge_l,
        c1: run.c1,
        c2: run.c2,
    };
    cfg.cmw_config()?;
    Ok(cfg)
}

fn logistic_config(run: &ResolvedRun, hedge_l: Option<f64>) -> Result<LogisticMapConfig, CliError> {
    let d = LogisticMapConfig::default();
    let cfg = LogisticMapConfig {
        m: run.m,
        horizon: run.horizon,
        trials: run.trials,
        seed: run.seed,
        solver: run.solver.parse()?,
        x0: run.x0.unwrap_or(d.x0),
        theta_true: run.theta_true.unwrap_or(d.theta_true),
        noise_bound: run.noise.unwrap_or(d.noise_bound),
        hedge_l,
        c1: run.c1,
        c2: run.c2,
        ..d
    };
    cfg.cmw_config()?;
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_outputs(run: &ResolvedRun, pairs: &[TrialPair], out: &Path, started: u64) -> Result<Vec<String>, CliError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let mut outputs = Vec::new();
    for p in pairs {
        for rec in [&p.cmw, &p.hedge] {
            let name = format!("trial_{:04}_{}.csv", p.trial, rec.algorithm);
            write(&out.join(&name), &rec.to_csv())?;
            outputs.push(name);
        }
    }
    let summary = aggregate(pairs, run.bin_width)?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(&out.join("summary.json"), &(json + "\n"))?;
    outputs.push("summary.json".into());
    let toml = toml::to_string(run).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(&out.join("config.toml"), &toml)?;
    outputs.push("config.toml".into());

    let replay = format!(
        "cmw run {} --config {} --out {}",
        run.experiment,
        out.join("config.toml").display(),
        out.display()
    );
    let manifest = RunManifest {
        command: format!("run {}", run.experiment),
        config: run.clone(),
        seed: run.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        outputs: outputs.clone(),
        replay,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(&out.join("manifest.json"), &(json + "\n"))?;
    outputs.push("manifest.json".into());

    println!(
        "{}: {} trials, median regret constrained {:.6} hedge {:.6}, constrained cheaper in {:.0}% of trials",
        run.experiment,
        summary.trials,
        summary.cmw.median_regret,
        summary.hedge.median_regret,
        100.0 * summary.cmw_beats_hedge_expected
    );
    println!("wrote {} files to {}", outputs.len(), out.display());
    Ok(outputs)
}

fn cmd_run(name: &str, args: &RunArgs) -> Result<(), CliError> {
    let started = unix_now();
    let run = resolve(name, args)?;
    let pairs = match name {
        "random-intervals" => run_random_intervals(&interval_config(&run)?, run.jobs)?,
        "adversarial" => run_adversarial(&interval_config(&run)?, run.jobs)?,
        _ => run_logistic(&logistic_config(&run, Some(run.hedge_l))?, run.jobs)?,
    };
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("cmw-out"));
    write_outputs(&run, &pairs, &out, started)?;
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, CliError> {
    let mut reports: Vec<SuiteReport> = Vec::new();
    let want = |s: Suite| args.suite == Suite::All || args.suite == s;
    if want(Suite::Psd) {
        reports.push(psd_suite(1000, args.seed)?);
    }
    if want(Suite::Solvers) {
        reports.push(solver_suite(args.instances, args.seed)?);
    }
    if want(Suite::Equilibrium) {
        if !(2..=crate::solvers::MAX_EXACT_DIM).contains(&args.m) {
            return Err(CliError::Usage(format!("--m must lie in 2..={}", crate::solvers::MAX_EXACT_DIM)));
        }
        reports.push(equilibrium_suite(args.instances, args.m, args.seed)?);
    }
    if want(Suite::Bounds) {
        reports.push(bounds_suite(args.games, args.seed, args.jobs.max(1))?);
    }
    for r in &reports {
        println!("{}: {} ({})", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    Ok(reports.iter().all(|r| r.passed))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Run { experiment } => match experiment {
            Experiment::RandomIntervals(a) => cmd_run("random-intervals", a),
            Experiment::Logistic(a) => cmd_run("logistic", a),
            Experiment::Adversarial(a) => cmd_run("adversarial", a),
        },
        Command::Verify(v) => match cmd_verify(v) {
            Ok(true) => Ok(()),
            Ok(false) => return EXIT_FAILURE,
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}
