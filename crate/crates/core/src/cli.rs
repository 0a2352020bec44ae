//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when the
//! optimizer did not converge (results are still written).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::estimator::{fit, BandRule, FitConfig};
use crate::inference::{confidence_intervals, estimator_covariance, point_intervals};
use crate::io::{read_panel, shape_table, write_atomic, CiTable, CovarianceTable, ResultFile};
use crate::montecarlo::{run_study, StudyConfig};
use crate::panel::{ConstraintRegime, RegimeKind, DEFAULT_UPSILON_MAX};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NO_CONVERGENCE: i32 = 2;

/// Number of points in the shape table.
pub const SHAPE_POINTS: usize = 512;

pub const THREADS_ENV: &str = "SHAPEALIGN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "shapealign", version, about = "Fit shifts, amplitudes and levels of periodic curve panels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a panel read from CSV.
    Fit(FitArgs),
    /// Run a replication study described by a JSON config.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    A0,
    A1,
}

impl From<RegimeArg> for RegimeKind {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::A0 => RegimeKind::A0,
            RegimeArg::A1 => RegimeKind::A1,
        }
    }
}

/// `auto` or an explicit band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandArg {
    Auto,
    Explicit(usize),
}

impl FromStr for BandArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(BandArg::Auto);
        }
        s.parse::<usize>()
            .map(BandArg::Explicit)
            .map_err(|_| format!("expected a positive integer or 'auto', got '{s}'"))
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Panel CSV: header row, optional leading `t` column, one column per curve.
    #[arg(long)]
    pub input: PathBuf,
    /// Identifiability constraints: a0 centers the shape, a1 pins the first level.
    #[arg(long, value_enum, default_value = "a0")]
    pub regime: RegimeArg,
    /// Number of Fourier frequencies, or `auto` for floor(n^(1/4)).
    #[arg(long, default_value = "auto")]
    pub m: BandArg,
    /// Confidence level of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Bound on the absolute levels.
    #[arg(long, default_value_t = DEFAULT_UPSILON_MAX)]
    pub upsilon_max: f64,
    /// Result JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// CSV of the estimated shape at 512 points.
    #[arg(long)]
    pub shape_out: Option<PathBuf>,
    /// Recorded in the output; the fit itself is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also report shifts in days for this period length.
    #[arg(long)]
    pub period_days: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Simulate(args) => cmd_simulate(&args),
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    EXIT_INPUT
}

pub fn cmd_fit(args: &FitArgs) -> i32 {
    match run_fit(args) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("warning: optimizer did not converge; best point written");
            EXIT_NO_CONVERGENCE
        }
        Err(e) => fail(&e),
    }
}

/// Returns whether the fit converged.
fn run_fit(args: &FitArgs) -> Result<bool> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Error::ConfigInvalid(format!("level {} outside (0, 1)", args.level)));
    }
    if !(args.upsilon_max > 0.0) {
        return Err(Error::ConfigInvalid("upsilon-max must be positive".into()));
    }
    if let Some(p) = args.period_days {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::ConfigInvalid("period-days must be positive".into()));
        }
    }
    let panel = read_panel(&args.input)?;
    let m_rule = match args.m {
        BandArg::Auto => BandRule::default(),
        BandArg::Explicit(m) => BandRule::Explicit(m),
    };
    m_rule.resolve(panel.n())?;
    let config = FitConfig {
        m_rule,
        ..FitConfig::default()
    };
    let regime = ConstraintRegime {
        kind: args.regime.into(),
        upsilon_max: args.upsilon_max,
    };
    let result = fit(&panel, regime, &config)?;

    let dim = regime.free_dim(panel.curves());
    let covariance = estimator_covariance(&result).ok().map(|c| CovarianceTable {
        labels: regime.free_labels(panel.curves()),
        values: (0..dim).flat_map(|r| (0..dim).map(move |k| (r, k))).map(|ix| c[ix]).collect(),
    });
    let ci = match confidence_intervals(&result, args.level) {
        Ok(ci) => Some(CiTable::from(&ci)),
        Err(Error::ZeroNoise) => Some(CiTable::from(&point_intervals(&result, args.level))),
        Err(_) => None,
    };
    let file = ResultFile::new(&result, panel.labels(), covariance, ci, args.seed, args.period_days);
    write_atomic(&args.out, file.to_json()?.as_bytes())?;
    if let Some(path) = &args.shape_out {
        write_atomic(path, &shape_table(&result.shape_hat, SHAPE_POINTS)?)?;
    }
    print_table(&file);
    Ok(result.converged)
}

fn print_table(file: &ResultFile) {
    let days = file.diagnostics.theta_days.as_ref();
    let theta_head = if days.is_some() { "theta (days)" } else { "theta (rad)" };
    println!("{:<16} {:>14} {:>12} {:>12}", "curve", theta_head, "a", "upsilon");
    for (j, label) in file.diagnostics.curves.iter().enumerate() {
        let theta = days.map_or(file.theta[j], |d| d[j]);
        println!(
            "{:<16} {:>14.6} {:>12.6} {:>12.6}",
            label, theta, file.a[j], file.upsilon[j]
        );
    }
    println!(
        "sigma = {:.6}  m = {}  regime = {}  converged = {}",
        file.sigma, file.m, file.diagnostics.regime, file.diagnostics.converged
    );
}

pub fn cmd_simulate(args: &SimulateArgs) -> i32 {
    match run_simulate(args) {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("warning: more than 5% of replicates failed; report marked invalid");
            EXIT_NO_CONVERGENCE
        }
        Err(e) => fail(&e),
    }
}

fn read_config(path: &Path) -> Result<StudyConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::ConfigInvalid(e.to_string()))
}

/// Returns whether the study is valid.
fn run_simulate(args: &SimulateArgs) -> Result<bool> {
    let config = read_config(&args.config)?;
    config.validate()?;
    let threads = thread_count()?;
    let report = with_threads(threads, || run_study(&config))??;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_atomic(&args.out, text.as_bytes())?;
    Ok(!report.invalid)
}

/// Reads the thread cap; unset or 0 means one thread per core.
pub fn thread_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::ConfigInvalid(format!("{THREADS_ENV}='{v}' is not a non-negative integer"))),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    Ok(f())
}
