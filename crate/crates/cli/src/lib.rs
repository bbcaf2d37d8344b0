//! Command-line front end: parses a scenario file, runs one of the
//! evaluations and writes CSV.
//!
//! Exit codes: 0 when the reported key rate is positive, 2 when it is not,
//! 1 on usage, configuration or I/O errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvmdi::estimation::{coverage_experiment, Sampler};
use cvmdi::finite_size::{EstimatedParams, KeyStatus};
use cvmdi::optimizer::{
    distance_frontier, frontier_terminal, max_distance_optimal_modulation, optimal_modulation, sweep, Scenario,
    SweepSpec, SweepVariable, DEFAULT_DISTANCE_BOUND_KM,
};
use thiserror::Error;

use crate::config::{block_length, ScenarioConfig};
use crate::output::{fmt_real, write_rows, write_table, ResultRow, COVERAGE_HEADER, FRONTIER_HEADER};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Model(#[from] cvmdi::error::Error),
}

/// Process outcome for a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Key,
    NoKey,
}

impl Outcome {
    pub fn of(k: f64) -> Self {
        match KeyStatus::of(k) {
            KeyStatus::Positive => Outcome::Key,
            KeyStatus::Nonpositive => Outcome::NoKey,
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Key => 0,
            Outcome::NoKey => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cvmdi", version, about = "Finite-size key rates for CV-MDI QKD")]
pub struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output CSV path; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for Monte Carlo runs; overrides `mode.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the key rate at the configured point.
    Keyrate,
    /// Evaluate the key rate along one axis.
    Sweep(SweepArgs),
    /// Optimise the modulation variance (optionally the maximal distance).
    Optimize(OptimizeArgs),
    /// Positive-rate boundary in the (L_AC, L_BC) plane.
    Frontier(FrontierArgs),
    /// Empirical coverage of the confidence intervals.
    McCoverage(CoverageArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variable {
    #[value(name = "distance_ac")]
    DistanceAc,
    #[value(name = "distance_bc")]
    DistanceBc,
    #[value(name = "variance")]
    Variance,
    #[value(name = "block_length")]
    BlockLength,
}

impl From<Variable> for SweepVariable {
    fn from(v: Variable) -> Self {
        match v {
            Variable::DistanceAc => SweepVariable::DistanceAc,
            Variable::DistanceBc => SweepVariable::DistanceBc,
            Variable::Variance => SweepVariable::Variance,
            Variable::BlockLength => SweepVariable::BlockLength,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub variable: Variable,
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Log spacing (default for variance and block length).
    #[arg(long, conflicts_with = "linear")]
    pub log: bool,
    /// Linear spacing (default for distances).
    #[arg(long)]
    pub linear: bool,
    /// One output file per block length, e.g. `1e6,1e8,1e10`.
    #[arg(long, value_delimiter = ',')]
    pub block_lengths: Vec<f64>,
    /// Add an asymptotic curve to the block-length family.
    #[arg(long)]
    pub asymptotic: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, default_value_t = 0.1)]
    pub v_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub v_max: f64,
    /// Also find the largest L_AC with positive rate at the optimal variance.
    #[arg(long)]
    pub max_distance: bool,
    #[arg(long, default_value_t = DEFAULT_DISTANCE_BOUND_KM)]
    pub bound_km: f64,
}

#[derive(Debug, Args)]
pub struct FrontierArgs {
    /// Spacing of the L_BC grid, km.
    #[arg(long, default_value_t = 0.5)]
    pub step_km: f64,
    #[arg(long, default_value_t = DEFAULT_DISTANCE_BOUND_KM)]
    pub bound_km: f64,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    #[arg(long, default_value_t = 0.05)]
    pub eps_pe: f64,
    /// Estimation samples per channel and trial.
    #[arg(long, default_value_t = 10_000)]
    pub m: u64,
    #[arg(long, default_value_t = 2000)]
    pub trials: u64,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Prints the summary line next to, not inside, the CSV stream.
fn summary(out: Option<&Path>, line: &str) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

/// `n1e6` for 1000000, `n2.5e9` for 2500000000, `inf` for the asymptotic rate.
pub fn block_label(n: Option<u64>) -> String {
    n.map_or_else(|| "inf".to_string(), |n| format!("n{:e}", n as f64))
}

/// `dir/stem.label.ext` next to `base`.
pub fn labelled_path(base: &Path, label: &str) -> PathBuf {
    let stem = base.file_stem().map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned());
    let name = match base.extension() {
        Some(ext) => format!("{stem}.{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{label}"),
    };
    base.with_file_name(name)
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config <path> is required".into()))?;
    let cfg = ScenarioConfig::load(path)?;
    let scenario = cfg.scenario(cli.seed)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Keyrate => {
            let report = scenario.key_rate()?;
            write_rows(open_out(out)?, &[ResultRow::new(&scenario, &report)])?;
            Ok(Outcome::of(report.k))
        }
        Command::Sweep(args) => run_sweep(&scenario, args, out),
        Command::Optimize(args) => run_optimize(&scenario, args, out),
        Command::Frontier(args) => run_frontier(&scenario, args, out),
        Command::McCoverage(args) => run_coverage(&scenario, &cfg, cli.seed, args, out),
    }
}

fn run_sweep(base: &Scenario, args: &SweepArgs, out: Option<&Path>) -> Result<Outcome, CliError> {
    let variable = SweepVariable::from(args.variable);
    let mut spec = SweepSpec::new(variable, args.from, args.to, args.points);
    if args.log {
        spec.log_spaced = true;
    } else if args.linear {
        spec.log_spaced = false;
    }
    let single_point = args.from == args.to;
    if single_point {
        spec.points = 1;
    }

    let mut family: Vec<Option<u64>> = args
        .block_lengths
        .iter()
        .map(|&n| block_length(n).map(Some))
        .collect::<Result<_, _>>()?;
    if args.asymptotic {
        family.push(None);
    }
    if !family.is_empty() && variable == SweepVariable::BlockLength {
        return Err(CliError::Usage("--block-lengths cannot be combined with a block_length sweep".into()));
    }
    if family.len() > 1 && out.is_none() {
        return Err(CliError::Usage("several block lengths need --out to name the files".into()));
    }

    let evaluate = |s: &Scenario| -> Result<Vec<ResultRow>, CliError> {
        if single_point {
            let point = s.with(variable, args.from)?;
            return Ok(vec![ResultRow::new(&point, &point.key_rate()?)]);
        }
        Ok(sweep(s, &spec)?
            .iter()
            .map(|p| ResultRow::new(&p.scenario, &p.report))
            .collect())
    };

    if family.is_empty() {
        write_rows(open_out(out)?, &evaluate(base)?)?;
        return Ok(Outcome::Key);
    }
    for n in &family {
        let mut s = *base;
        match (n, s.finite.as_mut()) {
            (Some(n), Some(fs)) => fs.n_total = *n,
            (Some(n), None) => s.finite = Some(cvmdi::finite_size::FiniteSizeParams::new(*n)),
            (None, _) => s.finite = None,
        }
        let target = match (family.len(), out) {
            (1, o) => o.map(Path::to_path_buf),
            (_, Some(o)) => Some(labelled_path(o, &block_label(*n))),
            (_, None) => unreachable!(),
        };
        write_rows(open_out(target.as_deref())?, &evaluate(&s)?)?;
        if let Some(t) = &target {
            summary(out, &format!("wrote {}", t.display()));
        }
    }
    Ok(Outcome::Key)
}

fn run_optimize(base: &Scenario, args: &OptimizeArgs, out: Option<&Path>) -> Result<Outcome, CliError> {
    let mut point = *base;
    let mut line = String::new();
    if args.max_distance {
        let d = max_distance_optimal_modulation(base, SweepVariable::DistanceAc, args.bound_km, (args.v_min, args.v_max))?;
        if let Some(diag) = &d.diagnostic {
            log::warn!("{diag}");
        }
        point = base.with(SweepVariable::DistanceAc, d.distance_km)?;
        line.push_str(&format!("l_max_km={} ", fmt_real(d.distance_km)));
    }
    let opt = optimal_modulation(&point, args.v_min, args.v_max)?;
    let at = point.with(SweepVariable::Variance, opt.v_star)?;
    write_rows(open_out(out)?, &[ResultRow::new(&at, &opt.report)])?;
    line.push_str(&format!(
        "v_star={} k_star={} optimum={}",
        fmt_real(opt.v_star),
        fmt_real(opt.k_star),
        if opt.unbounded { "unbounded" } else { "interior" }
    ));
    summary(out, &line);
    Ok(Outcome::of(opt.k_star))
}

fn run_frontier(base: &Scenario, args: &FrontierArgs, out: Option<&Path>) -> Result<Outcome, CliError> {
    if !(args.step_km > 0.0) {
        return Err(CliError::Usage("--step-km must be positive".into()));
    }
    let terminal = frontier_terminal(base, args.bound_km)?.distance_km;
    let grid: Vec<f64> = (0..)
        .map(|i| i as f64 * args.step_km)
        .take_while(|&l| l < terminal)
        .collect();
    let grid = if grid.is_empty() { vec![0.0] } else { grid };
    let points = distance_frontier(base, &grid, args.bound_km)?;
    let l_ac_max = points[0].l_ac_max;
    let mut rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![fmt_real(p.l_bc), fmt_real(p.l_ac_max)])
        .collect();
    rows.push(vec![fmt_real(terminal), fmt_real(0.0)]);
    write_table(open_out(out)?, &FRONTIER_HEADER, rows)?;
    summary(
        out,
        &format!("l_bc_max_km={} l_ac_max_km={}", fmt_real(terminal), fmt_real(l_ac_max)),
    );
    Ok(Outcome::of(l_ac_max))
}

fn run_coverage(
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    cli_seed: Option<u64>,
    args: &CoverageArgs,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    let truth = EstimatedParams::from_protocol(&scenario.protocol);
    let record = coverage_experiment(&truth, args.m, args.eps_pe, args.trials, cfg.seed(cli_seed), Sampler::Auto)?;
    let rows = record.iter().map(|(name, f)| {
        vec![
            name.to_string(),
            fmt_real(f),
            record.trials.to_string(),
            fmt_real(args.eps_pe),
        ]
    });
    write_table(open_out(out)?, &COVERAGE_HEADER, rows)?;
    let min = record.iter().map(|(_, f)| f).fold(f64::INFINITY, f64::min);
    summary(out, &format!("min_coverage={}", fmt_real(min)));
    Ok(Outcome::Key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_and_paths() {
        assert_eq!(block_label(Some(1_000_000)), "n1e6");
        assert_eq!(block_label(Some(2_500_000_000)), "n2.5e9");
        assert_eq!(block_label(None), "inf");
        assert_eq!(labelled_path(Path::new("out/fig.csv"), "n1e6"), PathBuf::from("out/fig.n1e6.csv"));
        assert_eq!(labelled_path(Path::new("fig"), "inf"), PathBuf::from("fig.inf"));
    }

    #[test]
    fn outcome_codes() {
        assert_eq!(Outcome::of(1e-3).exit_code(), 0);
        assert_eq!(Outcome::of(0.0).exit_code(), 2);
        assert_eq!(Outcome::of(-1.0).exit_code(), 2);
    }
}
