//! The `latent-match` command line.
//!
//! Exit codes: 0 success (or verification pass), 1 verification failure,
//! 2 usage error, 3 I/O or file-format error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::batch::LatentBatch;
use crate::error::{Error, Result};
use crate::io::{self, Cell};
use crate::ops::{self, OperationSpec};
use crate::priors::{self, PriorSpec, ScalarDist};
use crate::rng;
use crate::stats::{self, KsReport, NormApprox, KS_ALPHA};
use crate::transport::{self, MapBuildConfig, TransportMap1D};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "LT_THREADS";

const DEFAULT_DIM: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "latent-match",
    version,
    about = "Latent-space operations with distribution-matched counterparts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// The plain operation.
    Raw,
    /// The operation followed by its monotone transport map.
    Matched,
    /// Spherical interpolation (interpolation only).
    Slerp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HistSource {
    /// Prior samples.
    Prior,
    /// Midpoints of two-point interpolation, per --mode.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapOp {
    Interp,
    Npoint,
    Vicinity,
    Analogy,
}

#[derive(Debug, Clone, Args)]
pub struct PriorArgs {
    /// Component family of the prior.
    #[arg(long, value_enum, default_value_t = Family::Uniform)]
    pub prior: Family,
    /// Half-width of the uniform prior, support [-a, a].
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Standard deviation of the Gaussian prior.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Latent dimension [default: 100, or the input file's width].
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub dim: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PriorArgs {
    fn component(&self) -> Result<ScalarDist> {
        match self.prior {
            Family::Uniform => ScalarDist::uniform(self.a),
            Family::Gaussian => ScalarDist::gaussian(self.sigma),
        }
    }

    fn spec(&self) -> Result<PriorSpec> {
        PriorSpec::new(self.component()?, self.dim.map_or(DEFAULT_DIM, |d| d as usize))
    }

    /// Prior matching an input batch; an explicit `--dim` must agree.
    fn spec_for(&self, batch: &LatentBatch) -> Result<PriorSpec> {
        if let Some(d) = self.dim {
            if d as usize != batch.d() {
                return Err(Error::DimensionMismatch {
                    expected: d as usize,
                    found: batch.d(),
                });
            }
        }
        PriorSpec::new(self.component()?, batch.d())
    }
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    /// Monte-Carlo samples for tabulated transport maps.
    #[arg(long, default_value_t = 1_000_000)]
    pub map_samples: usize,
    /// Knots of tabulated transport maps.
    #[arg(long, default_value_t = 1024)]
    pub knots: usize,
}

impl MapArgs {
    fn config(&self) -> MapBuildConfig {
        MapBuildConfig {
            n_samples: self.map_samples,
            knots: self.knots,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw prior samples into an LVF1 file.
    Sample {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-point or n-point interpolation.
    ///
    /// y = t·z1 + (1−t)·z2, so t = 1 returns z1 and t = 0 returns z2. The
    /// slerp mode follows the same convention along the great arc.
    Interpolate {
        #[command(flatten)]
        prior: PriorArgs,
        /// Pairs to generate when no input files are given.
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        /// Interpolation parameter; repeat or comma-separate for several
        /// outputs.
        #[arg(long = "t", value_delimiter = ',')]
        t: Vec<f64>,
        /// Weights for n-point interpolation, comma-separated, summing to 1.
        #[arg(long, value_delimiter = ',', conflicts_with = "t")]
        weights: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Mode::Raw)]
        mode: Mode,
        /// Operand batches (z1, z2, ...); generated from the prior if absent.
        #[arg(long = "in")]
        inputs: Vec<PathBuf>,
        /// Output file; with several t values `<stem>.t<value>.<ext>`.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Vicinity sampling y = z + eps·u around each center.
    Vicinity {
        #[command(flatten)]
        prior: PriorArgs,
        /// Centers to generate when --in is absent.
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long)]
        eps: f64,
        /// Samples per center.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Mode::Raw)]
        mode: Mode,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analogy y = z3 + (z2 − z1).
    Analogy {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Mode::Raw)]
        mode: Mode,
        /// Three operand batches z1, z2, z3.
        #[arg(long = "in")]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Random walks of chained vicinity steps.
    ///
    /// The trajectory file holds (steps + 1)·n rows, step-major: all walkers
    /// at step 0, then all walkers at step 1, and so on.
    Walk {
        #[command(flatten)]
        prior: PriorArgs,
        /// Number of walkers.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Mode::Raw)]
        mode: Mode,
        /// Starting points; prior samples if absent.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-step CSV report; printed to stdout if absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// KS-test a batch against the prior; exits 1 on failure.
    Verify {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long = "in")]
        input: PathBuf,
        /// Fixed KS threshold for every test, instead of Bonferroni-adjusted
        /// critical values at level 0.01.
        #[arg(long)]
        threshold: Option<f64>,
        /// JSON report path; printed to stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Histogram of squared norms with CLT predictions.
    NormHist {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        /// Batch to analyse; generated from --source if absent.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = HistSource::Prior)]
        source: HistSource,
        #[arg(long, value_enum, default_value_t = Mode::Raw)]
        mode: Mode,
        #[arg(long, default_value_t = 100)]
        bins: usize,
        /// Histogram range "lo,hi"; defaults to mean ± 6 std of both the
        /// prior and the midpoint approximations.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        range: Option<Vec<f64>>,
        /// Histogram CSV (edge_lo,edge_hi,count).
        #[arg(long)]
        out: PathBuf,
        /// Summary CSV; printed to stdout if absent.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Estimate a tabulated transport map and dump it as y,z CSV.
    BuildMap {
        #[command(flatten)]
        prior: PriorArgs,
        #[arg(long, value_enum)]
        op: MapOp,
        #[arg(long = "t", default_value_t = 0.5)]
        t: f64,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        /// Monte-Carlo samples.
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 1024)]
        knots: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool may already exist when called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Sample { prior, n, out } => {
            let spec = prior.spec()?;
            io::write_batch(out, &priors::sample(&spec, n, prior.seed)?)?;
            Ok(EXIT_OK)
        }
        Command::Interpolate {
            prior,
            n,
            t,
            weights,
            mode,
            inputs,
            out,
            map,
        } => cmd_interpolate(&prior, n, t, weights, mode, &inputs, &out, &map.config()),
        Command::Vicinity {
            prior,
            n,
            eps,
            k,
            mode,
            input,
            out,
        } => cmd_vicinity(&prior, n, eps, k, mode, input.as_deref(), &out),
        Command::Analogy {
            prior,
            n,
            mode,
            inputs,
            out,
            map,
        } => {
            let op = OperationSpec::Analogy;
            let (spec, operands) = load_or_sample_operands(&prior, &op, n, &inputs)?;
            let y = run_mode(&op, mode, &spec, &operands, &map.config(), prior.seed)?;
            io::write_batch(out, &y)?;
            Ok(EXIT_OK)
        }
        Command::Walk {
            prior,
            n,
            eps,
            steps,
            mode,
            input,
            out,
            report,
        } => cmd_walk(&prior, n, eps, steps, mode, input.as_deref(), &out, report.as_deref()),
        Command::Verify {
            prior,
            input,
            threshold,
            out,
        } => cmd_verify(&prior, &input, threshold, out.as_deref()),
        Command::NormHist {
            prior,
            n,
            input,
            source,
            mode,
            bins,
            range,
            out,
            summary,
            map,
        } => cmd_norm_hist(
            &prior,
            n,
            input.as_deref(),
            source,
            mode,
            bins,
            range,
            &out,
            summary.as_deref(),
            &map.config(),
        ),
        Command::BuildMap {
            prior,
            op,
            t,
            weights,
            eps,
            n,
            knots,
            out,
        } => {
            let op = match op {
                MapOp::Interp => OperationSpec::TwoPointInterp { t },
                MapOp::Npoint => OperationSpec::NPointInterp {
                    weights: weights.ok_or_else(|| {
                        Error::InvalidArgument("--op npoint requires --weights".into())
                    })?,
                },
                MapOp::Vicinity => OperationSpec::Vicinity { eps },
                MapOp::Analogy => OperationSpec::Analogy,
            };
            let spec = PriorSpec::new(prior.component()?, 1)?;
            match transport::build_empirical_map(&op, &spec, n, knots, prior.seed)? {
                TransportMap1D::Tabulated(table) => table.write_csv(out)?,
                other => unreachable!("empirical builder returned {other:?}"),
            }
            Ok(EXIT_OK)
        }
    }
}

/// Reads the operand files, or samples `op.arity()` prior batches.
fn load_or_sample_operands(
    prior: &PriorArgs,
    op: &OperationSpec,
    n: usize,
    inputs: &[PathBuf],
) -> Result<(PriorSpec, Vec<LatentBatch>)> {
    if inputs.is_empty() {
        let spec = prior.spec()?;
        let operands = ops::sample_operands(op, &spec, n, prior.seed)?;
        return Ok((spec, operands));
    }
    if inputs.len() != op.arity() {
        return Err(Error::InvalidArgument(format!(
            "{:?} needs {} input files, got {}",
            op.kind(),
            op.arity(),
            inputs.len()
        )));
    }
    let operands = inputs.iter().map(io::read_batch).collect::<Result<Vec<_>>>()?;
    let spec = prior.spec_for(&operands[0])?;
    Ok((spec, operands))
}

/// Applies `op` in the requested mode. The slerp mode swaps the operands
/// so that its `t` runs in the same direction as linear interpolation.
fn run_mode(
    op: &OperationSpec,
    mode: Mode,
    prior: &PriorSpec,
    operands: &[LatentBatch],
    build: &MapBuildConfig,
    seed: u64,
) -> Result<LatentBatch> {
    let refs: Vec<&LatentBatch> = operands.iter().collect();
    let op_seed = rng::sub_seed(seed, u64::MAX);
    match (mode, op) {
        (Mode::Raw, _) => ops::apply_operation(op, &refs, prior, op_seed),
        (Mode::Matched, _) => transport::matched_operation(op, prior, &refs, build, op_seed),
        (Mode::Slerp, OperationSpec::TwoPointInterp { t }) => {
            ops::apply_operation(&OperationSpec::Slerp { t: *t }, &[refs[1], refs[0]], prior, op_seed)
        }
        (Mode::Slerp, other) => Err(Error::InvalidArgument(format!(
            "slerp mode only applies to two-point interpolation, not {:?}",
            other.kind()
        ))),
    }
}

fn output_for_t(out: &Path, t: f64) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.t{t}.{}", ext.to_string_lossy()),
        None => format!("{stem}.t{t}"),
    };
    out.with_file_name(name)
}

#[allow(clippy::too_many_arguments)]
fn cmd_interpolate(
    prior: &PriorArgs,
    n: usize,
    ts: Vec<f64>,
    weights: Option<Vec<f64>>,
    mode: Mode,
    inputs: &[PathBuf],
    out: &Path,
    build: &MapBuildConfig,
) -> Result<i32> {
    if let Some(weights) = weights {
        let op = OperationSpec::NPointInterp { weights };
        op.validate()?;
        let (spec, operands) = load_or_sample_operands(prior, &op, n, inputs)?;
        let y = run_mode(&op, mode, &spec, &operands, build, prior.seed)?;
        io::write_batch(out, &y)?;
        return Ok(EXIT_OK);
    }
    let ts = if ts.is_empty() { vec![0.5] } else { ts };
    let first = OperationSpec::TwoPointInterp { t: ts[0] };
    let (spec, operands) = load_or_sample_operands(prior, &first, n, inputs)?;
    for &t in &ts {
        let op = OperationSpec::TwoPointInterp { t };
        let y = run_mode(&op, mode, &spec, &operands, build, prior.seed)?;
        let path = if ts.len() == 1 { out.to_path_buf() } else { output_for_t(out, t) };
        io::write_batch(path, &y)?;
    }
    Ok(EXIT_OK)
}

fn load_or_sample(prior: &PriorArgs, n: usize, input: Option<&Path>) -> Result<(PriorSpec, LatentBatch)> {
    match input {
        Some(path) => {
            let batch = io::read_batch(path)?;
            Ok((prior.spec_for(&batch)?, batch))
        }
        None => {
            let spec = prior.spec()?;
            let batch = priors::sample(&spec, n, rng::sub_seed(prior.seed, 0))?;
            Ok((spec, batch))
        }
    }
}

fn cmd_vicinity(
    prior: &PriorArgs,
    n: usize,
    eps: f64,
    k: usize,
    mode: Mode,
    input: Option<&Path>,
    out: &Path,
) -> Result<i32> {
    if mode == Mode::Slerp {
        return Err(Error::InvalidArgument("slerp mode does not apply to vicinity sampling".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("--k must be >= 1".into()));
    }
    let (spec, centers) = load_or_sample(prior, n, input)?;
    let mut data = Vec::with_capacity(centers.n() * k * centers.d());
    for row in centers.rows() {
        for _ in 0..k {
            data.extend_from_slice(row);
        }
    }
    let repeated = LatentBatch::new(centers.n() * k, centers.d(), data)?;
    let op = OperationSpec::Vicinity { eps };
    let y = run_mode(&op, mode, &spec, &[repeated], &MapBuildConfig::default(), prior.seed)?;
    io::write_batch(out, &y)?;
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn cmd_walk(
    prior: &PriorArgs,
    n: usize,
    eps: f64,
    steps: usize,
    mode: Mode,
    input: Option<&Path>,
    out: &Path,
    report: Option<&Path>,
) -> Result<i32> {
    let matched = match mode {
        Mode::Raw => false,
        Mode::Matched => true,
        Mode::Slerp => {
            return Err(Error::InvalidArgument("slerp mode does not apply to random walks".into()))
        }
    };
    let (spec, start) = load_or_sample(prior, n, input)?;
    let trajectory =
        ops::random_walk_batch(&start, eps, steps, matched, &spec, rng::sub_seed(prior.seed, 1))?;
    let rows = walk_report(&trajectory, &spec)?;
    io::write_batch(out, &LatentBatch::concat(&trajectory)?)?;
    emit_csv(report, WALK_HEADER, &rows)?;
    Ok(EXIT_OK)
}

pub const WALK_HEADER: &[&str] = &["step", "mean", "var", "ks", "threshold", "pass"];

/// One row per step: pooled component mean, variance and KS against the
/// prior. Thresholds are Bonferroni-adjusted over the `steps + 1` tests.
pub fn walk_report(trajectory: &[LatentBatch], prior: &PriorSpec) -> Result<Vec<Vec<Cell>>> {
    let alpha = KS_ALPHA / trajectory.len() as f64;
    trajectory
        .iter()
        .enumerate()
        .map(|(step, batch)| {
            let values = batch.as_slice();
            let (mean, var) = stats::mean_var(values);
            let ks = stats::ks_statistic(values, &prior.component)?
                .with_threshold(stats::ks_critical(values.len(), alpha));
            Ok(vec![
                Cell::from(step),
                Cell::from(mean),
                Cell::from(var),
                Cell::from(ks.statistic),
                Cell::from(ks.threshold),
                Cell::from(ks.pass),
            ])
        })
        .collect()
}

/// JSON document written by `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub pooled: KsReport,
    pub components: Vec<KsReport>,
    pub pass: bool,
}

/// KS-tests every column and the pooled entries of `batch` against the
/// prior component law.
///
/// Without an explicit threshold each of the `d + 1` tests is judged at its
/// asymptotic critical value for level `0.01 / (d + 1)`, so prior samples
/// pass with probability at least 0.99 overall.
pub fn verify_batch(batch: &LatentBatch, prior: &PriorSpec, threshold: Option<f64>) -> Result<VerifyReport> {
    let alpha = KS_ALPHA / (batch.d() + 1) as f64;
    let judge = |r: KsReport| match threshold {
        Some(t) => r.with_threshold(t),
        None => r.with_threshold(stats::ks_critical(r.n, alpha)),
    };
    let components = (0..batch.d())
        .map(|j| stats::ks_statistic(&batch.column(j), &prior.component).map(judge))
        .collect::<Result<Vec<_>>>()?;
    let pooled = judge(stats::ks_statistic(batch.as_slice(), &prior.component)?);
    let pass = pooled.pass && components.iter().all(|c| c.pass);
    Ok(VerifyReport {
        pooled,
        components,
        pass,
    })
}

fn cmd_verify(prior: &PriorArgs, input: &Path, threshold: Option<f64>, out: Option<&Path>) -> Result<i32> {
    if let Some(t) = threshold {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidArgument(format!("--threshold must lie in (0, 1], got {t}")));
        }
    }
    let batch = io::read_batch(input)?;
    let spec = prior.spec_for(&batch)?;
    let report = verify_batch(&batch, &spec, threshold)?;
    match out {
        Some(path) => io::write_json_report(path, &report)?,
        None => {
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::InvalidArgument(format!("json encoding: {e}")))?;
            writeln!(std::io::stdout(), "{text}").map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

pub const SUMMARY_HEADER: &[&str] =
    &["source", "n", "mean", "std", "clt_mean", "clt_var", "underflow", "overflow"];

#[allow(clippy::too_many_arguments)]
fn cmd_norm_hist(
    prior: &PriorArgs,
    n: usize,
    input: Option<&Path>,
    source: HistSource,
    mode: Mode,
    bins: usize,
    range: Option<Vec<f64>>,
    out: &Path,
    summary: Option<&Path>,
    build: &MapBuildConfig,
) -> Result<i32> {
    let midpoint = OperationSpec::TwoPointInterp { t: 0.5 };
    let (spec, batch) = match input {
        Some(path) => {
            let batch = io::read_batch(path)?;
            (prior.spec_for(&batch)?, batch)
        }
        None => {
            let spec = prior.spec()?;
            let batch = match source {
                HistSource::Prior => priors::sample(&spec, n, prior.seed)?,
                HistSource::Midpoint => {
                    let operands = ops::sample_operands(&midpoint, &spec, n, prior.seed)?;
                    run_mode(&midpoint, mode, &spec, &operands, build, prior.seed)?
                }
            };
            (spec, batch)
        }
    };
    let clt = match (source, mode) {
        (HistSource::Prior, _) | (HistSource::Midpoint, Mode::Matched) => {
            Some(stats::clt_squared_norm(&spec, None)?)
        }
        (HistSource::Midpoint, Mode::Raw) => Some(stats::clt_squared_norm(&spec, Some(&midpoint))?),
        (HistSource::Midpoint, Mode::Slerp) => None,
    };
    let norms = stats::squared_norm_samples(&batch);
    let (lo, hi) = match range {
        Some(r) => (r[0], r[1]),
        None => default_norm_range(&spec)?,
    };
    let hist = stats::histogram(&norms, bins, (lo, hi))?;
    let rows: Vec<Vec<Cell>> = hist
        .bins()
        .map(|(a, b, c)| vec![Cell::from(a), Cell::from(b), Cell::from(c)])
        .collect();
    io::write_csv_report(out, &["edge_lo", "edge_hi", "count"], &rows)?;

    let (mean, var) = stats::mean_var(&norms);
    let label = match (source, mode) {
        (HistSource::Prior, _) => "prior",
        (HistSource::Midpoint, Mode::Raw) => "midpoint",
        (HistSource::Midpoint, Mode::Matched) => "matched_midpoint",
        (HistSource::Midpoint, Mode::Slerp) => "slerp_midpoint",
    };
    let label = if input.is_some() { "input" } else { label };
    let clt_cells = |f: fn(&NormApprox) -> f64| clt.as_ref().map_or(Cell::Empty, |c| Cell::from(f(c)));
    let row = vec![
        Cell::from(label),
        Cell::from(norms.len()),
        Cell::from(mean),
        Cell::from(var.sqrt()),
        clt_cells(|c| c.mean),
        clt_cells(|c| c.var),
        Cell::from(hist.underflow),
        Cell::from(hist.overflow),
    ];
    emit_csv(summary, SUMMARY_HEADER, &[row])?;
    Ok(EXIT_OK)
}

/// Covers mean ± 6 std of both the prior and midpoint approximations.
pub fn default_norm_range(prior: &PriorSpec) -> Result<(f64, f64)> {
    let p = stats::clt_squared_norm(prior, None)?;
    let m = stats::clt_squared_norm(prior, Some(&OperationSpec::TwoPointInterp { t: 0.5 }))?;
    let lo = (m.mean - 6.0 * m.std()).min(p.mean - 6.0 * p.std()).max(0.0);
    let hi = (m.mean + 6.0 * m.std()).max(p.mean + 6.0 * p.std());
    Ok((lo, hi))
}

fn emit_csv(path: Option<&Path>, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    match path {
        Some(p) => io::write_csv_report(p, header, rows),
        None => {
            let bytes = io::render_csv(header, rows)?;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn t_suffixes() {
        assert_eq!(output_for_t(Path::new("a/z.lvf"), 0.25), PathBuf::from("a/z.t0.25.lvf"));
        assert_eq!(output_for_t(Path::new("z"), 1.0), PathBuf::from("z.t1"));
    }

    #[test]
    fn zero_dim_is_a_usage_error() {
        let err = Cli::try_parse_from(["latent-match", "sample", "--dim", "0", "--out", "x"]).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn norm_range_covers_both_shells() {
        let (lo, hi) = default_norm_range(&PriorSpec::uniform(1.0, 100).unwrap()).unwrap();
        assert!(lo <= 16.67 - 6.0 * 1.49 && hi >= 33.33 + 6.0 * 2.98);
    }
}
