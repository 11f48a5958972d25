//! Monotone transport maps that send an operation's output law back to the
//! prior.
//!
//! For i.i.d. components and a cost that adds up over coordinates, the
//! optimal map acts on each coordinate separately with the same scalar map
//! `T(y) = F_Z⁻¹(F_Y(y))`, where `F_Y` is the component CDF of the
//! operation output and `F_Z⁻¹` the prior quantile. Any non-decreasing map
//! that pushes `Y` onto `Z` is that map, which is how the closed forms below
//! are obtained. Everything else falls back to a tabulated map estimated
//! from Monte-Carlo samples of `Y`.

use std::path::Path;

use crate::batch::LatentBatch;
use crate::error::{Error, Result};
use crate::io::{self, Cell};
use crate::ops::{self, OperationSpec};
use crate::priors::{PriorSpec, ScalarDist};
use crate::rng;

/// Smallest knot count accepted for a tabulated map.
pub const MIN_KNOTS: usize = 64;
/// Smallest Monte-Carlo sample count accepted by [`build_empirical_map`].
pub const MIN_MAP_SAMPLES: usize = 10_000;

/// Sample and knot budget for tabulated maps built on demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapBuildConfig {
    pub n_samples: usize,
    pub knots: usize,
}

impl Default for MapBuildConfig {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            knots: 1024,
        }
    }
}

/// Piecewise-linear non-decreasing lookup table.
///
/// Inputs outside `[ys[0], ys[last]]` clamp to the boundary images.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable {
    ys: Vec<f64>,
    zs: Vec<f64>,
}

impl MonotoneTable {
    /// Requires at least [`MIN_KNOTS`] knots, strictly increasing `ys` and
    /// non-decreasing `zs`, all finite.
    pub fn new(ys: Vec<f64>, zs: Vec<f64>) -> Result<Self> {
        if ys.len() != zs.len() {
            return Err(Error::DimensionMismatch {
                expected: ys.len(),
                found: zs.len(),
            });
        }
        if ys.len() < MIN_KNOTS {
            return Err(Error::InvalidArgument(format!(
                "tabulated map needs at least {MIN_KNOTS} knots, got {}",
                ys.len()
            )));
        }
        if ys.iter().chain(&zs).any(|v| !v.is_finite()) {
            return Err(Error::Domain("tabulated map knots must be finite".into()));
        }
        if ys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("knot inputs must be strictly increasing".into()));
        }
        if zs.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("knot images must be non-decreasing".into()));
        }
        Ok(Self { ys, zs })
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ys.iter().copied().zip(self.zs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn eval(&self, y: f64) -> f64 {
        let last = self.ys.len() - 1;
        if y <= self.ys[0] {
            return self.zs[0];
        }
        if y >= self.ys[last] {
            return self.zs[last];
        }
        // First knot strictly above y; 1 <= hi <= last here.
        let hi = self.ys.partition_point(|&k| k <= y);
        let (y0, y1) = (self.ys[hi - 1], self.ys[hi]);
        let (z0, z1) = (self.zs[hi - 1], self.zs[hi]);
        let w = (y - y0) / (y1 - y0);
        // Convex combination stays inside [z0, z1].
        (z0 + w * (z1 - z0)).clamp(z0, z1)
    }

    /// Writes the table as a two-column `y,z` CSV.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows: Vec<Vec<Cell>> = self
            .knots()
            .map(|(y, z)| vec![Cell::Real(y), Cell::Real(z)])
            .collect();
        io::write_csv_report(path, &["y", "z"], &rows)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (header, rows) = io::read_csv_reals(path)?;
        if header != ["y", "z"] {
            return Err(Error::Csv {
                path: path.to_path_buf(),
                message: format!("expected header y,z, found {}", header.join(",")),
            });
        }
        let (ys, zs) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
        Self::new(ys, zs)
    }
}

/// A non-decreasing scalar map applied independently to every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum TransportMap1D {
    /// `z = factor · y`
    AnalyticScale { factor: f64 },
    /// Uniform prior, two-point interpolation at `t`.
    UniformInterp { t: f64, half_width: f64 },
    /// Uniform prior, vicinity sampling with radius `eps`.
    UniformVicinity { eps: f64, half_width: f64 },
    Tabulated(MonotoneTable),
}

impl TransportMap1D {
    pub fn identity() -> Self {
        TransportMap1D::AnalyticScale { factor: 1.0 }
    }

    pub fn apply(&self, y: f64) -> f64 {
        match self {
            TransportMap1D::AnalyticScale { factor } => factor * y,
            TransportMap1D::UniformInterp { t, half_width } => {
                scaled_uniform(*half_width, y, |u| uniform_interp_map(u, *t))
            }
            TransportMap1D::UniformVicinity { eps, half_width } => {
                scaled_uniform(*half_width, y, |u| uniform_vicinity_map(u, *eps))
            }
            TransportMap1D::Tabulated(table) => table.eval(y),
        }
    }
}

fn scaled_uniform(a: f64, y: f64, unit: impl Fn(f64) -> f64) -> f64 {
    if a == 1.0 {
        unit(y)
    } else {
        a * unit(y / a)
    }
}

/// Per-component rescaling that matches Gaussian-prior operations.
pub fn gaussian_matched_scale(op: &OperationSpec) -> Result<f64> {
    op.validate()?;
    let sum_sq = match op {
        OperationSpec::TwoPointInterp { t } => t * t + (1.0 - t) * (1.0 - t),
        OperationSpec::NPointInterp { weights } => weights.iter().map(|w| w * w).sum(),
        OperationSpec::Vicinity { eps } => 1.0 + eps * eps,
        OperationSpec::Analogy => 3.0,
        OperationSpec::Slerp { .. } | OperationSpec::RandomWalk { .. } => {
            return Err(Error::Unsupported(format!(
                "no Gaussian scale factor for {:?}",
                op.kind()
            )))
        }
    };
    Ok(1.0 / sum_sq.sqrt())
}

/// CDF of `t·Z₁ + (1−t)·Z₂` for `Z₁, Z₂ ~ U(-1, 1)` i.i.d.
///
/// The law is symmetric in `t ↔ 1−t`, so the formulas assume `t >= 1/2`.
/// The density is a trapezoid with breakpoints `±1` and `±(2t − 1)`.
pub fn uniform_interp_cdf(y: f64, t: f64) -> f64 {
    let t = t.max(1.0 - t);
    if y <= -1.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.5 * y + 0.5;
    }
    let norm = 4.0 * t * (1.0 - t);
    let inner = 2.0 * t - 1.0;
    if y < -inner {
        0.5 * (y + 1.0) * (y + 1.0) / norm
    } else if y <= inner {
        (y + t) / (2.0 * t)
    } else {
        1.0 - 0.5 * (1.0 - y) * (1.0 - y) / norm
    }
}

/// Monotone map from the uniform two-point interpolation law back to
/// `U(-1, 1)`. The endpoints `t ∈ {0, 1}` are the identity.
pub fn uniform_interp_map(y: f64, t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return y.clamp(-1.0, 1.0);
    }
    (2.0 * (uniform_interp_cdf(y, t) - 0.5)).clamp(-1.0, 1.0)
}

/// Monotone map from the law of `Z + ε·U` (`Z, U ~ U(-1, 1)`) back to
/// `U(-1, 1)`.
///
/// Scaling by `t = 1/(1+ε)` turns `Z + εU` into `tZ + (1−t)U`, which is the
/// two-point interpolation law at `t`.
pub fn uniform_vicinity_map(y: f64, eps: f64) -> f64 {
    if eps <= 0.0 {
        return y;
    }
    let t = 1.0 / (1.0 + eps);
    uniform_interp_map(t * y, t)
}

/// Right-continuous empirical CDF over sorted samples: `#{x <= y} / n`.
fn ecdf_sorted(sorted: &[f64], y: f64) -> f64 {
    sorted.partition_point(|&x| x <= y) as f64 / sorted.len() as f64
}

/// Estimates `T = F_Z⁻¹ ∘ F̂_Y` from `n_samples` Monte-Carlo draws of one
/// output component of `op`.
///
/// Knots sit at the sample quantiles of equally spaced probabilities
/// (including the sample minimum and maximum), which resolves the tails
/// where the density of `Y` is thin.
pub fn build_empirical_map(
    op: &OperationSpec,
    prior: &PriorSpec,
    n_samples: usize,
    knots: usize,
    seed: u64,
) -> Result<TransportMap1D> {
    op.validate()?;
    if !op.is_pointwise() {
        return Err(Error::Unsupported(
            "slerp is not pointwise; no scalar transport map exists".into(),
        ));
    }
    if n_samples < MIN_MAP_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_MAP_SAMPLES} samples to build a map, got {n_samples}"
        )));
    }
    if knots < MIN_KNOTS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_KNOTS} knots, got {knots}"
        )));
    }
    let step_op = match op {
        OperationSpec::RandomWalk { eps, .. } => OperationSpec::Vicinity { eps: *eps },
        other => other.clone(),
    };
    let scalar_prior = prior.with_dim(1)?;
    let mut ys = ops::sample_operation(&step_op, &scalar_prior, n_samples, seed)?.into_vec();
    ys.sort_unstable_by(f64::total_cmp);

    let last = ys.len() - 1;
    let mut grid_y: Vec<f64> = Vec::with_capacity(knots);
    let mut grid_z = Vec::with_capacity(knots);
    for k in 0..knots {
        let idx = ((k as f64) * last as f64 / (knots - 1) as f64).round() as usize;
        let y = ys[idx.min(last)];
        if grid_y.last().is_some_and(|&prev| y <= prev) {
            continue;
        }
        grid_y.push(y);
        grid_z.push(prior.component.quantile(ecdf_sorted(&ys, y))?);
    }
    Ok(TransportMap1D::Tabulated(MonotoneTable::new(grid_y, grid_z)?))
}

/// Applies the scalar map to every entry of `batch`.
pub fn apply_matched(batch: &LatentBatch, map: &TransportMap1D) -> LatentBatch {
    batch.map(|v| map.apply(v))
}

/// Chooses the transport map for `op` under `prior`: closed forms where
/// they exist, a tabulated estimate otherwise.
pub fn matched_map(
    op: &OperationSpec,
    prior: &PriorSpec,
    build: &MapBuildConfig,
    seed: u64,
) -> Result<TransportMap1D> {
    op.validate()?;
    let step_op = match op {
        OperationSpec::Slerp { .. } => {
            return Err(Error::Unsupported(
                "slerp is a baseline and has no matched version".into(),
            ))
        }
        OperationSpec::RandomWalk { eps, .. } => OperationSpec::Vicinity { eps: *eps },
        other => other.clone(),
    };
    match (prior.component, &step_op) {
        (ScalarDist::Gaussian { .. }, _) => Ok(TransportMap1D::AnalyticScale {
            factor: gaussian_matched_scale(&step_op)?,
        }),
        (ScalarDist::Uniform { half_width }, OperationSpec::TwoPointInterp { t }) => {
            Ok(TransportMap1D::UniformInterp { t: *t, half_width })
        }
        (ScalarDist::Uniform { half_width }, OperationSpec::Vicinity { eps }) => {
            Ok(TransportMap1D::UniformVicinity { eps: *eps, half_width })
        }
        _ => build_empirical_map(&step_op, prior, build.n_samples, build.knots, seed),
    }
}

/// Runs `op` on prior-distributed operands and pushes the result back onto
/// the prior. Tabulated maps are built from a stream independent of the
/// operands.
pub fn matched_operation(
    op: &OperationSpec,
    prior: &PriorSpec,
    operands: &[&LatentBatch],
    build: &MapBuildConfig,
    seed: u64,
) -> Result<LatentBatch> {
    let map = matched_map(op, prior, build, rng::sub_seed(seed, 0x6d61_7070))?;
    let raw = ops::apply_operation(op, operands, prior, seed)?;
    Ok(apply_matched(&raw, &map))
}
