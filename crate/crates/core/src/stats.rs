//! Distribution checks: one-sample KS distances, moment estimates, squared
//! norm statistics and histograms.

use serde::Serialize;

use crate::batch::LatentBatch;
use crate::error::{Error, Result};
use crate::ops::OperationSpec;
use crate::priors::{PriorSpec, ScalarDist};

/// Significance level behind [`KsReport::critical_001`].
pub const KS_ALPHA: f64 = 0.01;

/// Outcome of a one-sample Kolmogorov–Smirnov comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n: usize,
    /// Asymptotic critical value at α = 0.01, about `1.63 / √n`.
    #[serde(skip)]
    pub critical_001: f64,
    /// Threshold the pass flag was decided against.
    pub threshold: f64,
    pub pass: bool,
}

impl KsReport {
    /// Re-decides `pass` against a different threshold.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self.pass = self.statistic < threshold;
        self
    }
}

/// Asymptotic Kolmogorov critical value `√(−ln(α/2)/2) / √n`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// `sup_x |F̂_n(x) − F(x)|` for an arbitrary reference CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("KS statistic of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        sup = sup.max(above.abs()).max(below.abs());
    }
    Ok(sup.min(1.0))
}

/// KS comparison of `samples` against a component distribution, judged at
/// the α = 0.01 critical value.
pub fn ks_statistic(samples: &[f64], dist: &ScalarDist) -> Result<KsReport> {
    let statistic = ks_distance(samples, |x| dist.cdf(x))?;
    let critical = ks_critical(samples.len(), KS_ALPHA);
    Ok(KsReport {
        statistic,
        n: samples.len(),
        critical_001: critical,
        threshold: critical,
        pass: statistic < critical,
    })
}

/// Population mean and variance (divisor `n`).
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Normal approximation `N(mean, var)` of a squared-norm distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormApprox {
    pub mean: f64,
    pub var: f64,
}

impl NormApprox {
    pub fn std(&self) -> f64 {
        self.var.sqrt()
    }
}

/// CLT approximation of `‖y‖²` for prior samples (`op = None`) or for
/// linear midpoints (`TwoPointInterp { t: 0.5 }`).
///
/// For `d` i.i.d. components, `‖z‖² ≈ N(d·E[Z²], d·Var[Z²])`. A midpoint
/// component has second moment `E[Z²]/2` and its square has variance
/// `Var[Z²]/4`.
pub fn clt_squared_norm(prior: &PriorSpec, op: Option<&OperationSpec>) -> Result<NormApprox> {
    let m = prior.component.moments();
    let d = prior.dim as f64;
    match op {
        None => Ok(NormApprox {
            mean: d * m.mu_z2,
            var: d * m.var_z2,
        }),
        Some(OperationSpec::TwoPointInterp { t }) if *t == 0.5 => Ok(NormApprox {
            mean: d * m.mu_z2 / 2.0,
            var: d * m.var_z2 / 4.0,
        }),
        Some(other) => Err(Error::Unsupported(format!(
            "CLT squared-norm approximation only covers the prior and the linear midpoint, got {other:?}"
        ))),
    }
}

pub fn squared_norm_samples(batch: &LatentBatch) -> Vec<f64> {
    batch.rows().map(|r| r.iter().map(|x| x * x).sum()).collect()
}

/// Fraction of `other` exceeding the `q`-quantile of `reference`.
///
/// Used with `q = 0.001` to quantify how little the squared-norm shells of
/// prior samples and operation outputs overlap.
pub fn exceedance_fraction(reference: &[f64], other: &[f64], q: f64) -> Result<f64> {
    if reference.is_empty() || other.is_empty() {
        return Err(Error::InvalidArgument("exceedance of an empty sample".into()));
    }
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level must lie in [0, 1), got {q}")));
    }
    let mut sorted = reference.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let cut = sorted[((q * sorted.len() as f64).floor() as usize).min(sorted.len() - 1)];
    Ok(other.iter().filter(|&&v| v > cut).count() as f64 / other.len() as f64)
}

/// Equal-width histogram with out-of-range tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges from `lo` to `hi`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Values below `lo`.
    pub underflow: u64,
    /// Values above `hi`, plus NaN.
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(edge_lo, edge_hi, count)` per bin.
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.edges
            .windows(2)
            .zip(&self.counts)
            .map(|(e, &c)| (e[0], e[1], c))
    }
}

/// Bins are `[lo + k·w, lo + (k+1)·w)` except the last, which also takes
/// `hi`.
pub fn histogram(values: &[f64], bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "histogram range must satisfy lo < hi, got ({lo}, {hi})"
        )));
    }
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + k as f64 * width })
        .collect();
    let mut counts = vec![0u64; bins];
    let (mut underflow, mut overflow) = (0, 0);
    for &v in values {
        if v < lo {
            underflow += 1;
        } else if v > hi || v.is_nan() {
            overflow += 1;
        } else {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    Ok(Histogram {
        edges,
        counts,
        underflow,
        overflow,
    })
}
