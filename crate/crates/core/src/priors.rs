//! Component distributions of the latent prior.
//!
//! A prior is a product of `d` i.i.d. scalar components. Only the symmetric
//! uniform family `U(-a, a)` and the centered Gaussian `N(0, σ²)` are
//! supported.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::batch::LatentBatch;
use crate::error::{Error, Result};
use crate::rng::{self, CHUNK_ROWS};

/// Gaussian quantiles saturate at this many standard deviations for
/// `p ∈ {0, 1}` (and anything more extreme), so tabulated maps stay finite.
pub const GAUSSIAN_SATURATION: f64 = 8.0;

/// Exact moments of a scalar component `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentMoments {
    pub mean: f64,
    pub var: f64,
    /// `E[Z²]`
    pub mu_z2: f64,
    /// `Var[Z²]`
    pub var_z2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarDist {
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    Gaussian { sigma: f64 },
}

impl ScalarDist {
    pub fn uniform(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "uniform half-width must be positive and finite, got {half_width}"
            )));
        }
        Ok(ScalarDist::Uniform { half_width })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gaussian sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(ScalarDist::Gaussian { sigma })
    }

    /// Natural scale of the family: `a` for uniform, `σ` for Gaussian.
    pub fn scale(&self) -> f64 {
        match *self {
            ScalarDist::Uniform { half_width } => half_width,
            ScalarDist::Gaussian { sigma } => sigma,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ScalarDist::Uniform { half_width: a } => {
                if x <= -a {
                    0.0
                } else if x >= a {
                    1.0
                } else {
                    0.5 * (x / a) + 0.5
                }
            }
            ScalarDist::Gaussian { sigma } => std_normal_cdf(x / sigma),
        }
    }

    /// Pseudo-inverse `inf { x : F(x) >= p }`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!(
                "quantile probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(match *self {
            ScalarDist::Uniform { half_width: a } => (2.0 * (p - 0.5) * a).clamp(-a, a),
            ScalarDist::Gaussian { sigma } => sigma * std_normal_quantile(p),
        })
    }

    pub fn moments(&self) -> ComponentMoments {
        match *self {
            ScalarDist::Uniform { half_width: a } => {
                let a2 = a * a;
                ComponentMoments {
                    mean: 0.0,
                    var: a2 / 3.0,
                    mu_z2: a2 / 3.0,
                    // E[Z⁴] − E[Z²]² = a⁴/5 − a⁴/9
                    var_z2: 4.0 * a2 * a2 / 45.0,
                }
            }
            ScalarDist::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                ComponentMoments {
                    mean: 0.0,
                    var: s2,
                    mu_z2: s2,
                    var_z2: 2.0 * s2 * s2,
                }
            }
        }
    }

    /// Draws one value from the component law.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ScalarDist::Uniform { half_width: a } => rng.random_range(-a..=a),
            ScalarDist::Gaussian { sigma } => {
                let e: f64 = StandardNormal.sample(rng);
                sigma * e
            }
        }
    }
}

/// Free function form of [`ScalarDist::cdf`].
pub fn cdf(dist: &ScalarDist, x: f64) -> f64 {
    dist.cdf(x)
}

/// Free function form of [`ScalarDist::quantile`].
pub fn quantile(dist: &ScalarDist, p: f64) -> Result<f64> {
    dist.quantile(p)
}

pub fn component_moments(dist: &ScalarDist) -> ComponentMoments {
    dist.moments()
}

/// A prior with `dim` i.i.d. components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub component: ScalarDist,
    pub dim: usize,
}

impl PriorSpec {
    pub fn new(component: ScalarDist, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("prior dimension must be >= 1".into()));
        }
        Ok(Self { component, dim })
    }

    pub fn uniform(half_width: f64, dim: usize) -> Result<Self> {
        Self::new(ScalarDist::uniform(half_width)?, dim)
    }

    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        Self::new(ScalarDist::gaussian(sigma)?, dim)
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.component, ScalarDist::Gaussian { .. })
    }

    /// Same component law at a different dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        Self::new(self.component, dim)
    }
}

/// Draws an `n × d` batch of i.i.d. prior samples.
///
/// Rows are produced in chunks of [`CHUNK_ROWS`], each from its own stream
/// keyed by `(seed, chunk index)`, so the output is identical for any
/// degree of parallelism.
pub fn sample(spec: &PriorSpec, n: usize, seed: u64) -> Result<LatentBatch> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let d = spec.dim;
    let mut data = vec![0.0; n * d];
    data.par_chunks_mut(CHUNK_ROWS * d)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = rng::stream(seed, rng::tag::SAMPLE, chunk as u64, 0);
            for v in out.iter_mut() {
                *v = spec.component.draw(&mut rng);
            }
        });
    Ok(LatentBatch::from_parts(n, d, data))
}

/// Standard normal CDF via the complementary error function, which keeps
/// full relative precision in the lower tail.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal quantile, saturating at `±GAUSSIAN_SATURATION`.
///
/// Acklam's rational approximation (relative error below 1.2e-9) followed by
/// one Newton step against [`std_normal_cdf`].
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return -GAUSSIAN_SATURATION;
    }
    if p >= 1.0 {
        return GAUSSIAN_SATURATION;
    }
    if p > 0.5 {
        // Work in the lower tail where the CDF is computed without
        // cancellation.
        return -lower_quantile(1.0 - p).max(-GAUSSIAN_SATURATION);
    }
    lower_quantile(p).max(-GAUSSIAN_SATURATION)
}

/// Quantile for `0 < p <= 0.5`.
fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    if x < -GAUSSIAN_SATURATION - 1.0 {
        // The density underflows relative to p; refinement is meaningless
        // and the result saturates anyway.
        return x;
    }
    let residual = 0.5 * libm::erfc(-x / SQRT_2) - p;
    x - residual / std_normal_pdf(x)
}
