//! Raw latent-space operations.
//!
//! Everything here except [`slerp`] acts componentwise, which is what lets
//! the transport maps in [`crate::transport`] repair their output
//! distribution one scalar at a time.

use crate::batch::LatentBatch;
use crate::error::{Error, Result};
use crate::priors::{self, PriorSpec};
use crate::rng;
use crate::transport::{self, MapBuildConfig};

/// Tolerance on `Σ tᵢ = 1` for n-point interpolation weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Below this angle SLERP degenerates to linear interpolation.
pub const SLERP_MIN_ANGLE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    TwoPointInterp,
    NPointInterp,
    Vicinity,
    Analogy,
    Slerp,
    RandomWalk,
}

/// A latent operation together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum OperationSpec {
    /// `y = t·z₁ + (1−t)·z₂`
    TwoPointInterp { t: f64 },
    /// `y = Σ tᵢ·zᵢ` with `Σ tᵢ = 1`
    NPointInterp { weights: Vec<f64> },
    /// `y = z + ε·u` with `u` drawn from the prior's component law
    Vicinity { eps: f64 },
    /// `y = z₃ + (z₂ − z₁)`
    Analogy,
    /// Great-arc interpolation from `z₁` (t = 0) to `z₂` (t = 1).
    Slerp { t: f64 },
    /// `steps` chained vicinity samples.
    RandomWalk { eps: f64, steps: usize },
}

impl OperationSpec {
    pub fn kind(&self) -> OpKind {
        match self {
            OperationSpec::TwoPointInterp { .. } => OpKind::TwoPointInterp,
            OperationSpec::NPointInterp { .. } => OpKind::NPointInterp,
            OperationSpec::Vicinity { .. } => OpKind::Vicinity,
            OperationSpec::Analogy => OpKind::Analogy,
            OperationSpec::Slerp { .. } => OpKind::Slerp,
            OperationSpec::RandomWalk { .. } => OpKind::RandomWalk,
        }
    }

    /// Number of latent operands consumed per output row.
    pub fn arity(&self) -> usize {
        match self {
            OperationSpec::TwoPointInterp { .. } | OperationSpec::Slerp { .. } => 2,
            OperationSpec::NPointInterp { weights } => weights.len(),
            OperationSpec::Vicinity { .. } | OperationSpec::RandomWalk { .. } => 1,
            OperationSpec::Analogy => 3,
        }
    }

    /// True when the operation acts on each coordinate independently.
    pub fn is_pointwise(&self) -> bool {
        !matches!(self, OperationSpec::Slerp { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OperationSpec::TwoPointInterp { t } | OperationSpec::Slerp { t } => check_t(*t),
            OperationSpec::NPointInterp { weights } => check_weights(weights),
            OperationSpec::Vicinity { eps } => check_eps(*eps),
            OperationSpec::RandomWalk { eps, steps } => {
                check_eps(*eps)?;
                if *steps == 0 {
                    return Err(Error::InvalidArgument("walk needs at least one step".into()));
                }
                Ok(())
            }
            OperationSpec::Analogy => Ok(()),
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t must lie in [0, 1], got {t}")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!("eps must be finite and >= 0, got {eps}")));
    }
    Ok(())
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("n-point interpolation needs at least one weight".into()));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Domain("weights must be finite".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Domain(format!("weights must sum to 1, got {sum}")));
    }
    Ok(())
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

pub fn linear_interpolate(z1: &[f64], z2: &[f64], t: f64) -> Result<Vec<f64>> {
    check_dims(z1, z2)?;
    check_t(t)?;
    Ok(lerp_unchecked(z1, z2, t))
}

fn lerp_unchecked(z1: &[f64], z2: &[f64], t: f64) -> Vec<f64> {
    let s = 1.0 - t;
    z1.iter().zip(z2).map(|(a, b)| t * a + s * b).collect()
}

pub fn n_point_interpolate<R: AsRef<[f64]>>(zs: &[R], weights: &[f64]) -> Result<Vec<f64>> {
    check_weights(weights)?;
    if zs.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            found: zs.len(),
        });
    }
    let d = zs[0].as_ref().len();
    let mut out = vec![0.0; d];
    for (z, &w) in zs.iter().zip(weights) {
        let z = z.as_ref();
        check_dims(&out, z)?;
        for (o, v) in out.iter_mut().zip(z) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Draws `k` points `z + ε·u`, `u` from the prior's component law.
pub fn vicinity_sample(
    z: &[f64],
    eps: f64,
    k: usize,
    prior: &PriorSpec,
    seed: u64,
) -> Result<LatentBatch> {
    check_eps(eps)?;
    let noise = priors::sample(&prior.with_dim(z.len())?, k, seed)?;
    let data = noise
        .rows()
        .flat_map(|u| z.iter().zip(u).map(|(c, u)| c + eps * u))
        .collect();
    LatentBatch::new(k, z.len(), data)
}

pub fn analogy(z1: &[f64], z2: &[f64], z3: &[f64]) -> Result<Vec<f64>> {
    check_dims(z1, z2)?;
    check_dims(z1, z3)?;
    Ok(z1
        .iter()
        .zip(z2)
        .zip(z3)
        .map(|((a, b), c)| c + (b - a))
        .collect())
}

/// Which formula [`slerp_with_path`] used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlerpPath {
    Spherical,
    /// Inputs (nearly) collinear in the same direction.
    LinearFallback,
}

/// Spherical interpolation: `t = 0` gives `z1`, `t = 1` gives `z2`.
pub fn slerp(z1: &[f64], z2: &[f64], t: f64) -> Result<Vec<f64>> {
    slerp_with_path(z1, z2, t).map(|(y, _)| y)
}

pub fn slerp_with_path(z1: &[f64], z2: &[f64], t: f64) -> Result<(Vec<f64>, SlerpPath)> {
    check_dims(z1, z2)?;
    check_t(t)?;
    let n1 = norm(z1);
    let n2 = norm(z2);
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::Domain("slerp endpoints must be nonzero".into()));
    }
    let cos = (dot(z1, z2) / (n1 * n2)).clamp(-1.0, 1.0);
    let omega = cos.acos();
    if omega > std::f64::consts::PI - SLERP_MIN_ANGLE {
        return Err(Error::Domain(
            "slerp endpoints are antipodal; the great arc is ambiguous".into(),
        ));
    }
    if omega < SLERP_MIN_ANGLE {
        return Ok((lerp_unchecked(z2, z1, t), SlerpPath::LinearFallback));
    }
    if t == 0.0 {
        return Ok((z1.to_vec(), SlerpPath::Spherical));
    }
    if t == 1.0 {
        return Ok((z2.to_vec(), SlerpPath::Spherical));
    }
    let s = omega.sin();
    let a = ((1.0 - t) * omega).sin() / s;
    let b = (t * omega).sin() / s;
    Ok((
        z1.iter().zip(z2).map(|(x, y)| a * x + b * y).collect(),
        SlerpPath::Spherical,
    ))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Runs a pointwise operation or SLERP row by row over equally shaped
/// operand batches. Vicinity sampling draws one perturbation per row from
/// `seed`. Random walks are handled by [`random_walk_batch`].
pub fn apply_operation(
    op: &OperationSpec,
    operands: &[&LatentBatch],
    prior: &PriorSpec,
    seed: u64,
) -> Result<LatentBatch> {
    op.validate()?;
    if operands.len() != op.arity() {
        return Err(Error::InvalidArgument(format!(
            "{:?} takes {} operand batches, got {}",
            op.kind(),
            op.arity(),
            operands.len()
        )));
    }
    let first = operands[0];
    for other in &operands[1..] {
        first.check_same_shape(other)?;
    }
    let (n, d) = (first.n(), first.d());
    let row_op = |i: usize| -> Result<Vec<f64>> {
        let row = |j: usize| operands[j].row(i);
        match op {
            OperationSpec::TwoPointInterp { t } => Ok(lerp_unchecked(row(0), row(1), *t)),
            OperationSpec::NPointInterp { weights } => {
                let rows: Vec<&[f64]> = (0..weights.len()).map(row).collect();
                n_point_interpolate(&rows, weights)
            }
            OperationSpec::Analogy => analogy(row(0), row(1), row(2)),
            OperationSpec::Slerp { t } => slerp(row(0), row(1), *t),
            OperationSpec::Vicinity { .. } | OperationSpec::RandomWalk { .. } => unreachable!(),
        }
    };
    let data = match op {
        OperationSpec::Vicinity { eps } => {
            let noise = priors::sample(&prior.with_dim(d)?, n, seed)?;
            first
                .as_slice()
                .iter()
                .zip(noise.as_slice())
                .map(|(z, u)| z + eps * u)
                .collect()
        }
        OperationSpec::RandomWalk { .. } => {
            return Err(Error::Unsupported(
                "random walks produce trajectories; use random_walk_batch".into(),
            ))
        }
        _ => {
            let mut data = Vec::with_capacity(n * d);
            for i in 0..n {
                data.extend(row_op(i)?);
            }
            data
        }
    };
    LatentBatch::new(n, d, data)
}

/// Draws fresh prior operands and applies `op`, returning the raw outputs.
/// Operand `j` is sampled with `rng::sub_seed(seed, j)`.
pub fn sample_operation(
    op: &OperationSpec,
    prior: &PriorSpec,
    n: usize,
    seed: u64,
) -> Result<LatentBatch> {
    let operands = sample_operands(op, prior, n, seed)?;
    let refs: Vec<&LatentBatch> = operands.iter().collect();
    apply_operation(op, &refs, prior, rng::sub_seed(seed, u64::MAX))
}

/// The operand batches [`sample_operation`] would use.
pub fn sample_operands(
    op: &OperationSpec,
    prior: &PriorSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<LatentBatch>> {
    (0..op.arity())
        .map(|j| priors::sample(prior, n, rng::sub_seed(seed, j as u64)))
        .collect()
}

/// Walks every row of `start` for `steps` vicinity steps.
///
/// Returns `steps + 1` batches, the first being `start`. The perturbation
/// for walker `w` at step `s` comes from the stream keyed by
/// `(seed, s, w)`. When `matched`, every step is followed by the matched
/// vicinity map of the prior, so each step stays prior-distributed.
pub fn random_walk_batch(
    start: &LatentBatch,
    eps: f64,
    steps: usize,
    matched: bool,
    prior: &PriorSpec,
    seed: u64,
) -> Result<Vec<LatentBatch>> {
    OperationSpec::RandomWalk { eps, steps }.validate()?;
    let map = if matched {
        Some(transport::matched_map(
            &OperationSpec::Vicinity { eps },
            prior,
            &MapBuildConfig::default(),
            seed,
        )?)
    } else {
        None
    };
    let d = start.d();
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(start.clone());
    for step in 1..=steps {
        let prev = &trajectory[step - 1];
        let mut data = Vec::with_capacity(prev.n() * d);
        for (w, row) in prev.rows().enumerate() {
            let mut rng = rng::stream(seed, rng::tag::WALK, step as u64, w as u64);
            data.extend(row.iter().map(|z| z + eps * prior.component.draw(&mut rng)));
        }
        let mut next = LatentBatch::new(prev.n(), d, data)?;
        if let Some(map) = &map {
            next = transport::apply_matched(&next, map);
        }
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// Single-walker form of [`random_walk_batch`]: `steps + 1` rows.
pub fn random_walk(
    z0: &[f64],
    eps: f64,
    steps: usize,
    matched: bool,
    prior: &PriorSpec,
    seed: u64,
) -> Result<LatentBatch> {
    let start = LatentBatch::new(1, z0.len(), z0.to_vec())?;
    let traj = random_walk_batch(&start, eps, steps, matched, prior, seed)?;
    LatentBatch::concat(&traj)
}
