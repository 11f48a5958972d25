use crate::error::{Error, Result};

/// An `n × d` matrix of latent vectors stored row-major, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentBatch {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl LatentBatch {
    /// Wraps row-major data. Requires `n, d >= 1`, `data.len() == n * d`
    /// and finite entries.
    pub fn new(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument(format!(
                "batch shape must be at least 1x1, got {n}x{d}"
            )));
        }
        let expected = n.checked_mul(d).ok_or_else(|| {
            Error::InvalidArgument(format!("batch shape {n}x{d} overflows"))
        })?;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry at row {}, column {}",
                i / d,
                i % d
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), d, data)
    }

    /// Internal constructor for data produced by finite arithmetic on valid
    /// batches.
    pub(crate) fn from_parts(n: usize, d: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * d);
        Self { n, d, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.d).copied().collect()
    }

    /// Applies `f` to every entry.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.n, self.d, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Stacks batches of equal width vertically.
    pub fn concat(parts: &[LatentBatch]) -> Result<Self> {
        let d = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?
            .d;
        let mut data = Vec::new();
        for p in parts {
            if p.d != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.d,
                });
            }
            data.extend_from_slice(&p.data);
        }
        Ok(Self::from_parts(data.len() / d, d, data))
    }

    pub(crate) fn check_same_shape(&self, other: &LatentBatch) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}
