//! Hankel embedding of factor vectors and the related linear operators.
//!
//! `embed` maps a length-`I` vector to the `s1 × s2` Hankel matrix with
//! entries `x[i + j]`, where `s1 + s2 = I + 1`. Its adjoint sums each
//! anti-diagonal, so `adjoint(embed(x)) = w ⊛ x` with `w[k]` the length of the
//! `k`-th anti-diagonal.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{CMatrix, C64};

/// Row/column counts of a Hankel matrix built from a vector of length `s1 + s2 - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct HankelShape {
    pub s1: usize,
    pub s2: usize,
}

impl HankelShape {
    pub fn new(s1: usize, s2: usize) -> Result<Self> {
        if s1 == 0 || s2 == 0 {
            return Err(Error::Shape(format!("hankel shape ({s1}, {s2}) must be positive")));
        }
        Ok(Self { s1, s2 })
    }

    /// Square or nearly square shape: `s1 = ceil((len + 1) / 2)`.
    pub fn square(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Shape("hankel embedding of an empty vector".into()));
        }
        let s1 = (len + 2) / 2;
        Self::new(s1, len + 1 - s1)
    }

    /// Length of the vectors this shape embeds.
    pub fn len(&self) -> usize {
        self.s1 + self.s2 - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Shape(format!(
                "vector of length {len} does not fit hankel shape ({}, {})",
                self.s1, self.s2
            )));
        }
        Ok(())
    }
}

/// `R x`: the Hankel matrix with entries `x[i + j]`.
pub fn embed(x: &[C64], shape: HankelShape) -> Result<CMatrix> {
    shape.check_len(x.len())?;
    Ok(CMatrix::from_fn(shape.s1, shape.s2, |i, j| x[i + j]))
}

/// `R* M`: anti-diagonal sums of `m`.
pub fn adjoint(m: &CMatrix) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); m.nrows() + m.ncols() - 1];
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out[i + j] += m[(i, j)];
        }
    }
    out
}

/// Number of entries on each anti-diagonal of an `s1 × s2` matrix.
pub fn antidiagonal_weights(shape: HankelShape) -> Vec<f64> {
    let short = shape.s1.min(shape.s2);
    let len = shape.len();
    (0..len).map(|k| (k + 1).min(short).min(len - k) as f64).collect()
}

/// `R* R x` evaluated without forming the Hankel matrix.
pub fn gram_apply(x: &[C64], shape: HankelShape) -> Result<Vec<C64>> {
    shape.check_len(x.len())?;
    Ok(antidiagonal_weights(shape).iter().zip(x).map(|(w, v)| v * *w).collect())
}

/// `Q_r M`: column `r` of `m`.
pub fn column_extract(m: &CMatrix, r: usize) -> Result<Vec<C64>> {
    if r >= m.ncols() {
        return Err(Error::OutOfRange(format!("column {r} of a {}-column matrix", m.ncols())));
    }
    Ok(m.column(r).iter().copied().collect())
}

/// `Q_r* v`: a matrix holding `v` in column `r` and zeros elsewhere.
pub fn column_embed(v: &[C64], r: usize, ncols: usize) -> Result<CMatrix> {
    if r >= ncols {
        return Err(Error::OutOfRange(format!("column {r} of a {ncols}-column matrix")));
    }
    let mut m = CMatrix::zeros(v.len(), ncols);
    m.column_mut(r).iter_mut().zip(v).for_each(|(d, s)| *d = *s);
    Ok(m)
}

/// The `len × rank` matrix `C` with `Σ_r Q_r* R* R Q_r X = C ⊛ X`; every column is
/// the anti-diagonal weight vector.
pub fn combined_weight_matrix(len: usize, rank: usize, shape: HankelShape) -> Result<DMatrix<f64>> {
    shape.check_len(len)?;
    let w = antidiagonal_weights(shape);
    Ok(DMatrix::from_fn(len, rank, |i, _| w[i]))
}
