//! Small Hermitian positive (semi)definite solves for the per-row factor updates.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::tensor::C64;

pub(crate) type CVector = DVector<C64>;

#[derive(Clone, Debug)]
pub(crate) struct HermitianSolve {
    pub x: CVector,
    /// A diagonal ridge had to be added before the factorization succeeded.
    pub ridged: bool,
}

fn trace(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Solves `m x = b` for Hermitian `m` by Cholesky with one step of iterative
/// refinement. When the factorization fails, `ridge · trace(m) / n` is added to
/// the diagonal, growing tenfold until it succeeds.
pub(crate) fn solve_hermitian(m: &DMatrix<C64>, b: &CVector, ridge: f64) -> HermitianSolve {
    let n = m.nrows();
    let scale = (trace(m) / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    let mut ridged = false;
    loop {
        let mut work = m.clone();
        if shift > 0.0 {
            for i in 0..n {
                work[(i, i)] += C64::new(shift, 0.0);
            }
        }
        if let Some(chol) = Cholesky::new(work.clone()) {
            let mut x = chol.solve(b);
            let resid = b - &work * &x;
            x += chol.solve(&resid);
            return HermitianSolve { x, ridged };
        }
        ridged = true;
        shift = if shift == 0.0 { ridge * scale } else { shift * 10.0 };
        if !shift.is_finite() || shift > 1e300 {
            return HermitianSolve { x: CVector::zeros(n), ridged };
        }
    }
}
