//! Complex thin SVD by one-sided (Hestenes) Jacobi, and soft singular value
//! thresholding.

use crate::error::{Error, Result};
use crate::tensor::{CMatrix, C64};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `m = u · diag(sigma) · vᴴ` with `k = min(rows, cols)` columns.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.adjoint()
    }
}

pub fn complex_svd(m: &CMatrix) -> Result<SvdResult> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("svd input"));
    }
    if m.nrows() >= m.ncols() {
        Ok(jacobi_tall(m.clone()))
    } else {
        let t = jacobi_tall(m.adjoint());
        Ok(SvdResult { u: t.v, sigma: t.sigma, v: t.u })
    }
}

/// One-sided Jacobi on a matrix with at least as many rows as columns.
fn jacobi_tall(mut a: CMatrix) -> SvdResult {
    let (rows, cols) = a.shape();
    let mut v = CMatrix::identity(cols, cols);
    let eps = f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::new(0.0, 0.0);
                for i in 0..rows {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)];
                    alpha += ap.norm_sqr();
                    beta += aq.norm_sqr();
                    gamma += ap.conj() * aq;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Remove the phase of the off-diagonal Gram entry, then apply a
                // real Jacobi rotation to the pair (a_p, e^{-iφ} a_q).
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..rows {
                    let ap = a[(i, p)];
                    let aq = a[(i, q)] * phase.conj();
                    a[(i, p)] = ap * cs - aq * sn;
                    a[(i, q)] = ap * sn + aq * cs;
                }
                for i in 0..cols {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)] * phase.conj();
                    v[(i, p)] = vp * cs - vq * sn;
                    v[(i, q)] = vp * sn + vq * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));

    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let tiny = scale * eps * rows as f64;
    let mut u = CMatrix::zeros(rows, cols);
    let mut vs = CMatrix::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        vs.set_column(k, &v.column(j));
        if s > tiny && s > 0.0 {
            u.set_column(k, &(a.column(j) / C64::new(s, 0.0)));
        } else {
            missing.push(k);
        }
    }
    complete_orthonormal(&mut u, &missing);
    SvdResult { u, sigma, v: vs }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all others.
fn complete_orthonormal(u: &mut CMatrix, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let rows = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !missing.contains(j)).collect();
    let mut basis = 0usize;
    for &k in missing {
        while basis < rows {
            let mut cand = nalgebra::DVector::<C64>::zeros(rows);
            cand[basis] = C64::new(1.0, 0.0);
            basis += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let col = u.column(j);
                    let proj = col.dotc(&cand);
                    cand -= col * proj;
                }
            }
            let n = cand.norm();
            if n > 1e-8 {
                u.set_column(k, &(cand / C64::new(n, 0.0)));
                filled.push(k);
                break;
            }
        }
    }
}

/// Outcome of a thresholding step, with the nuclear norm of the result.
#[derive(Clone, Debug)]
pub struct Thresholded {
    pub matrix: CMatrix,
    pub nuclear_norm: f64,
    /// Largest singular value of the input.
    pub input_spectral_norm: f64,
}

/// `S_τ(m) = u · diag(max(σ − τ, 0)) · vᴴ`, the proximal map of `τ‖·‖_*`.
pub fn soft_threshold_singular(m: &CMatrix, tau: f64) -> Result<CMatrix> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::param("tau", format!("threshold must be positive, got {tau}")));
    }
    Ok(threshold_with_norm(m, tau)?.matrix)
}

pub(crate) fn threshold_with_norm(m: &CMatrix, tau: f64) -> Result<Thresholded> {
    let svd = complex_svd(m)?;
    let (rows, cols) = m.shape();
    let mut out = CMatrix::zeros(rows, cols);
    let mut nuclear = 0.0;
    for (k, &s) in svd.sigma.iter().enumerate() {
        let shrunk = s - tau;
        if shrunk <= 0.0 {
            break;
        }
        nuclear += shrunk;
        let uk = svd.u.column(k);
        let vk = svd.v.column(k);
        for j in 0..cols {
            let w = vk[j].conj() * shrunk;
            for i in 0..rows {
                out[(i, j)] += uk[i] * w;
            }
        }
    }
    Ok(Thresholded {
        matrix: out,
        nuclear_norm: nuclear,
        input_spectral_norm: svd.sigma.first().copied().unwrap_or(0.0),
    })
}

pub fn nuclear_norm(m: &CMatrix) -> Result<f64> {
    Ok(complex_svd(m)?.sigma.iter().sum())
}

pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    Ok(complex_svd(m)?.sigma.first().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn unit(v: &[C64]) -> CMatrix {
        let m = CMatrix::from_column_slice(v.len(), 1, v);
        let n = m.norm();
        m / C64::new(n, 0.0)
    }

    #[test]
    fn diagonal_singular_values() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)]);
        let svd = complex_svd(&m).unwrap();
        assert!((svd.sigma[0] - 3.0).abs() < 1e-14 && (svd.sigma[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_singular_values() {
        let u0 = unit(&[c(1.0, 1.0), c(0.5, -2.0), c(0.0, 1.0)]);
        let v0 = unit(&[c(2.0, 0.0), c(-1.0, 1.0)]);
        let m = &u0 * v0.adjoint() * c(2.0, 0.0);
        let svd = complex_svd(&m).unwrap();
        assert!((svd.sigma[0] - 2.0).abs() < 1e-13);
        assert!(svd.sigma[1].abs() < 1e-13);
        let gram = svd.u.adjoint() * &svd.u;
        assert!((gram - CMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((svd.reconstruct() - &m).norm() < 1e-13);

        let t = soft_threshold_singular(&m, 0.5).unwrap();
        assert!((t - &u0 * v0.adjoint() * c(1.5, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn wide_and_zero_inputs() {
        let m = CMatrix::from_fn(2, 5, |i, j| c((i + 2 * j) as f64, (i as f64) - (j as f64)));
        let svd = complex_svd(&m).unwrap();
        assert_eq!(svd.u.shape(), (2, 2));
        assert_eq!(svd.v.shape(), (5, 2));
        assert!((svd.reconstruct() - &m).norm() < 1e-12 * m.norm());

        let z = CMatrix::zeros(3, 3);
        let svd = complex_svd(&z).unwrap();
        assert!(svd.sigma.iter().all(|&s| s == 0.0));
        assert!((svd.u.adjoint() * &svd.u - CMatrix::identity(3, 3)).norm() < 1e-12);
        assert_eq!(soft_threshold_singular(&z, 0.1).unwrap(), z);
    }

    #[test]
    fn threshold_kills_small_spectrum() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.2, 0.0), c(0.0, 0.1), c(0.0, 0.0), c(0.1, 0.0)]);
        let t = soft_threshold_singular(&m, 1.0).unwrap();
        assert_eq!(t, CMatrix::zeros(2, 2));
    }

    #[test]
    fn threshold_rejects_nonpositive_tau() {
        let m = CMatrix::identity(2, 2);
        assert!(soft_threshold_singular(&m, 0.0).is_err());
        assert!(soft_threshold_singular(&m, -1.0).is_err());
        assert!(soft_threshold_singular(&m, f64::NAN).is_err());
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(complex_svd(&m), Err(Error::NonFinite(_))));
    }
}
