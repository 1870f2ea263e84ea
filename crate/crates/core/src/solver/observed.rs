//! Observed entries grouped by the rows of every mode unfolding, plus the
//! per-row normal-equation pieces shared by the HMRTC and WCP solvers.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::solver::linalg::CVector;
use crate::tensor::{multi_index, CMatrix, ComplexTensor, SamplingMask, C64};

/// Factor matrices copied to row-major storage: `rows[n][i * rank + r]`.
pub(crate) struct RowMajor {
    pub rank: usize,
    pub rows: Vec<Vec<C64>>,
}

impl RowMajor {
    pub fn from_factors(factors: &[CMatrix]) -> Self {
        let rank = factors[0].ncols();
        let rows = factors.iter().map(|f| f.transpose().as_slice().to_vec()).collect();
        Self { rank, rows }
    }

    #[inline]
    pub fn row(&self, n: usize, i: usize) -> &[C64] {
        &self.rows[n][i * self.rank..(i + 1) * self.rank]
    }
}

pub(crate) struct ObservedEntries {
    pub dims: Vec<usize>,
    /// Observed values, in mask order.
    pub values: Vec<C64>,
    /// Multi-index of every observed entry, flattened with stride `order`.
    pub index: Vec<u32>,
    /// `groups[n][i]` lists the observed entries lying in row `i` of the mode-`n` unfolding.
    pub groups: Vec<Vec<Vec<u32>>>,
}

impl ObservedEntries {
    pub fn new(observed: &ComplexTensor, omega: &SamplingMask) -> Result<Self> {
        if observed.dims() != omega.dims() {
            return Err(Error::DimMismatch { expected: observed.dims().to_vec(), found: omega.dims().to_vec() });
        }
        if omega.is_empty() {
            return Err(Error::EmptyMask);
        }
        let dims = observed.dims().to_vec();
        let order = dims.len();
        let mut values = Vec::with_capacity(omega.len());
        let mut index = Vec::with_capacity(omega.len() * order);
        let mut groups: Vec<Vec<Vec<u32>>> = dims.iter().map(|&d| vec![Vec::new(); d]).collect();
        for (p, &lin) in omega.linear_indices().iter().enumerate() {
            let v = observed.data()[lin];
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite("observed tensor"));
            }
            values.push(v);
            let idx = multi_index(&dims, lin);
            for (n, &i) in idx.iter().enumerate() {
                groups[n][i].push(p as u32);
                index.push(i as u32);
            }
        }
        Ok(Self { dims, values, index, groups })
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// `g[r] = ∏_{m≠n} U^(m)[i_m, r]` for entry `p`.
    #[inline]
    pub fn design_row(&self, p: usize, n: usize, u: &RowMajor, g: &mut [C64]) {
        g.fill(C64::new(1.0, 0.0));
        let order = self.order();
        for m in (0..order).filter(|&m| m != n) {
            let row = u.row(m, self.index[p * order + m] as usize);
            for (gr, ur) in g.iter_mut().zip(row) {
                *gr *= ur;
            }
        }
    }

    /// Data part of the row-`i` system of mode `n`:
    /// `M = Σ_j conj(g_j) g_jᵀ`, `b = Σ_j y_j conj(g_j)` over observed `j`.
    pub fn row_system(&self, n: usize, i: usize, u: &RowMajor) -> (DMatrix<C64>, CVector) {
        let rank = u.rank;
        let mut m = DMatrix::<C64>::zeros(rank, rank);
        let mut b = CVector::zeros(rank);
        let mut g = vec![C64::new(0.0, 0.0); rank];
        for &p in &self.groups[n][i] {
            let p = p as usize;
            self.design_row(p, n, u, &mut g);
            let y = self.values[p];
            for s in 0..rank {
                let gs = g[s].conj();
                b[s] += y * gs;
                for r in s..rank {
                    m[(s, r)] += gs * g[r];
                }
            }
        }
        for s in 0..rank {
            for r in 0..s {
                m[(s, r)] = m[(r, s)].conj();
            }
        }
        (m, b)
    }

    /// Model values at the observed entries.
    pub fn model_values(&self, u: &RowMajor) -> Vec<C64> {
        let order = self.order();
        (0..self.values.len())
            .map(|p| {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..u.rank {
                    let mut prod = C64::new(1.0, 0.0);
                    for m in 0..order {
                        prod *= u.rows[m][self.index[p * order + m] as usize * u.rank + r];
                    }
                    acc += prod;
                }
                acc
            })
            .collect()
    }

    /// `‖P_Ω(Y − ⟦U⟧)‖_F²`.
    pub fn misfit(&self, u: &RowMajor) -> f64 {
        self.model_values(u).iter().zip(&self.values).map(|(x, y)| (y - x).norm_sqr()).sum()
    }
}
