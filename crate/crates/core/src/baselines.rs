//! Weighted CP completion: `min ‖P_Ω(Y − ⟦U^(1), …, U^(N)⟧)‖_F²` by alternating
//! least squares, one row of one factor matrix at a time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::linalg::{solve_hermitian, CVector};
use crate::solver::observed::{ObservedEntries, RowMajor};
use crate::solver::{map_range, random_factors, relative_change, IterationRecord, SolveResult};
use crate::tensor::{ComplexTensor, CpFactors, SamplingMask, C64};

/// Relative ridge for rows with fewer observations than unknowns.
const MIN_NORM_RIDGE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WcpConfig {
    pub r_hat: usize,
    pub max_iter: usize,
    /// Stop when `|f_k − f_{k+1}| / (1 + f_k)` falls to this value.
    pub rel_obj_tol: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for WcpConfig {
    fn default() -> Self {
        Self { r_hat: 10, max_iter: 1000, rel_obj_tol: 1e-6, seed: 0, parallel: true }
    }
}

impl WcpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_hat == 0 {
            return Err(Error::param("r_hat", "estimated rank must be at least 1"));
        }
        if !(self.rel_obj_tol > 0.0) {
            return Err(Error::param("rel_obj_tol", "must be positive"));
        }
        Ok(())
    }
}

/// Least-squares refit of every row of `U^(n)` with the other factors fixed.
pub(crate) fn als_mode_update(data: &ObservedEntries, factors: &mut [nalgebra::DMatrix<C64>], n: usize, parallel: bool) {
    let u = RowMajor::from_factors(factors);
    let rank = u.rank;
    let rows = map_range(data.dims[n], parallel, |i| {
        let count = data.groups[n][i].len();
        if count == 0 {
            return CVector::zeros(rank);
        }
        let (mut m, b) = data.row_system(n, i, &u);
        if count < rank {
            let tr: f64 = (0..rank).map(|r| m[(r, r)].re).sum();
            let shift = MIN_NORM_RIDGE * (tr / rank as f64).max(f64::MIN_POSITIVE);
            for r in 0..rank {
                m[(r, r)] += C64::new(shift, 0.0);
            }
        }
        solve_hermitian(&m, &b, MIN_NORM_RIDGE).x
    });
    for (i, x) in rows.into_iter().enumerate() {
        for r in 0..rank {
            factors[n][(i, r)] = x[r];
        }
    }
}

/// Alternating least squares from a seeded Gaussian start. History records
/// carry the objective `f_k` in the `lagrangian` column; penalty and
/// feasibility columns are zero.
pub fn wcp_solve(observed: &ComplexTensor, omega: &SamplingMask, cfg: &WcpConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if !observed.is_finite() {
        return Err(Error::NonFinite("observed tensor"));
    }
    let data = ObservedEntries::new(observed, omega)?;
    let mut factors = random_factors(observed.dims(), cfg.r_hat, cfg.seed);
    let mut x_last = CpFactors::new(factors.clone())?.synthesize();
    let mut f_prev = data.misfit(&RowMajor::from_factors(&factors));
    let mut history = Vec::new();
    let mut converged = false;
    for k in 1..=cfg.max_iter {
        for n in 0..data.order() {
            als_mode_update(&data, &mut factors, n, cfg.parallel);
        }
        let f = data.misfit(&RowMajor::from_factors(&factors));
        if !f.is_finite() {
            return Err(Error::NonFinite("ALS objective"));
        }
        let x = CpFactors::new(factors.clone())?.synthesize();
        history.push(IterationRecord {
            iter: k,
            delta_x: relative_change(&x, &x_last)?,
            feasibility_gap: 0.0,
            lagrangian: f,
            beta: 0.0,
            scaled_factor_step: 0.0,
            multiplier_step: 0.0,
            multiplier_norm: None,
            normal_residual: None,
            ridged: false,
        });
        x_last = x;
        let stop = (f_prev - f).abs() / (1.0 + f_prev) <= cfg.rel_obj_tol;
        f_prev = f;
        if stop {
            converged = true;
            break;
        }
    }
    Ok(SolveResult {
        factors: CpFactors::new(factors)?,
        reconstruction: x_last,
        iterations: history.len(),
        history,
        converged,
    })
}
