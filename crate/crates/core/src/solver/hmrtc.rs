//! ADMM solver for Hankel-regularized low-CP-rank tensor completion.
//!
//! The model is
//!
//! ```text
//! min_U  Σ_{r,n} ‖R Q_r U^(n)‖_*  +  λ/2 ‖P_Ω(Y − ⟦U^(1), …, U^(N)⟧)‖_F²
//! ```
//!
//! split with `Z_r^(n) = R Q_r U^(n)` and multipliers `D_r^(n)`. Each iteration
//! sweeps the factor matrices in ascending mode order (every row of `U^(n)` is a
//! closed-form `R̂ × R̂` Hermitian solve), thresholds every `Z_r^(n)`, takes a
//! multiplier ascent step and grows the penalty `β ← ρβ`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel::{self, HankelShape};
use crate::rng::{complex_normal, stream, Stream};
use crate::solver::linalg::{solve_hermitian, CVector};
use crate::solver::observed::{ObservedEntries, RowMajor};
use crate::svt::{self, threshold_with_norm};
use crate::tensor::{CMatrix, ComplexTensor, CpFactors, SamplingMask, C64};

/// Relative ridge used when a per-row system fails to factor.
const FALLBACK_RIDGE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Estimated CP rank `R̂`.
    pub r_hat: usize,
    pub lambda: f64,
    pub beta0: f64,
    /// Penalty growth factor, in `(1.0, 1.1]`.
    pub rho: f64,
    /// Stop once the relative change of the reconstruction drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Per-mode Hankel shapes; near-square when absent.
    pub hankel_shapes: Option<Vec<HankelShape>>,
    pub seed: u64,
    /// Run per-row solves and thresholding steps on the rayon pool.
    pub parallel: bool,
    /// Record normal-equation residuals and multiplier spectral norms.
    pub diagnostics: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            r_hat: 10,
            lambda: 1e3,
            beta0: 0.1,
            rho: 1.05,
            tol: 1e-4,
            max_iter: 1000,
            hankel_shapes: None,
            seed: 0,
            parallel: true,
            diagnostics: false,
        }
    }
}

impl SolverConfig {
    pub fn with_rank(r_hat: usize) -> Self {
        Self { r_hat, ..Self::default() }
    }

    /// Checks the parameters and resolves the Hankel shape of every mode.
    pub fn validate(&self, dims: &[usize]) -> Result<Vec<HankelShape>> {
        if self.r_hat == 0 {
            return Err(Error::param("r_hat", "estimated rank must be at least 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(Error::param("beta0", format!("must be positive, got {}", self.beta0)));
        }
        if !(self.rho > 1.0 && self.rho <= 1.1) {
            return Err(Error::param("rho", format!("must lie in (1.0, 1.1], got {}", self.rho)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", format!("must be positive, got {}", self.tol)));
        }
        match &self.hankel_shapes {
            None => dims.iter().map(|&d| HankelShape::square(d)).collect(),
            Some(shapes) => {
                if shapes.len() != dims.len() {
                    return Err(Error::param(
                        "hankel_shapes",
                        format!("{} shapes for an order-{} tensor", shapes.len(), dims.len()),
                    ));
                }
                for (n, (s, &d)) in shapes.iter().zip(dims).enumerate() {
                    if s.s1 == 0 || s.s2 == 0 || s.len() != d {
                        return Err(Error::param(
                            "hankel_shapes",
                            format!("mode {n}: shape ({}, {}) does not embed length {d}", s.s1, s.s2),
                        ));
                    }
                }
                Ok(shapes.clone())
            }
        }
    }
}

/// Live ADMM variables. `z[n][r]` and `d[n][r]` have the Hankel shape of mode `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub factors: Vec<CMatrix>,
    pub z: Vec<Vec<CMatrix>>,
    pub d: Vec<Vec<CMatrix>>,
    pub beta: f64,
    pub iter: usize,
    pub x_last: ComplexTensor,
}

impl SolverState {
    pub fn cp_factors(&self) -> CpFactors {
        CpFactors::new(self.factors.clone()).expect("solver factors share one rank")
    }
}

/// Per-iteration diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub delta_x: f64,
    /// `max_{r,n} ‖R Q_r U^(n) − Z_r^(n)‖_F` after the thresholding step.
    pub feasibility_gap: f64,
    /// Augmented Lagrangian at the end of the iteration, at the penalty used in it.
    pub lagrangian: f64,
    /// Penalty used in this iteration.
    pub beta: f64,
    /// `β_k · (Σ_n ‖U_{k+1}^(n) − U_k^(n)‖_F²)^{1/2}`.
    pub scaled_factor_step: f64,
    /// `max_{r,n} ‖D_{k+1} − D_k‖_F`.
    pub multiplier_step: f64,
    /// `max_{r,n} ‖D_{k+1}‖_2`, when diagnostics are enabled.
    pub multiplier_norm: Option<f64>,
    /// Largest relative residual of the per-row normal equations, when diagnostics are enabled.
    pub normal_residual: Option<f64>,
    /// Some row system needed a ridge to factor.
    pub ridged: bool,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub factors: CpFactors,
    pub reconstruction: ComplexTensor,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
}

/// Outcome of one factor-matrix update.
#[derive(Clone, Copy, Debug, Default)]
pub struct FactorUpdate {
    pub max_residual: Option<f64>,
    pub ridged: bool,
}

/// `‖x − x_last‖_F / ‖x_last‖_F`, or `+∞` when `x_last` is zero.
pub fn relative_change(x: &ComplexTensor, x_last: &ComplexTensor) -> Result<f64> {
    let denom = x_last.frobenius_norm();
    let num = x.sub(x_last)?.frobenius_norm();
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(num / denom)
}

pub(crate) fn map_range<T: Send>(len: usize, parallel: bool, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if parallel {
        (0..len).into_par_iter().map(f).collect()
    } else {
        (0..len).map(f).collect()
    }
}

pub(crate) fn column(m: &CMatrix, r: usize) -> Vec<C64> {
    m.column(r).iter().copied().collect()
}

/// Seeded complex Gaussian factors, entries of variance `1 / I_n`.
pub(crate) fn random_factors(dims: &[usize], rank: usize, seed: u64) -> Vec<CMatrix> {
    let mut rng = stream(seed, Stream::Init);
    dims.iter()
        .map(|&d| {
            let scale = (2.0 * d as f64).sqrt().recip();
            let mut m = CMatrix::zeros(d, rank);
            for i in 0..d {
                for r in 0..rank {
                    m[(i, r)] = complex_normal(&mut rng) * scale;
                }
            }
            m
        })
        .collect()
}

/// Initial state: seeded Gaussian factors, `Z = R Q_r U`, `D = 0`, `β = β₀`.
pub fn init_state(dims: &[usize], cfg: &SolverConfig) -> Result<SolverState> {
    let shapes = cfg.validate(dims)?;
    let factors = random_factors(dims, cfg.r_hat, cfg.seed);
    let z: Vec<Vec<CMatrix>> = factors
        .iter()
        .zip(&shapes)
        .map(|(u, &s)| (0..cfg.r_hat).map(|r| hankel::embed(&column(u, r), s)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let d = z.iter().map(|zs| zs.iter().map(|m| CMatrix::zeros(m.nrows(), m.ncols())).collect()).collect();
    let x_last = CpFactors::new(factors.clone())?.synthesize();
    Ok(SolverState { factors, z, d, beta: cfg.beta0, iter: 0, x_last })
}

pub struct HmrtcSolver {
    cfg: SolverConfig,
    shapes: Vec<HankelShape>,
    weights: Vec<Vec<f64>>,
    data: ObservedEntries,
    state: SolverState,
    nuclear: Option<Vec<Vec<f64>>>,
}

impl HmrtcSolver {
    pub fn new(observed: &ComplexTensor, omega: &SamplingMask, cfg: SolverConfig) -> Result<Self> {
        let state = init_state(observed.dims(), &cfg)?;
        Self::with_state(observed, omega, cfg, state)
    }

    /// Starts from a caller-provided state, which must match the problem shapes.
    pub fn with_state(
        observed: &ComplexTensor,
        omega: &SamplingMask,
        cfg: SolverConfig,
        state: SolverState,
    ) -> Result<Self> {
        let shapes = cfg.validate(observed.dims())?;
        let data = ObservedEntries::new(observed, omega)?;
        check_state(&state, observed.dims(), &shapes, cfg.r_hat)?;
        let weights = shapes.iter().map(|&s| hankel::antidiagonal_weights(s)).collect();
        Ok(Self { cfg, shapes, weights, data, state, nuclear: None })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn shapes(&self) -> &[HankelShape] {
        &self.shapes
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    /// Mutable access; cached nuclear norms are recomputed on next use.
    pub fn state_mut(&mut self) -> &mut SolverState {
        self.nuclear = None;
        &mut self.state
    }

    fn rank(&self) -> usize {
        self.cfg.r_hat
    }

    /// Closed-form update of `U^(n)`, one Hermitian `R̂ × R̂` solve per row.
    pub fn update_u(&mut self, n: usize) -> Result<FactorUpdate> {
        let order = self.data.order();
        if n >= order {
            return Err(Error::OutOfRange(format!("mode {n} for a tensor of order {order}")));
        }
        let rank = self.rank();
        let beta = self.state.beta;
        let lambda = self.cfg.lambda;
        let u = RowMajor::from_factors(&self.state.factors);
        // R*(β Z_r − D_r), one vector per column.
        let consensus: Vec<Vec<C64>> = (0..rank)
            .map(|r| hankel::adjoint(&(&self.state.z[n][r] * C64::new(beta, 0.0) - &self.state.d[n][r])))
            .collect();
        let weights = &self.weights[n];
        let data = &self.data;
        let diagnostics = self.cfg.diagnostics;
        let rows = map_range(data.dims[n], self.cfg.parallel, |i| {
            let (mut m, mut b) = data.row_system(n, i, &u);
            m *= C64::new(lambda, 0.0);
            b *= C64::new(lambda, 0.0);
            for r in 0..rank {
                m[(r, r)] += C64::new(beta * weights[i], 0.0);
                b[r] += consensus[r][i];
            }
            let sol = solve_hermitian(&m, &b, FALLBACK_RIDGE);
            let residual = diagnostics.then(|| relative_residual(&m, &sol.x, &b));
            (sol.x, sol.ridged, residual)
        });
        let mut update = FactorUpdate::default();
        let factor = &mut self.state.factors[n];
        for (i, (x, ridged, residual)) in rows.into_iter().enumerate() {
            for r in 0..rank {
                factor[(i, r)] = x[r];
            }
            update.ridged |= ridged;
            if let Some(res) = residual {
                update.max_residual = Some(update.max_residual.map_or(res, |m: f64| m.max(res)));
            }
        }
        Ok(update)
    }

    fn hankel_of(&self, n: usize, r: usize) -> CMatrix {
        hankel::embed(&column(&self.state.factors[n], r), self.shapes[n]).expect("shape matches factor rows")
    }

    /// `Z_r^(n) ← S_{1/β}(R Q_r U^(n) + D_r^(n)/β)`.
    pub fn update_z(&mut self, n: usize, r: usize) -> Result<()> {
        self.check_pair(n, r)?;
        let beta = self.state.beta;
        let target = self.hankel_of(n, r) + &self.state.d[n][r] / C64::new(beta, 0.0);
        let t = threshold_with_norm(&target, 1.0 / beta)?;
        self.state.z[n][r] = t.matrix;
        if let Some(cache) = self.nuclear.as_mut() {
            cache[n][r] = t.nuclear_norm;
        }
        Ok(())
    }

    /// `D_r^(n) ← D_r^(n) + β (R Q_r U^(n) − Z_r^(n))`.
    pub fn update_d(&mut self, n: usize, r: usize) -> Result<()> {
        self.check_pair(n, r)?;
        let beta = self.state.beta;
        let step = (self.hankel_of(n, r) - &self.state.z[n][r]) * C64::new(beta, 0.0);
        self.state.d[n][r] += step;
        Ok(())
    }

    fn check_pair(&self, n: usize, r: usize) -> Result<()> {
        if n >= self.data.order() || r >= self.rank() {
            return Err(Error::OutOfRange(format!("block ({n}, {r})")));
        }
        Ok(())
    }

    fn nuclear_norms(&mut self) -> Result<&Vec<Vec<f64>>> {
        if self.nuclear.is_none() {
            let norms = self
                .state
                .z
                .iter()
                .map(|zs| zs.iter().map(svt::nuclear_norm).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            self.nuclear = Some(norms);
        }
        Ok(self.nuclear.as_ref().unwrap())
    }

    /// `‖P_Ω(Y − ⟦U⟧)‖_F²` at the current factors.
    pub fn data_misfit(&self) -> f64 {
        self.data.misfit(&RowMajor::from_factors(&self.state.factors))
    }

    /// Augmented Lagrangian at the current state and penalty, using the real
    /// part of the multiplier inner products.
    pub fn lagrangian(&mut self) -> Result<f64> {
        let nuclear: f64 = self.nuclear_norms()?.iter().flatten().sum();
        let beta = self.state.beta;
        let mut total = nuclear + 0.5 * self.cfg.lambda * self.data_misfit();
        for n in 0..self.data.order() {
            for r in 0..self.rank() {
                let resid = self.hankel_of(n, r) - &self.state.z[n][r];
                total += self.state.d[n][r].dotc(&resid).re + 0.5 * beta * resid.norm_squared();
            }
        }
        Ok(total)
    }

    pub fn feasibility_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for n in 0..self.data.order() {
            for r in 0..self.rank() {
                gap = gap.max((self.hankel_of(n, r) - &self.state.z[n][r]).norm());
            }
        }
        gap
    }

    /// One full iteration: factor sweep, thresholding, multiplier step, penalty growth.
    pub fn iterate(&mut self) -> Result<IterationRecord> {
        let beta = self.state.beta;
        let order = self.data.order();
        let rank = self.rank();
        let previous = self.state.factors.clone();

        let mut residual: Option<f64> = None;
        let mut ridged = false;
        for n in 0..order {
            let up = self.update_u(n)?;
            ridged |= up.ridged;
            if let Some(r) = up.max_residual {
                residual = Some(residual.map_or(r, |m| m.max(r)));
            }
        }

        let diagnostics = self.cfg.diagnostics;
        let blocks = {
            let this = &*self;
            map_range(order * rank, self.cfg.parallel, |k| -> Result<_> {
                let (n, r) = (k / rank, k % rank);
                let embedded = this.hankel_of(n, r);
                let d_old = &this.state.d[n][r];
                let target = &embedded + d_old / C64::new(beta, 0.0);
                let t = threshold_with_norm(&target, 1.0 / beta)?;
                let resid = &embedded - &t.matrix;
                let d_new = d_old + &resid * C64::new(beta, 0.0);
                let step = (&d_new - d_old).norm();
                let spectral = if diagnostics { Some(svt::spectral_norm(&d_new)?) } else { None };
                Ok((t.matrix, t.nuclear_norm, d_new, resid.norm(), step, spectral))
            })
        };
        let mut nuclear = vec![vec![0.0; rank]; order];
        let mut gap: f64 = 0.0;
        let mut multiplier_step: f64 = 0.0;
        let mut multiplier_norm: Option<f64> = None;
        for (k, block) in blocks.into_iter().enumerate() {
            let (z, nn, d, g, step, spectral) = block?;
            let (n, r) = (k / rank, k % rank);
            self.state.z[n][r] = z;
            self.state.d[n][r] = d;
            nuclear[n][r] = nn;
            gap = gap.max(g);
            multiplier_step = multiplier_step.max(step);
            if let Some(s) = spectral {
                multiplier_norm = Some(multiplier_norm.map_or(s, |m| m.max(s)));
            }
        }
        self.nuclear = Some(nuclear);

        let lagrangian = self.lagrangian()?;
        let factor_step: f64 = previous
            .iter()
            .zip(&self.state.factors)
            .map(|(a, b)| (b - a).norm_squared())
            .sum::<f64>()
            .sqrt();

        self.state.beta = beta * self.cfg.rho;
        let x = self.state.cp_factors().synthesize();
        let delta_x = relative_change(&x, &self.state.x_last)?;
        self.state.x_last = x;
        self.state.iter += 1;

        if !self.state.factors.iter().all(|f| f.iter().all(|z| z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("solver factors"));
        }

        Ok(IterationRecord {
            iter: self.state.iter,
            delta_x,
            feasibility_gap: gap,
            lagrangian,
            beta,
            scaled_factor_step: beta * factor_step,
            multiplier_step,
            multiplier_norm,
            normal_residual: residual,
            ridged,
        })
    }

    /// Iterates until the relative change falls below `tol` or `max_iter` is reached.
    pub fn run(mut self) -> Result<SolveResult> {
        let mut history = Vec::new();
        let mut converged = false;
        while self.state.iter < self.cfg.max_iter {
            let rec = self.iterate()?;
            let done = rec.delta_x < self.cfg.tol;
            history.push(rec);
            if done {
                converged = true;
                break;
            }
        }
        let factors = self.state.cp_factors();
        Ok(SolveResult {
            reconstruction: self.state.x_last,
            factors,
            iterations: history.len(),
            history,
            converged,
        })
    }
}

fn relative_residual(m: &DMatrix<C64>, x: &CVector, b: &CVector) -> f64 {
    let r = (m * x - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        r / scale
    } else {
        r
    }
}

fn check_state(state: &SolverState, dims: &[usize], shapes: &[HankelShape], rank: usize) -> Result<()> {
    let bad = |what: &str| Err(Error::Shape(format!("solver state: {what}")));
    if state.factors.len() != dims.len() || state.z.len() != dims.len() || state.d.len() != dims.len() {
        return bad("mode count does not match the data");
    }
    for (n, (&dim, shape)) in dims.iter().zip(shapes).enumerate() {
        if state.factors[n].shape() != (dim, rank) {
            return bad(&format!("factor {n} is not {dim}x{rank}"));
        }
        if state.z[n].len() != rank || state.d[n].len() != rank {
            return bad(&format!("mode {n} needs {rank} auxiliary blocks"));
        }
        let s = (shape.s1, shape.s2);
        if state.z[n].iter().chain(&state.d[n]).any(|m| m.shape() != s) {
            return bad(&format!("mode {n} blocks must be {}x{}", shape.s1, shape.s2));
        }
    }
    if state.x_last.dims() != dims {
        return bad("previous reconstruction has the wrong dims");
    }
    Ok(())
}

/// Runs the solver from its seeded initial state.
pub fn solve(observed: &ComplexTensor, omega: &SamplingMask, cfg: &SolverConfig) -> Result<SolveResult> {
    if !observed.is_finite() {
        return Err(Error::NonFinite("observed tensor"));
    }
    HmrtcSolver::new(observed, omega, cfg.clone())?.run()
}
