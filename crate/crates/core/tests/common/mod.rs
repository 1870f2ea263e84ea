//! Brute-force reference implementations shared by the integration tests.
//!
//! None of these call into the operators they check; they rebuild each
//! quantity from index enumeration or dense matrices.

#![allow(dead_code)]

use hmrtc_core::hankel::HankelShape;
use hmrtc_core::solver::SolverState;
use hmrtc_core::{CMatrix, ComplexTensor, SamplingMask, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x5eed)
}

pub fn cn(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

pub fn rand_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len).map(|_| cn(rng)).collect()
}

pub fn rand_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| cn(rng))
}

pub fn rand_tensor(rng: &mut ChaCha8Rng, dims: &[usize]) -> ComplexTensor {
    let len = dims.iter().product();
    ComplexTensor::new(dims.to_vec(), rand_vec(rng, len)).unwrap()
}

pub fn rand_dims(rng: &mut ChaCha8Rng, order: usize, max: usize) -> Vec<usize> {
    (0..order).map(|_| rng.random_range(1..=max)).collect()
}

/// Every multi-index of `dims`, first index fastest.
pub fn all_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut lin in 0..total {
        let mut idx = Vec::with_capacity(dims.len());
        for &d in dims {
            idx.push(lin % d);
            lin /= d;
        }
        out.push(idx);
    }
    out
}

pub fn multi(dims: &[usize], mut lin: usize) -> Vec<usize> {
    dims.iter()
        .map(|&d| {
            let i = lin % d;
            lin /= d;
            i
        })
        .collect()
}

/// `Σ_k i_k ∏_{m<k} I_m`.
pub fn linear(dims: &[usize], idx: &[usize]) -> usize {
    let mut stride = 1;
    let mut l = 0;
    for (&i, &d) in idx.iter().zip(dims) {
        l += i * stride;
        stride *= d;
    }
    l
}

/// `Σ_r ∏_n U^(n)[i_n, r]` entry by entry.
pub fn brute_cp(factors: &[CMatrix]) -> ComplexTensor {
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let rank = factors[0].ncols();
    let mut data = vec![C64::new(0.0, 0.0); dims.iter().product()];
    for idx in all_indices(&dims) {
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..rank {
            let mut p = C64::new(1.0, 0.0);
            for (n, f) in factors.iter().enumerate() {
                p *= f[(idx[n], r)];
            }
            acc += p;
        }
        data[linear(&dims, &idx)] = acc;
    }
    ComplexTensor::new(dims, data).unwrap()
}

/// Mode-`n` unfolding built from the column formula
/// `j = Σ_{k≠n} i_k ∏_{m<k, m≠n} I_m`.
pub fn brute_unfold(x: &ComplexTensor, n: usize) -> CMatrix {
    let dims = x.dims();
    let cols: usize = dims.iter().enumerate().filter(|&(k, _)| k != n).map(|(_, d)| d).product();
    let mut m = CMatrix::zeros(dims[n], cols);
    for idx in all_indices(dims) {
        let mut j = 0;
        let mut stride = 1;
        for (k, &d) in dims.iter().enumerate() {
            if k != n {
                j += idx[k] * stride;
                stride *= d;
            }
        }
        m[(idx[n], j)] = x.data()[linear(dims, &idx)];
    }
    m
}

/// Kronecker product with the index of `a` varying slowest.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix::from_fn(a.nrows() * b.nrows(), a.ncols() * b.ncols(), |i, j| {
        a[(i / b.nrows(), j / b.ncols())] * b[(i % b.nrows(), j % b.ncols())]
    })
}

/// Dense matrix of the Hankel embedding acting on `C^len`, mapping to the
/// column-major vectorization of an `s1 × s2` matrix.
pub fn hankel_operator(shape: HankelShape) -> DMatrix<C64> {
    let len = shape.s1 + shape.s2 - 1;
    let mut p = DMatrix::zeros(shape.s1 * shape.s2, len);
    for b in 0..shape.s2 {
        for a in 0..shape.s1 {
            p[(a + shape.s1 * b, a + b)] = C64::new(1.0, 0.0);
        }
    }
    p
}

pub fn vec_of(m: &CMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Relative residual of the stationarity condition of the `U^(n)` subproblem
///
/// `λ A*(A U − y) + Σ_r Q_r* R* (β (R Q_r U − Z_r) + D_r) = 0`,
///
/// assembled entry by entry from the observed data and dense Hankel operators,
/// divided by the norm of the constant term `λ A* y + Σ_r Q_r* R* (β Z_r − D_r)`.
pub fn normal_equation_residual(
    state: &SolverState,
    observed: &ComplexTensor,
    omega: &SamplingMask,
    lambda: f64,
    shapes: &[HankelShape],
    n: usize,
) -> f64 {
    let dims = observed.dims();
    let rank = state.factors[0].ncols();
    let u = &state.factors;
    let beta = state.beta;
    let mut grad = CMatrix::zeros(dims[n], rank);
    let mut rhs = CMatrix::zeros(dims[n], rank);
    for &lin in omega.linear_indices() {
        let idx = multi(dims, lin);
        let y = observed.data()[lin];
        let mut g = vec![C64::new(1.0, 0.0); rank];
        for (m, f) in u.iter().enumerate() {
            if m != n {
                for r in 0..rank {
                    g[r] *= f[(idx[m], r)];
                }
            }
        }
        let model: C64 = (0..rank).map(|r| g[r] * u[n][(idx[n], r)]).sum();
        for r in 0..rank {
            grad[(idx[n], r)] += (model - y) * g[r].conj() * lambda;
            rhs[(idx[n], r)] += y * g[r].conj() * lambda;
        }
    }
    let p = hankel_operator(shapes[n]);
    let ph = p.adjoint();
    for r in 0..rank {
        let col = u[n].column(r).into_owned();
        let z = vec_of(&state.z[n][r]);
        let d = vec_of(&state.d[n][r]);
        let g = &ph * ((&p * &col - &z) * C64::new(beta, 0.0) + &d);
        let c = &ph * (&z * C64::new(beta, 0.0) - &d);
        for i in 0..dims[n] {
            grad[(i, r)] += g[i];
            rhs[(i, r)] += c[i];
        }
    }
    grad.norm() / rhs.norm().max(f64::MIN_POSITIVE)
}
