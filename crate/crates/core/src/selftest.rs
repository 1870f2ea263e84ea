//! Randomized self-checks of the operators, runnable from the CLI.
//!
//! Each check draws its instances from a seeded stream and compares an
//! operator against a brute-force or identity-based reference.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::hankel::{self, HankelShape};
use crate::rng::{complex_normal, stream, Stream};
use crate::svt::{nuclear_norm, soft_threshold_singular};
use crate::tensor::{khatri_rao, CMatrix, ComplexTensor, CpFactors, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
}

fn rand_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len).map(|_| complex_normal(rng)).collect()
}

fn rand_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn rand_shape(rng: &mut ChaCha8Rng, len: usize) -> HankelShape {
    let s1 = rng.random_range(1..=len);
    HankelShape::new(s1, len + 1 - s1).expect("s1 + s2 = len + 1")
}

fn check(name: &'static str, worst: f64, tolerance: f64) -> CheckResult {
    CheckResult { name, passed: worst <= tolerance, worst, tolerance }
}

fn hankel_adjoint(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.random_range(1..30);
        let shape = rand_shape(rng, len);
        let x = rand_vec(rng, len);
        let m = rand_mat(rng, shape.s1, shape.s2);
        let lhs = inner(hankel::embed(&x, shape)?.as_slice(), m.as_slice());
        let rhs = inner(&x, &hankel::adjoint(&m));
        let scale = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() * m.norm() * (len as f64).sqrt();
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    Ok(worst)
}

fn column_adjoint(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (rows, cols) = (rng.random_range(1..20), rng.random_range(1..8));
        let r = rng.random_range(0..cols);
        let m = rand_mat(rng, rows, cols);
        let v = rand_vec(rng, rows);
        let lhs = inner(&hankel::column_extract(&m, r)?, &v);
        let rhs = inner(m.as_slice(), hankel::column_embed(&v, r, cols)?.as_slice());
        let scale = m.norm() * v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    Ok(worst)
}

/// `R*R x = w ∘ x` with anti-diagonal counts, and the combined weight matrix
/// `Σ_r Q_r* R* R Q_r` acting entrywise.
fn weight_identities(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let len = rng.random_range(1..25);
        let rank = rng.random_range(1..6);
        let shape = rand_shape(rng, len);
        let w = hankel::antidiagonal_weights(shape);
        let u = rand_mat(rng, len, rank);
        let combined = hankel::combined_weight_matrix(len, rank, shape)?;
        for r in 0..rank {
            let col: Vec<C64> = u.column(r).iter().copied().collect();
            let lhs = hankel::adjoint(&hankel::embed(&col, shape)?);
            for i in 0..len {
                let scale = col[i].norm().max(1.0);
                worst = worst.max((lhs[i] - col[i] * w[i]).norm() / scale);
                worst = worst.max((lhs[i] - col[i] * combined[(i, r)]).norm() / scale);
            }
        }
    }
    Ok(worst)
}

fn fold_roundtrip(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let order = rng.random_range(1..5);
        let dims: Vec<usize> = (0..order).map(|_| rng.random_range(1..6)).collect();
        let total = dims.iter().product();
        let x = ComplexTensor::new(dims.clone(), rand_vec(rng, total))?;
        for n in 0..order {
            let back = ComplexTensor::fold(&x.unfold(n)?, &dims, n)?;
            worst = worst.max(back.sub(&x)?.max_abs());
        }
    }
    Ok(worst)
}

fn khatri_rao_unfolding(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let order = rng.random_range(2..5);
        let rank = rng.random_range(1..5);
        let dims: Vec<usize> = (0..order).map(|_| rng.random_range(1..6)).collect();
        let factors: Vec<CMatrix> = dims.iter().map(|&d| rand_mat(rng, d, rank)).collect();
        let x = CpFactors::new(factors.clone())?.synthesize();
        for n in 0..order {
            let mut kr: Option<CMatrix> = None;
            for m in (0..order).rev().filter(|&m| m != n) {
                kr = Some(match kr {
                    None => factors[m].clone(),
                    Some(acc) => khatri_rao(&acc, &factors[m])?,
                });
            }
            let expected = &factors[n] * kr.expect("order ≥ 2").transpose();
            let diff = (&x.unfold(n)? - &expected).norm() / expected.norm().max(f64::MIN_POSITIVE);
            worst = worst.max(diff);
        }
    }
    Ok(worst)
}

/// Largest margin by which a random perturbation of `S_τ(M)` beats it on
/// `τ‖Z‖_* + ½‖Z − M‖_F²`; nonpositive when the prox is optimal.
fn svt_optimality(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (rows, cols) = (rng.random_range(1..8), rng.random_range(1..8));
        let m = rand_mat(rng, rows, cols);
        let tau = rng.random_range(0.05..2.0);
        let z = soft_threshold_singular(&m, tau)?;
        let objective = |z: &CMatrix| -> Result<f64> { Ok(tau * nuclear_norm(z)? + 0.5 * (z - &m).norm_squared()) };
        let best = objective(&z)?;
        for k in 0..50 {
            let scale = 10f64.powi(-(k % 4) - 1);
            let p = &z + rand_mat(rng, rows, cols) * C64::new(scale, 0.0);
            worst = worst.max((best - objective(&p)?) / best.max(1.0));
        }
    }
    Ok(worst)
}

fn svt_nonexpansive(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let (rows, cols) = (rng.random_range(1..8), rng.random_range(1..8));
        let tau = rng.random_range(0.05..2.0);
        let a = rand_mat(rng, rows, cols);
        let b = rand_mat(rng, rows, cols);
        let lhs = (soft_threshold_singular(&a, tau)? - soft_threshold_singular(&b, tau)?).norm();
        worst = worst.max(lhs - (&a - &b).norm());
    }
    Ok(worst)
}

/// Runs the full battery with instances drawn from `seed`.
pub fn run(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = stream(seed, Stream::Model);
    Ok(vec![
        check("hankel adjoint", hankel_adjoint(&mut rng)?, 1e-12),
        check("column extractor adjoint", column_adjoint(&mut rng)?, 1e-12),
        check("anti-diagonal weight identities", weight_identities(&mut rng)?, 1e-12),
        check("unfold/fold roundtrip", fold_roundtrip(&mut rng)?, 0.0),
        check("khatri-rao unfolding", khatri_rao_unfolding(&mut rng)?, 1e-12),
        check("svt prox optimality", svt_optimality(&mut rng)?, 1e-12),
        check("svt nonexpansive", svt_nonexpansive(&mut rng)?, 1e-10),
    ])
}

#[cfg(test)]
mod tests {
    #[test]
    fn battery_passes() {
        for c in super::run(3).unwrap() {
            assert!(c.passed, "{} worst {:e}", c.name, c.worst);
        }
    }
}
