mod common;

use common::*;
use hmrtc_core::hankel::{self, HankelShape};
use hmrtc_core::svt::{complex_svd, nuclear_norm, soft_threshold_singular, spectral_norm};
use hmrtc_core::{CMatrix, Error, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn shapes_for(len: usize) -> Vec<HankelShape> {
    (1..=len).map(|s1| HankelShape::new(s1, len + 1 - s1).unwrap()).collect()
}

#[test]
fn embedding_matches_dense_operator() {
    let mut g = rng(10);
    for len in 1..12 {
        for shape in shapes_for(len) {
            let x = rand_vec(&mut g, len);
            let p = hankel_operator(shape);
            let dense = &p * nalgebra::DVector::from_vec(x.clone());
            let h = hankel::embed(&x, shape).unwrap();
            assert_eq!(h.shape(), (shape.s1, shape.s2));
            assert_eq!(vec_of(&h), dense);

            let m = rand_mat(&mut g, shape.s1, shape.s2);
            let adj = p.adjoint() * vec_of(&m);
            let ours = hankel::adjoint(&m);
            for i in 0..len {
                assert!((ours[i] - adj[i]).norm() < 1e-13);
            }
        }
    }
}

#[test]
fn small_hankel_by_hand() {
    let x: Vec<C64> = (1..=5).map(|v| C64::new(v as f64, 0.0)).collect();
    let shape = HankelShape::square(5).unwrap();
    assert_eq!((shape.s1, shape.s2), (3, 3));
    let h = hankel::embed(&x, shape).unwrap();
    let rows: Vec<Vec<f64>> = (0..3).map(|i| h.row(i).iter().map(|z| z.re).collect()).collect();
    assert_eq!(rows, vec![vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0], vec![3.0, 4.0, 5.0]]);
    let ones = CMatrix::from_element(3, 3, C64::new(1.0, 0.0));
    let adj: Vec<f64> = hankel::adjoint(&ones).iter().map(|z| z.re).collect();
    assert_eq!(adj, vec![1.0, 2.0, 3.0, 2.0, 1.0]);
    assert_eq!(hankel::antidiagonal_weights(shape), vec![1.0, 2.0, 3.0, 2.0, 1.0]);
    assert_eq!(HankelShape::square(4).unwrap(), HankelShape::new(3, 2).unwrap());
    assert!(hankel::embed(&x, HankelShape::new(2, 2).unwrap()).is_err());
}

#[test]
fn weights_are_diagonal_of_gram() {
    for len in 1..15 {
        for shape in shapes_for(len) {
            let p = hankel_operator(shape);
            let gram = p.adjoint() * &p;
            let w = hankel::antidiagonal_weights(shape);
            for i in 0..len {
                for j in 0..len {
                    let expect = if i == j { w[i] } else { 0.0 };
                    assert_eq!(gram[(i, j)], C64::new(expect, 0.0));
                }
            }
        }
    }
}

#[test]
fn hankel_adjoint_identity() {
    let mut g = rng(11);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let len = g.random_range(1..40);
        let s1 = g.random_range(1..=len);
        let shape = HankelShape::new(s1, len + 1 - s1).unwrap();
        let x = rand_vec(&mut g, len);
        let m = rand_mat(&mut g, shape.s1, shape.s2);
        let lhs = inner(hankel::embed(&x, shape).unwrap().as_slice(), m.as_slice());
        let rhs = inner(&x, &hankel::adjoint(&m));
        worst = worst.max((lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1.0));
    }
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn column_extractor_adjoint_and_gram() {
    let mut g = rng(12);
    for _ in 0..100 {
        let (rows, cols) = (g.random_range(1..15), g.random_range(1..6));
        let r = g.random_range(0..cols);
        let m = rand_mat(&mut g, rows, cols);
        let v = rand_vec(&mut g, rows);
        let col = hankel::column_extract(&m, r).unwrap();
        assert_eq!(col, m.column(r).iter().copied().collect::<Vec<_>>());
        let lhs = inner(&col, &v);
        let rhs = inner(m.as_slice(), hankel::column_embed(&v, r, cols).unwrap().as_slice());
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        let e = hankel::column_embed(&v, r, cols).unwrap();
        for j in 0..cols {
            for i in 0..rows {
                assert_eq!(e[(i, j)], if j == r { v[i] } else { C64::new(0.0, 0.0) });
            }
        }
    }
    let m = rand_mat(&mut g, 3, 2);
    assert!(matches!(hankel::column_extract(&m, 2), Err(Error::OutOfRange(_))));
}

/// `Σ_r Q_r* R* R Q_r U = C ⊛ U` with every column of `C` equal to the weights.
#[test]
fn combined_weight_matrix_identity() {
    let mut g = rng(13);
    for _ in 0..25 {
        let len = g.random_range(1..20);
        let rank = g.random_range(1..6);
        let s1 = g.random_range(1..=len);
        let shape = HankelShape::new(s1, len + 1 - s1).unwrap();
        let u = rand_mat(&mut g, len, rank);
        let p = hankel_operator(shape);
        let mut lhs = CMatrix::zeros(len, rank);
        for r in 0..rank {
            let col = u.column(r).into_owned();
            lhs.set_column(r, &(p.adjoint() * (&p * col)));
        }
        let cmat = hankel::combined_weight_matrix(len, rank, shape).unwrap();
        let rhs = CMatrix::from_fn(len, rank, |i, r| u[(i, r)] * cmat[(i, r)]);
        assert!((&lhs - &rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        let gram = hankel::gram_apply(&u.column(0).iter().copied().collect::<Vec<_>>(), shape).unwrap();
        for i in 0..len {
            assert!((gram[i] - lhs[(i, 0)]).norm() <= 1e-12 * lhs.norm().max(1.0));
        }
    }
}

#[test]
fn single_exponential_has_rank_one_hankel() {
    let z = C64::from_polar(0.97, 0.7);
    let x: Vec<C64> = (0..15).map(|k| z.powu(k)).collect();
    let h = hankel::embed(&x, HankelShape::square(15).unwrap()).unwrap();
    let s = complex_svd(&h).unwrap().sigma;
    assert!(s[0] > 1.0);
    assert!(s.iter().skip(1).all(|&v| v < 1e-12 * s[0]));
}

/// Singular values against the eigenvalues of `MᴴM` from nalgebra.
#[test]
fn svd_matches_eigen_oracle() {
    let mut g = rng(14);
    for _ in 0..60 {
        let (rows, cols) = (g.random_range(1..12), g.random_range(1..12));
        let m = rand_mat(&mut g, rows, cols);
        let svd = complex_svd(&m).unwrap();
        let k = rows.min(cols);
        assert_eq!(svd.sigma.len(), k);
        assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));

        let gram = if rows >= cols { m.adjoint() * &m } else { &m * m.adjoint() };
        let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|&e| e.max(0.0).sqrt()).collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in svd.sigma.iter().zip(&eig) {
            assert!((a - b).abs() <= 1e-10 * eig[0].max(1.0), "{a} vs {b}");
        }
        let rec = svd.reconstruct();
        assert!((&rec - &m).norm() <= 1e-12 * m.norm());
        let uu = svd.u.adjoint() * &svd.u;
        let vv = svd.v.adjoint() * &svd.v;
        assert!((uu - DMatrix::identity(k, k)).norm() < 1e-12);
        assert!((vv - DMatrix::identity(k, k)).norm() < 1e-12);
    }
}

#[test]
fn svd_handles_rank_deficiency_and_zero() {
    let mut g = rng(15);
    let a = rand_mat(&mut g, 7, 2);
    let b = rand_mat(&mut g, 2, 5);
    let m = &a * &b;
    let svd = complex_svd(&m).unwrap();
    assert!(svd.sigma[2..].iter().all(|&s| s < 1e-12 * svd.sigma[0]));
    let uu = svd.u.adjoint() * &svd.u;
    assert!((uu - DMatrix::identity(5, 5)).norm() < 1e-10);
    let z = complex_svd(&CMatrix::zeros(3, 4)).unwrap();
    assert!(z.sigma.iter().all(|&s| s == 0.0));
    let mut bad = m.clone();
    bad[(0, 0)] = C64::new(f64::NAN, 0.0);
    assert!(matches!(complex_svd(&bad), Err(Error::NonFinite(_))));
}

#[test]
fn threshold_closed_form_on_diagonal() {
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::new(3.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(0.5, 0.0),
    ]));
    let t = soft_threshold_singular(&d, 0.75).unwrap();
    let expect = [C64::new(2.25, 0.0), C64::new(0.0, 0.25), C64::new(0.0, 0.0)];
    for i in 0..3 {
        for j in 0..3 {
            let e = if i == j { expect[i] } else { C64::new(0.0, 0.0) };
            assert!((t[(i, j)] - e).norm() < 1e-13);
        }
    }
    assert!((nuclear_norm(&d).unwrap() - 4.5).abs() < 1e-13);
    assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-13);
    assert!(soft_threshold_singular(&d, 3.5).unwrap().norm() == 0.0);
    assert!(matches!(soft_threshold_singular(&d, 0.0), Err(Error::InvalidParameter { .. })));
}

/// `S_τ(M)` beats random perturbations on `τ‖Z‖_* + ½‖Z − M‖_F²`.
#[test]
fn threshold_is_the_prox() {
    let mut g = rng(16);
    for _ in 0..20 {
        let (rows, cols) = (g.random_range(1..7), g.random_range(1..7));
        let m = rand_mat(&mut g, rows, cols);
        let tau = g.random_range(0.1..2.0);
        let obj = |z: &CMatrix| tau * nuclear_norm(z).unwrap() + 0.5 * (z - &m).norm_squared();
        let z = soft_threshold_singular(&m, tau).unwrap();
        let best = obj(&z);
        for k in 0..100 {
            let eps = 10f64.powi(-(k % 5));
            let p = &z + rand_mat(&mut g, rows, cols) * C64::new(eps, 0.0);
            assert!(obj(&p) >= best - 1e-12 * best.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn threshold_is_nonexpansive(rows in 1usize..7, cols in 1usize..7, tau in 0.01f64..3.0, seed in any::<u64>()) {
        let mut g = rng(seed);
        let a = rand_mat(&mut g, rows, cols);
        let b = rand_mat(&mut g, rows, cols);
        let lhs = (soft_threshold_singular(&a, tau).unwrap() - soft_threshold_singular(&b, tau).unwrap()).norm();
        prop_assert!(lhs <= (&a - &b).norm() * (1.0 + 1e-12));
    }

    #[test]
    fn threshold_shrinks_singular_values(rows in 1usize..7, cols in 1usize..7, tau in 0.01f64..3.0, seed in any::<u64>()) {
        let m = rand_mat(&mut rng(seed), rows, cols);
        let before = complex_svd(&m).unwrap().sigma;
        let after = complex_svd(&soft_threshold_singular(&m, tau).unwrap()).unwrap().sigma;
        for (s, t) in before.iter().zip(&after) {
            prop_assert!((t - (s - tau).max(0.0)).abs() <= 1e-10 * before[0].max(1.0));
        }
    }

    #[test]
    fn embed_is_linear(len in 1usize..20, seed in any::<u64>()) {
        let mut g = rng(seed);
        let shape = HankelShape::square(len).unwrap();
        let x = rand_vec(&mut g, len);
        let y = rand_vec(&mut g, len);
        let a = cn(&mut g);
        let combo: Vec<C64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let lhs = hankel::embed(&combo, shape).unwrap();
        let rhs = hankel::embed(&x, shape).unwrap() * a + hankel::embed(&y, shape).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + a.norm()) * len as f64);
    }
}
