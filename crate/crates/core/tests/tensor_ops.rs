mod common;

use common::*;
use hmrtc_core::io;
use hmrtc_core::tensor::khatri_rao;
use hmrtc_core::{CMatrix, ComplexTensor, CpFactors, Error, SamplingMask, C64};
use proptest::prelude::*;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn unfold_matches_index_formula() {
    let mut g = rng(1);
    for order in 1..=4 {
        for _ in 0..5 {
            let dims = rand_dims(&mut g, order, 4);
            let x = rand_tensor(&mut g, &dims);
            for n in 0..order {
                assert_eq!(x.unfold(n).unwrap(), brute_unfold(&x, n), "dims {dims:?} mode {n}");
            }
        }
    }
}

#[test]
fn small_unfold_by_hand() {
    let x = ComplexTensor::from_fn(&[2, 3, 2], |i| c((i[0] + 2 * i[1] + 6 * i[2] + 1) as f64)).unwrap();
    let m = x.unfold(0).unwrap();
    assert_eq!(m.shape(), (2, 6));
    let row: Vec<f64> = m.row(0).iter().map(|z| z.re).collect();
    assert_eq!(row, vec![1.0, 3.0, 5.0, 7.0, 9.0, 11.0]);
    let m2 = x.unfold(2).unwrap();
    assert_eq!(m2.shape(), (2, 6));
    assert_eq!(m2[(1, 0)], c(7.0));
}

#[test]
fn cp_synthesis_matches_brute_force() {
    let mut g = rng(2);
    for order in 1..=4 {
        for rank in 1..=3 {
            let dims = rand_dims(&mut g, order, 4);
            let factors: Vec<CMatrix> = dims.iter().map(|&d| rand_mat(&mut g, d, rank)).collect();
            let fast = CpFactors::new(factors.clone()).unwrap().synthesize();
            let slow = brute_cp(&factors);
            let err = fast.sub(&slow).unwrap().frobenius_norm() / slow.frobenius_norm();
            assert!(err < 1e-13, "order {order} rank {rank}: {err:e}");
        }
    }
}

#[test]
fn rank_one_outer_product() {
    let a = CMatrix::from_column_slice(2, 1, &[c(1.0), c(2.0)]);
    let b = CMatrix::from_column_slice(2, 1, &[c(3.0), c(4.0)]);
    let x = CpFactors::new(vec![a, b]).unwrap().synthesize();
    let vals: Vec<f64> = x.data().iter().map(|z| z.re).collect();
    assert_eq!(vals, vec![3.0, 6.0, 4.0, 8.0]);
}

#[test]
fn weights_scale_components() {
    let mut g = rng(3);
    let factors: Vec<CMatrix> = [3, 4].iter().map(|&d| rand_mat(&mut g, d, 2)).collect();
    let w = vec![C64::new(2.0, 1.0), C64::new(-0.5, 0.0)];
    let weighted = CpFactors::with_weights(factors.clone(), w.clone()).unwrap().synthesize();
    let mut scaled = factors.clone();
    for r in 0..2 {
        for v in scaled[0].column_mut(r).iter_mut() {
            *v *= w[r];
        }
    }
    let expect = brute_cp(&scaled);
    assert!(weighted.sub(&expect).unwrap().frobenius_norm() < 1e-13);
    let mut absorbed = CpFactors::with_weights(factors, w).unwrap();
    absorbed.absorb_weights();
    assert!(absorbed.weights().iter().all(|&x| x == c(1.0)));
    assert!(absorbed.synthesize().sub(&expect).unwrap().frobenius_norm() < 1e-13);
}

#[test]
fn khatri_rao_columns_are_kronecker_products() {
    let mut g = rng(4);
    for _ in 0..10 {
        let rank = g_range(&mut g, 1, 4);
        let (ra, rb) = (g_range(&mut g, 1, 5), g_range(&mut g, 1, 5));
        let a = rand_mat(&mut g, ra, rank);
        let b = rand_mat(&mut g, rb, rank);
        let kr = khatri_rao(&a, &b).unwrap();
        for j in 0..rank {
            let expect = kron(&a.columns(j, 1).into(), &b.columns(j, 1).into());
            assert_eq!(kr.column(j), expect.column(0));
        }
    }
    let a = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
    let b = CMatrix::from_row_slice(2, 2, &[c(5.0), c(6.0), c(7.0), c(8.0)]);
    let kr = khatri_rao(&a, &b).unwrap();
    let col0: Vec<f64> = kr.column(0).iter().map(|z| z.re).collect();
    assert_eq!(col0, vec![5.0, 7.0, 15.0, 21.0]);
    assert!(khatri_rao(&a, &CMatrix::zeros(2, 3)).is_err());
}

fn g_range(g: &mut rand_chacha::ChaCha8Rng, lo: usize, hi: usize) -> usize {
    use rand::Rng;
    g.random_range(lo..=hi)
}

/// `X_(n) = U^(n) (U^(N) ⊙ … ⊙ U^(n+1) ⊙ U^(n-1) ⊙ … ⊙ U^(1))ᵀ`, with the
/// Khatri-Rao product assembled from Kronecker columns.
#[test]
fn unfolding_khatri_rao_identity() {
    let mut g = rng(5);
    for order in 2..=4 {
        let rank = 3;
        let dims = rand_dims(&mut g, order, 4);
        let factors: Vec<CMatrix> = dims.iter().map(|&d| rand_mat(&mut g, d, rank)).collect();
        let x = brute_cp(&factors);
        for n in 0..order {
            let cols: Vec<CMatrix> = (0..rank)
                .map(|r| {
                    let mut acc: Option<CMatrix> = None;
                    for m in (0..order).rev().filter(|&m| m != n) {
                        let col: CMatrix = factors[m].columns(r, 1).into();
                        acc = Some(match acc {
                            None => col,
                            Some(a) => kron(&a, &col),
                        });
                    }
                    acc.unwrap()
                })
                .collect();
            let kr = CMatrix::from_fn(cols[0].nrows(), rank, |i, r| cols[r][(i, 0)]);
            let expect = &factors[n] * kr.transpose();
            let err = (&x.unfold(n).unwrap() - &expect).norm() / expect.norm();
            assert!(err < 1e-13, "order {order} mode {n}: {err:e}");
        }
    }
}

#[test]
fn mask_matricization_matches_unfolded_masked_tensor() {
    let mut g = rng(6);
    let dims = vec![3, 4, 5];
    let x = rand_tensor(&mut g, &dims);
    let mask = SamplingMask::from_linear(&dims, (0..60).filter(|l| l % 3 != 1).collect()).unwrap();
    let masked = x.apply_mask(&mask).unwrap();
    for n in 0..3 {
        let mm = mask.matricize(n).unwrap();
        assert_eq!(mm.entries.len(), mask.len());
        assert_eq!(mm.apply(&x.unfold(n).unwrap()).unwrap(), masked.unfold(n).unwrap());
    }
    let comp = mask.complement();
    assert_eq!(comp.len() + mask.len(), 60);
    assert!(comp.linear_indices().iter().all(|&l| l % 3 == 1));
    assert!((mask.sampling_ratio() - 40.0 / 60.0).abs() < 1e-15);
}

#[test]
fn mask_construction_rules() {
    let m = SamplingMask::new(&[2, 2], &[vec![1, 1], vec![0, 0], vec![1, 1]]).unwrap();
    assert_eq!(m.linear_indices(), &[0, 3]);
    assert!(SamplingMask::new(&[2, 2], &[vec![2, 0]]).is_err());
    assert!(SamplingMask::from_linear(&[2, 2], vec![4]).is_err());
    assert!(ComplexTensor::new(vec![2, 2], vec![c(0.0); 3]).is_err());
    assert!(matches!(
        ComplexTensor::zeros(&[2]).unwrap().sub(&ComplexTensor::zeros(&[3]).unwrap()),
        Err(Error::DimMismatch { .. })
    ));
}

#[test]
fn io_rejects_corruption() {
    let x = ComplexTensor::from_fn(&[2, 3], |i| C64::new(i[0] as f64, i[1] as f64)).unwrap();
    let mut buf = Vec::new();
    io::write_tensor(&mut buf, &x).unwrap();
    assert_eq!(buf.len(), 6 + 4 + 16 + 6 * 16);
    assert_eq!(io::read_tensor(&mut buf.as_slice()).unwrap(), x);

    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(io::read_tensor(&mut bad.as_slice()), Err(Error::Format { .. })));
    let short = &buf[..buf.len() - 1];
    assert!(matches!(io::read_tensor(&mut &short[..]), Err(Error::Format { .. })));
    let mut long = buf.clone();
    long.push(0);
    assert!(matches!(io::read_tensor(&mut long.as_slice()), Err(Error::Format { .. })));

    let mask = SamplingMask::from_linear(&[2, 3], vec![1, 4]).unwrap();
    let mut mb = Vec::new();
    io::write_mask(&mut mb, &mask).unwrap();
    assert_eq!(io::read_mask(&mut mb.as_slice()).unwrap(), mask);
    assert!(io::read_tensor(&mut mb.as_slice()).is_err());
}

#[test]
fn io_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = rng(7);
    let x = rand_tensor(&mut g, &[3, 1, 4]);
    let p = dir.path().join("x.cten");
    io::save_tensor(&p, &x).unwrap();
    let back = io::load_tensor(&p).unwrap();
    assert!(back.data().iter().zip(x.data()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    assert!(matches!(io::load_tensor(dir.path().join("missing")), Err(Error::Io { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fold_inverts_unfold(dims in prop::collection::vec(1usize..5, 1..5), seed in any::<u64>()) {
        let mut g = rng(seed);
        let x = rand_tensor(&mut g, &dims);
        for n in 0..dims.len() {
            let back = ComplexTensor::fold(&x.unfold(n).unwrap(), &dims, n).unwrap();
            prop_assert_eq!(&back, &x);
        }
    }

    #[test]
    fn tensor_bytes_roundtrip(dims in prop::collection::vec(1usize..4, 1..4), seed in any::<u64>()) {
        let x = rand_tensor(&mut rng(seed), &dims);
        let mut buf = Vec::new();
        io::write_tensor(&mut buf, &x).unwrap();
        prop_assert_eq!(io::read_tensor(&mut buf.as_slice()).unwrap(), x);
    }

    #[test]
    fn mask_bytes_roundtrip(dims in prop::collection::vec(1usize..5, 1..4), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..20)) {
        let total: usize = dims.iter().product();
        let lin: Vec<usize> = picks.iter().map(|p| p.index(total)).collect();
        let mask = SamplingMask::from_linear(&dims, lin.clone()).unwrap();
        let mut uniq = lin;
        uniq.sort_unstable();
        uniq.dedup();
        prop_assert_eq!(mask.linear_indices(), &uniq[..]);
        let mut buf = Vec::new();
        io::write_mask(&mut buf, &mask).unwrap();
        prop_assert_eq!(io::read_mask(&mut buf.as_slice()).unwrap(), mask);
    }

    #[test]
    fn linear_index_is_a_bijection(dims in prop::collection::vec(1usize..5, 1..5)) {
        let x = ComplexTensor::zeros(&dims).unwrap();
        for (l, idx) in all_indices(&dims).iter().enumerate() {
            prop_assert_eq!(x.linear_index(idx).unwrap(), l);
            prop_assert_eq!(linear(&dims, idx), l);
        }
    }
}
