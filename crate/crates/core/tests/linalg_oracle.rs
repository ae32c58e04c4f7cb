mod common;

use common::*;
use gengm::linalg::{
    eig_extremes, eigenvalues, frob_inner, inv_spd, is_spd, spectral_norm, unvech, vech, Cholesky, DenseMatrix,
    SymmetricMatrix,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn jacobi_matches_reference_eigensolver_seed_42() {
    let mut r = rng(42);
    let g = gaussian(&mut r, 6, 6);
    let a = SymmetricMatrix::symmetrize(g.add(&g.transpose()));
    let ours = sorted(eigenvalues(&a).unwrap());
    let reference = sorted(na(&a).symmetric_eigenvalues().iter().copied().collect());
    for (x, y) in ours.iter().zip(&reference) {
        assert!((x - y).abs() < 1e-10, "{x} vs {y}");
    }
}

#[test]
fn two_by_two_spectrum_by_hand() {
    let a = SymmetricMatrix::from_rows(&[vec![1.0, 0.9], vec![0.9, 1.0]]).unwrap();
    assert!(is_spd(&a).unwrap());
    let (lo, hi) = eig_extremes(&a).unwrap();
    assert!((lo - 0.1).abs() < 1e-12 && (hi - 1.9).abs() < 1e-12);
}

#[test]
fn frobenius_pairing_expands_to_70() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let b = DenseMatrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
    assert_eq!(frob_inner(&a, &b).unwrap(), 70.0);
}

#[test]
fn vech_is_column_stacked_lower_triangle() {
    let a = SymmetricMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 5.0], vec![3.0, 5.0, 6.0]]).unwrap();
    assert_eq!(vech(&a), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
}

#[test]
fn factorization_products_match_reference() {
    for seed in 0..20 {
        let mut r = rng(seed);
        let k = 1 + seed as usize % 7;
        let a = random_spd(&mut r, k, 0.1);
        let reference = na(&a);
        let ch = Cholesky::factor(&a).unwrap();
        let ln_det = reference.determinant().ln();
        assert!((ch.log_det() - ln_det).abs() < 1e-10 * ln_det.abs().max(1.0));
        let inv = na(&inv_spd(&a).unwrap());
        let ref_inv = reference.clone().try_inverse().unwrap();
        assert!((inv - ref_inv).amax() < 1e-9);

        let rect = gaussian(&mut r, k, k + 2);
        let s = spectral_norm(&rect).unwrap();
        let ref_s = na(&rect).singular_values().max();
        assert!((s - ref_s).abs() < 1e-10 * ref_s.max(1.0));
    }
}

#[test]
fn non_spd_is_detected() {
    let a = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert!(!is_spd(&a).unwrap());
    assert!(Cholesky::factor(&a).is_err());
}

fn symmetric_strategy(max: usize) -> impl Strategy<Value = SymmetricMatrix> {
    (1..=max).prop_flat_map(|k| {
        prop::collection::vec(-5.0f64..5.0, k * k).prop_map(move |v| {
            let m = DenseMatrix::new(k, k, v).unwrap();
            SymmetricMatrix::symmetrize(m.add(&m.transpose()))
        })
    })
}

fn psd_pair(max: usize) -> impl Strategy<Value = (SymmetricMatrix, SymmetricMatrix, DenseMatrix)> {
    (1..=max, 1..=max).prop_flat_map(|(k, m)| {
        (
            prop::collection::vec(-2.0f64..2.0, k * k),
            prop::collection::vec(-2.0f64..2.0, k * k),
            prop::collection::vec(-2.0f64..2.0, k * m),
        )
            .prop_map(move |(a, b, u)| {
                let a = DenseMatrix::new(k, k, a).unwrap();
                let b = DenseMatrix::new(k, k, b).unwrap();
                (
                    SymmetricMatrix::symmetrize(a.matmul_t(&a)),
                    SymmetricMatrix::symmetrize(b.matmul_t(&b)),
                    DenseMatrix::new(k, m, u).unwrap(),
                )
            })
    })
}

proptest! {
    #[test]
    fn vech_round_trip(a in symmetric_strategy(7)) {
        let back = unvech(&vech(&a), a.dim()).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn extremes_agree_with_reference(a in symmetric_strategy(6)) {
        let (lo, hi) = eig_extremes(&a).unwrap();
        let ev = na(&a).symmetric_eigenvalues();
        let scale = a.max_abs().max(1.0);
        prop_assert!((lo - ev.min()).abs() < 1e-10 * scale);
        prop_assert!((hi - ev.max()).abs() < 1e-10 * scale);
    }

    #[test]
    fn congruence_keeps_psd((a, _b, u) in psd_pair(5)) {
        let (lo, _) = eig_extremes(&a.congruence(&u)).unwrap();
        prop_assert!(lo >= -1e-10 * a.max_abs().max(1.0) * u.max_abs().max(1.0).powi(2));
    }

    #[test]
    fn weyl_extremes((a, b, _u) in psd_pair(5)) {
        let (a_lo, a_hi) = eig_extremes(&a).unwrap();
        let (b_lo, b_hi) = eig_extremes(&b).unwrap();
        let (s_lo, s_hi) = eig_extremes(&a.add(&b)).unwrap();
        prop_assert!(a_lo + b_lo <= s_lo + 1e-9);
        prop_assert!(s_hi <= a_hi + b_hi + 1e-9);
    }

    #[test]
    fn trace_sandwich((a, b, u) in psd_pair(5)) {
        let (lo, hi) = eig_extremes(&a).unwrap();
        let tab = a.matmul(&b).trace();
        let tb = b.trace();
        prop_assert!(lo * tb <= tab + 1e-9 && tab <= hi * tb + 1e-9);
        let tu = a.congruence(&u).trace();
        let fu: f64 = u.as_slice().iter().map(|v| v * v).sum();
        prop_assert!(lo * fu <= tu + 1e-9 && tu <= hi * fu + 1e-9);
    }
}

#[test]
fn reference_conversion_round_trips() {
    let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(na(&from_na(&m)), m);
}
