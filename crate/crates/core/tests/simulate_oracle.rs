mod common;

use common::*;
use gengm::linalg::dot;
use gengm::model::{from_regression, to_regression};
use gengm::simulate::{
    ar_covariance, first_diff_structure, gen_replication, gen_scenario, replication_rng, sample_dataset, ScenarioSpec,
    S1_SECTION_LEN, S3_SECTION_LEN,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn first_difference_quadratic_form_telescopes(u in prop::collection::vec(-10.0f64..10.0, 2..40)) {
        let l = first_diff_structure(u.len()).unwrap();
        let lu = l.as_dense().mul_vec(&u);
        let telescoped: f64 = 0.5 * u.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
        prop_assert!((dot(&u, &lu) - telescoped).abs() < 1e-12 * telescoped.max(1.0));
    }
}

#[test]
fn noise_covariance_by_monte_carlo() {
    let spec = ScenarioSpec::new(3, 0);
    let mut r = rng(4);
    let truth = random_theta(&mut r, 3, 4);
    let noise = ar_covariance(3, spec.r).unwrap();
    let n = 100_000;
    let d = sample_dataset(&truth, &noise, n, &mut replication_rng(99, 0)).unwrap();
    let b = to_regression(&truth).unwrap().b;
    let e = d.y.sub(&d.x.matmul(&b));
    let emp = e.t_matmul(&e).scale(1.0 / n as f64);
    assert!(emp.sub(noise.as_dense()).max_abs() < 0.02);
}

#[test]
fn ar_precision_is_tridiagonal() {
    let r = ar_covariance(3, 0.5).unwrap();
    let prec = na(&r).try_inverse().unwrap();
    assert!(prec[(0, 2)].abs() < 1e-10 && prec[(2, 0)].abs() < 1e-10);
    assert!(prec[(0, 1)].abs() > 0.1);
}

fn row_runs(row: &[f64]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut len = 0;
    for v in row {
        if *v != 0.0 {
            len += 1;
        } else if len > 0 {
            runs.push(len);
            len = 0;
        }
    }
    if len > 0 {
        runs.push(len);
    }
    runs
}

#[test]
fn scenario_supports_by_construction() {
    let mut saw_full = false;
    for seed in 0..40 {
        let s1 = gen_replication(&ScenarioSpec { p: 300, n_train: 5, n_valid: 1, ..ScenarioSpec::new(1, seed) }, 0).unwrap();
        let yx = s1.truth().omega_yx();
        let nnz = yx.count_nonzero(0.0);
        assert!((S1_SECTION_LEN..=30).contains(&nnz));
        saw_full |= nnz == 30;
        for i in 0..yx.rows() {
            assert!(row_runs(yx.row(i)).iter().all(|&len| len >= S1_SECTION_LEN));
        }

        let s2 = gen_replication(&ScenarioSpec { p: 30, n_train: 5, n_valid: 1, ..ScenarioSpec::new(2, seed) }, 0).unwrap();
        assert_eq!(s2.truth().omega_yx().count_nonzero(0.0), 30);

        let s3 = gen_replication(&ScenarioSpec { p: 50, n_train: 5, n_valid: 1, ..ScenarioSpec::new(3, seed) }, 0).unwrap();
        let yx = s3.truth().omega_yx();
        assert_eq!(yx.count_nonzero(0.0), 3 * S3_SECTION_LEN);
        for i in 0..3 {
            assert_eq!(row_runs(yx.row(i)), vec![S3_SECTION_LEN]);
        }
    }
    assert!(saw_full, "no seed produced ten disjoint sections");
}

#[test]
fn generation_is_bit_reproducible_and_consistent() {
    let spec = ScenarioSpec { p: 24, n_train: 30, n_valid: 20, ..ScenarioSpec::new(2, 5) };
    assert_eq!(gen_scenario(&spec).unwrap(), gen_scenario(&spec).unwrap());
    let a = gen_replication(&spec, 3).unwrap();
    let b = gen_replication(&spec, 3).unwrap();
    assert_eq!(a.train, b.train);
    assert_ne!(a.train, gen_replication(&spec, 4).unwrap().train);

    let truth = a.truth();
    let back = from_regression(&to_regression(truth).unwrap()).unwrap();
    assert!(back.frob_distance(truth) < 1e-12);
    let r = to_regression(truth).unwrap().r;
    assert!(r.sub(&ar_covariance(2, spec.r).unwrap()).max_abs() < 1e-12);
}
