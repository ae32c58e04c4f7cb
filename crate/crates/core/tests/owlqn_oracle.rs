mod common;

use common::*;
use gengm::owlqn::{minimize, pseudo_gradient, L1Problem, OwlqnSettings};
use proptest::prelude::*;

fn soft(z: f64, t: f64) -> f64 {
    z.signum() * (z.abs() - t).max(0.0)
}

/// Cyclic coordinate descent on `1/2 b^t Q b - c^t b + sum w_j |b_j|`.
fn coordinate_descent(q: &[Vec<f64>], c: &[f64], w: &[f64]) -> Vec<f64> {
    let k = c.len();
    let mut b = vec![0.0; k];
    for _ in 0..100_000 {
        let mut change = 0.0f64;
        for j in 0..k {
            let partial: f64 = (0..k).filter(|&i| i != j).map(|i| q[j][i] * b[i]).sum();
            let new = soft(c[j] - partial, w[j]) / q[j][j];
            change = change.max((new - b[j]).abs());
            b[j] = new;
        }
        if change < 1e-15 {
            break;
        }
    }
    b
}

#[test]
fn lasso_agrees_with_coordinate_descent() {
    let mut r = rng(20);
    let (n, k) = (60, 20);
    let a = gaussian(&mut r, n, k);
    let truth: Vec<f64> = (0..k).map(|j| if j % 4 == 0 { 1.5 } else { 0.0 }).collect();
    let y: Vec<f64> = a.mul_vec(&truth).iter().zip(gaussian(&mut r, n, 1).as_slice()).map(|(s, e)| s + 0.5 * e).collect();
    let gram = a.t_matmul(&a).scale(1.0 / n as f64);
    let q: Vec<Vec<f64>> = (0..k).map(|i| gram.row(i).to_vec()).collect();
    let c: Vec<f64> = a.transpose().mul_vec(&y).iter().map(|v| v / n as f64).collect();
    let w: Vec<f64> = (0..k).map(|j| if j == 3 { 0.0 } else { 0.1 }).collect();

    let expected = coordinate_descent(&q, &c, &w);
    let smooth = |b: &[f64], g: &mut [f64]| {
        let qb = gram.mul_vec(b);
        for j in 0..k {
            g[j] = qb[j] - c[j];
        }
        0.5 * b.iter().zip(&qb).map(|(x, y)| x * y).sum::<f64>() - b.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>()
    };
    let mut problem = L1Problem::new(smooth, w).unwrap();
    let settings = OwlqnSettings { grad_tol: 1e-10, max_iters: 5000, ..OwlqnSettings::default() };
    let res = minimize(&mut problem, &vec![0.0; k], &settings).unwrap();
    let dev = res.solution.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-5, "max deviation {dev}");
    for (s, e) in res.solution.iter().zip(&expected) {
        if *e == 0.0 {
            assert_eq!(*s, 0.0, "coordinate-descent zero not reproduced exactly");
        }
    }
}

#[test]
fn left_derivative_rule() {
    let pg = pseudo_gradient(&[0.0], &[-0.9], &[0.5]).unwrap();
    assert!((pg[0] + 0.4).abs() < 1e-15);
    let pg = pseudo_gradient(&[0.0], &[0.3], &[0.5]).unwrap();
    assert_eq!(pg[0], 0.0);
}

#[test]
fn barrier_outside_domain_is_backtracked() {
    // smooth = x - 2 ln x + 50 (y - 1)^2, infinite for x <= 0; minimizer (2, 1).
    let smooth = |v: &[f64], g: &mut [f64]| {
        if v[0] <= 0.0 {
            return f64::INFINITY;
        }
        g[0] = 1.0 - 2.0 / v[0];
        g[1] = 100.0 * (v[1] - 1.0);
        v[0] - 2.0 * v[0].ln() + 50.0 * (v[1] - 1.0).powi(2)
    };
    let mut problem = L1Problem::new(smooth, vec![0.0, 0.0]).unwrap();
    let res = minimize(&mut problem, &[0.05, 0.0], &OwlqnSettings::default()).unwrap();
    assert!((res.solution[0] - 2.0).abs() < 1e-4 && (res.solution[1] - 1.0).abs() < 1e-4);
}

proptest! {
    #[test]
    fn scalar_prox_is_soft_threshold(target in -3.0f64..3.0, w in 0.0f64..2.0) {
        let smooth = |v: &[f64], g: &mut [f64]| {
            g[0] = v[0] - target;
            0.5 * (v[0] - target).powi(2)
        };
        let mut problem = L1Problem::new(smooth, vec![w]).unwrap();
        let res = minimize(&mut problem, &[0.0], &OwlqnSettings::default()).unwrap();
        prop_assert!((res.solution[0] - soft(target, w)).abs() < 1e-6);
    }

    #[test]
    fn pseudo_gradient_is_minimal_norm_subgradient(v in -1.0f64..1.0, g in -2.0f64..2.0, w in 0.0f64..1.5) {
        let v = if v.abs() < 0.3 { 0.0 } else { v };
        let pg = pseudo_gradient(&[v], &[g], &[w]).unwrap()[0];
        let expected = if v != 0.0 { g + w * v.signum() } else if g + w < 0.0 { g + w } else if g - w > 0.0 { g - w } else { 0.0 };
        prop_assert!((pg - expected).abs() < 1e-15);
    }
}
