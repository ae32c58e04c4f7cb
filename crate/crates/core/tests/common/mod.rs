//! Shared fixtures and independent nalgebra oracles for the integration tests.
#![allow(dead_code)]

use gengm::linalg::{DenseMatrix, SymmetricMatrix};
use gengm::model::{sample_covariances, CovarianceTriplet, Dataset, ParameterPair};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `A A^t / k + floor I`.
pub fn random_spd(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> SymmetricMatrix {
    let a = gaussian(rng, k, k);
    let m = a.matmul_t(&a).scale(1.0 / k as f64).add(&DenseMatrix::identity(k).scale(floor));
    SymmetricMatrix::symmetrize(m)
}

/// `C C^t` with `C` of width `rank`.
pub fn random_psd(rng: &mut ChaCha8Rng, k: usize, rank: usize) -> SymmetricMatrix {
    let c = gaussian(rng, k, rank);
    SymmetricMatrix::symmetrize(c.matmul_t(&c))
}

pub fn random_theta(rng: &mut ChaCha8Rng, q: usize, p: usize) -> ParameterPair {
    let yy = random_spd(rng, q, 0.5);
    let yx = gaussian(rng, q, p).scale(0.5);
    ParameterPair::new(yy, yx).unwrap()
}

/// Sample covariances of `n` unstructured Gaussian rows.
pub fn random_covariances(rng: &mut ChaCha8Rng, q: usize, p: usize, n: usize) -> CovarianceTriplet {
    let x = gaussian(rng, n, p);
    let mix = gaussian(rng, p, q).scale(0.7);
    let y = x.matmul(&mix).add(&gaussian(rng, n, q));
    sample_covariances(&Dataset::new(x, y).unwrap()).unwrap()
}

/// Plain-formula evaluation of the penalized objective, `+inf` off the cone.
pub struct Oracle {
    pub s_yy: DMatrix<f64>,
    pub s_yx: DMatrix<f64>,
    pub s_xx: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
    pub beta: f64,
}

impl Oracle {
    pub fn new(cov: &CovarianceTriplet, l: &SymmetricMatrix, lambda: f64, mu: f64, eta: f64, beta: f64) -> Self {
        Self {
            s_yy: na(&cov.s_yy),
            s_yx: na(&cov.s_yx),
            s_xx: na(&cov.s_xx),
            l: na(l),
            lambda,
            mu,
            eta,
            beta,
        }
    }

    pub fn smooth(&self, yy: &DMatrix<f64>, yx: &DMatrix<f64>) -> f64 {
        let Some(ch) = yy.clone().cholesky() else { return f64::INFINITY };
        let det = yy.determinant();
        if !(det > 0.0) {
            return f64::INFINITY;
        }
        let w = ch.inverse();
        let inner = yx.transpose() * &w * yx;
        let u = (&self.l * &inner).trace();
        let mut v = -det.ln() + (&self.s_yy * yy).trace() + 2.0 * (self.s_yx.transpose() * yx).trace()
            + (&self.s_xx * &inner).trace();
        if self.eta != 0.0 {
            v += self.eta * u.powf(self.beta);
        }
        v
    }

    pub fn full(&self, yy: &DMatrix<f64>, yx: &DMatrix<f64>) -> f64 {
        let mut off = 0.0;
        for i in 0..yy.nrows() {
            for j in 0..yy.ncols() {
                if i != j {
                    off += yy[(i, j)].abs();
                }
            }
        }
        self.smooth(yy, yx) + self.lambda * off + self.mu * yx.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// Ordered index sets of size `k` from `0..n`, by recursion.
pub fn naive_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}
