//! Prediction error, support recovery, grid tuning and selection frequency.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{inv_spd, DenseMatrix, SymmetricMatrix};
use crate::model::{sample_covariances, Dataset, ParameterPair, RegularizationConfig};
use crate::owlqn::OwlqnSettings;
use crate::simulate::replication_rng;
use crate::solver::{fit, fit_lasso_baseline, FitSettings};

/// Entries of `Omega_yx` with magnitude above this count as selected.
pub const ZERO_TOL: f64 = 1e-8;

/// `||Y + X Omega_yx^T Omega_yy^{-1}||_F^2 / (q n)`.
pub fn mspe(theta: &ParameterPair, d: &Dataset) -> Result<f64> {
    if theta.p() != d.p() || theta.q() != d.q() {
        return invalid("parameter and dataset dimensions differ");
    }
    let w = inv_spd(theta.omega_yy())?;
    let resid = d.y.add(&d.x.matmul_t(theta.omega_yx()).matmul(&w));
    Ok(squared_norm(&resid) / (d.q() * d.n()) as f64)
}

/// `||Y - X B||_F^2 / (q n)` for a `p x q` coefficient matrix.
pub fn mspe_regression(b: &DenseMatrix, d: &Dataset) -> Result<f64> {
    if b.rows() != d.p() || b.cols() != d.q() {
        return invalid("coefficient and dataset dimensions differ");
    }
    let resid = d.y.sub(&d.x.matmul(b));
    Ok(squared_norm(&resid) / (d.q() * d.n()) as f64)
}

fn squared_norm(m: &DenseMatrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FScore {
    pub f: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Support recovery of `Omega_yx`. An empty estimate has precision 0; an
/// empty truth is rejected.
pub fn f_score(estimated: &DenseMatrix, truth: &DenseMatrix, zero_tol: f64) -> Result<FScore> {
    if estimated.rows() != truth.rows() || estimated.cols() != truth.cols() {
        return invalid("support matrices have different shapes");
    }
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (e, t) in estimated.as_slice().iter().zip(truth.as_slice()) {
        match (e.abs() > zero_tol, t.abs() > zero_tol) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
    }
    if tp + fneg == 0 {
        return invalid("true support is empty; recall undefined");
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = tp as f64 / (tp + fneg) as f64;
    let f = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(FScore { f, precision, recall })
}

/// `k` logarithmically spaced points on `[lo, hi]`.
pub fn log_axis(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..k).map(|i| (a + (b - a) * i as f64 / (k - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvGrid {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    pub etas: Vec<f64>,
    pub beta: f64,
    pub folds: usize,
    /// Seed of the fold shuffle.
    pub seed: u64,
}

impl Default for CvGrid {
    fn default() -> Self {
        let axis = log_axis(1e-3, 1e1, 10);
        Self { lambdas: axis.clone(), mus: axis.clone(), etas: axis, beta: 1.0, folds: 5, seed: 0 }
    }
}

impl CvGrid {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.mus.is_empty() || self.etas.is_empty() {
            return invalid("grid axes must be nonempty");
        }
        let ok = |v: &Vec<f64>| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !ok(&self.lambdas) || !ok(&self.mus) || !ok(&self.etas) {
            return invalid("grid values must be finite and >= 0");
        }
        if self.folds < 2 {
            return invalid("at least two folds are needed");
        }
        Ok(())
    }

    /// Cells in lexicographic `(lambda, mu, eta)` axis order.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.lambdas.len() * self.mus.len() * self.etas.len());
        for &l in &self.lambdas {
            for &m in &self.mus {
                for &e in &self.etas {
                    out.push((l, m, e));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvCell {
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
    /// Held-out MSPE per fold; `None` when some fold failed.
    pub fold_mspe: Option<Vec<f64>>,
}

impl CvCell {
    pub fn mean(&self) -> Option<f64> {
        self.fold_mspe.as_ref().map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }
}

#[derive(Clone, Debug)]
pub struct CvResult {
    pub best: RegularizationConfig,
    pub best_mspe: f64,
    pub cells: Vec<CvCell>,
}

/// Row indices of each fold after a seeded shuffle.
pub fn fold_indices(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut replication_rng(seed, u64::MAX));
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in idx.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

fn train_valid(d: &Dataset, folds: &[Vec<usize>], k: usize) -> (Dataset, Dataset) {
    let train: Vec<usize> = folds.iter().enumerate().filter(|(j, _)| *j != k).flat_map(|(_, f)| f.iter().copied()).collect();
    let mut train_idx = train;
    train_idx.sort_unstable();
    (d.subset(&train_idx), d.subset(&folds[k]))
}

fn pick_best(cells: &[CvCell]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cells.iter().enumerate() {
        let Some(m) = c.mean() else { continue };
        if !m.is_finite() {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, bm)) => {
                let key = (c.lambda, c.mu, c.eta);
                let bkey = (cells[b].lambda, cells[b].mu, cells[b].eta);
                m < bm || (m == bm && key > bkey)
            }
        };
        if better {
            best = Some((i, m));
        }
    }
    best
}

/// K-fold grid search minimizing mean held-out MSPE. Ties go to the
/// lexicographically largest `(lambda, mu, eta)`.
pub fn cross_validate(d: &Dataset, l: &SymmetricMatrix, grid: &CvGrid, s: &FitSettings) -> Result<CvResult> {
    grid.validate()?;
    if d.n() < grid.folds {
        return invalid(format!("n = {} is smaller than the number of folds {}", d.n(), grid.folds));
    }
    let folds = fold_indices(d.n(), grid.folds, grid.seed);
    let splits: Vec<(Dataset, Dataset)> = (0..grid.folds).map(|k| train_valid(d, &folds, k)).collect();
    let covs: Vec<_> = splits.iter().map(|(t, _)| sample_covariances(t)).collect();
    let cells: Vec<CvCell> = grid
        .cells()
        .into_par_iter()
        .map(|(lambda, mu, eta)| {
            let cfg = RegularizationConfig::new(lambda, mu, eta, grid.beta, l.clone());
            let fold_mspe: Option<Vec<f64>> = splits
                .iter()
                .zip(&covs)
                .map(|((_, valid), cov)| {
                    let cov = cov.as_ref().ok()?;
                    let res = fit(cov, &cfg, s).ok()?;
                    mspe(&res.theta_hat, valid).ok().filter(|v| v.is_finite())
                })
                .collect();
            CvCell { lambda, mu, eta, fold_mspe }
        })
        .collect();
    let (i, best_mspe) =
        pick_best(&cells).ok_or_else(|| Error::NumericFailure("every grid cell failed".into()))?;
    let c = &cells[i];
    let best = RegularizationConfig::new(c.lambda, c.mu, c.eta, grid.beta, l.clone());
    Ok(CvResult { best, best_mspe, cells })
}

/// K-fold tuning of the lasso baseline over `mus`. Cells carry
/// `lambda = eta = 0`.
pub fn cross_validate_lasso(
    d: &Dataset,
    mus: &[f64],
    folds: usize,
    seed: u64,
    s: &OwlqnSettings,
) -> Result<(f64, Vec<CvCell>)> {
    if mus.is_empty() || folds < 2 || d.n() < folds {
        return invalid("lasso tuning needs a nonempty axis and n >= folds >= 2");
    }
    let idx = fold_indices(d.n(), folds, seed);
    let splits: Vec<(Dataset, Dataset)> = (0..folds).map(|k| train_valid(d, &idx, k)).collect();
    let cells: Vec<CvCell> = mus
        .par_iter()
        .map(|&mu| {
            let fold_mspe = splits
                .iter()
                .map(|(t, v)| {
                    let b = fit_lasso_baseline(t, mu, s).ok()?;
                    mspe_regression(&b, v).ok()
                })
                .collect();
            CvCell { lambda: 0.0, mu, eta: 0.0, fold_mspe }
        })
        .collect();
    let (i, _) = pick_best(&cells).ok_or_else(|| Error::NumericFailure("every lasso cell failed".into()))?;
    Ok((cells[i].mu, cells))
}

/// Grid search maximizing the F-score against a known truth, fitting on
/// the whole dataset. Ties go to the lexicographically largest cell.
pub fn tune_by_f_score(
    d: &Dataset,
    truth: &DenseMatrix,
    l: &SymmetricMatrix,
    grid: &CvGrid,
    s: &FitSettings,
) -> Result<(RegularizationConfig, FScore)> {
    grid.validate()?;
    let cov = sample_covariances(d)?;
    let scores: Vec<Option<FScore>> = grid
        .cells()
        .into_par_iter()
        .map(|(lambda, mu, eta)| {
            let cfg = RegularizationConfig::new(lambda, mu, eta, grid.beta, l.clone());
            let res = fit(&cov, &cfg, s).ok()?;
            f_score(res.theta_hat.omega_yx(), truth, ZERO_TOL).ok()
        })
        .collect();
    let cells = grid.cells();
    let mut best: Option<(usize, FScore)> = None;
    for (i, sc) in scores.into_iter().enumerate() {
        let Some(sc) = sc else { continue };
        let better = match &best {
            None => true,
            Some((b, bs)) => sc.f > bs.f || (sc.f == bs.f && cells[i] > cells[*b]),
        };
        if better {
            best = Some((i, sc));
        }
    }
    let (i, sc) = best.ok_or_else(|| Error::NumericFailure("every grid cell failed".into()))?;
    let (lambda, mu, eta) = cells[i];
    Ok((RegularizationConfig::new(lambda, mu, eta, grid.beta, l.clone()), sc))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionFrequency {
    /// Row-major `q x p` selection counts.
    pub counts: Vec<usize>,
    pub q: usize,
    pub p: usize,
    /// Successful repetitions.
    pub repetitions: usize,
    pub failed: usize,
    pub threshold: f64,
}

impl SelectionFrequency {
    pub fn frequency(&self, i: usize, j: usize) -> f64 {
        if self.repetitions == 0 {
            0.0
        } else {
            self.counts[i * self.p + j] as f64 / self.repetitions as f64
        }
    }

    /// Entries selected more often than the threshold.
    pub fn retained(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.q {
            for j in 0..self.p {
                if self.frequency(i, j) > self.threshold {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Refits on `repetitions` random subsamples of size `subsample` and counts
/// how often each link is selected.
pub fn selection_frequency(
    d: &Dataset,
    cfg: &RegularizationConfig,
    s: &FitSettings,
    repetitions: usize,
    subsample: usize,
    seed: u64,
    threshold: f64,
) -> Result<SelectionFrequency> {
    if subsample == 0 || subsample > d.n() {
        return invalid("subsample size must lie in 1..=n");
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return invalid("threshold must lie in (0, 1)");
    }
    let (q, p) = (d.q(), d.p());
    let supports: Vec<Option<Vec<bool>>> = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, rep as u64);
            let mut idx = sample(&mut rng, d.n(), subsample).into_vec();
            idx.sort_unstable();
            let cov = sample_covariances(&d.subset(&idx)).ok()?;
            let res = fit(&cov, cfg, s).ok()?;
            Some(res.theta_hat.omega_yx().as_slice().iter().map(|v| v.abs() > ZERO_TOL).collect())
        })
        .collect();
    let mut counts = vec![0usize; q * p];
    let (mut ok, mut failed) = (0, 0);
    for sup in supports {
        match sup {
            Some(sup) => {
                ok += 1;
                for (c, on) in counts.iter_mut().zip(sup) {
                    *c += on as usize;
                }
            }
            None => failed += 1,
        }
    }
    Ok(SelectionFrequency { counts, q, p, repetitions: ok, failed, threshold })
}

/// One-sided paired sign test of `a < b`: the probability of at least the
/// observed number of `a_i < b_i` among untied pairs under a fair coin.
pub fn sign_test_less(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return invalid("paired samples differ in length");
    }
    let wins = a.iter().zip(b).filter(|(x, y)| x < y).count();
    let losses = a.iter().zip(b).filter(|(x, y)| x > y).count();
    let m = wins + losses;
    if m == 0 {
        return Ok(1.0);
    }
    // ln C(m, k) accumulated incrementally.
    let mut ln_c = 0.0f64;
    let mut tail = 0.0;
    for k in 0..=m {
        if k > 0 {
            ln_c += ((m - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= wins {
            tail += (ln_c - m as f64 * std::f64::consts::LN_2).exp();
        }
    }
    Ok(tail.min(1.0))
}

/// Median of a nonempty sample.
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::to_regression;

    fn pair() -> ParameterPair {
        ParameterPair::new(
            SymmetricMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
            DenseMatrix::from_rows(&[vec![0.3, 0.0, -0.2], vec![0.0, 0.4, 0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn mspe_examples() {
        let theta = pair();
        let x = DenseMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64 * 0.7).sin());
        let b = to_regression(&theta).unwrap().b;
        let d = Dataset::new(x.clone(), x.matmul(&b)).unwrap();
        assert!(mspe(&theta, &d).unwrap() < 1e-24);
        let null = ParameterPair::new(theta.omega_yy().clone(), DenseMatrix::zeros(2, 3)).unwrap();
        let y = DenseMatrix::from_fn(6, 2, |i, j| (i + j) as f64);
        let d = Dataset::new(x, y.clone()).unwrap();
        let want = squared_norm(&y) / 12.0;
        assert!((mspe(&null, &d).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn f_score_examples() {
        let t = DenseMatrix::from_rows(&[vec![1.0, 0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(f_score(&t, &t, ZERO_TOL).unwrap().f, 1.0);
        let e = DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0, 1.0]]).unwrap();
        let s = f_score(&e, &t, ZERO_TOL).unwrap();
        assert!((s.f - 2.0 / 3.0).abs() < 1e-15);
        let z = DenseMatrix::zeros(1, 4);
        assert_eq!(f_score(&z, &t, ZERO_TOL).unwrap().precision, 0.0);
        assert!(f_score(&t, &z, ZERO_TOL).is_err());
    }

    #[test]
    fn log_axis_endpoints() {
        let a = log_axis(1e-3, 1e1, 10);
        assert_eq!(a.len(), 10);
        assert!((a[0] - 1e-3).abs() < 1e-15 && (a[9] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn folds_partition() {
        let f = fold_indices(11, 3, 5);
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert_eq!(f, fold_indices(11, 3, 5));
    }

    #[test]
    fn sign_test_values() {
        // 5 of 5 wins: 1/32.
        let a = [0.0; 5];
        let b = [1.0; 5];
        assert!((sign_test_less(&a, &b).unwrap() - 1.0 / 32.0).abs() < 1e-15);
        assert!((sign_test_less(&b, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tie_break_prefers_larger_cell() {
        let cells = vec![
            CvCell { lambda: 0.1, mu: 0.1, eta: 0.0, fold_mspe: Some(vec![1.0]) },
            CvCell { lambda: 0.1, mu: 0.2, eta: 0.0, fold_mspe: Some(vec![1.0]) },
            CvCell { lambda: 0.0, mu: 0.9, eta: 0.0, fold_mspe: None },
        ];
        assert_eq!(pick_best(&cells).unwrap().0, 1);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
