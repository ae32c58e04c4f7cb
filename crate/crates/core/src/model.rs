//! Statistical value types and the precision/regression reparametrization.

use crate::error::{invalid, Error, Result};
use crate::linalg::{is_spd, Cholesky, DenseMatrix, SymmetricMatrix};

/// The estimation target `(Omega_yy, Omega_yx)`: an SPD `q x q` block and a
/// dense `q x p` block of direct links.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterPair {
    omega_yy: SymmetricMatrix,
    omega_yx: DenseMatrix,
}

impl ParameterPair {
    pub fn new(omega_yy: SymmetricMatrix, omega_yx: DenseMatrix) -> Result<Self> {
        if omega_yy.dim() != omega_yx.rows() {
            return invalid(format!(
                "Omega_yy is {0}x{0} but Omega_yx has {1} rows",
                omega_yy.dim(),
                omega_yx.rows()
            ));
        }
        if !is_spd(&omega_yy)? {
            return invalid("Omega_yy is not positive definite");
        }
        Ok(Self { omega_yy, omega_yx })
    }

    pub fn omega_yy(&self) -> &SymmetricMatrix {
        &self.omega_yy
    }

    pub fn omega_yx(&self) -> &DenseMatrix {
        &self.omega_yx
    }

    pub fn q(&self) -> usize {
        self.omega_yy.dim()
    }

    pub fn p(&self) -> usize {
        self.omega_yx.cols()
    }

    pub fn into_parts(self) -> (SymmetricMatrix, DenseMatrix) {
        (self.omega_yy, self.omega_yx)
    }

    /// `||theta - other||_F` over both blocks.
    pub fn frob_distance(&self, other: &ParameterPair) -> f64 {
        let a = self.omega_yy.sub(&other.omega_yy).frob_norm();
        let b = self.omega_yx.sub(&other.omega_yx).frob_norm();
        (a * a + b * b).sqrt()
    }

    /// Number of nonzero entries of the pair (the active set size `|S|`).
    pub fn support_size(&self, tol: f64) -> usize {
        self.omega_yy.count_nonzero(tol) + self.omega_yx.count_nonzero(tol)
    }
}

/// Second moments `(S_yy, S_yx, S_xx)`; also used for population blocks
/// `Sigma*`, in which case `n` is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceTriplet {
    pub s_yy: SymmetricMatrix,
    pub s_yx: DenseMatrix,
    pub s_xx: SymmetricMatrix,
    pub n: usize,
}

impl CovarianceTriplet {
    pub fn new(s_yy: SymmetricMatrix, s_yx: DenseMatrix, s_xx: SymmetricMatrix, n: usize) -> Result<Self> {
        if s_yx.rows() != s_yy.dim() || s_yx.cols() != s_xx.dim() {
            return invalid(format!(
                "inconsistent covariance blocks: S_yy {0}x{0}, S_yx {1}x{2}, S_xx {3}x{3}",
                s_yy.dim(),
                s_yx.rows(),
                s_yx.cols(),
                s_xx.dim()
            ));
        }
        Ok(Self { s_yy, s_yx, s_xx, n })
    }

    pub fn q(&self) -> usize {
        self.s_yy.dim()
    }

    pub fn p(&self) -> usize {
        self.s_xx.dim()
    }
}

/// Penalty weights `(lambda, mu, eta)`, prior shape `beta` and structure matrix `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizationConfig {
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
    pub beta: f64,
    pub structure: SymmetricMatrix,
    /// Must be set to use `beta < 1`, for which convexity is not guaranteed.
    pub unguaranteed: bool,
}

impl RegularizationConfig {
    pub fn new(lambda: f64, mu: f64, eta: f64, beta: f64, structure: SymmetricMatrix) -> Self {
        Self { lambda, mu, eta, beta, structure, unguaranteed: false }
    }

    pub fn with_unguaranteed(mut self, on: bool) -> Self {
        self.unguaranteed = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("mu", self.mu), ("eta", self.eta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return invalid(format!("beta must be finite and > 0, got {}", self.beta));
        }
        if self.beta < 1.0 && !self.unguaranteed {
            return invalid(format!(
                "beta = {} < 1 loses convexity; enable the unguaranteed flag to proceed",
                self.beta
            ));
        }
        Ok(())
    }
}

/// Observations `X` (`n x p`) and `Y` (`n x q`), with ground truth for synthetic runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub truth: Option<ParameterPair>,
    pub noise_cov: Option<SymmetricMatrix>,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: DenseMatrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return invalid(format!("X has {} rows but Y has {}", x.rows(), y.rows()));
        }
        Ok(Self { x, y, truth: None, noise_cov: None })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn q(&self) -> usize {
        self.y.cols()
    }

    /// Rows `idx` of both `X` and `Y`; ground truth is carried along.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: self.y.select_rows(idx),
            truth: self.truth.clone(),
            noise_cov: self.noise_cov.clone(),
        }
    }

    /// Column-centered copy (the library never centers implicitly).
    pub fn centered(&self) -> Dataset {
        let center = |m: &DenseMatrix| {
            let n = m.rows().max(1) as f64;
            let means: Vec<f64> =
                (0..m.cols()).map(|j| (0..m.rows()).map(|i| m[(i, j)]).sum::<f64>() / n).collect();
            DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] - means[j])
        };
        Dataset { x: center(&self.x), y: center(&self.y), truth: self.truth.clone(), noise_cov: self.noise_cov.clone() }
    }
}

/// The `1/n`-normalized cross products `Y^tY/n`, `Y^tX/n`, `X^tX/n`.
pub fn sample_covariances(d: &Dataset) -> Result<CovarianceTriplet> {
    let n = d.n();
    if n == 0 {
        return invalid("empty dataset");
    }
    let inv_n = 1.0 / n as f64;
    let s_yy = SymmetricMatrix::symmetrize(d.y.t_matmul(&d.y).scale(inv_n));
    let s_yx = d.y.t_matmul(&d.x).scale(inv_n);
    let s_xx = SymmetricMatrix::symmetrize(d.x.t_matmul(&d.x).scale(inv_n));
    CovarianceTriplet::new(s_yy, s_yx, s_xx, n)
}

/// Regression coefficients `B` (`p x q`) and noise covariance `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct Regression {
    pub b: DenseMatrix,
    pub r: SymmetricMatrix,
}

fn factor_precision(omega_yy: &SymmetricMatrix) -> Result<Cholesky> {
    Cholesky::factor(omega_yy).map_err(|_| Error::NumericFailure("Omega_yy is singular or not SPD".into()))
}

/// `B = -Omega_yx^t Omega_yy^{-1}` and `R = Omega_yy^{-1}`.
pub fn to_regression(theta: &ParameterPair) -> Result<Regression> {
    let chol = factor_precision(theta.omega_yy())?;
    // Omega_yy^{-1} Omega_yx is q x p; B is its negated transpose.
    let w_yx = chol.solve(theta.omega_yx());
    Ok(Regression { b: w_yx.transpose().scale(-1.0), r: chol.inverse() })
}

/// Inverse transform: `Omega_yy = R^{-1}`, `Omega_yx = -R^{-1} B^t`.
pub fn from_regression(reg: &Regression) -> Result<ParameterPair> {
    if reg.b.cols() != reg.r.dim() {
        return invalid(format!("B has {} columns but R is {1}x{1}", reg.b.cols(), reg.r.dim()));
    }
    let chol = Cholesky::factor(&reg.r).map_err(|_| Error::NumericFailure("R is singular or not SPD".into()))?;
    let omega_yy = chol.inverse();
    let omega_yx = chol.solve(&reg.b.transpose()).scale(-1.0);
    ParameterPair::new(omega_yy, omega_yx)
}

/// `E[Y | X = x] = -Omega_yy^{-1} Omega_yx x`.
pub fn conditional_mean(theta: &ParameterPair, x_row: &[f64]) -> Result<Vec<f64>> {
    if x_row.len() != theta.p() {
        return invalid(format!("x has length {} but p = {}", x_row.len(), theta.p()));
    }
    let chol = factor_precision(theta.omega_yy())?;
    let v = theta.omega_yx().mul_vec(x_row);
    Ok(chol.solve_vec(&v).into_iter().map(|m| -m).collect())
}

/// Population blocks implied by `theta` and `Sigma_xx`:
/// `Sigma_yx = B^t Sigma_xx`, `Sigma_yy = B^t Sigma_xx B + R`.
pub fn population_covariances(theta: &ParameterPair, sigma_xx: &SymmetricMatrix) -> Result<CovarianceTriplet> {
    if sigma_xx.dim() != theta.p() {
        return invalid("Sigma_xx dimension does not match p");
    }
    let reg = to_regression(theta)?;
    let s_yx = reg.b.t_matmul(sigma_xx);
    let s_yy = SymmetricMatrix::symmetrize(s_yx.matmul(&reg.b)).add(&reg.r);
    CovarianceTriplet::new(s_yy, s_yx, sigma_xx.clone(), 0)
}
