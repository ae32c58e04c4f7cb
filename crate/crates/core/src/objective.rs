//! The penalized objective and the gradient of its smooth part.
//!
//! With `W = Omega_yy^{-1}` and `u_L = <<L, Omega_yx^t W Omega_yx>>`, the smooth part is
//!
//! ```text
//! R_n = -ln det Omega_yy + <<S_yy, Omega_yy>> + 2 <<S_yx, Omega_yx>>
//!       + <<S_xx, Omega_yx^t W Omega_yx>> + eta * u_L^beta
//! ```
//!
//! and the full objective adds `lambda |Omega_yy|_1^- + mu |Omega_yx|_1`.
//! Off the SPD cone the objective is `+inf`.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Cholesky, DenseMatrix, SymmetricMatrix};
use crate::model::{CovarianceTriplet, ParameterPair, RegularizationConfig};

/// Below this value `u_L` is treated as zero when `beta < 1`.
pub const SINGULAR_U_TOL: f64 = 1e-12;

/// Value and gradient blocks of the smooth part at one point.
#[derive(Clone, Debug)]
pub struct SmoothEval {
    pub value: f64,
    pub grad_yy: SymmetricMatrix,
    pub grad_yx: DenseMatrix,
    pub u_l: f64,
}

fn check_dims(q: usize, p: usize, cov: &CovarianceTriplet, l: &SymmetricMatrix) -> Result<()> {
    if cov.q() != q || cov.p() != p {
        return invalid(format!(
            "parameter is {q}x{p} but covariances are for q = {}, p = {}",
            cov.q(),
            cov.p()
        ));
    }
    if l.dim() != p {
        return invalid(format!("structure matrix is {0}x{0}, expected p = {p}", l.dim()));
    }
    Ok(())
}

/// `eta * max(u, 0)^beta`.
pub(crate) fn structural_value(u: f64, eta: f64, beta: f64) -> f64 {
    if eta == 0.0 {
        return 0.0;
    }
    let u = u.max(0.0);
    if u == 0.0 {
        0.0
    } else {
        eta * u.powf(beta)
    }
}

/// Derivative factor `eta * beta * u^{beta - 1}` with the limits at `u = 0`
/// hard-coded for `beta >= 1`.
pub(crate) fn structural_weight(u: f64, eta: f64, beta: f64) -> Result<f64> {
    if eta == 0.0 {
        return Ok(0.0);
    }
    if beta == 1.0 {
        return Ok(eta);
    }
    if beta < 1.0 && u < SINGULAR_U_TOL {
        return Err(Error::SingularGradient(format!(
            "u_L = {u:e} with beta = {beta} < 1 has no finite gradient"
        )));
    }
    if u <= 0.0 {
        return Ok(0.0);
    }
    Ok(eta * beta * ((beta - 1.0) * u.max(1e-300).ln()).exp())
}

/// `u_L = <<L, Omega_yx^t Omega_yy^{-1} Omega_yx>>`.
pub fn structural_term(theta: &ParameterPair, l: &SymmetricMatrix) -> Result<f64> {
    if l.dim() != theta.p() {
        return invalid(format!("structure matrix is {0}x{0}, expected p = {1}", l.dim(), theta.p()));
    }
    let chol = Cholesky::factor(theta.omega_yy())?;
    let z = chol.solve(theta.omega_yx());
    Ok(dot(theta.omega_yx().matmul(l).as_slice(), z.as_slice()))
}

/// `lambda |Omega_yy|_1^- + mu |Omega_yx|_1`.
pub fn penalty(omega_yy: &DenseMatrix, omega_yx: &DenseMatrix, cfg: &RegularizationConfig) -> f64 {
    let mut v = 0.0;
    if cfg.lambda != 0.0 {
        v += cfg.lambda * omega_yy.l1_off_diag();
    }
    if cfg.mu != 0.0 {
        v += cfg.mu * omega_yx.l1_norm();
    }
    v
}

/// Full penalized objective at a valid parameter.
pub fn eval_objective(theta: &ParameterPair, cov: &CovarianceTriplet, cfg: &RegularizationConfig) -> Result<f64> {
    eval_objective_parts(theta.omega_yy(), theta.omega_yx(), cov, cfg)
}

/// Full penalized objective at arbitrary blocks; `+inf` when `Omega_yy` is
/// not positive definite.
pub fn eval_objective_parts(
    omega_yy: &SymmetricMatrix,
    omega_yx: &DenseMatrix,
    cov: &CovarianceTriplet,
    cfg: &RegularizationConfig,
) -> Result<f64> {
    if omega_yy.dim() != omega_yx.rows() {
        return invalid("Omega_yy and Omega_yx disagree on q");
    }
    check_dims(omega_yx.rows(), omega_yx.cols(), cov, &cfg.structure)?;
    let Ok(chol) = Cholesky::factor(omega_yy) else {
        return Ok(f64::INFINITY);
    };
    let smooth = smooth_at(&chol, omega_yy, omega_yx, cov, cfg, false)?;
    Ok(smooth.value + penalty(omega_yy, omega_yx, cfg))
}

/// Value and gradient of the smooth part.
pub fn eval_smooth(theta: &ParameterPair, cov: &CovarianceTriplet, cfg: &RegularizationConfig) -> Result<SmoothEval> {
    check_dims(theta.q(), theta.p(), cov, &cfg.structure)?;
    let chol = Cholesky::factor(theta.omega_yy())?;
    smooth_at(&chol, theta.omega_yy(), theta.omega_yx(), cov, cfg, true)
}

/// Smooth part given a factorization of `Omega_yy`. Dimensions are assumed checked.
pub(crate) fn smooth_at(
    chol: &Cholesky,
    omega_yy: &SymmetricMatrix,
    omega_yx: &DenseMatrix,
    cov: &CovarianceTriplet,
    cfg: &RegularizationConfig,
    want_grad: bool,
) -> Result<SmoothEval> {
    let q = omega_yy.dim();
    let p = omega_yx.cols();
    // Z = W Omega_yx, M_S = Omega_yx S_xx, M_L = Omega_yx L
    let z = chol.solve(omega_yx);
    let m_s = omega_yx.matmul(&cov.s_xx);
    let uses_structure = cfg.eta != 0.0;
    let m_l = if uses_structure { omega_yx.matmul(&cfg.structure) } else { DenseMatrix::zeros(q, p) };
    let quad_s = dot(m_s.as_slice(), z.as_slice());
    let u_l = if uses_structure { dot(m_l.as_slice(), z.as_slice()) } else { 0.0 };

    let value = -chol.log_det()
        + dot(cov.s_yy.as_slice(), omega_yy.as_slice())
        + 2.0 * dot(cov.s_yx.as_slice(), omega_yx.as_slice())
        + quad_s
        + structural_value(u_l, cfg.eta, cfg.beta);

    if !want_grad {
        return Ok(SmoothEval {
            value,
            grad_yy: SymmetricMatrix::zeros(0),
            grad_yx: DenseMatrix::zeros(0, 0),
            u_l,
        });
    }

    let c = if uses_structure { structural_weight(u_l, cfg.eta, cfg.beta)? } else { 0.0 };
    let mut m = m_s;
    if c != 0.0 {
        m.axpy(c, &m_l);
    }
    // grad_yx = 2 S_yx + 2 W (Omega_yx S_xx + c Omega_yx L)
    let wm = chol.solve(&m);
    let mut grad_yx = cov.s_yx.scale(2.0);
    grad_yx.axpy(2.0, &wm);
    // grad_yy = -W + S_yy - W Omega_yx (S_xx + c L) Omega_yx^t W = -W + S_yy - (W M) Z^t
    let w = chol.inverse();
    let mut g = cov.s_yy.as_dense().sub(w.as_dense());
    g.axpy(-1.0, &wm.matmul_t(&z));
    Ok(SmoothEval { value, grad_yy: SymmetricMatrix::symmetrize(g), grad_yx, u_l })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_cov(syy: f64, syx: f64, sxx: f64) -> CovarianceTriplet {
        CovarianceTriplet::new(
            SymmetricMatrix::from_diag(&[syy]),
            DenseMatrix::from_rows(&[vec![syx]]).unwrap(),
            SymmetricMatrix::from_diag(&[sxx]),
            1,
        )
        .unwrap()
    }

    fn pair(yy: f64, yx: f64) -> ParameterPair {
        ParameterPair::new(SymmetricMatrix::from_diag(&[yy]), DenseMatrix::from_rows(&[vec![yx]]).unwrap()).unwrap()
    }

    #[test]
    fn scalar_objective_examples() {
        let l = SymmetricMatrix::identity(1);
        let cfg = RegularizationConfig::new(0.0, 0.0, 0.0, 1.0, l.clone());
        let cov = scalar_cov(1.0, 0.0, 0.0);
        assert_relative_eq!(eval_objective(&pair(1.0, 0.0), &cov, &cfg).unwrap(), 1.0, epsilon = 1e-15);
        let v2 = eval_objective(&pair(2.0, 0.0), &cov, &cfg).unwrap();
        assert_relative_eq!(v2, 2.0 - 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(v2, 1.30685, epsilon = 1e-5);
        let cfg_mu = RegularizationConfig::new(0.0, 0.5, 0.0, 1.0, l);
        let v3 = eval_objective(&pair(2.0, 3.0), &cov, &cfg_mu).unwrap();
        assert_relative_eq!(v3, v2 + 1.5, epsilon = 1e-14);
    }

    #[test]
    fn structural_term_examples() {
        let theta = ParameterPair::new(SymmetricMatrix::identity(2), DenseMatrix::zeros(2, 4)).unwrap();
        assert_eq!(structural_term(&theta, &SymmetricMatrix::identity(4)).unwrap(), 0.0);
        let mut e1 = DenseMatrix::zeros(1, 3);
        e1[(0, 0)] = 1.0;
        let theta = ParameterPair::new(SymmetricMatrix::identity(1), e1).unwrap();
        assert_relative_eq!(structural_term(&theta, &SymmetricMatrix::identity(3)).unwrap(), 1.0);
        assert!(structural_term(&theta, &SymmetricMatrix::identity(2)).is_err());
    }

    #[test]
    fn off_cone_is_infinite() {
        let cfg = RegularizationConfig::new(0.0, 0.0, 0.0, 1.0, SymmetricMatrix::identity(1));
        let cov = scalar_cov(1.0, 0.0, 1.0);
        let v = eval_objective_parts(
            &SymmetricMatrix::from_diag(&[-1.0]),
            &DenseMatrix::zeros(1, 1),
            &cov,
            &cfg,
        )
        .unwrap();
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn zero_links_kill_structural_gradient() {
        let cov = CovarianceTriplet::new(
            SymmetricMatrix::identity(2),
            DenseMatrix::from_fn(2, 3, |i, j| 0.1 * (i + j) as f64),
            SymmetricMatrix::identity(3),
            10,
        )
        .unwrap();
        let theta = ParameterPair::new(SymmetricMatrix::identity(2), DenseMatrix::zeros(2, 3)).unwrap();
        let l = SymmetricMatrix::from_diag(&[1.0, 2.0, 3.0]);
        let base = eval_smooth(&theta, &cov, &RegularizationConfig::new(0.0, 0.0, 0.0, 2.0, l.clone())).unwrap();
        let with = eval_smooth(&theta, &cov, &RegularizationConfig::new(0.0, 0.0, 3.0, 2.0, l)).unwrap();
        assert_eq!(base.grad_yx, with.grad_yx);
        assert_eq!(base.grad_yy, with.grad_yy);
    }

    #[test]
    fn beta_below_one_at_zero_is_singular() {
        let cov = scalar_cov(1.0, 0.0, 1.0);
        let cfg = RegularizationConfig::new(0.0, 0.0, 1.0, 0.5, SymmetricMatrix::identity(1)).with_unguaranteed(true);
        assert!(matches!(eval_smooth(&pair(1.0, 0.0), &cov, &cfg), Err(Error::SingularGradient(_))));
        assert!(eval_smooth(&pair(1.0, 0.3), &cov, &cfg).is_ok());
    }

    #[test]
    fn beta_one_weight_is_constant() {
        for u in [1e-8, 0.5, 3.0, 100.0] {
            assert_eq!(structural_weight(u, 0.7, 1.0).unwrap(), 0.7);
        }
        assert_eq!(structural_weight(0.0, 0.7, 2.0).unwrap(), 0.0);
        assert_relative_eq!(structural_weight(4.0, 0.5, 1.5).unwrap(), 0.5 * 1.5 * 2.0, max_relative = 1e-14);
    }

    #[test]
    fn beta_one_structural_gradient_independent_of_scale() {
        // grad_yx structural part = 2 eta W Omega_yx L: for beta = 1 it is linear
        // in Omega_yx, so doubling Omega_yx exactly doubles it.
        let cov = CovarianceTriplet::new(
            SymmetricMatrix::identity(1),
            DenseMatrix::zeros(1, 3),
            SymmetricMatrix::zeros(3),
            5,
        )
        .unwrap();
        let l = SymmetricMatrix::from_rows(&[vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 1.0]]).unwrap();
        let yx = DenseMatrix::from_rows(&[vec![0.3, -0.2, 0.9]]).unwrap();
        let cfg = RegularizationConfig::new(0.0, 0.0, 0.8, 1.0, l);
        let g1 = eval_smooth(&ParameterPair::new(SymmetricMatrix::identity(1), yx.clone()).unwrap(), &cov, &cfg).unwrap();
        let g2 = eval_smooth(&ParameterPair::new(SymmetricMatrix::identity(1), yx.scale(2.0)).unwrap(), &cov, &cfg).unwrap();
        assert!(g2.grad_yx.sub(&g1.grad_yx.scale(2.0)).max_abs() < 1e-14);
    }
}
