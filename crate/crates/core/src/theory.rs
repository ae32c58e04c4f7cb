//! Constants of the non-asymptotic error bound.
//!
//! Everything here is a plain function of the true parameter, the
//! population covariances and, where noted, the empirical covariances.
//! Nothing is estimated. The one unquantified absolute constant in the
//! minimal sample size is reported as missing rather than guessed.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{eig_extremes, inv_spd, spectral_norm, Cholesky, DenseMatrix, SymmetricMatrix};
use crate::model::{population_covariances, CovarianceTriplet, ParameterPair};

/// Largest `p` accepted by the exhaustive restricted-isometry check.
pub const RIP_MAX_P: usize = 20;
/// Largest support size accepted by the exhaustive check.
pub const RIP_MAX_S: usize = 6;
/// Points per axis of the `(eps_S, eps_L)` search.
pub const EPSILON_GRID: usize = 50;

#[derive(Clone, Debug)]
pub struct TheoryInputs {
    pub truth: ParameterPair,
    pub sigma_xx: SymmetricMatrix,
    pub sigma_yx: DenseMatrix,
    pub sigma_yy: SymmetricMatrix,
    pub structure: SymmetricMatrix,
    pub eta: f64,
    pub beta: f64,
    /// `|S|`, the size of the true active set.
    pub active_set_size: usize,
    pub c_lambda: f64,
    pub d_lambda: f64,
    pub e_lambda: f64,
    pub c_mu: f64,
    pub d_mu: f64,
    pub e_mu: f64,
    /// `None` selects the grid search of [`best_epsilons`].
    pub epsilon_s: Option<f64>,
    pub epsilon_l: Option<f64>,
    pub b3: f64,
    /// Skips the `Omega_yx != 0` and `Omega_yx L Omega_yx^T` SPD clauses.
    /// For diagnostics only; several constants degenerate.
    pub allow_null: bool,
}

impl TheoryInputs {
    /// Population blocks derived from the truth; `|S|` counts the nonzeros
    /// of both precision blocks, diagonal included.
    pub fn new(truth: ParameterPair, sigma_xx: SymmetricMatrix, structure: SymmetricMatrix) -> Result<Self> {
        let pop = population_covariances(&truth, &sigma_xx)?;
        if structure.dim() != truth.p() {
            return Err(Error::InvalidInput("structure matrix dimension does not match p".into()));
        }
        let active_set_size = truth.omega_yy().count_nonzero(0.0) + truth.omega_yx().count_nonzero(0.0);
        Ok(Self {
            truth,
            sigma_xx,
            sigma_yx: pop.s_yx,
            sigma_yy: pop.s_yy,
            structure,
            eta: 0.0,
            beta: 1.0,
            active_set_size,
            c_lambda: 2.0,
            d_lambda: 4.0,
            e_lambda: 1.0,
            c_mu: 2.0,
            d_mu: 4.0,
            e_mu: 1.0,
            epsilon_s: None,
            epsilon_l: None,
            b3: 0.05,
            allow_null: false,
        })
    }

    pub fn population(&self) -> Result<CovarianceTriplet> {
        CovarianceTriplet::new(self.sigma_yy.clone(), self.sigma_yx.clone(), self.sigma_xx.clone(), 0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if !(self.d_lambda > self.c_lambda && self.c_lambda > 1.0) {
            return bad("need d_lambda > c_lambda > 1");
        }
        if !(self.d_mu > self.c_mu && self.c_mu > 1.0) {
            return bad("need d_mu > c_mu > 1");
        }
        if !(self.e_lambda > 0.0 && self.e_mu > 0.0) {
            return bad("need e_lambda, e_mu > 0");
        }
        if !(self.beta >= 1.0) || !(self.eta >= 0.0) {
            return bad("need beta >= 1 and eta >= 0");
        }
        if !(self.b3 > 0.0 && self.b3 < 1.0) {
            return bad("b3 must lie in (0, 1)");
        }
        if self.active_set_size == 0 {
            return bad("active set size must be positive");
        }
        Ok(())
    }

    fn w(&self) -> Result<SymmetricMatrix> {
        inv_spd(self.truth.omega_yy())
    }

    /// `Omega_yx M Omega_yx^T`.
    fn sandwich(&self, m: &SymmetricMatrix) -> SymmetricMatrix {
        m.congruence(&self.truth.omega_yx().transpose())
    }
}

fn violated<T>(clause: &str) -> Result<T> {
    Err(Error::HypothesisViolated(clause.into()))
}

/// First structural hypothesis: `Sigma_xx`, `Omega_yy` SPD, `Omega_yx != 0`
/// and `Omega_yx L Omega_yx^T` SPD.
pub fn check_h1(inp: &TheoryInputs) -> Result<()> {
    if !crate::linalg::is_spd(&inp.sigma_xx)? {
        return violated("Sigma_xx is not positive definite");
    }
    if !crate::linalg::is_spd(inp.truth.omega_yy())? {
        return violated("Omega_yy is not positive definite");
    }
    if inp.allow_null {
        return Ok(());
    }
    if inp.truth.omega_yx().max_abs() == 0.0 {
        return violated("Omega_yx is zero");
    }
    if !crate::linalg::is_spd(&inp.sandwich(&inp.structure))? {
        return violated("Omega_yx L Omega_yx^T is not positive definite");
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenBounds {
    pub omega_l_lower: f64,
    pub omega_l_upper: f64,
    pub omega_s_upper: f64,
}

pub fn eigen_bounds(inp: &TheoryInputs) -> Result<EigenBounds> {
    check_h1(inp)?;
    let (yy_min, yy_max) = eig_extremes(inp.truth.omega_yy())?;
    let (l_min, l_max) = eig_extremes(&inp.sandwich(&inp.structure))?;
    let (_, s_max) = eig_extremes(&inp.sandwich(&inp.sigma_xx))?;
    Ok(EigenBounds {
        omega_l_lower: l_min.max(0.0) / (4.0 * yy_max),
        omega_l_upper: 4.0 * l_max / yy_min,
        omega_s_upper: 4.0 * s_max / yy_min,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorConstants {
    pub s_l: f64,
    pub ell_a: f64,
    pub ell_b: f64,
}

/// `s_L = <<L, Omega_yx^T W Omega_yx>>`, `ell_a = |W Omega_yx L Omega_yx^T W|_inf`,
/// `ell_b = 2 |W Omega_yx L|_inf` with `W = Omega_yy^{-1}`.
pub fn prior_constants(inp: &TheoryInputs) -> Result<PriorConstants> {
    let w = inp.w()?;
    let z = w.matmul(inp.truth.omega_yx());
    let zl = z.matmul(&inp.structure);
    let s_l = crate::linalg::dot(zl.as_slice(), inp.truth.omega_yx().as_slice());
    let ell_a = zl.matmul_t(&z).max_abs();
    let ell_b = 2.0 * zl.max_abs();
    Ok(PriorConstants { s_l, ell_a, ell_b })
}

/// `s_L^{beta - 1}`, equal to 1 at `beta = 1` whatever `s_L`.
fn s_l_power(s_l: f64, beta: f64) -> f64 {
    if beta == 1.0 {
        1.0
    } else {
        s_l.max(0.0).powf(beta - 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidityRegion {
    pub lambda_interval: (f64, f64),
    pub mu_interval: (f64, f64),
    pub eta_bar: f64,
    /// `eta_bar` is infinite: the structural term is unconstrained.
    pub eta_unbounded: bool,
    /// `h_a` or `h_b` is zero and an interval collapses to a point.
    pub degenerate: bool,
}

/// Region of admissible `(lambda, mu, eta)`, with `eta_bar` evaluated at the
/// lower endpoints `lambda = c_lambda h_a`, `mu = c_mu h_b`.
pub fn validity_region(inp: &TheoryInputs, h_a: f64, h_b: f64) -> Result<ValidityRegion> {
    validity_region_at(inp, h_a, h_b, inp.c_lambda * h_a, inp.c_mu * h_b)
}

/// As [`validity_region`] with `eta_bar` evaluated at a chosen `(lambda, mu)`.
pub fn validity_region_at(inp: &TheoryInputs, h_a: f64, h_b: f64, lambda: f64, mu: f64) -> Result<ValidityRegion> {
    inp.validate()?;
    if !(h_a >= 0.0 && h_b >= 0.0) {
        return Err(Error::InvalidInput("h_a and h_b must be >= 0".into()));
    }
    let pc = prior_constants(inp)?;
    let ratio = |num: f64, den: f64| if den == 0.0 { f64::INFINITY } else { num / den };
    let terms = [
        ratio((inp.c_lambda - 1.0) * lambda, inp.c_lambda * pc.ell_a),
        ratio((inp.c_mu - 1.0) * mu, inp.c_mu * pc.ell_b),
        ratio(inp.e_lambda * h_a, pc.ell_a),
        ratio(inp.e_mu * h_b, pc.ell_b),
    ];
    let m = terms.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = inp.beta * s_l_power(pc.s_l, inp.beta);
    let eta_bar = if scale == 0.0 { f64::INFINITY } else { m / scale };
    Ok(ValidityRegion {
        lambda_interval: (inp.c_lambda * h_a, inp.d_lambda * h_a),
        mu_interval: (inp.c_mu * h_b, inp.d_mu * h_b),
        eta_bar,
        eta_unbounded: eta_bar.is_infinite(),
        degenerate: h_a == 0.0 || h_b == 0.0,
    })
}

impl ValidityRegion {
    pub fn contains(&self, lambda: f64, mu: f64, eta: f64) -> bool {
        (self.lambda_interval.0..=self.lambda_interval.1).contains(&lambda)
            && (self.mu_interval.0..=self.mu_interval.1).contains(&mu)
            && eta >= 0.0
            && eta <= self.eta_bar
    }
}

/// `alpha` and `s_alpha` at `(lambda, mu, eta)`.
pub fn alpha_and_salpha(inp: &TheoryInputs, lambda: f64, mu: f64, eta: f64) -> Result<(f64, f64)> {
    inp.validate()?;
    let pc = prior_constants(inp)?;
    let k = eta * inp.beta * s_l_power(pc.s_l, inp.beta);
    let (cl, cm) = (inp.c_lambda, inp.c_mu);
    let num = ((cl + 1.0) * lambda / cl + k * pc.ell_a).max((cm + 1.0) * mu / cm + k * pc.ell_b);
    let den = ((cl - 1.0) * lambda / cl - k * pc.ell_a).min((cm - 1.0) * mu / cm - k * pc.ell_b);
    if !(den > 0.0) {
        return Err(Error::OutsideValidityRegion(format!(
            "alpha denominator is {den:e}; (lambda, mu, eta) = ({lambda}, {mu}, {eta}) lies outside the region"
        )));
    }
    let alpha = num / den;
    let (x_min, x_max) = eig_extremes(&inp.sigma_xx)?;
    let s_alpha = inp.active_set_size as f64 * (1.0 + 12.0 * alpha * alpha * x_max / x_min);
    Ok((alpha, s_alpha))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RStar {
    pub value: f64,
    pub r1: f64,
    pub r2: f64,
    /// Undefined when `Omega_yx = 0`.
    pub r3: Option<f64>,
    pub r4: Option<f64>,
}

/// Radius of the neighbourhood on which the local convexity holds.
pub fn r_star(inp: &TheoryInputs) -> Result<RStar> {
    check_h1(inp)?;
    let (yy_min, _) = eig_extremes(inp.truth.omega_yy())?;
    let (_, x_max) = eig_extremes(&inp.sigma_xx)?;
    let (_, s_max) = eig_extremes(&inp.sandwich(&inp.sigma_xx))?;
    let r1 = yy_min / 2.0;
    let r2 = ((10f64.sqrt() - 7f64.sqrt()) / 5f64.sqrt()) * s_max.max(0.0).sqrt()
        / ((3.0 * 3f64.sqrt() / (2.0 * 2f64.sqrt())) * x_max.sqrt());
    let (r3, r4) = if inp.truth.omega_yx().max_abs() == 0.0 {
        (None, None)
    } else {
        let (l_min, l_max) = eig_extremes(&inp.sandwich(&inp.structure))?;
        let (_, big_l_max) = eig_extremes(&inp.structure)?;
        let norm = spectral_norm(&inp.structure.matmul_t(inp.truth.omega_yx()))?;
        (Some(l_min / (4.0 * norm)), Some((2f64.sqrt() - 1.0) * l_max.max(0.0).sqrt() / big_l_max.sqrt()))
    };
    let value = [Some(r1), Some(r2), r3, r4].into_iter().flatten().fold(f64::INFINITY, f64::min);
    Ok(RStar { value, r1, r2, r3, r4 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParts {
    pub gamma: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub epsilon_s: f64,
    pub epsilon_l: f64,
}

/// Local strong convexity constant for given `(eps_S, eps_L)`.
pub fn gamma_constant(inp: &TheoryInputs, eta: f64, epsilon_s: f64, epsilon_l: f64) -> Result<GammaParts> {
    let eb = eigen_bounds(inp)?;
    let (_, yy_max) = eig_extremes(inp.truth.omega_yy())?;
    let (l_min, _) = eig_extremes(&inp.structure)?;
    let (x_min, _) = eig_extremes(&inp.sigma_xx)?;
    gamma_from_parts(&eb, inp.beta, inp.truth.p(), yy_max, l_min.max(0.0), x_min, eta, epsilon_s, epsilon_l)
}

#[allow(clippy::too_many_arguments)]
fn gamma_from_parts(
    eb: &EigenBounds,
    beta: f64,
    p: usize,
    yy_max: f64,
    l_min: f64,
    x_min: f64,
    eta: f64,
    epsilon_s: f64,
    epsilon_l: f64,
) -> Result<GammaParts> {
    if !(epsilon_s > 0.0 && epsilon_l > 0.0) {
        return Err(Error::InvalidEpsilon("eps_S and eps_L must be positive".into()));
    }
    let p = p as f64;
    let load = epsilon_s * eb.omega_s_upper + eta * beta * p.powf(beta - 1.0) * eb.omega_l_upper.powf(beta) * epsilon_l;
    if !(load < 1.0) {
        return Err(Error::InvalidEpsilon(format!(
            "eps_S * omega_S + eta beta p^(beta-1) omega_L^beta eps_L = {load:e} >= 1; use smaller eps_S or eps_L"
        )));
    }
    let a1 = 1.0 - load;
    let a2 = 2.0 * epsilon_s / (2.0 + epsilon_s);
    let a3 = eta * beta * (p * eb.omega_l_lower).powf(beta - 1.0) * 2.0 * epsilon_l / (2.0 + epsilon_l);
    let first = a1 / (8.0 * yy_max * yy_max);
    let second = a2 * l_min / (4.0 * yy_max) + a3 * x_min / (40.0 * yy_max);
    Ok(GammaParts { gamma: first.min(second), a1, a2, a3, epsilon_s, epsilon_l })
}

/// Maximizes `gamma` over a `50 x 50` log grid of `(eps_S, eps_L)` in
/// `[1e-6, 1e2]^2`, keeping only admissible pairs.
pub fn best_epsilons(inp: &TheoryInputs, eta: f64) -> Result<GammaParts> {
    let eb = eigen_bounds(inp)?;
    let (_, yy_max) = eig_extremes(inp.truth.omega_yy())?;
    let (l_min, _) = eig_extremes(&inp.structure)?;
    let (x_min, _) = eig_extremes(&inp.sigma_xx)?;
    let grid = crate::evaluate::log_axis(1e-6, 1e2, EPSILON_GRID);
    let mut best: Option<GammaParts> = None;
    for &es in &grid {
        for &el in &grid {
            let Ok(g) = gamma_from_parts(&eb, inp.beta, inp.truth.p(), yy_max, l_min.max(0.0), x_min, eta, es, el)
            else {
                continue;
            };
            if best.is_none_or(|b| g.gamma > b.gamma) {
                best = Some(g);
            }
        }
    }
    best.ok_or_else(|| Error::InvalidEpsilon("no admissible (eps_S, eps_L) on the search grid".into()))
}

/// `c_{lambda,mu}`.
pub fn c_lambda_mu(inp: &TheoryInputs) -> f64 {
    let a = (inp.c_lambda + 1.0) * inp.d_lambda / inp.c_lambda + inp.e_lambda;
    let b = (inp.c_mu + 1.0) * inp.d_mu / inp.c_mu + inp.e_mu;
    a.max(b)
}

#[derive(Clone, Debug)]
pub struct NoiseReport {
    pub a_n: SymmetricMatrix,
    pub b_n: DenseMatrix,
    pub h_a: f64,
    pub h_b: f64,
    pub m_star: f64,
}

/// Deviation matrices `A_n`, `B_n` of the empirical from the population
/// covariances, their max-norms and `m*`.
pub fn empirical_noise(truth: &ParameterPair, pop: &CovarianceTriplet, emp: &CovarianceTriplet) -> Result<NoiseReport> {
    let (q, p) = (truth.q(), truth.p());
    if pop.q() != q || pop.p() != p || emp.q() != q || emp.p() != p {
        return Err(Error::InvalidInput("covariance blocks do not match the parameter dimensions".into()));
    }
    let w = inv_spd(truth.omega_yy())?;
    let z = w.matmul(truth.omega_yx());
    let dxx = emp.s_xx.sub(&pop.s_xx);
    let a_n = emp.s_yy.sub(&pop.s_yy).sub(&dxx.congruence(&z.transpose()));
    let b_n = emp.s_yx.sub(&pop.s_yx).add(&z.matmul(&dxx)).scale(2.0);
    let h_a = a_n.max_abs();
    let h_b = b_n.max_abs();
    let inner = pop.s_xx.congruence(&z.transpose());
    let m_star = pop.s_xx.diag().iter().fold(0.0f64, |a, v| a.max(v.abs()))
        + inner.diag().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(NoiseReport { a_n, b_n, h_a, h_b, m_star })
}

/// `ln(10 (p+q)^2) - ln(b3)`.
pub fn log_term(p: usize, q: usize, b3: f64) -> f64 {
    let d = (p + q) as f64;
    (10.0 * d * d).ln() - b3.ln()
}

/// Right-hand side of the error bound.
pub fn error_bound(m_star: f64, c_lm: f64, gamma: f64, n: usize, p: usize, q: usize, s_size: usize, b3: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidReport(format!("gamma = {gamma:e} is not positive")));
    }
    if n == 0 || !(b3 > 0.0 && b3 < 1.0) {
        return Err(Error::InvalidInput("need n >= 1 and b3 in (0, 1)".into()));
    }
    Ok(16.0 * m_star * c_lm * (s_size as f64).sqrt() / gamma * (log_term(p, q, b3) / n as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimalSampleSize {
    /// Branch driven by the bound being below `r*`.
    pub radius_branch: f64,
    /// `ln(10 (p+q)^2) - ln(b3)`.
    pub log_branch: f64,
    /// `q + ceil(s_alpha) ln(p+q)`; its unknown absolute multiplier is not applied.
    pub rip_branch_unscaled: f64,
    /// Max of the computable branches: a lower bound on the true minimal size.
    pub value: f64,
}

pub fn n0_partial(
    m_star: f64,
    c_lm: f64,
    gamma: f64,
    r_star: f64,
    s_alpha: f64,
    p: usize,
    q: usize,
    s_size: usize,
    b3: f64,
) -> Result<MinimalSampleSize> {
    if !(gamma > 0.0 && r_star > 0.0) {
        return Err(Error::InvalidReport("gamma and r* must be positive".into()));
    }
    let lt = log_term(p, q, b3);
    let radius_branch = lt * c_lm * c_lm * s_size as f64 * (16.0 * m_star).powi(2) / (r_star * r_star * gamma * gamma);
    let rip_branch_unscaled = q as f64 + s_alpha.ceil() * ((p + q) as f64).ln();
    Ok(MinimalSampleSize { radius_branch, log_branch: lt, rip_branch_unscaled, value: radius_branch.max(lt) })
}

#[derive(Clone, Debug)]
pub struct TheoryReport {
    pub eigen: EigenBounds,
    pub prior: PriorConstants,
    pub r_star: RStar,
    pub c_lambda_mu: f64,
    pub m_star: f64,
    pub gamma: GammaParts,
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
    pub alpha: Option<f64>,
    pub s_alpha: Option<f64>,
    pub noise: Option<NoiseReport>,
    pub region: Option<ValidityRegion>,
    pub bound: Option<f64>,
    pub n0: Option<MinimalSampleSize>,
}

/// Assembles every constant. With empirical covariances the noise levels,
/// the region, the bound and `n0` are filled in; `(lambda, mu)` default to
/// the lower region endpoints.
pub fn theory_report(
    inp: &TheoryInputs,
    emp: Option<&CovarianceTriplet>,
    lambda_mu: Option<(f64, f64)>,
) -> Result<TheoryReport> {
    inp.validate()?;
    check_h1(inp)?;
    let eigen = eigen_bounds(inp)?;
    let prior = prior_constants(inp)?;
    let rs = r_star(inp)?;
    let c_lm = c_lambda_mu(inp);
    let pop = inp.population()?;
    let gamma = match (inp.epsilon_s, inp.epsilon_l) {
        (Some(es), Some(el)) => gamma_constant(inp, inp.eta, es, el)?,
        _ => best_epsilons(inp, inp.eta)?,
    };
    let zero = CovarianceTriplet::new(pop.s_yy.clone(), pop.s_yx.clone(), pop.s_xx.clone(), 0)?;
    let m_star = empirical_noise(&inp.truth, &pop, &zero)?.m_star;
    let noise = emp.map(|e| empirical_noise(&inp.truth, &pop, e)).transpose()?;
    let (lambda, mu) = match (lambda_mu, &noise) {
        (Some(lm), _) => lm,
        (None, Some(nr)) => (inp.c_lambda * nr.h_a, inp.c_mu * nr.h_b),
        (None, None) => (f64::NAN, f64::NAN),
    };
    let region = match &noise {
        Some(nr) => Some(validity_region_at(inp, nr.h_a, nr.h_b, lambda, mu)?),
        None => None,
    };
    let (alpha, s_alpha) = if lambda.is_finite() && mu.is_finite() {
        match alpha_and_salpha(inp, lambda, mu, inp.eta) {
            Ok((a, s)) => (Some(a), Some(s)),
            Err(Error::OutsideValidityRegion(_)) => (None, None),
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };
    let (p, q) = (inp.truth.p(), inp.truth.q());
    let (bound, n0) = match emp {
        Some(e) if e.n > 0 && gamma.gamma > 0.0 => {
            let b = error_bound(m_star, c_lm, gamma.gamma, e.n, p, q, inp.active_set_size, inp.b3)?;
            let n0 = s_alpha
                .map(|sa| n0_partial(m_star, c_lm, gamma.gamma, rs.value, sa, p, q, inp.active_set_size, inp.b3))
                .transpose()?;
            (Some(b), n0)
        }
        _ => (None, None),
    };
    Ok(TheoryReport {
        eigen,
        prior,
        r_star: rs,
        c_lambda_mu: c_lm,
        m_star,
        gamma,
        lambda,
        mu,
        eta: inp.eta,
        alpha,
        s_alpha,
        noise,
        region,
        bound,
        n0,
    })
}

impl TheoryReport {
    /// Flat `key = value` listing.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        let f = |x: f64| format!("{x:.16e}");
        let o = |x: Option<f64>| x.map_or_else(|| "undefined".to_string(), |v| format!("{v:.16e}"));
        put("omega_l_lower", f(self.eigen.omega_l_lower));
        put("omega_l_upper", f(self.eigen.omega_l_upper));
        put("omega_s_upper", f(self.eigen.omega_s_upper));
        put("s_l", f(self.prior.s_l));
        put("ell_a", f(self.prior.ell_a));
        put("ell_b", f(self.prior.ell_b));
        put("r_star", f(self.r_star.value));
        put("r1", f(self.r_star.r1));
        put("r2", f(self.r_star.r2));
        put("r3", o(self.r_star.r3));
        put("r4", o(self.r_star.r4));
        put("gamma", f(self.gamma.gamma));
        put("a1", f(self.gamma.a1));
        put("a2", f(self.gamma.a2));
        put("a3", f(self.gamma.a3));
        put("epsilon_s", f(self.gamma.epsilon_s));
        put("epsilon_l", f(self.gamma.epsilon_l));
        put("c_lambda_mu", f(self.c_lambda_mu));
        put("m_star", f(self.m_star));
        put("lambda", f(self.lambda));
        put("mu", f(self.mu));
        put("eta", f(self.eta));
        put("alpha", o(self.alpha));
        put("s_alpha", o(self.s_alpha));
        if let Some(nr) = &self.noise {
            put("h_a", f(nr.h_a));
            put("h_b", f(nr.h_b));
        }
        if let Some(r) = &self.region {
            put("lambda_low", f(r.lambda_interval.0));
            put("lambda_high", f(r.lambda_interval.1));
            put("mu_low", f(r.mu_interval.0));
            put("mu_high", f(r.mu_interval.1));
            put("eta_bar", f(r.eta_bar));
            put("eta_unbounded", r.eta_unbounded.to_string());
            put("region_degenerate", r.degenerate.to_string());
        }
        put("bound", o(self.bound));
        if let Some(n0) = &self.n0 {
            put("n0_radius_branch", f(n0.radius_branch));
            put("n0_log_branch", f(n0.log_branch));
            put("n0_rip_branch_unscaled", f(n0.rip_branch_unscaled));
            put("n0_partial", f(n0.value));
            put("n0_rip_branch", "incomputable: unknown absolute constant".to_string());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RipReport {
    pub holds: bool,
    /// Smallest `u^T S u / u^T Sigma u` over sparse `u`.
    pub worst_ratio_low: f64,
    /// Largest such ratio.
    pub worst_ratio_high: f64,
    /// Spectral clause on `Omega_yx`, when the links are supplied.
    pub lambda_condition: Option<bool>,
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Generalized eigenvalue extremes of the pencil `(S_T, Sigma_T)`.
fn pencil_extremes(sigma: &SymmetricMatrix, s: &SymmetricMatrix, idx: &[usize]) -> Result<(f64, f64)> {
    let chol = Cholesky::factor(&sigma.principal(idx))?;
    // C = G^{-1} S_T G^{-T}
    let left = chol.solve_lower(&s.principal(idx));
    let c = chol.solve_lower(&left.transpose());
    eig_extremes(&SymmetricMatrix::symmetrize(c))
}

/// Exhaustive restricted-isometry check over supports of size `min(s, p)`,
/// which covers every smaller support by eigenvalue interlacing.
pub fn check_rip(
    sigma_xx: &SymmetricMatrix,
    s_xx: &SymmetricMatrix,
    s: usize,
    omega_yx: Option<&DenseMatrix>,
) -> Result<RipReport> {
    let p = sigma_xx.dim();
    if s_xx.dim() != p {
        return Err(Error::InvalidInput("covariance dimensions differ".into()));
    }
    if s == 0 {
        return Err(Error::InvalidInput("sparsity level must be positive".into()));
    }
    if p > RIP_MAX_P || s > RIP_MAX_S {
        return Err(Error::Capacity(format!(
            "exhaustive check limited to p <= {RIP_MAX_P}, s <= {RIP_MAX_S} (got p = {p}, s = {s}); use random supports instead"
        )));
    }
    let k = s.min(p);
    let supports = subsets(p, k);
    let extremes: Vec<(f64, f64)> =
        supports.par_iter().map(|idx| pencil_extremes(sigma_xx, s_xx, idx)).collect::<Result<_>>()?;
    let low = extremes.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let high = extremes.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let lambda_condition = match omega_yx {
        Some(b) => {
            if b.cols() != p {
                return Err(Error::InvalidInput("Omega_yx column count does not match p".into()));
            }
            let bt = b.transpose();
            let (_, emp) = eig_extremes(&s_xx.congruence(&bt))?;
            let (_, pop) = eig_extremes(&sigma_xx.congruence(&bt))?;
            Some(emp <= 1.4 * pop)
        }
        None => None,
    };
    let holds = low >= 0.5 && high <= 1.5 && lambda_condition.unwrap_or(true);
    Ok(RipReport { holds, worst_ratio_low: low, worst_ratio_high: high, lambda_condition })
}
