//! Alternating block minimization over `(Omega_yy, Omega_yx)`.
//!
//! Each outer iteration runs OWL-QN on `vech(Omega_yy)` (objective `+inf`
//! off the SPD cone, unpenalized diagonal) and then on `vec(Omega_yx)`.
//! Iteration stops once both blocks move by at most
//! `epsilon * max(1, ||previous||_2)` in spectral norm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, spectral_norm, unvech, vech, vech_index, Cholesky, DenseMatrix, SymmetricMatrix};
use crate::model::{CovarianceTriplet, Dataset, ParameterPair, RegularizationConfig};
use crate::objective::{eval_objective_parts, structural_value, structural_weight, SINGULAR_U_TOL};
use crate::owlqn::{minimize, L1Problem, OwlqnSettings, Termination};

/// Estimator flavours sharing one objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Full objective as configured.
    GenGm,
    /// Plain partial graphical model: `eta = 0`.
    Gm,
    /// `lambda = 0`, `beta = 1`.
    Spr,
    /// `Omega_yy` fixed to the true precision; only `Omega_yx` is estimated.
    Oracle,
}

impl Variant {
    /// Applies the variant's constraints to a configuration.
    pub fn apply(&self, cfg: &RegularizationConfig) -> RegularizationConfig {
        let mut out = cfg.clone();
        match self {
            Variant::GenGm | Variant::Oracle => {}
            Variant::Gm => out.eta = 0.0,
            Variant::Spr => {
                out.lambda = 0.0;
                out.beta = 1.0;
            }
        }
        out
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::GenGm => "gengm",
            Variant::Gm => "gm",
            Variant::Spr => "spr",
            Variant::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gengm" => Ok(Variant::GenGm),
            "gm" => Ok(Variant::Gm),
            "spr" => Ok(Variant::Spr),
            "oracle" | "or" => Ok(Variant::Oracle),
            other => Err(Error::Config(format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitSettings {
    pub epsilon: f64,
    pub max_outer: usize,
    pub variant: Variant,
    /// Starting point; `None` selects `Omega_yy = diag(S_yy + 0.01 I)^{-1}`, `Omega_yx = 0`.
    pub init: Option<ParameterPair>,
    /// True precision used by [`Variant::Oracle`].
    pub oracle_precision: Option<SymmetricMatrix>,
    pub owlqn: OwlqnSettings,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            max_outer: 100,
            variant: Variant::GenGm,
            init: None,
            oracle_precision: None,
            owlqn: OwlqnSettings::default(),
        }
    }
}

impl FitSettings {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub theta_hat: ParameterPair,
    pub objective: f64,
    pub outer_iters: usize,
    /// Outer stopping rule met and every inner solve of the last sweep converged.
    pub converged: bool,
    /// Objective after initialization and after each outer iteration.
    pub trace: Vec<f64>,
}

fn default_init(cov: &CovarianceTriplet) -> Result<ParameterPair> {
    let diag: Vec<f64> = cov.s_yy.diag().iter().map(|s| 1.0 / (s + 0.01)).collect();
    ParameterPair::new(SymmetricMatrix::from_diag(&diag), DenseMatrix::zeros(cov.q(), cov.p()))
}

/// Minimizes the penalized objective by alternating block updates.
pub fn fit(cov: &CovarianceTriplet, cfg: &RegularizationConfig, s: &FitSettings) -> Result<FitResult> {
    let cfg = s.variant.apply(cfg);
    cfg.validate()?;
    if !(s.epsilon > 0.0) {
        return invalid("epsilon must be positive");
    }
    s.owlqn.validate()?;
    let (q, p) = (cov.q(), cov.p());
    if cfg.structure.dim() != p {
        return invalid(format!("structure matrix is {0}x{0}, expected p = {p}", cfg.structure.dim()));
    }
    let init = match &s.init {
        Some(theta) => {
            if theta.q() != q || theta.p() != p {
                return invalid("initial parameter dimensions do not match the covariances");
            }
            theta.clone()
        }
        None => default_init(cov)?,
    };
    let (mut omega_yy, mut omega_yx) = init.into_parts();
    if s.variant == Variant::Oracle {
        let truth = s
            .oracle_precision
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("oracle variant needs the true precision".into()))?;
        if truth.dim() != q {
            return invalid("oracle precision has the wrong dimension");
        }
        omega_yy = truth.clone();
        if !crate::linalg::is_spd(&omega_yy)? {
            return invalid("oracle precision is not positive definite");
        }
    }

    let mut value = eval_objective_parts(&omega_yy, &omega_yx, cov, &cfg)?;
    let mut trace = vec![value];
    let mut outer_iters = 0;
    let mut converged = false;

    while outer_iters < s.max_outer {
        outer_iters += 1;
        let prev_yy = omega_yy.clone();
        let prev_yx = omega_yx.clone();
        let mut inner_ok = true;

        if s.variant != Variant::Oracle {
            let (cand, ok) = precision_step(&omega_yy, &omega_yx, cov, &cfg, &s.owlqn)?;
            let cand_value = eval_objective_parts(&cand, &omega_yx, cov, &cfg)?;
            if cand_value <= value {
                omega_yy = cand;
                value = cand_value;
            }
            inner_ok &= ok;
        }

        let (cand, ok) = links_step(&omega_yy, &omega_yx, cov, &cfg, &s.owlqn)?;
        let cand_value = eval_objective_parts(&omega_yy, &cand, cov, &cfg)?;
        if cand_value <= value {
            omega_yx = cand;
            value = cand_value;
        }
        inner_ok &= ok;
        trace.push(value);

        let yy_move = spectral_norm(&omega_yy.sub(&prev_yy))?;
        let yy_ref = spectral_norm(&prev_yy)?.max(1.0);
        let yx_move = spectral_norm(&omega_yx.sub(&prev_yx))?;
        let yx_ref = spectral_norm(&prev_yx)?.max(1.0);
        if yy_move <= s.epsilon * yy_ref && yx_move <= s.epsilon * yx_ref {
            converged = inner_ok;
            break;
        }
    }

    let theta_hat = ParameterPair::new(omega_yy, omega_yx)?;
    Ok(FitResult { theta_hat, objective: value, outer_iters, converged, trace })
}

fn inner_ok(t: Termination) -> bool {
    matches!(t, Termination::Converged | Termination::Stalled)
}

/// OWL-QN over `vech(Omega_yy)` with `Omega_yx` held fixed.
fn precision_step(
    omega_yy: &SymmetricMatrix,
    omega_yx: &DenseMatrix,
    cov: &CovarianceTriplet,
    cfg: &RegularizationConfig,
    settings: &OwlqnSettings,
) -> Result<(SymmetricMatrix, bool)> {
    let q = omega_yy.dim();
    // Quadratic forms that do not depend on Omega_yy.
    let p_s = SymmetricMatrix::symmetrize(omega_yx.matmul(&cov.s_xx).matmul_t(omega_yx));
    let p_l = if cfg.eta != 0.0 {
        SymmetricMatrix::symmetrize(omega_yx.matmul(&cfg.structure).matmul_t(omega_yx))
    } else {
        SymmetricMatrix::zeros(q)
    };
    let structure_active = cfg.eta != 0.0 && p_l.max_abs() > 0.0;
    let linear_yx = 2.0 * dot(cov.s_yx.as_slice(), omega_yx.as_slice());

    // Off-diagonal vech entries stand for two matrix entries.
    let mut weights = vec![0.0; q * (q + 1) / 2];
    for j in 0..q {
        for i in j + 1..q {
            weights[vech_index(i, j, q)] = 2.0 * cfg.lambda;
        }
    }

    let smooth = |v: &[f64], grad: &mut [f64]| -> f64 {
        let Ok(m) = unvech(v, q) else { return f64::INFINITY };
        let Ok(chol) = Cholesky::factor(&m) else { return f64::INFINITY };
        let w = chol.inverse();
        let u = if structure_active { dot(w.as_slice(), p_l.as_slice()) } else { 0.0 };
        let c = if structure_active {
            match structural_weight(u, cfg.eta, cfg.beta) {
                Ok(c) => c,
                Err(_) => return f64::INFINITY,
            }
        } else {
            0.0
        };
        let value = -chol.log_det()
            + dot(cov.s_yy.as_slice(), m.as_slice())
            + linear_yx
            + dot(w.as_slice(), p_s.as_slice())
            + if structure_active { structural_value(u, cfg.eta, cfg.beta) } else { 0.0 };
        // -W + S_yy - W (P_S + c P_L) W
        let mut mid = p_s.as_dense().clone();
        if c != 0.0 {
            mid.axpy(c, &p_l);
        }
        let wmw = w.matmul(&mid).matmul(&w);
        let mut g = 0;
        for j in 0..q {
            for i in j..q {
                let gij = -w[(i, j)] + cov.s_yy[(i, j)] - 0.5 * (wmw[(i, j)] + wmw[(j, i)]);
                grad[g] = if i == j { gij } else { 2.0 * gij };
                g += 1;
            }
        }
        value
    };
    let mut problem = L1Problem::new(smooth, weights)?;
    let start = vech(omega_yy);
    let res = minimize(&mut problem, &start, settings)?;
    let out = unvech(&res.solution, q)?;
    Ok((out, inner_ok(res.termination)))
}

/// OWL-QN over `vec(Omega_yx)` (row-major) with `Omega_yy` held fixed.
fn links_step(
    omega_yy: &SymmetricMatrix,
    omega_yx: &DenseMatrix,
    cov: &CovarianceTriplet,
    cfg: &RegularizationConfig,
    settings: &OwlqnSettings,
) -> Result<(DenseMatrix, bool)> {
    let (q, p) = (omega_yx.rows(), omega_yx.cols());
    if p == 0 {
        return Ok((omega_yx.clone(), true));
    }
    let chol = Cholesky::factor(omega_yy)?;
    let w = chol.inverse();
    let constant = -chol.log_det() + dot(cov.s_yy.as_slice(), omega_yy.as_slice());
    let weights = vec![cfg.mu; q * p];

    let run = |cfg: &RegularizationConfig, start: &DenseMatrix| -> Result<(DenseMatrix, Termination)> {
        let structure = cfg.eta != 0.0;
        let smooth = |v: &[f64], grad: &mut [f64]| -> f64 {
            let b = DenseMatrix::new(q, p, v.to_vec()).expect("finite iterate");
            let z = w.matmul(&b);
            let mut m = b.matmul(&cov.s_xx);
            let quad = dot(m.as_slice(), z.as_slice());
            let mut value = constant + 2.0 * dot(cov.s_yx.as_slice(), v) + quad;
            if structure {
                let m_l = b.matmul(&cfg.structure);
                let u = dot(m_l.as_slice(), z.as_slice());
                let c = match structural_weight(u, cfg.eta, cfg.beta) {
                    Ok(c) => c,
                    Err(_) => return f64::INFINITY,
                };
                value += structural_value(u, cfg.eta, cfg.beta);
                if c != 0.0 {
                    m.axpy(c, &m_l);
                }
            }
            // 2 S_yx + 2 W M
            let wm = w.matmul(&m);
            for ((g, s), a) in grad.iter_mut().zip(cov.s_yx.as_slice()).zip(wm.as_slice()) {
                *g = 2.0 * s + 2.0 * a;
            }
            value
        };
        let mut problem = L1Problem::new(smooth, weights.clone())?;
        let res = minimize(&mut problem, start.as_slice(), settings)?;
        Ok((DenseMatrix::new(q, p, res.solution)?, res.termination))
    };

    let mut start = omega_yx.clone();
    if cfg.eta != 0.0 && cfg.beta < 1.0 {
        // The structural gradient blows up at u_L = 0; move off it with an
        // unstructured step first.
        let u0 = dot(start.matmul(&cfg.structure).as_slice(), w.matmul(&start).as_slice());
        if u0 < SINGULAR_U_TOL {
            let mut plain = cfg.clone();
            plain.eta = 0.0;
            let (cand, t) = run(&plain, &start)?;
            let u1 = dot(cand.matmul(&cfg.structure).as_slice(), w.matmul(&cand).as_slice());
            if u1 < SINGULAR_U_TOL {
                return Ok((cand, inner_ok(t)));
            }
            start = cand;
        }
    }
    let (out, t) = run(cfg, &start)?;
    Ok((out, inner_ok(t)))
}

/// Lasso on `vec(B)`: minimizes `||Y - X B||_F^2 / (2n) + mu |vec(B)|_1`.
/// Returns `B` as a `p x q` matrix.
pub fn fit_lasso_baseline(d: &Dataset, mu: f64, s: &OwlqnSettings) -> Result<DenseMatrix> {
    let n = d.n();
    if n == 0 {
        return invalid("empty dataset");
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return invalid("mu must be finite and >= 0");
    }
    let (p, q) = (d.p(), d.q());
    let inv_n = 1.0 / n as f64;
    let s_xx = d.x.t_matmul(&d.x).scale(inv_n);
    let s_xy = d.x.t_matmul(&d.y).scale(inv_n);
    let yy = 0.5 * inv_n * d.y.as_slice().iter().map(|v| v * v).sum::<f64>();
    let smooth = |v: &[f64], grad: &mut [f64]| -> f64 {
        let b = DenseMatrix::new(p, q, v.to_vec()).expect("finite iterate");
        let sb = s_xx.matmul(&b);
        let mut value = yy - dot(v, s_xy.as_slice()) + 0.5 * dot(v, sb.as_slice());
        for ((g, a), c) in grad.iter_mut().zip(sb.as_slice()).zip(s_xy.as_slice()) {
            *g = a - c;
        }
        if !value.is_finite() {
            value = f64::INFINITY;
        }
        value
    };
    let mut problem = L1Problem::new(smooth, vec![mu; p * q])?;
    let res = minimize(&mut problem, &vec![0.0; p * q], s)?;
    DenseMatrix::new(p, q, res.solution)
}
