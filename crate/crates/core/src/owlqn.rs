//! Orthant-wise limited-memory quasi-Newton minimization of
//! `smooth(v) + sum_i w_i |v_i|`.
//!
//! The smooth callback may return `+inf` at points outside its domain; the
//! backtracking line search treats such trial points as rejected.

use std::collections::VecDeque;

use crate::error::{invalid, Result};
use crate::linalg::dot;

/// Solver knobs. Defaults: memory 10, 500 iterations, max-norm pseudo-gradient
/// tolerance 1e-6, backtracking factor 0.5, 50 line-search trials.
#[derive(Clone, Debug, PartialEq)]
pub struct OwlqnSettings {
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub backtrack_factor: f64,
    pub max_line_search: usize,
}

impl Default for OwlqnSettings {
    fn default() -> Self {
        Self { memory: 10, max_iters: 500, grad_tol: 1e-6, backtrack_factor: 0.5, max_line_search: 50 }
    }
}

impl OwlqnSettings {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 || self.max_iters == 0 || self.max_line_search == 0 {
            return invalid("OWL-QN memory, max_iters and max_line_search must be positive");
        }
        if !(self.grad_tol > 0.0) {
            return invalid("OWL-QN grad_tol must be positive");
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return invalid("OWL-QN backtrack_factor must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Armijo sufficient-decrease constant.
const ARMIJO_C: f64 = 1e-4;

/// How a minimization ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Every trial step of the line search was rejected.
    LineSearchFailed,
    /// The objective stopped changing before the pseudo-gradient tolerance was met.
    Stalled,
}

#[derive(Clone, Debug)]
pub struct OwlqnResult {
    pub solution: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub pseudo_grad_norm: f64,
    pub termination: Termination,
}

/// A composite problem: smooth callback plus nonnegative l1 weights
/// (`w_i = 0` leaves coordinate `i` unpenalized).
pub struct L1Problem<F> {
    pub smooth: F,
    pub l1_weights: Vec<f64>,
}

impl<F> L1Problem<F>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    pub fn new(smooth: F, l1_weights: Vec<f64>) -> Result<Self> {
        if l1_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return invalid("l1 weights must be finite and nonnegative");
        }
        Ok(Self { smooth, l1_weights })
    }

    pub fn dim(&self) -> usize {
        self.l1_weights.len()
    }

    fn composite(&mut self, v: &[f64], grad: &mut [f64]) -> f64 {
        let s = (self.smooth)(v, grad);
        if !s.is_finite() {
            return f64::INFINITY;
        }
        s + l1(v, &self.l1_weights)
    }
}

fn l1(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(x, w)| w * x.abs()).sum()
}

/// Minimum-norm subgradient of `smooth + sum w_i |v_i|`.
pub fn pseudo_gradient(v: &[f64], grad: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if v.len() != grad.len() || v.len() != weights.len() {
        return invalid(format!(
            "pseudo-gradient length mismatch: v {}, grad {}, weights {}",
            v.len(),
            grad.len(),
            weights.len()
        ));
    }
    let mut out = vec![0.0; v.len()];
    pseudo_gradient_into(v, grad, weights, &mut out);
    Ok(out)
}

fn pseudo_gradient_into(v: &[f64], grad: &[f64], weights: &[f64], out: &mut [f64]) {
    for i in 0..v.len() {
        let (x, g, w) = (v[i], grad[i], weights[i]);
        out[i] = if x > 0.0 {
            g + w
        } else if x < 0.0 {
            g - w
        } else if g + w < 0.0 {
            g + w
        } else if g - w > 0.0 {
            g - w
        } else {
            0.0
        };
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// `-H * pg` by the two-loop recursion, `H_0 = (s^t y / y^t y) I`.
fn two_loop(history: &VecDeque<Pair>, pg: &[f64]) -> Vec<f64> {
    let mut q: Vec<f64> = pg.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for pair in history.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some(last) = history.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for (pair, a) in history.iter().zip(alphas.iter().rev()) {
        let b = pair.rho * dot(&pair.y, &q);
        for (qi, si) in q.iter_mut().zip(&pair.s) {
            *qi += (a - b) * si;
        }
    }
    q.iter_mut().for_each(|x| *x = -*x);
    q
}

/// Runs OWL-QN from `start`.
pub fn minimize<F>(problem: &mut L1Problem<F>, start: &[f64], settings: &OwlqnSettings) -> Result<OwlqnResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    settings.validate()?;
    let n = problem.dim();
    if start.len() != n {
        return invalid(format!("start has length {} but problem dimension is {n}", start.len()));
    }
    if start.iter().any(|x| !x.is_finite()) {
        return invalid("start point is not finite");
    }
    let weights = problem.l1_weights.clone();
    let mut x = start.to_vec();
    let mut g = vec![0.0; n];
    let mut f = problem.composite(&x, &mut g);
    if !f.is_finite() {
        return invalid("objective is not finite at the start point");
    }
    let mut pg = vec![0.0; n];
    pseudo_gradient_into(&x, &g, &weights, &mut pg);

    let mut history: VecDeque<Pair> = VecDeque::with_capacity(settings.memory);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    while iterations < settings.max_iters {
        let pg_norm = max_norm(&pg);
        if pg_norm <= settings.grad_tol {
            termination = Termination::Converged;
            break;
        }
        iterations += 1;

        let mut accepted = None;
        // Second attempt drops the curvature memory and uses steepest descent.
        for attempt in 0..2 {
            if attempt == 1 && history.is_empty() {
                break;
            }
            if attempt == 1 {
                history.clear();
            }
            let mut d = two_loop(&history, &pg);
            for (di, pgi) in d.iter_mut().zip(&pg) {
                if *di * *pgi >= 0.0 {
                    *di = 0.0;
                }
            }
            let orthant: Vec<f64> = x
                .iter()
                .zip(&pg)
                .map(|(&xi, &pgi)| if xi != 0.0 { xi.signum() } else if pgi != 0.0 { -pgi.signum() } else { 0.0 })
                .collect();
            let mut alpha = if history.is_empty() {
                1.0_f64.min(1.0 / dot(&pg, &pg).sqrt())
            } else {
                1.0
            };
            for _ in 0..settings.max_line_search {
                for i in 0..n {
                    let t = x[i] + alpha * d[i];
                    x_new[i] = if t * orthant[i] > 0.0 { t } else { 0.0 };
                }
                let f_trial = problem.composite(&x_new, &mut g_new);
                if f_trial.is_finite() {
                    let decrease: f64 = (0..n).map(|i| pg[i] * (x_new[i] - x[i])).sum();
                    if f_trial <= f + ARMIJO_C * decrease {
                        accepted = Some(f_trial);
                        break;
                    }
                }
                alpha *= settings.backtrack_factor;
            }
            if accepted.is_some() {
                break;
            }
        }

        let Some(f_next) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) && sy > 0.0 {
            if history.len() == settings.memory {
                history.pop_front();
            }
            history.push_back(Pair { rho: 1.0 / sy, s, y });
        }
        let stalled = (f - f_next).abs() <= 1e-15 * f.abs().max(1.0);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_next;
        pseudo_gradient_into(&x, &g, &weights, &mut pg);
        if stalled && max_norm(&pg) > settings.grad_tol {
            termination = Termination::Stalled;
            break;
        }
    }

    let pseudo_grad_norm = max_norm(&pg);
    if termination == Termination::MaxIterations && pseudo_grad_norm <= settings.grad_tol {
        termination = Termination::Converged;
    }
    Ok(OwlqnResult {
        solution: x,
        value: f,
        iterations,
        converged: termination == Termination::Converged,
        pseudo_grad_norm,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_gradient_examples() {
        let g = vec![0.3, -1.2, 4.0];
        assert_eq!(pseudo_gradient(&[1.0, 0.0, -2.0], &g, &[0.0; 3]).unwrap(), g);
        assert_eq!(pseudo_gradient(&[0.0], &[0.3], &[0.5]).unwrap(), vec![0.0]);
        let v = pseudo_gradient(&[0.0], &[-0.9], &[0.5]).unwrap()[0];
        assert!((v + 0.4).abs() < 1e-15);
        assert_eq!(pseudo_gradient(&[0.0], &[0.9], &[0.5]).unwrap()[0], 0.9 - 0.5);
        assert_eq!(pseudo_gradient(&[-1.0], &[0.1], &[0.5]).unwrap()[0], 0.1 - 0.5);
        assert!(pseudo_gradient(&[0.0], &[0.9, 1.0], &[0.5]).is_err());
    }

    fn scalar_lasso(target: f64, w: f64) -> f64 {
        let mut prob = L1Problem::new(
            move |v: &[f64], g: &mut [f64]| {
                g[0] = v[0] - target;
                0.5 * (v[0] - target).powi(2)
            },
            vec![w],
        )
        .unwrap();
        let res = minimize(&mut prob, &[0.0], &OwlqnSettings::default()).unwrap();
        assert!(res.converged, "{res:?}");
        res.solution[0]
    }

    #[test]
    fn scalar_soft_threshold() {
        assert!((scalar_lasso(1.0, 0.5) - 0.5).abs() < 1e-6);
        assert_eq!(scalar_lasso(0.3, 0.5), 0.0);
        assert!((scalar_lasso(-2.0, 0.5) + 1.5).abs() < 1e-6);
    }

    #[test]
    fn unpenalized_quadratic_bowl() {
        // f = 1/2 sum_i (i+1) (v_i - c_i)^2
        let c: Vec<f64> = (0..10).map(|i| (i as f64 - 4.5) / 3.0).collect();
        let cc = c.clone();
        let mut prob = L1Problem::new(
            move |v: &[f64], g: &mut [f64]| {
                let mut f = 0.0;
                for i in 0..v.len() {
                    let d = v[i] - cc[i];
                    g[i] = (i + 1) as f64 * d;
                    f += 0.5 * (i + 1) as f64 * d * d;
                }
                f
            },
            vec![0.0; 10],
        )
        .unwrap();
        let res = minimize(&mut prob, &[0.0; 10], &OwlqnSettings::default()).unwrap();
        assert!(res.converged);
        for (a, b) in res.solution.iter().zip(&c) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn infinite_region_is_backtracked() {
        // smooth = (v - 3)^2 on v < 2, +inf beyond; l1 weight 0. Minimizer is at the wall.
        let mut prob = L1Problem::new(
            |v: &[f64], g: &mut [f64]| {
                if v[0] >= 2.0 {
                    return f64::INFINITY;
                }
                g[0] = 2.0 * (v[0] - 3.0);
                (v[0] - 3.0).powi(2)
            },
            vec![0.0],
        )
        .unwrap();
        let res = minimize(&mut prob, &[0.0], &OwlqnSettings::default()).unwrap();
        assert!(res.solution[0] < 2.0 && res.solution[0] > 1.9);
        assert!(res.value.is_finite());
    }

    #[test]
    fn invalid_settings_and_start() {
        let mut prob = L1Problem::new(|_: &[f64], _: &mut [f64]| 0.0, vec![0.0]).unwrap();
        let bad = OwlqnSettings { backtrack_factor: 1.0, ..Default::default() };
        assert!(minimize(&mut prob, &[0.0], &bad).is_err());
        assert!(minimize(&mut prob, &[0.0, 1.0], &OwlqnSettings::default()).is_err());
        assert!(L1Problem::new(|_: &[f64], _: &mut [f64]| 0.0, vec![-1.0]).is_err());
    }
}
