//! Synthetic scenarios with known ground truth.
//!
//! Every draw goes through [`replication_rng`]: a ChaCha8 generator seeded
//! from the user seed, with the replication index selecting the stream.
//! Replications are therefore independent of scheduling order.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{inv_spd, Cholesky, DenseMatrix, SymmetricMatrix};
use crate::model::{to_regression, Dataset, ParameterPair};

/// Magnitude of every nonzero link.
pub const LINK_MAGNITUDE: f64 = 0.5;
/// Scenario 1: number of sections and their length.
pub const S1_SECTIONS: usize = 10;
pub const S1_SECTION_LEN: usize = 3;
/// Scenario 3: section length per row.
pub const S3_SECTION_LEN: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u8,
    pub p: usize,
    pub r: f64,
    pub n_train: usize,
    pub n_valid: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Defaults of the reference study: `p = 100`, `r = 0.5`, 150 training
    /// and 1000 validation rows.
    pub fn new(id: u8, seed: u64) -> Self {
        Self { id, p: 100, r: 0.5, n_train: 150, n_valid: 1000, seed }
    }

    /// Number of responses, fixed by the scenario id.
    pub fn q(&self) -> usize {
        self.id as usize
    }

    pub fn validate(&self) -> Result<()> {
        match self.id {
            1 if self.p < S1_SECTIONS + 2 => invalid(format!(
                "scenario 1 needs p >= {} to place {S1_SECTIONS} distinct section starts",
                S1_SECTIONS + 2
            )),
            1 | 2 => Ok(()),
            3 if self.p < S3_SECTION_LEN => {
                invalid(format!("scenario 3 needs p >= {S3_SECTION_LEN}, got {}", self.p))
            }
            3 => Ok(()),
            other => invalid(format!("unknown scenario id {other}")),
        }?;
        if self.p == 0 {
            return invalid("p must be positive");
        }
        if !(self.r.abs() < 1.0) {
            return invalid("AR correlation must satisfy |r| < 1");
        }
        if self.n_train == 0 {
            return invalid("n_train must be positive");
        }
        Ok(())
    }
}

/// Generator for replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Normalized first-difference operator: `u^T L u = sum (u_{j+1} - u_j)^2 / 2`.
pub fn first_diff_structure(p: usize) -> Result<SymmetricMatrix> {
    if p < 2 {
        return invalid("first-difference structure needs p >= 2");
    }
    let m = DenseMatrix::from_fn(p, p, |i, j| {
        if i == j {
            if i == 0 || i == p - 1 {
                0.5
            } else {
                1.0
            }
        } else if i.abs_diff(j) == 1 {
            -0.5
        } else {
            0.0
        }
    });
    Ok(SymmetricMatrix::symmetrize(m))
}

/// `R = (r^{|i-j|})`.
pub fn ar_covariance(q: usize, r: f64) -> Result<SymmetricMatrix> {
    if !(r.abs() < 1.0) {
        return invalid("AR correlation must satisfy |r| < 1");
    }
    let m = DenseMatrix::from_fn(q, q, |i, j| r.powi(i.abs_diff(j) as i32));
    Ok(SymmetricMatrix::symmetrize(m))
}

fn random_sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        LINK_MAGNITUDE
    } else {
        -LINK_MAGNITUDE
    }
}

/// Draws the true `Omega_yx` for a scenario.
pub fn draw_links<R: Rng>(spec: &ScenarioSpec, rng: &mut R) -> Result<DenseMatrix> {
    spec.validate()?;
    let (q, p) = (spec.q(), spec.p);
    let mut b = DenseMatrix::zeros(q, p);
    match spec.id {
        1 => {
            // Starts are distinct; sections may still overlap.
            let starts = sample(rng, p - 2, S1_SECTIONS);
            for start in starts.iter() {
                let w = random_sign(rng);
                for j in start..start + S1_SECTION_LEN {
                    b[(0, j)] = w;
                }
            }
        }
        2 => {
            let row = rng.random_range(0..q);
            let w = random_sign(rng);
            for j in 0..p {
                b[(row, j)] = w;
            }
        }
        3 => {
            for i in 0..q {
                let start = rng.random_range(0..=p - S3_SECTION_LEN);
                let w = random_sign(rng);
                for j in start..start + S3_SECTION_LEN {
                    b[(i, j)] = w;
                }
            }
        }
        _ => unreachable!("validated"),
    }
    Ok(b)
}

/// Draws `n` rows of `Y = X B + E` with `X ~ N(0, I)` and `E ~ N(0, R)`.
pub fn sample_dataset<R: Rng>(
    truth: &ParameterPair,
    noise_cov: &SymmetricMatrix,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    let (q, p) = (truth.q(), truth.p());
    let reg = to_regression(truth)?;
    let chol = Cholesky::factor(noise_cov)?;
    let x = DenseMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    let z = DenseMatrix::from_fn(n, q, |_, _| rng.sample(StandardNormal));
    let e = z.matmul_t(chol.lower());
    let y = x.matmul(&reg.b).add(&e);
    let mut d = Dataset::new(x, y)?;
    d.truth = Some(truth.clone());
    d.noise_cov = Some(noise_cov.clone());
    Ok(d)
}

/// Training and validation samples sharing one ground truth.
#[derive(Clone, Debug)]
pub struct ScenarioData {
    pub train: Dataset,
    pub valid: Dataset,
}

impl ScenarioData {
    pub fn truth(&self) -> &ParameterPair {
        self.train.truth.as_ref().expect("simulated data carries its truth")
    }
}

/// Generates replication `rep` of a scenario.
pub fn gen_replication(spec: &ScenarioSpec, rep: u64) -> Result<ScenarioData> {
    spec.validate()?;
    let mut rng = replication_rng(spec.seed, rep);
    let links = draw_links(spec, &mut rng)?;
    let r = ar_covariance(spec.q(), spec.r)?;
    let truth = ParameterPair::new(inv_spd(&r)?, links)?;
    let train = sample_dataset(&truth, &r, spec.n_train, &mut rng)?;
    let valid = sample_dataset(&truth, &r, spec.n_valid, &mut rng)?;
    Ok(ScenarioData { train, valid })
}

/// Replication 0 of the scenario as one dataset: training rows first, then
/// validation rows.
pub fn gen_scenario(spec: &ScenarioSpec) -> Result<Dataset> {
    let data = gen_replication(spec, 0)?;
    let n_train = data.train.n();
    let n = n_train + data.valid.n();
    let stack = |a: &DenseMatrix, b: &DenseMatrix| {
        let mut v = a.as_slice().to_vec();
        v.extend_from_slice(b.as_slice());
        DenseMatrix::new(n, a.cols(), v)
    };
    let mut d = Dataset::new(stack(&data.train.x, &data.valid.x)?, stack(&data.train.y, &data.valid.y)?)?;
    d.truth = data.train.truth;
    d.noise_cov = data.train.noise_cov;
    Ok(d)
}

/// Shape of the synthetic weather-style study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherSpec {
    /// Stations (rows).
    pub n: usize,
    /// Days (columns of X).
    pub p: usize,
    pub seed: u64,
}

impl Default for WeatherSpec {
    fn default() -> Self {
        Self { n: 35, p: 365, seed: 0 }
    }
}

/// Stand-in for a station dataset: X holds smooth daily temperature
/// anomaly curves and the two responses depend on contiguous seasonal
/// windows of X, so the true links are piecewise constant along the days.
pub fn gen_weather_like(spec: &WeatherSpec) -> Result<Dataset> {
    if spec.n < 2 || spec.p < 12 {
        return invalid("weather-like data needs n >= 2 and p >= 12");
    }
    let (n, p) = (spec.n, spec.p);
    let mut rng = replication_rng(spec.seed, 0);
    let tau = std::f64::consts::TAU;
    let mut x = DenseMatrix::zeros(n, p);
    for i in 0..n {
        let amp: f64 = 1.0 + 0.5 * rng.sample::<f64, _>(StandardNormal);
        let phase: f64 = 0.3 * rng.sample::<f64, _>(StandardNormal);
        let mut ar = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            ar = 0.9 * ar + (1.0f64 - 0.81).sqrt() * z;
            x[(i, j)] = amp * (tau * j as f64 / p as f64 + phase).cos() + ar;
        }
    }
    // Standardize the columns.
    for j in 0..p {
        let mean = (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (x[(i, j)] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt().max(1e-12);
        for i in 0..n {
            x[(i, j)] = (x[(i, j)] - mean) / sd;
        }
    }
    let mut links = DenseMatrix::zeros(2, p);
    let win = (p / 6).max(2);
    let (a0, a1) = (p / 2 - win / 2, p / 6);
    for j in a0..a0 + win {
        links[(0, j)] = -0.05;
    }
    for j in a1..a1 + win {
        links[(1, j)] = 0.05;
    }
    let r = ar_covariance(2, 0.5)?;
    let truth = ParameterPair::new(inv_spd(&r)?, links)?;
    let reg = to_regression(&truth)?;
    let chol = Cholesky::factor(&r)?;
    let z = DenseMatrix::from_fn(n, 2, |_, _| rng.sample(StandardNormal));
    let y = x.matmul(&reg.b).add(&z.matmul_t(chol.lower()));
    let mut d = Dataset::new(x, y)?;
    d.truth = Some(truth);
    d.noise_cov = Some(r);
    Ok(d)
}
