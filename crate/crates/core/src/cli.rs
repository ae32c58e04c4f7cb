//! Command-line front end: configuration, CSV I/O and the five subcommands.
//!
//! Every numeric output is written with `{:.16e}` so files round-trip
//! exactly. Parallel work runs in a pool of `--jobs` threads and results
//! are merged in index order, so outputs do not depend on the thread count.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{
    cross_validate, cross_validate_lasso, f_score, median, mspe, mspe_regression, selection_frequency,
    tune_by_f_score, CvCell, CvGrid, ZERO_TOL,
};
use crate::linalg::{DenseMatrix, SymmetricMatrix};
use crate::model::{sample_covariances, Dataset, ParameterPair, RegularizationConfig};
use crate::owlqn::OwlqnSettings;
use crate::simulate::{first_diff_structure, gen_replication, gen_weather_like, ScenarioSpec, WeatherSpec};
use crate::solver::{fit, fit_lasso_baseline, FitSettings, Variant};
use crate::theory::{theory_report, TheoryInputs};

#[derive(Debug, Parser)]
#[command(name = "gengm", version, about = "Generalized partial Gaussian graphical model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "gengm-out")]
    pub out: PathBuf,
    /// Mean-center X and Y before fitting.
    #[arg(long, global = true)]
    pub center: bool,
    #[arg(long, global = true, value_enum)]
    pub variant: Option<VariantArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Gengm,
    Gm,
    Spr,
    Oracle,
    Lasso,
}

impl VariantArg {
    fn solver_variant(self) -> Option<Variant> {
        match self {
            VariantArg::Gengm => Some(Variant::GenGm),
            VariantArg::Gm => Some(Variant::Gm),
            VariantArg::Spr => Some(Variant::Spr),
            VariantArg::Oracle => Some(Variant::Oracle),
            VariantArg::Lasso => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            VariantArg::Gengm => "gengm",
            VariantArg::Gm => "gm",
            VariantArg::Spr => "spr",
            VariantArg::Oracle => "oracle",
            VariantArg::Lasso => "lasso",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate scenario replications (or a weather-style dataset).
    Simulate,
    /// Fit one configuration on a dataset.
    Fit(DataArgs),
    /// Cross-validate the grid on a dataset and refit at the best cell.
    Cv(DataArgs),
    /// Simulation study (MSPE and F-score per replication) or, with data
    /// paths, the repeated-subsample selection-frequency study.
    Eval(EvalArgs),
    /// Constants of the error bound for a known truth.
    Theory(TheoryArgs),
}

#[derive(Debug, clap::Args)]
pub struct DataArgs {
    /// Predictor CSV (header x1..xp).
    #[arg(long)]
    pub x: PathBuf,
    /// Response CSV (header y1..yq).
    #[arg(long)]
    pub y: PathBuf,
    /// True `Omega_yy` CSV, needed by the oracle variant.
    #[arg(long)]
    pub oracle_precision: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long, requires = "y")]
    pub x: Option<PathBuf>,
    #[arg(long, requires = "x")]
    pub y: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct TheoryArgs {
    /// True `Omega_yy` CSV.
    #[arg(long)]
    pub omega_yy: PathBuf,
    /// True `Omega_yx` CSV.
    #[arg(long)]
    pub omega_yx: PathBuf,
    /// `Sigma_xx` CSV; identity when omitted.
    #[arg(long)]
    pub sigma_xx: Option<PathBuf>,
    /// Data for the empirical noise levels, the region and the bound.
    #[arg(long, requires = "y")]
    pub x: Option<PathBuf>,
    #[arg(long, requires = "x")]
    pub y: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub scenario: ScenarioSection,
    pub regularization: RegularizationSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub experiment: ExperimentSection,
    pub selection: SelectionSection,
    pub theory: TheorySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// `"1"`, `"2"`, `"3"` or `"weather"`.
    pub kind: String,
    pub p: usize,
    pub r: f64,
    pub n_train: usize,
    pub n_valid: usize,
    pub replications: usize,
    pub weather_n: usize,
    pub weather_p: usize,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            kind: "2".into(),
            p: 100,
            r: 0.5,
            n_train: 150,
            n_valid: 1000,
            replications: 500,
            weather_n: 35,
            weather_p: 365,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationSection {
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
    pub beta: f64,
    /// `"firstdiff"`, `"identity"` or a CSV path.
    pub structure: String,
    /// Added to the structure matrix diagonal.
    pub structure_ridge: f64,
    pub unguaranteed: bool,
}

impl Default for RegularizationSection {
    fn default() -> Self {
        Self {
            lambda: 0.01,
            mu: 0.05,
            eta: 1.0,
            beta: 1.0,
            structure: "firstdiff".into(),
            structure_ridge: 0.0,
            unguaranteed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    pub etas: Vec<f64>,
    pub beta: f64,
    pub folds: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = CvGrid::default();
        Self { lambdas: g.lambdas, mus: g.mus, etas: g.etas, beta: g.beta, folds: g.folds }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub epsilon: f64,
    pub max_outer: usize,
    pub memory: usize,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = OwlqnSettings::default();
        Self { epsilon: 1e-4, max_outer: 100, memory: o.memory, max_iters: o.max_iters, grad_tol: o.grad_tol }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub variants: Vec<VariantArg>,
    /// Also tune each replication for the best F-score against the truth.
    pub f_tuned: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            variants: vec![VariantArg::Oracle, VariantArg::Gengm, VariantArg::Gm, VariantArg::Spr, VariantArg::Lasso],
            f_tuned: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub repetitions: usize,
    pub subsample: usize,
    pub threshold: f64,
    pub betas: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
    pub eta: f64,
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self {
            repetitions: 100,
            subsample: 25,
            threshold: 0.5,
            betas: vec![1.0, 1.5, 2.0],
            lambda: 0.0,
            mu: 0.05,
            eta: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheorySection {
    pub c_lambda: f64,
    pub d_lambda: f64,
    pub e_lambda: f64,
    pub c_mu: f64,
    pub d_mu: f64,
    pub e_mu: f64,
    pub epsilon_s: Option<f64>,
    pub epsilon_l: Option<f64>,
    pub b3: f64,
    pub active_set_size: Option<usize>,
    pub allow_null: bool,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self {
            c_lambda: 2.0,
            d_lambda: 4.0,
            e_lambda: 1.0,
            c_mu: 2.0,
            d_mu: 4.0,
            e_mu: 1.0,
            epsilon_s: None,
            epsilon_l: None,
            b3: 0.05,
            active_set_size: None,
            allow_null: false,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn fit_settings(&self, variant: Variant) -> FitSettings {
        FitSettings {
            epsilon: self.solver.epsilon,
            max_outer: self.solver.max_outer,
            variant,
            owlqn: self.owlqn(),
            ..FitSettings::default()
        }
    }

    fn owlqn(&self) -> OwlqnSettings {
        OwlqnSettings {
            memory: self.solver.memory,
            max_iters: self.solver.max_iters,
            grad_tol: self.solver.grad_tol,
            ..OwlqnSettings::default()
        }
    }

    fn structure(&self, p: usize) -> Result<SymmetricMatrix> {
        let base = match self.regularization.structure.as_str() {
            "firstdiff" => first_diff_structure(p)?,
            "identity" => SymmetricMatrix::identity(p),
            path => {
                let m = read_matrix(Path::new(path))?;
                SymmetricMatrix::new(m).map_err(|e| Error::Config(format!("structure matrix: {e}")))?
            }
        };
        if base.dim() != p {
            return Err(Error::Config(format!("structure matrix is {0}x{0}, expected {p}", base.dim())));
        }
        Ok(base.add(&SymmetricMatrix::identity(p).scale(self.regularization.structure_ridge)))
    }

    fn regularization(&self, p: usize) -> Result<RegularizationConfig> {
        let r = &self.regularization;
        Ok(RegularizationConfig::new(r.lambda, r.mu, r.eta, r.beta, self.structure(p)?)
            .with_unguaranteed(r.unguaranteed))
    }

    fn grid(&self, seed: u64) -> CvGrid {
        CvGrid {
            lambdas: self.grid.lambdas.clone(),
            mus: self.grid.mus.clone(),
            etas: self.grid.etas.clone(),
            beta: self.grid.beta,
            folds: self.grid.folds,
            seed,
        }
    }
}

/// Writes a matrix with the given column prefix (`x`, `y` or `c`).
pub fn write_matrix(path: &Path, m: &DenseMatrix, prefix: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((1..=m.cols()).map(|j| format!("{prefix}{j}")))?;
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a headed numeric CSV.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::Schema(format!("{}: row {} has {} fields, expected {cols}", path.display(), k + 1, rec.len())));
        }
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Schema(format!("{}: row {}: '{field}' is not a number", path.display(), k + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::Schema(format!("{}: row {}: non-finite value", path.display(), k + 1)));
            }
            data.push(v);
        }
        rows += 1;
    }
    DenseMatrix::new(rows, cols, data)
}

fn read_dataset(x: &Path, y: &Path, center: bool) -> Result<Dataset> {
    let d = Dataset::new(read_matrix(x)?, read_matrix(y)?)
        .map_err(|e| Error::Schema(format!("X and Y do not match: {e}")))?;
    Ok(if center { d.centered() } else { d })
}

fn write_key_values(path: &Path, kv: &[(String, String)]) -> Result<()> {
    let text: String = kv.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    center: bool,
    variant: Option<VariantArg>,
    config: &'a Config,
}

fn write_manifest(out: &Path, command: &str, cli: &Cli, cfg: &Config) -> Result<()> {
    let m = Manifest {
        tool: "gengm",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
        center: cli.center,
        variant: cli.variant,
        config: cfg,
    };
    let text = toml::to_string(&m).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(out.join("manifest.toml"), text)?;
    Ok(())
}

fn f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses the arguments' configuration and runs the command.
pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    fs::create_dir_all(&cli.out)?;
    pool.install(|| match &cli.command {
        Command::Simulate => cmd_simulate(&cli, &cfg),
        Command::Fit(a) => cmd_fit(&cli, &cfg, a),
        Command::Cv(a) => cmd_cv(&cli, &cfg, a),
        Command::Eval(a) => cmd_eval(&cli, &cfg, a),
        Command::Theory(a) => cmd_theory(&cli, &cfg, a),
    })
}

fn scenario_spec(cfg: &Config) -> Result<ScenarioSpec> {
    let id: u8 = cfg
        .scenario
        .kind
        .parse()
        .map_err(|_| Error::Config(format!("scenario kind '{}' is not 1, 2 or 3", cfg.scenario.kind)))?;
    let spec = ScenarioSpec {
        id,
        p: cfg.scenario.p,
        r: cfg.scenario.r,
        n_train: cfg.scenario.n_train,
        n_valid: cfg.scenario.n_valid,
        seed: cfg.seed,
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(spec)
}

fn cmd_simulate(cli: &Cli, cfg: &Config) -> Result<()> {
    write_manifest(&cli.out, "simulate", cli, cfg)?;
    if cfg.scenario.kind == "weather" {
        let d = gen_weather_like(&WeatherSpec { n: cfg.scenario.weather_n, p: cfg.scenario.weather_p, seed: cfg.seed })?;
        let dir = cli.out.join("weather");
        fs::create_dir_all(&dir)?;
        write_matrix(&dir.join("x.csv"), &d.x, "x")?;
        write_matrix(&dir.join("y.csv"), &d.y, "y")?;
        let truth = d.truth.as_ref().expect("generated truth");
        write_matrix(&dir.join("omega_yy.csv"), truth.omega_yy(), "c")?;
        write_matrix(&dir.join("omega_yx.csv"), truth.omega_yx(), "c")?;
        return Ok(());
    }
    let spec = scenario_spec(cfg)?;
    let reps: Vec<_> = (0..cfg.scenario.replications)
        .into_par_iter()
        .map(|rep| gen_replication(&spec, rep as u64))
        .collect::<Result<_>>()?;
    for (rep, data) in reps.iter().enumerate() {
        let dir = cli.out.join(format!("rep_{rep:04}"));
        fs::create_dir_all(&dir)?;
        write_matrix(&dir.join("x_train.csv"), &data.train.x, "x")?;
        write_matrix(&dir.join("y_train.csv"), &data.train.y, "y")?;
        write_matrix(&dir.join("x_valid.csv"), &data.valid.x, "x")?;
        write_matrix(&dir.join("y_valid.csv"), &data.valid.y, "y")?;
        write_matrix(&dir.join("omega_yy.csv"), data.truth().omega_yy(), "c")?;
        write_matrix(&dir.join("omega_yx.csv"), data.truth().omega_yx(), "c")?;
    }
    Ok(())
}

fn oracle_settings(mut s: FitSettings, path: Option<&PathBuf>) -> Result<FitSettings> {
    if s.variant == Variant::Oracle {
        let path = path.ok_or_else(|| Error::Config("the oracle variant needs --oracle-precision".into()))?;
        s.oracle_precision = Some(SymmetricMatrix::new(read_matrix(path)?)?);
    }
    Ok(s)
}

fn write_fit(out: &Path, theta: &ParameterPair, kv: Vec<(String, String)>) -> Result<()> {
    write_matrix(&out.join("omega_yy.csv"), theta.omega_yy(), "c")?;
    write_matrix(&out.join("omega_yx.csv"), theta.omega_yx(), "c")?;
    write_key_values(&out.join("fit.txt"), &kv)
}

fn cmd_fit(cli: &Cli, cfg: &Config, a: &DataArgs) -> Result<()> {
    let d = read_dataset(&a.x, &a.y, cli.center)?;
    write_manifest(&cli.out, "fit", cli, cfg)?;
    let variant = cli.variant.unwrap_or(VariantArg::Gengm);
    let Some(v) = variant.solver_variant() else {
        let b = fit_lasso_baseline(&d, cfg.regularization.mu, &cfg.owlqn())?;
        write_matrix(&cli.out.join("coefficients.csv"), &b, "y")?;
        return write_key_values(
            &cli.out.join("fit.txt"),
            &[("variant".into(), "lasso".into()), ("mu".into(), f(cfg.regularization.mu))],
        );
    };
    let s = oracle_settings(cfg.fit_settings(v), a.oracle_precision.as_ref())?;
    let reg = cfg.regularization(d.p())?;
    let res = fit(&sample_covariances(&d)?, &reg, &s)?;
    let kv = vec![
        ("variant".into(), v.name().into()),
        ("objective".into(), f(res.objective)),
        ("outer_iterations".into(), res.outer_iters.to_string()),
        ("converged".into(), res.converged.to_string()),
        ("support_size".into(), res.theta_hat.omega_yx().count_nonzero(ZERO_TOL).to_string()),
    ];
    write_fit(&cli.out, &res.theta_hat, kv)
}

fn write_cv_table(path: &Path, cells: &[CvCell], folds: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["lambda".to_string(), "mu".into(), "eta".into()];
    header.extend((1..=folds).map(|k| format!("fold{k}")));
    header.push("mean".into());
    w.write_record(&header)?;
    for c in cells {
        let mut row = vec![f(c.lambda), f(c.mu), f(c.eta)];
        match &c.fold_mspe {
            Some(v) => {
                row.extend(v.iter().map(|x| f(*x)));
                row.push(f(c.mean().expect("valid cell")));
            }
            None => row.extend(std::iter::repeat_n("invalid".to_string(), folds + 1)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_cv(cli: &Cli, cfg: &Config, a: &DataArgs) -> Result<()> {
    let d = read_dataset(&a.x, &a.y, cli.center)?;
    write_manifest(&cli.out, "cv", cli, cfg)?;
    let grid = cfg.grid(cfg.seed);
    let variant = cli.variant.unwrap_or(VariantArg::Gengm);
    let Some(v) = variant.solver_variant() else {
        let (mu, cells) = cross_validate_lasso(&d, &grid.mus, grid.folds, grid.seed, &cfg.owlqn())?;
        write_cv_table(&cli.out.join("cv_table.csv"), &cells, grid.folds)?;
        let b = fit_lasso_baseline(&d, mu, &cfg.owlqn())?;
        write_matrix(&cli.out.join("coefficients.csv"), &b, "y")?;
        return write_key_values(&cli.out.join("best.txt"), &[("mu".into(), f(mu))]);
    };
    let s = oracle_settings(cfg.fit_settings(v), a.oracle_precision.as_ref())?;
    let l = cfg.structure(d.p())?;
    let res = cross_validate(&d, &l, &grid, &s)?;
    write_cv_table(&cli.out.join("cv_table.csv"), &res.cells, grid.folds)?;
    let refit = fit(&sample_covariances(&d)?, &res.best, &s)?;
    let kv = vec![
        ("variant".into(), v.name().into()),
        ("lambda".into(), f(res.best.lambda)),
        ("mu".into(), f(res.best.mu)),
        ("eta".into(), f(res.best.eta)),
        ("beta".into(), f(res.best.beta)),
        ("cv_mspe".into(), f(res.best_mspe)),
        ("objective".into(), f(refit.objective)),
        ("converged".into(), refit.converged.to_string()),
    ];
    write_fit(&cli.out, &refit.theta_hat, kv)
}

/// One row of the replication table.
#[derive(Clone, Debug)]
struct EvalRow {
    rep: usize,
    variant: &'static str,
    tuning: &'static str,
    mspe: f64,
    f: f64,
    precision: f64,
    recall: f64,
    lambda: f64,
    mu: f64,
    eta: f64,
}

fn eval_replication(cfg: &Config, spec: &ScenarioSpec, rep: usize) -> Result<Vec<EvalRow>> {
    let data = gen_replication(spec, rep as u64)?;
    let truth = data.truth().clone();
    let l = cfg.structure(spec.p)?;
    let grid = cfg.grid(cfg.seed.wrapping_add(rep as u64));
    let cov = sample_covariances(&data.train)?;
    let mut rows = Vec::new();
    for &va in &cfg.experiment.variants {
        let Some(v) = va.solver_variant() else {
            let (mu, _) = cross_validate_lasso(&data.train, &grid.mus, grid.folds, grid.seed, &cfg.owlqn())?;
            let b = fit_lasso_baseline(&data.train, mu, &cfg.owlqn())?;
            rows.push(EvalRow {
                rep,
                variant: va.name(),
                tuning: "mspe",
                mspe: mspe_regression(&b, &data.valid)?,
                f: f64::NAN,
                precision: f64::NAN,
                recall: f64::NAN,
                lambda: 0.0,
                mu,
                eta: 0.0,
            });
            continue;
        };
        let mut s = cfg.fit_settings(v);
        if v == Variant::Oracle {
            s.oracle_precision = Some(truth.omega_yy().clone());
        }
        let g = match v {
            Variant::Gm => CvGrid { etas: vec![0.0], ..grid.clone() },
            Variant::Spr => CvGrid { lambdas: vec![0.0], beta: 1.0, ..grid.clone() },
            Variant::Oracle => CvGrid { lambdas: vec![0.0], ..grid.clone() },
            Variant::GenGm => grid.clone(),
        };
        let cv = cross_validate(&data.train, &l, &g, &s)?;
        let res = fit(&cov, &cv.best, &s)?;
        let sc = f_score(res.theta_hat.omega_yx(), truth.omega_yx(), ZERO_TOL)?;
        rows.push(EvalRow {
            rep,
            variant: va.name(),
            tuning: "mspe",
            mspe: mspe(&res.theta_hat, &data.valid)?,
            f: sc.f,
            precision: sc.precision,
            recall: sc.recall,
            lambda: cv.best.lambda,
            mu: cv.best.mu,
            eta: cv.best.eta,
        });
        if cfg.experiment.f_tuned {
            let (best, _) = tune_by_f_score(&data.train, truth.omega_yx(), &l, &g, &s)?;
            let res = fit(&cov, &best, &s)?;
            let sc = f_score(res.theta_hat.omega_yx(), truth.omega_yx(), ZERO_TOL)?;
            rows.push(EvalRow {
                rep,
                variant: va.name(),
                tuning: "fscore",
                mspe: mspe(&res.theta_hat, &data.valid)?,
                f: sc.f,
                precision: sc.precision,
                recall: sc.recall,
                lambda: best.lambda,
                mu: best.mu,
                eta: best.eta,
            });
        }
    }
    Ok(rows)
}

fn cmd_eval(cli: &Cli, cfg: &Config, a: &EvalArgs) -> Result<()> {
    write_manifest(&cli.out, "eval", cli, cfg)?;
    if let (Some(x), Some(y)) = (&a.x, &a.y) {
        let d = read_dataset(x, y, cli.center)?;
        return eval_selection(cli, cfg, &d);
    }
    if cfg.scenario.kind == "weather" {
        let d = gen_weather_like(&WeatherSpec { n: cfg.scenario.weather_n, p: cfg.scenario.weather_p, seed: cfg.seed })?;
        let d = if cli.center { d.centered() } else { d };
        return eval_selection(cli, cfg, &d);
    }
    let mut cfg = cfg.clone();
    if let Some(v) = cli.variant {
        cfg.experiment.variants = vec![v];
    }
    let spec = scenario_spec(&cfg)?;
    let per_rep: Vec<Vec<EvalRow>> = (0..cfg.scenario.replications)
        .into_par_iter()
        .map(|rep| eval_replication(&cfg, &spec, rep))
        .collect::<Result<_>>()?;
    let rows: Vec<EvalRow> = per_rep.into_iter().flatten().collect();

    let mut w = csv::Writer::from_path(cli.out.join("replications.csv"))?;
    w.write_record(["rep", "variant", "tuning", "mspe", "f", "precision", "recall", "lambda", "mu", "eta"])?;
    for r in &rows {
        w.write_record([
            r.rep.to_string(),
            r.variant.to_string(),
            r.tuning.to_string(),
            f(r.mspe),
            f(r.f),
            f(r.precision),
            f(r.recall),
            f(r.lambda),
            f(r.mu),
            f(r.eta),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(cli.out.join("summary.csv"))?;
    w.write_record(["variant", "tuning", "median_mspe", "median_f"])?;
    for &va in &cfg.experiment.variants {
        for tuning in ["mspe", "fscore"] {
            let sel: Vec<&EvalRow> = rows.iter().filter(|r| r.variant == va.name() && r.tuning == tuning).collect();
            if sel.is_empty() {
                continue;
            }
            let m: Vec<f64> = sel.iter().map(|r| r.mspe).collect();
            let fs: Vec<f64> = sel.iter().map(|r| r.f).collect();
            w.write_record([va.name().to_string(), tuning.to_string(), f(median(&m)), f(median(&fs))])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn eval_selection(cli: &Cli, cfg: &Config, d: &Dataset) -> Result<()> {
    let sel = &cfg.selection;
    let l = cfg.structure(d.p())?;
    let s = cfg.fit_settings(Variant::GenGm);
    let mut w = csv::Writer::from_path(cli.out.join("selection.csv"))?;
    let mut header = vec!["beta".to_string(), "response".into()];
    header.extend((1..=d.p()).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    let mut summary = Vec::new();
    for &beta in &sel.betas {
        let reg = RegularizationConfig::new(sel.lambda, sel.mu, sel.eta, beta, l.clone())
            .with_unguaranteed(cfg.regularization.unguaranteed);
        let freq = selection_frequency(d, &reg, &s, sel.repetitions, sel.subsample, cfg.seed, sel.threshold)?;
        for i in 0..freq.q {
            let mut row = vec![f(beta), format!("y{}", i + 1)];
            row.extend((0..freq.p).map(|j| f(freq.frequency(i, j))));
            w.write_record(&row)?;
        }
        summary.push((format!("retained_beta_{beta}"), freq.retained().len().to_string()));
        summary.push((format!("failed_beta_{beta}"), freq.failed.to_string()));
    }
    w.flush()?;
    write_key_values(&cli.out.join("selection_summary.txt"), &summary)
}

fn cmd_theory(cli: &Cli, cfg: &Config, a: &TheoryArgs) -> Result<()> {
    let omega_yy = SymmetricMatrix::new(read_matrix(&a.omega_yy)?)?;
    let truth = ParameterPair::new(omega_yy, read_matrix(&a.omega_yx)?)?;
    let sigma_xx = match &a.sigma_xx {
        Some(p) => SymmetricMatrix::new(read_matrix(p)?)?,
        None => SymmetricMatrix::identity(truth.p()),
    };
    write_manifest(&cli.out, "theory", cli, cfg)?;
    let l = cfg.structure(truth.p())?;
    let mut inp = TheoryInputs::new(truth, sigma_xx, l)?;
    let t = &cfg.theory;
    inp.eta = cfg.regularization.eta;
    inp.beta = cfg.regularization.beta;
    inp.c_lambda = t.c_lambda;
    inp.d_lambda = t.d_lambda;
    inp.e_lambda = t.e_lambda;
    inp.c_mu = t.c_mu;
    inp.d_mu = t.d_mu;
    inp.e_mu = t.e_mu;
    inp.epsilon_s = t.epsilon_s;
    inp.epsilon_l = t.epsilon_l;
    inp.b3 = t.b3;
    inp.allow_null = t.allow_null;
    if let Some(s) = t.active_set_size {
        inp.active_set_size = s;
    }
    let emp = match (&a.x, &a.y) {
        (Some(x), Some(y)) => Some(sample_covariances(&read_dataset(x, y, cli.center)?)?),
        _ => None,
    };
    let report = theory_report(&inp, emp.as_ref(), None)?;
    write_key_values(&cli.out.join("theory.txt"), &report.to_key_values())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_unknown_keys() {
        let c = Config::parse("seed = 7\n[regularization]\nmu = 0.2\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.regularization.mu, 0.2);
        assert_eq!(c.solver.epsilon, 1e-4);
        assert!(matches!(Config::parse("[regularization]\nmuu = 1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("gengm-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let m = DenseMatrix::from_rows(&[vec![0.1, -2.0 / 3.0], vec![1e-300, 12345.678]]).unwrap();
        let p = dir.join("m.csv");
        write_matrix(&p, &m, "x").unwrap();
        assert_eq!(read_matrix(&p).unwrap(), m);
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("x1,x2\n"));
        fs::remove_dir_all(&dir).ok();
    }
}
