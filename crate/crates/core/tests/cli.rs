use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gengm::cli::{read_matrix, write_matrix};
use gengm::linalg::DenseMatrix;

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn gengm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gengm")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_key_values(path: &Path) -> Vec<(String, String)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect()
}

const CONFIG: &str = r#"
seed = 3

[scenario]
kind = "2"
p = 12
n_train = 50
n_valid = 40
replications = 1

[regularization]
lambda = 0.01
mu = 0.05
eta = 1.0
beta = 2.0

[grid]
lambdas = [0.01]
mus = [0.01, 0.1]
etas = [0.0, 1.0]
beta = 2.0
folds = 2

[experiment]
variants = ["gengm", "gm", "spr", "oracle", "lasso"]
"#;

#[test]
fn simulate_fit_cv_eval_pipeline() {
    let dir = scratch("pipeline");
    let config = dir.join("config.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let sim = dir.join("sim");
    let out = gengm(&["simulate", "--config", s(&config), "--out", s(&sim)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = sim.join("rep_0000");
    let x = read_matrix(&rep.join("x_train.csv")).unwrap();
    assert_eq!((x.rows(), x.cols()), (50, 12));

    let fit_dir = dir.join("fit");
    let out = gengm(&[
        "fit",
        "--config",
        s(&config),
        "--out",
        s(&fit_dir),
        "--x",
        s(&rep.join("x_train.csv")),
        "--y",
        s(&rep.join("y_train.csv")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let yx = read_matrix(&fit_dir.join("omega_yx.csv")).unwrap();
    assert_eq!((yx.rows(), yx.cols()), (2, 12));
    assert!(read_key_values(&fit_dir.join("fit.txt")).iter().any(|(k, _)| k == "objective"));

    let cv_dir = dir.join("cv");
    let out = gengm(&[
        "cv",
        "--config",
        s(&config),
        "--out",
        s(&cv_dir),
        "--x",
        s(&rep.join("x_train.csv")),
        "--y",
        s(&rep.join("y_train.csv")),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(cv_dir.join("cv_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4);

    let eval_dir = dir.join("eval");
    let out = gengm(&["eval", "--config", s(&config), "--out", s(&eval_dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = std::fs::read_to_string(eval_dir.join("replications.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 5);
    for v in ["gengm", "gm", "spr", "oracle", "lasso"] {
        assert!(rows.lines().any(|l| l.split(',').nth(1) == Some(v)), "missing {v}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn theory_rejects_constant_link_row() {
    let dir = scratch("theory");
    let yy = dir.join("omega_yy.csv");
    let yx = dir.join("omega_yx.csv");
    write_matrix(&yy, &DenseMatrix::identity(1), "c").unwrap();
    write_matrix(&yx, &DenseMatrix::from_rows(&[vec![0.5; 5]]).unwrap(), "c").unwrap();
    let out = gengm(&["theory", "--omega-yy", s(&yy), "--omega-yx", s(&yx), "--out", s(&dir.join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Omega_yx L Omega_yx^T"));

    write_matrix(&yx, &DenseMatrix::from_rows(&[vec![0.5, -0.5, 0.0, 0.0, 0.0]]).unwrap(), "c").unwrap();
    let out = gengm(&["theory", "--omega-yy", s(&yy), "--omega-yx", s(&yx), "--out", s(&dir.join("o"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let kv = read_key_values(&dir.join("o").join("theory.txt"));
    assert!(kv.iter().any(|(k, _)| k.contains("gamma")));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_inputs_exit_with_status_two() {
    let dir = scratch("bad");
    let config = dir.join("config.toml");
    std::fs::write(&config, "[scenario]\nflavour = 1\n").unwrap();
    let out = gengm(&["simulate", "--config", s(&config), "--out", s(&dir.join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = gengm(&["fit", "--x", s(&dir.join("missing.csv")), "--y", s(&dir.join("missing.csv"))]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn matrices_round_trip_bit_exactly() {
    let dir = scratch("roundtrip");
    let vals = [0.1, -1.0 / 3.0, f64::MIN_POSITIVE, 1e300, -2.5e-17, std::f64::consts::PI];
    let m = DenseMatrix::new(2, 3, vals.to_vec()).unwrap();
    let path = dir.join("m.csv");
    write_matrix(&path, &m, "x").unwrap();
    let back = read_matrix(&path).unwrap();
    assert_eq!(back.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), vals.map(f64::to_bits).to_vec());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("x1,x2,x3"));
    std::fs::remove_dir_all(&dir).ok();
}
