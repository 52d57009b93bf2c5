use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qfrac::io::{load_field, save_field};
use qfrac::{BoundaryKind, Grid, QField};
use rand::SeedableRng;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn qfrac(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfrac"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("QFRAC_THREADS")
        .output()
        .expect("binary runs")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

#[test]
fn check_constant_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfrac(&["--config", &config("constant.json"), "check", "--strict"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(dir.path().join("check.json"));
    assert_eq!(rep["verdict_bounded"]["status"], "pass");
    assert_eq!(rep["k3"], 4.0);
    let stdout: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout, rep);
    let man = json(dir.path().join("manifest.json"));
    assert_eq!(man["command"], "check");
    assert_eq!(man["exit_code"], 0);
    assert_eq!(man["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(man["outputs"][0], "check.json");
}

#[test]
fn solve_with_zero_operator_divides_by_modulus_squared() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new([9, 9, 9], 0.125, [0.0; 3], BoundaryKind::Dirichlet).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let f = QField::random(&grid, &mut rng).zero_boundary();
    let rhs = dir.path().join("rhs.csv");
    save_field(&f, &rhs).unwrap();
    let args = ["--config", &config("constant.json"), "solve", "--s1", "2", "--axis", "e2", "--zero-operator"];
    let mut args: Vec<&str> = args.to_vec();
    let rhs_s = rhs.display().to_string();
    args.extend(["--rhs", &rhs_s]);
    let out = qfrac(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let u: QField<f64> = load_field(dir.path().join("solution.csv"), BoundaryKind::Dirichlet).unwrap();
    for (a, b) in u.values().iter().zip(f.values()) {
        assert_eq!(*a, *b / 4.0);
    }
}

#[test]
fn solve_with_grid_operator_runs() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new([9, 9, 9], 0.125, [0.0; 3], BoundaryKind::Dirichlet).unwrap();
    let f = QField::from_fn(&grid, |x| qfrac::Quat::new(x[0], 1.0, x[1] * x[2], 0.0)).zero_boundary();
    let rhs = dir.path().join("rhs.csv");
    save_field(&f, &rhs).unwrap();
    let rhs_s = rhs.display().to_string();
    let out = qfrac(&["--config", &config("constant.json"), "solve", "--s1", "1.5", "--rhs", &rhs_s], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(dir.path().join("solve.json"));
    // ||Q^{-1}|| <= 1/t^2 for self-adjoint T.
    assert!(rep["solution_norm"].as_f64().unwrap() <= rep["rhs_norm"].as_f64().unwrap() / 2.25 * (1.0 + 1e-9));
}

#[test]
fn oracle_matrix_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfrac(&["oracle-matrix", "--size", "4", "--alpha", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(dir.path().join("oracle.json"));
    assert!(rep["rel_diff"].as_f64().unwrap() <= 1e-5);
    assert_eq!(rep["n_nodes"], 800);
    assert_eq!(json(dir.path().join("manifest.json"))["config_sha256"], Value::Null);
}

#[test]
fn frac_power_is_bitwise_reproducible() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let args = ["--config", &config("constant.json"), "frac-power", "--nodes", "32", "--seed", "9"];
        let out = qfrac(&args, dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let rd = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
        let man = json(dir.path().join("manifest.json"));
        assert_eq!(man["seed"], 9);
        (rd("frac_power.csv"), rd("frac_power.json"))
    };
    assert_eq!(run(), run());
}

#[test]
fn scan_writes_csv_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let args =
        ["--config", &config("constant.json"), "scan-resolvent", "--points", "4", "--t-min", "0.1", "--t-max", "10"];
    let out = qfrac(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("t,normQinv,normSL,normSR"));
    assert_eq!(json(dir.path().join("scan.json"))["verdict"], "pass");
}

#[test]
fn compat_check_on_robin_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfrac(&["--config", &config("robin-compat.json"), "compat-check", "--strict"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(dir.path().join("compat.json"))["pass"], true);
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let base = std::fs::read_to_string(configs().join("constant.json")).unwrap();

    let bad = write_config(
        d,
        &base.replace("constant:1\", \"constant:1\", \"constant:1", "constant:1\", \"expr:cosine(2)\", \"constant:1"),
    );
    let out = qfrac(&["--config", &bad, "check"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coefficients[1]"));
    assert_eq!(json(d.join("manifest.json"))["exit_code"], 2);

    assert_eq!(qfrac(&["check"], d).status.code(), Some(2));
    assert_eq!(qfrac(&["frobnicate"], d).status.code(), Some(2));

    let steep = write_config(
        d,
        &base.replace(
            "\"constant:1\", \"constant:1\", \"constant:1\"",
            "\"expr:sinusoidal(1.5,0.2,2,3)\", \"expr:affine(1.2,0.1,0,-0.2)\", \"expr:gaussian-decay(1.4,0.3,0.5)\"",
        ),
    );
    assert_eq!(qfrac(&["--config", &steep, "check"], d).status.code(), Some(0));
    assert_eq!(qfrac(&["--config", &steep, "check", "--strict"], d).status.code(), Some(3));

    let grid = Grid::new([9, 9, 9], 0.125, [0.0; 3], BoundaryKind::Dirichlet).unwrap();
    let rhs = d.join("rhs.csv");
    save_field(&QField::constant(&grid, qfrac::Quat::one()), &rhs).unwrap();
    let rhs = rhs.display().to_string();
    let cfg = config("constant.json");
    let out = qfrac(&["--config", &cfg, "solve", "--s1", "0", "--zero-operator", "--rhs", &rhs], d);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn thread_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qfrac"));
        cmd.args(["oracle-matrix", "--size", "2", "--nodes", "64", "--out-dir"]).arg(dir.path());
        if let Some(f) = flag {
            cmd.args(["--threads", f]);
        }
        match env {
            Some(e) => cmd.env("QFRAC_THREADS", e),
            None => cmd.env_remove("QFRAC_THREADS"),
        };
        let out = cmd.output().unwrap();
        (out.status.code(), json(dir.path().join("manifest.json"))["threads"].clone())
    };
    assert_eq!(run(Some("3"), None), (Some(0), Value::from(3)));
    assert_eq!(run(Some("3"), Some("2")), (Some(0), Value::from(2)));
    assert_eq!(run(Some("many"), None).0, Some(2));
}
