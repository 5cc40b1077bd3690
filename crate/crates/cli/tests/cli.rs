use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qmedian(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmedian"))
        .args(args)
        .current_dir(dir)
        .env_remove("QMEDIAN_SEED")
        .output()
        .unwrap()
}

fn json(output: &Output) -> Value {
    assert_eq!(output.status.code(), Some(0), "{}", String::from_utf8_lossy(&output.stderr));
    serde_json::from_slice(&output.stdout).unwrap()
}

fn write_ramp(dir: &Path) -> PathBuf {
    let path = dir.join("ramp.txt");
    let text: String = (0..32).map(|v| format!("{v}\n")).collect();
    std::fs::write(&path, text).unwrap();
    path
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(name);
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(validator: &jsonschema::Validator, value: &Value) {
    let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?} in {value}");
}

#[test]
fn gen_reports_achieved_eps() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmedian(dir.path(), &["gen", "--n", "5", "--eps", "0.125", "--mu", "0.5", "--seed", "1", "--out", "d.txt"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "achieved_eps=0.125");
    let text = std::fs::read_to_string(dir.path().join("d.txt")).unwrap();
    let values: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 32);
    assert_eq!(values.iter().filter(|&&v| v < 0.5).count(), 18);
}

#[test]
fn gen_rejects_bad_arguments() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["gen", "--n", "0", "--eps", "0.1", "--mu", "0", "--out", "x.txt"][..],
        &["gen", "--n", "5", "--eps", "2", "--mu", "0", "--out", "x.txt"][..],
        &["gen", "--n", "5", "--mu", "0", "--out", "x.txt"][..],
    ] {
        assert_eq!(qmedian(dir.path(), args).status.code(), Some(1), "{args:?}");
    }
    assert!(!dir.path().join("x.txt").exists());
}

#[test]
fn estimate_examples() {
    let dir = tempfile::tempdir().unwrap();
    write_ramp(dir.path());
    let validator = schema("estimate.schema.json");

    let v = json(&qmedian(dir.path(), &["estimate", "--data", "ramp.txt", "--mu", "17"]));
    assert_valid(&validator, &v);
    assert!((v["eps_hat"].as_f64().unwrap() - 0.0625).abs() < 1e-12);
    assert_eq!(v["sign"], 1);
    assert_eq!(v["verdict"], "in_range");
    assert_eq!(v["n"], 5);

    let v = json(&qmedian(dir.path(), &["estimate", "--data", "ramp.txt", "--mu", "16"]));
    assert_valid(&validator, &v);
    assert_eq!(v["eps_hat"].as_f64(), Some(0.0));
    assert_eq!(v["sign"], "unknown");

    let v = json(&qmedian(dir.path(), &["estimate", "--data", "ramp.txt", "--mu", "14"]));
    assert_valid(&validator, &v);
    assert_eq!(v["sign"], -1);
    assert!((v["eps_hat"].as_f64().unwrap() + 0.125).abs() < 1e-12);

    let v = json(&qmedian(dir.path(), &["estimate", "--data", "ramp.txt", "--mu", "30"]));
    assert_valid(&validator, &v);
    assert_eq!(v["verdict"], "eps_exceeds_eps0");

    let v = json(&qmedian(
        dir.path(),
        &["estimate", "--data", "ramp.txt", "--mu", "17", "--mode", "sample", "--alpha", "400", "--beta", "2", "--seed", "5"],
    ));
    assert_valid(&validator, &v);
    assert_eq!(v["mode"], "sample");
    assert_eq!(v["alpha"], 400);
    assert_eq!(v["beta"], 2);
}

#[test]
fn estimate_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qmedian(dir.path(), &["estimate", "--data", "missing.txt", "--mu", "1"]).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.txt"), "1\nx\n").unwrap();
    assert_eq!(qmedian(dir.path(), &["estimate", "--data", "bad.txt", "--mu", "1"]).status.code(), Some(2));
    std::fs::write(dir.path().join("three.txt"), "1\n2\n3\n").unwrap();
    assert_eq!(qmedian(dir.path(), &["estimate", "--data", "three.txt", "--mu", "1"]).status.code(), Some(2));
    write_ramp(dir.path());
    let bad_eps0 = qmedian(dir.path(), &["estimate", "--data", "ramp.txt", "--mu", "1", "--eps0", "0.5"]);
    assert_eq!(bad_eps0.status.code(), Some(1));
    let bad_mode = qmedian(dir.path(), &["estimate", "--data", "ramp.txt", "--mu", "1", "--mode", "fast"]);
    assert_eq!(bad_mode.status.code(), Some(1));
}

#[test]
fn estimate_prints_its_assumptions() {
    let dir = tempfile::tempdir().unwrap();
    write_ramp(dir.path());
    let out = qmedian(dir.path(), &["estimate", "--data", "ramp.txt", "--mu", "17"]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("smaller than 0.1"));
    assert!(stderr.contains("count as above"));
}

#[test]
fn seed_from_environment_and_argv_precedence() {
    let dir = tempfile::tempdir().unwrap();
    write_ramp(dir.path());
    let args = ["estimate", "--data", "ramp.txt", "--mu", "17", "--mode", "sample"];
    let run = |env_seed: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qmedian"));
        cmd.args(args).args(extra).current_dir(dir.path()).env_remove("QMEDIAN_SEED");
        if let Some(s) = env_seed {
            cmd.env("QMEDIAN_SEED", s);
        }
        json(&cmd.output().unwrap())
    };
    assert_eq!(run(None, &[])["seed"], 0);
    assert_eq!(run(Some("42"), &[])["seed"], 42);
    assert_eq!(run(Some("42"), &["--seed", "7"])["seed"], 7);
    assert_eq!(run(Some("42"), &[]), run(None, &["--seed", "42"]));
}

#[test]
fn estimate_writes_atomically_to_out() {
    let dir = tempfile::tempdir().unwrap();
    write_ramp(dir.path());
    let out = qmedian(dir.path(), &["estimate", "--data", "ramp.txt", "--mu", "17", "--out", "e.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.json")).unwrap()).unwrap();
    assert_valid(&schema("estimate.schema.json"), &v);
    let entries = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(entries, 2);
    let missing_dir = qmedian(dir.path(), &["estimate", "--data", "ramp.txt", "--mu", "17", "--out", "no/such/e.json"]);
    assert_eq!(missing_dir.status.code(), Some(2));
}

#[test]
fn median_examples() {
    let dir = tempfile::tempdir().unwrap();
    write_ramp(dir.path());
    let validator = schema("median.schema.json");
    let v = json(&qmedian(dir.path(), &["median", "--data", "ramp.txt", "--min", "0", "--max", "31", "--resolution", "1"]));
    assert_valid(&validator, &v);
    let mu = v["mu_hat"].as_f64().unwrap();
    assert!((15.5..=16.5).contains(&mu), "{mu}");
    assert!([16, 17].contains(&v["rank_below"].as_u64().unwrap()));
    assert_eq!(v["steps"], 5);

    std::fs::write(dir.path().join("const.txt"), "7.25\n".repeat(16)).unwrap();
    let v = json(&qmedian(dir.path(), &["median", "--data", "const.txt", "--min", "0", "--max", "10", "--resolution", "0.01"]));
    assert_valid(&validator, &v);
    assert!((v["mu_hat"].as_f64().unwrap() - 7.25).abs() <= 0.01);

    let bad = qmedian(dir.path(), &["median", "--data", "ramp.txt", "--min", "5", "--max", "5", "--resolution", "1"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn sweep_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmedian(dir.path(), &["sweep", "--eps", "0.001", "--beta-max", "50", "--csv", "s.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["r", "k_re", "k_im", "k_abs", "approx_2sqrt2", "p_below_analytic", "p_below_exact", "abs_err"]);
    assert_eq!(rows.len(), 52);
    assert_eq!(rows[1][3].parse::<f64>().unwrap(), 0.001);
    let approx: f64 = rows[51][4].parse().unwrap();
    assert!((approx - 0.1414213562373095).abs() < 1e-15);
    assert_eq!(rows[51][6], "");
    assert_eq!(rows[51][7], "");
}

#[test]
fn sweep_against_simulator() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmedian(dir.path(), &["sweep", "--eps", "0.125", "--beta-max", "100", "--n", "12", "--csv", "s.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let worst = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(7).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");

    let off_grid = qmedian(dir.path(), &["sweep", "--eps", "0.1", "--beta-max", "5", "--n", "12", "--csv", "t.csv"]);
    assert_eq!(off_grid.status.code(), Some(1));
    let too_wide = qmedian(dir.path(), &["sweep", "--eps", "0.5", "--beta-max", "5", "--n", "40", "--csv", "t.csv"]);
    assert_eq!(too_wide.status.code(), Some(1));
    let unwritable = qmedian(dir.path(), &["sweep", "--eps", "0.5", "--beta-max", "5", "--csv", "no/dir/t.csv"]);
    assert_eq!(unwritable.status.code(), Some(2));
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = qmedian(dir.path(), &["check", "--n", "4", "--tol", "1e-10"]);
    assert_eq!(ok.status.code(), Some(0));
    let report = String::from_utf8(ok.stdout).unwrap();
    assert!(report.lines().count() >= 6);
    assert!(report.lines().all(|l| l.starts_with("ok")));
    assert_eq!(qmedian(dir.path(), &["check", "--n", "30"]).status.code(), Some(1));
    assert_eq!(qmedian(dir.path(), &["check", "--n", "4", "--tol", "0"]).status.code(), Some(3));
}

#[test]
fn baseline_examples() {
    let dir = tempfile::tempdir().unwrap();
    let validator = schema("baseline.schema.json");
    std::fs::write(dir.path().join("low.txt"), "0\n".repeat(32)).unwrap();
    let v = json(&qmedian(dir.path(), &["baseline", "--data", "low.txt", "--mu", "1", "--samples", "100", "--seed", "3"]));
    assert_valid(&validator, &v);
    assert_eq!(v["eps_hat"].as_f64(), Some(1.0));
    assert_eq!(v["m"], 100);

    write_ramp(dir.path());
    let v = json(&qmedian(dir.path(), &["baseline", "--data", "ramp.txt", "--mu", "16", "--samples", "100", "--seed", "3"]));
    assert_valid(&validator, &v);
    assert!(v["eps_hat"].as_f64().unwrap().abs() <= 2.0 * 5.0 / 10.0);

    let zero = qmedian(dir.path(), &["baseline", "--data", "ramp.txt", "--mu", "16", "--samples", "0"]);
    assert_eq!(zero.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qmedian(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(qmedian(dir.path(), &["--version"]).status.code(), Some(0));
    assert_eq!(qmedian(dir.path(), &[]).status.code(), Some(1));
}
