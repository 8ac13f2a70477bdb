use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gsolve::{parse_config, RunConfig};
use serde_json::Value;
use tempfile::TempDir;

fn gsolve(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_gsolve"))
        .current_dir(dir)
        .args(["--config", "run.cfg", "--output", "out"])
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn verify_on_defaults_passes_every_check() {
    let dir = TempDir::new().unwrap();
    let o = gsolve(dir.path(), "command = verify\n", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["status"], "success");
    let checks = r["report"]["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    for c in checks {
        assert_eq!(c["pass"], true, "{c}");
        assert!(c["measured"].is_number() && c["threshold"].is_number(), "{c}");
        assert!(c["bound"] == "<=" || c["bound"] == ">=", "{c}");
    }
    for name in ["extremal_value_l1", "gradient_check", "homogeneity_euler", "descent_inequality"] {
        assert!(checks.iter().any(|c| c["name"] == name), "{name}");
    }
}

#[test]
fn p_out_of_range_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = gsolve(dir.path(), "command = nodal\np = 7\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("(4,6)") && err.contains("line 2"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = gsolve(dir.path(), "command = ground\nlamdba = 3\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key `lamdba`"), "{}", stderr(&o));
}

#[test]
fn zero_threads_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = gsolve(dir.path(), "command = verify\n", &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gsolve"))
        .arg("--config")
        .arg(dir.path().join("absent.cfg"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn serialized_config_reparses_identically() {
    let text = "command = doubling\nlambda = 2.5\nradii = [0.5, 3]\nlambda_list = 10, 100\n";
    let c = parse_config(text).unwrap();
    assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    assert_eq!(parse_config(&RunConfig::default().to_text()).unwrap(), RunConfig::default());
}

#[test]
fn nodal_profile_changes_sign() {
    let dir = TempDir::new().unwrap();
    let o = gsolve(dir.path(), "command = nodal\nomega = 1\nlambda = 1\np = 5\n", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/nodal.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,u,h,tail,A0,Atheta"));
    let u: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(u.len(), 4097);
    assert!(u.iter().any(|v| *v > 0.0) && u.iter().any(|v| *v < 0.0));
    let r = report(dir.path());
    assert_eq!(r["report"]["converged"], true);
    assert_eq!(r["profiles"][0], "nodal.csv");
}

#[test]
fn doubling_rows_follow_the_input_order() {
    let dir = TempDir::new().unwrap();
    let o = gsolve(dir.path(), "command = doubling\nlambda_list = [10,100,1000]\n", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    let rows = r["report"]["rows"].as_array().unwrap();
    let lambdas: Vec<f64> = rows.iter().map(|row| row["lambda"].as_f64().unwrap()).collect();
    assert_eq!(lambdas, vec![10.0, 100.0, 1000.0]);
    assert!(rows.iter().all(|row| row["doubled"].is_boolean()));
    assert_eq!(r["profiles"].as_array().unwrap().len(), 6);
}

#[test]
fn starved_solver_is_an_experiment_failure() {
    let dir = TempDir::new().unwrap();
    let o = gsolve(dir.path(), "command = nodal\nmax_iters = 1\npolish_iters = 0\n", &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
    let r = report(dir.path());
    assert_eq!(r["status"], "experiment_failure");
    assert!(!r["failures"].as_array().unwrap().is_empty());
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = TempDir::new().unwrap();
    let o = gsolve(dir.path(), "command = verify\nrng_seed = 3\n", &["--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(report(dir.path())["config"]["opts"]["rng_seed"], 11);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let config = "command = ground\nlambda = 2\n";
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(gsolve(a.path(), config, &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(gsolve(b.path(), config, &["--threads", "4"]).status.code(), Some(0));
    for file in ["report.json", "ground.csv"] {
        let x = fs::read(a.path().join("out").join(file)).unwrap();
        let y = fs::read(b.path().join("out").join(file)).unwrap();
        assert!(x == y, "{file} differs");
    }
}
