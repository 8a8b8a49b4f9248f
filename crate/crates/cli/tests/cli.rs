use std::path::Path;
use std::process::{Command, Output};

fn greenfn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_greenfn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn well_basis_writes_one_file_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = greenfn(&["basis", "--model", "well", "--a", "1", "--n", "16"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let modes = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("mode_"))
        .count();
    assert_eq!(modes, 16);
    let manifest = json(&dir.path().join("basis.json"));
    assert!(manifest["completeness_residual"].as_f64().unwrap() < 1e-12);
    let first = std::fs::read_to_string(dir.path().join("mode_0000.csv")).unwrap();
    assert!(first.starts_with("x,re,im\n"));
}

#[test]
fn narrow_oscillator_grid_is_a_usage_error_naming_the_mode() {
    let dir = tempfile::tempdir().unwrap();
    let o = greenfn(
        &["basis", "--model", "oscillator", "--n", "64", "--grid-half-width", "9", "--grid-points", "401"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("grid too narrow: mode "), "{msg}");
    assert!(!dir.path().join("basis.json").exists());
}

#[test]
fn relativistic_basis_counts_both_branches() {
    let dir = tempfile::tempdir().unwrap();
    let o = greenfn(&["basis", "--model", "relativistic", "--m", "1", "--kmax", "32"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = json(&dir.path().join("basis.json"));
    assert_eq!(manifest["modes"], 2 * (2 * 32 + 1));
    let branches = manifest["branches"].as_array().unwrap();
    let positive = branches.iter().filter(|b| *b == "positive").count();
    assert_eq!(positive, 65);
}

#[test]
fn well_kernel_report_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = greenfn(&["kernel", "--model", "well", "--n", "16"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("initial condition"));
    let report = json(&dir.path().join("report.json"));
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["support", "initial condition", "composition"]);
    assert_eq!(report["tolerance"], 1e-8);
    assert!(dir.path().join("kernel.csv").exists());
}

#[test]
fn second_order_kernel_reports_exact_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = greenfn(&["kernel", "--model", "helmholtz", "--times=-0.1,0,0.01,0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&dir.path().join("report.json"));
    let zero = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "G(0) = 0")
        .unwrap()
        .clone();
    assert_eq!(zero["value"], 0.0);
    assert_eq!(zero["pass"], true);
}

#[test]
fn minus_i_kernel_is_the_consistent_one_times_minus_i() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(greenfn(&["kernel"], &a).status.code(), Some(0));
    let o = greenfn(&["kernel", "--convention", "minus-i"], &b);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&b.join("report.json"));
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["name"] == "ratio to consistent = -i" && c["pass"] == true));

    // Independent check on the exported CSVs.
    let read = |p: &Path| -> Vec<Vec<f64>> {
        std::fs::read_to_string(p.join("kernel.csv"))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect()
    };
    for (x, y) in read(&a).iter().zip(read(&b)) {
        // (re, im) * -i = (im, -re)
        assert_eq!(y[3], x[4]);
        assert_eq!(y[4], -x[3]);
    }
}

#[test]
fn config_file_is_merged_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"model": "well", "a": 2.0, "n": 8}"#).unwrap();
    let out = dir.path().join("out");
    let o = greenfn(&["basis", "--config", cfg.to_str().unwrap(), "--n", "5"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(json(&out.join("basis.json"))["modes"], 5);
    let resolved = json(&out.join("config.json"));
    assert_eq!(resolved["a"], 2.0);
    assert_eq!(resolved["hbar"], 1.0);

    std::fs::write(&cfg, r#"{"model": "well", "a": -1.0}"#).unwrap();
    let o = greenfn(&["basis", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, r#"{"model": "wel"}"#).unwrap();
    let o = greenfn(&["basis", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = greenfn(&["basis", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            for args in [
                &["freq", "--convolution"][..],
                &["propagate"][..],
                &["field", "--steps", "10"][..],
                &["validate", "--only", "2,9"][..],
            ] {
                assert_eq!(greenfn(args, &out).status.code(), Some(0));
            }
            out
        })
        .collect();
    for file in ["response.csv", "convolution.csv", "psi.csv", "field.csv", "point_charge.csv", "validation.json"] {
        let a = std::fs::read(runs[0].join(file)).unwrap();
        let b = std::fs::read(runs[1].join(file)).unwrap();
        assert!(a == b, "{file} differs between identical runs");
    }
}

#[test]
fn propagation_keeps_the_norm() {
    let dir = tempfile::tempdir().unwrap();
    let o = greenfn(&["propagate", "--model", "free", "--p0", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&dir.path().join("report.json"));
    assert!(report["max_norm_drift"].as_f64().unwrap() < 1e-12);
}

#[test]
fn validate_only_distlab_runs_the_lab_alone() {
    let dir = tempfile::tempdir().unwrap();
    let o = greenfn(&["validate", "--only", "distlab"], dir.path());
    let report = json(&dir.path().join("validation.json"));
    let ids: Vec<&str> = report["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["10a", "10b", "10c", "10d"]);
    // The transform and Plemelj bounds are not met by the exact values;
    // the exit code reports it.
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("10b"));
}

#[test]
fn injected_eta_flip_fails_the_pole_audit() {
    let dir = tempfile::tempdir().unwrap();
    let clean = greenfn(&["validate", "--only", "8"], &dir.path().join("clean"));
    assert_eq!(clean.status.code(), Some(0), "{}", stderr(&clean));
    let o = greenfn(&["validate", "--only", "8", "--inject-eta-flip"], &dir.path().join("flip"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("failed criteria: 8"));
    let report = json(&dir.path().join("flip/validation.json"));
    assert_eq!(report["pass"], false);
}

#[test]
fn distcheck_writes_curves_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = greenfn(&["distcheck", "--eta", "0.01", "--flavors", "exponential,linear"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("curves_linear.csv").exists());
    assert!(!dir.path().join("curves_arctan.csv").exists());
    let report = json(&dir.path().join("distcheck.json"));
    assert_eq!(report["eta"], 0.01);
    assert_eq!(report["flavors"].as_array().unwrap().len(), 2);
}
