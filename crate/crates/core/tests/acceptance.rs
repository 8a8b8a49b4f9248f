//! One pass/fail line per acceptance criterion (`--nocapture` shows them).
//!
//! Two criteria cannot be met by the exact quantities they measure; they are
//! run unchanged, print FAIL, and are pinned here to their analytic values so
//! that any other kind of failure (or an unexpected pass) is caught.

use greenfn::validation::{run_suite, CriterionResult, ValidationConfig};

fn check<'a>(c: &'a CriterionResult, name: &str) -> &'a greenfn::validation::Check {
    c.checks.iter().find(|k| k.name == name).expect("check present")
}

/// 10b: for the arctan step, `|F[theta_eta - H](k)| = (1 - e^{-eta|k|})/|k|`
/// undamped, which tends to `eta = 1e-3` itself as `k -> 0`; the damping
/// factor on the slowly decaying left tail adds about 0.5%.
fn arctan_transform_gap(c: &CriterionResult) {
    let a = check(c, "arctan");
    assert!(!a.pass);
    assert!((1.0e-3..1.01e-3).contains(&a.value), "{}", a.value);
    assert!(check(c, "exponential").pass && check(c, "linear").pass);
}

/// 10c: `Im int e^{-x^2}/(x + i eta) dx = -pi e^{eta^2} erfc(eta)`, which
/// sits `2 sqrt(pi) eta = 3.5e-3` above `-pi` at `eta = 1e-3`.
fn plemelj_gap(c: &CriterionResult) {
    let eta: f64 = 1e-3;
    let gap = std::f64::consts::PI * (1.0 - (eta * eta).exp() * statrs::function::erf::erfc(eta));
    let k = check(c, "Im + pi");
    assert!(!k.pass);
    assert!((k.value - gap).abs() < 1e-8, "{} vs {gap}", k.value);
    assert!(check(c, "P part").pass);
}

#[test]
fn acceptance() {
    let report = run_suite(&ValidationConfig::default());
    for c in &report.criteria {
        println!("{}", c.summary());
    }
    let mut unexpected = Vec::new();
    for c in &report.criteria {
        match c.id.as_str() {
            "10b" => arctan_transform_gap(c),
            "10c" => plemelj_gap(c),
            _ if !c.pass => unexpected.push(c.id.clone()),
            _ => {}
        }
    }
    println!(
        "acceptance: {} criteria, failed: {:?}",
        report.criteria.len(),
        report.failed()
    );
    assert_eq!(report.criteria.len(), 14);
    assert!(unexpected.is_empty(), "failed criteria: {unexpected:?}");
}
