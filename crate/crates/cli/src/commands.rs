//! One function per subcommand. Each fills in its defaults, writes the
//! resolved config next to its outputs and returns whether its checks held.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use num_complex::Complex;
use serde_json::json;

use greenfn::distlab::{
    derivative_identity_residual, moment_report, regularized_ft, sokhotski_plemelj, step_value,
    delta_value, Flavor, FtOptions, RegularizedFamily,
};
use greenfn::firstorder::{
    auxiliary_kernel, composition_residual, initial_condition_residual, propagate,
    step_factor_kernel, Convention, Direction, Kernel, TimeWindow,
};
use greenfn::freqdomain::{
    convolution_response, feynman_combination, momentum_response_relativistic,
    relative_deviation, response_from_density, spectral_density, ConvolutionOptions,
    ResponseDirection,
};
use greenfn::grid::{Grid1D, SampledFunction};
use greenfn::io;
use greenfn::secondorder::{
    em_potential_from_source, field_from_source, point_charge_potential, wave_auxiliary_kernel,
    wave_initial_derivative_residual, wave_initial_value, PointSource, SourceField,
};
use greenfn::spectra::{
    build_free_basis, build_helmholtz_basis, build_oscillator_basis, build_oscillator_basis_on,
    build_relativistic_branches, build_well_basis, Branch, Model, PhysicalConstants,
};
use greenfn::validation::{run_suite, Check, ValidationConfig};
use greenfn::spectra::EigenSystem;

use crate::config::{ConventionArg, DirectionArg, FlavorArg, KindArg, ModelArg, RunConfig};

/// Result of a command that ran to completion.
pub enum Outcome {
    Pass,
    Fail(String),
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn constants(cfg: &RunConfig) -> PhysicalConstants<f64> {
    PhysicalConstants {
        hbar: cfg.hbar.unwrap_or(1.0),
        c: cfg.c.unwrap_or(1.0),
        mass: cfg.m.unwrap_or(1.0),
        omega: cfg.omega.unwrap_or(1.0),
        epsilon0: cfg.eps0.unwrap_or(1.0),
    }
}

/// Fills model parameters that the user left unset.
fn model_defaults(cfg: &mut RunConfig, model: ModelArg) {
    let model = *cfg.model.get_or_insert(model);
    cfg.hbar.get_or_insert(1.0);
    cfg.c.get_or_insert(1.0);
    cfg.m.get_or_insert(1.0);
    cfg.omega.get_or_insert(1.0);
    cfg.eps0.get_or_insert(1.0);
    match model {
        ModelArg::Well => {
            cfg.a.get_or_insert(1.0);
            cfg.n.get_or_insert(16);
        }
        ModelArg::Oscillator => {
            cfg.n.get_or_insert(16);
        }
        ModelArg::Free | ModelArg::Relativistic => {
            cfg.length.get_or_insert(20.0);
            cfg.kmax.get_or_insert(16);
        }
        ModelArg::Helmholtz => {
            cfg.length.get_or_insert(8.0);
            cfg.kmax.get_or_insert(16);
        }
    }
}

fn build_basis(cfg: &RunConfig) -> Result<EigenSystem<f64>> {
    let k = constants(cfg);
    let model = cfg.model.context("no model selected")?;
    if cfg.grid_points.is_some() && model != ModelArg::Oscillator {
        bail!("grid_half_width/grid_points only apply to the oscillator");
    }
    let basis = match model {
        ModelArg::Well => build_well_basis(cfg.a.unwrap_or(1.0), cfg.n.unwrap_or(16), k)?,
        ModelArg::Oscillator => {
            let n = cfg.n.unwrap_or(16);
            match (cfg.grid_half_width, cfg.grid_points) {
                (Some(w), Some(p)) => {
                    build_oscillator_basis_on(Arc::new(Grid1D::uniform(-w, w, p)?), k, n)?
                }
                _ => build_oscillator_basis(k, n)?,
            }
        }
        ModelArg::Free => build_free_basis(cfg.length.unwrap_or(20.0), cfg.kmax.unwrap_or(16), k)?,
        ModelArg::Relativistic => {
            build_relativistic_branches(cfg.length.unwrap_or(20.0), cfg.kmax.unwrap_or(16), k)?
        }
        ModelArg::Helmholtz => {
            build_helmholtz_basis(cfg.length.unwrap_or(8.0), cfg.kmax.unwrap_or(16), k)?
        }
    };
    Ok(basis)
}

fn grid_middle(basis: &EigenSystem<f64>) -> f64 {
    let pts = basis.grid().points();
    0.5 * (pts[0] + pts[pts.len() - 1])
}

fn prepare(cfg: &RunConfig) -> Result<std::path::PathBuf> {
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    io::write_json(&out.join("config.json"), cfg)?;
    Ok(out)
}

fn outcome(checks: &[Check], what: &str) -> Outcome {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Fail(format!("{what}: failed {}", failed.join(", ")))
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!(
            "  {} {} = {:.3e} (tolerance {:.1e})",
            if c.pass { "ok  " } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
}

pub fn basis(mut cfg: RunConfig) -> Result<Outcome> {
    model_defaults(&mut cfg, ModelArg::Well);
    let basis = build_basis(&cfg)?;
    let out = prepare(&cfg)?;
    let manifest = io::write_basis(&out, &basis)?;
    println!(
        "{} basis: {} modes on {} points, completeness {:.3e}, orthonormality {:.3e}",
        manifest.model,
        manifest.modes,
        manifest.grid_points,
        manifest.completeness_residual,
        manifest.orthonormality_residual
    );
    println!("wrote {}", out.display());
    Ok(Outcome::Pass)
}

/// Entries that should be exact zeros but are not.
fn support_violations(kernel: &Kernel<f64>, direction: Option<Direction>) -> usize {
    let Some(direction) = direction else { return 0 };
    kernel
        .times()
        .iter()
        .zip(kernel.blocks())
        .filter(|(&t, _)| match direction {
            Direction::Retarded => t < 0.0,
            Direction::Advanced => t > 0.0,
        })
        .map(|(_, b)| b.data().iter().filter(|v| v.re != 0.0 || v.im != 0.0).count())
        .sum()
}

/// Initial-condition and composition residuals of a first-order kernel.
fn forward_laws(
    kernel: &Kernel<f64>,
    positive: &[f64],
    tolerance: f64,
    prefix: &str,
) -> Result<Vec<Check>> {
    let label = |s: &str| if prefix.is_empty() { s.to_string() } else { format!("{prefix} {s}") };
    let mut checks = Vec::new();
    if positive.first() == Some(&0.0) {
        let r = initial_condition_residual(kernel)?;
        checks.push(Check::below(label("initial condition"), r, tolerance));
    }
    let mut worst: Option<f64> = None;
    for (i, &t1) in positive.iter().enumerate() {
        for &t2 in &positive[i..] {
            if t1 + t2 > 0.0 && kernel.block_at(t1 + t2).is_ok() {
                let r = composition_residual(kernel, t1, t2)?;
                worst = Some(worst.map_or(r, |w| w.max(r)));
            }
        }
    }
    if let Some(w) = worst {
        checks.push(Check::below(label("composition"), w, tolerance));
    }
    Ok(checks)
}

pub fn kernel(mut cfg: RunConfig) -> Result<Outcome> {
    model_defaults(&mut cfg, ModelArg::Well);
    cfg.times.get_or_insert_with(|| vec![-0.1, 0.0, 0.05, 0.1, 0.15]);
    let kind = *cfg.kind.get_or_insert(KindArg::Retarded);
    let tolerance = *cfg.tolerance.get_or_insert(1e-8);
    let second_order = cfg.model == Some(ModelArg::Helmholtz);
    if second_order && cfg.convention == Some(ConventionArg::MinusI) {
        bail!("second-order kernels have no -i convention");
    }
    let convention: Convention = (*cfg.convention.get_or_insert(ConventionArg::Consistent)).into();
    let basis = Arc::new(build_basis(&cfg)?);
    let window = TimeWindow::new(cfg.times.clone().unwrap_or_default(), false)?;
    let direction = match kind {
        KindArg::Auxiliary => None,
        KindArg::Retarded => Some(Direction::Retarded),
        KindArg::Advanced => Some(Direction::Advanced),
    };
    let aux = if second_order {
        wave_auxiliary_kernel(&basis, &window)?
    } else {
        auxiliary_kernel(&basis, &window, convention)?
    };
    let kernel = match direction {
        Some(d) => step_factor_kernel(&aux, d)?,
        None => aux.clone(),
    };

    let mut checks = vec![Check::exact("support", support_violations(&kernel, direction))];
    let positive: Vec<f64> = window.samples().iter().copied().filter(|&t| t >= 0.0).collect();
    if second_order {
        if window.index_of(0.0).is_some() {
            let g0 = wave_initial_value(&aux)?;
            let nonzero = aux.block_at(0.0)?.data().iter().filter(|v| v.norm() != 0.0).count();
            println!("  G(0) max |entry| = {g0:e}");
            checks.push(Check::exact("G(0) = 0", nonzero));
            if let Some(&dt) = positive.iter().find(|&&t| t > 0.0) {
                let r = wave_initial_derivative_residual(&aux, dt)?;
                println!("  one-sided dG/dt(0) residual at dt = {dt:e}: {r:.3e}");
            }
        }
    } else {
        if basis.model() == Model::Relativistic {
            // Both branches together give K(0+) = 2 delta; each branch alone
            // is a complete set and obeys the laws.
            for branch in [Branch::Positive, Branch::Negative] {
                let half = Arc::new(basis.branch_only(branch)?);
                let aux = auxiliary_kernel(&half, &window, convention)?;
                let audited = match direction {
                    Some(Direction::Retarded) => step_factor_kernel(&aux, Direction::Retarded)?,
                    _ => aux,
                };
                let name = match branch {
                    Branch::Positive => "positive branch",
                    Branch::Negative => "negative branch",
                };
                checks.extend(forward_laws(&audited, &positive, tolerance, name)?);
            }
        } else {
            // The advanced kernel does not satisfy the forward laws; audit
            // the auxiliary one in its place.
            let audited = if kind == KindArg::Advanced { &aux } else { &kernel };
            checks.extend(forward_laws(audited, &positive, tolerance, "")?);
        }
        if convention == Convention::MinusI {
            let reference = auxiliary_kernel(&basis, &window, Convention::Consistent)?;
            let reference = match direction {
                Some(d) => step_factor_kernel(&reference, d)?,
                None => reference,
            };
            let minus_i = Complex::new(0.0, -1.0);
            let mismatches = kernel
                .blocks()
                .iter()
                .zip(reference.blocks())
                .map(|(a, b)| {
                    a.data()
                        .iter()
                        .zip(b.data())
                        .filter(|(x, y)| **x != **y * minus_i)
                        .count()
                })
                .sum();
            checks.push(Check::exact("ratio to consistent = -i", mismatches));
        }
    }

    let out = prepare(&cfg)?;
    io::write_kernel(&out, &kernel)?;
    let report = json!({
        "model": basis.model().name(),
        "kind": kernel.kind().name(),
        "convention": kernel.convention().name(),
        "tolerance": tolerance,
        "completeness_residual": basis.completeness_residual(),
        "checks": checks,
    });
    io::write_json(&out.join("report.json"), &report)?;
    println!(
        "{} {} kernel ({}), {} times",
        basis.model().name(),
        kernel.kind().name(),
        kernel.convention().name(),
        kernel.times().len()
    );
    print_checks(&checks);
    Ok(outcome(&checks, "kernel"))
}

pub fn propagate_cmd(mut cfg: RunConfig) -> Result<Outcome> {
    if matches!(cfg.model, None | Some(ModelArg::Well)) {
        cfg.n.get_or_insert(64);
    }
    model_defaults(&mut cfg, ModelArg::Well);
    if cfg.model == Some(ModelArg::Helmholtz) {
        bail!("propagate needs a first-order model");
    }
    let convention: Convention = (*cfg.convention.get_or_insert(ConventionArg::Consistent)).into();
    cfg.times.get_or_insert_with(|| linspace(0.0, 0.02, 5));
    let basis = Arc::new(build_basis(&cfg)?);
    let pts = basis.grid().points();
    let x0 = *cfg.x0.get_or_insert(grid_middle(&basis));
    let sigma = *cfg.sigma.get_or_insert((pts[pts.len() - 1] - pts[0]) / 20.0);
    let p0 = *cfg.p0.get_or_insert(0.0);
    let times = cfg.times.clone().unwrap_or_default();
    if times.iter().any(|&t| t < 0.0) {
        bail!("propagation times must be non-negative");
    }
    let hbar = basis.constants().hbar;
    let psi0 = SampledFunction::from_fn(basis.grid().clone(), |x: f64| {
        let d = (x - x0) / sigma;
        Complex::from_polar((-0.5 * d * d).exp(), p0 * x / hbar)
    })?;
    let zero = Complex::new(0.0, 0.0);
    let psi0 = psi0.combine(Complex::new(1.0 / psi0.norm(), 0.0), &psi0, zero)?;
    let window = TimeWindow::new(times.clone(), false)?;
    let ret = step_factor_kernel(&auxiliary_kernel(&basis, &window, convention)?, Direction::Retarded)?;
    let mut values = Vec::with_capacity(window.samples().len());
    let mut norms = Vec::with_capacity(values.capacity());
    for &t in window.samples() {
        let psi = propagate(&ret, &psi0, t)?;
        norms.push(psi.norm());
        values.push(psi.values().to_vec());
    }
    let drift = norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
    let field = greenfn::secondorder::SpaceTimeField {
        grid: basis.grid().clone(),
        times: window.samples().to_vec(),
        values,
    };
    let out = prepare(&cfg)?;
    io::write_field(&out.join("psi.csv"), &field)?;
    io::write_json(
        &out.join("report.json"),
        &json!({
            "model": basis.model().name(),
            "convention": convention.name(),
            "x0": x0, "sigma": sigma, "p0": p0,
            "times": field.times,
            "norms": norms,
            "max_norm_drift": drift,
        }),
    )?;
    println!(
        "propagated {} times on {} points, max norm drift {drift:.3e}",
        field.times.len(),
        basis.grid().len()
    );
    Ok(Outcome::Pass)
}

pub fn field(mut cfg: RunConfig) -> Result<Outcome> {
    model_defaults(&mut cfg, ModelArg::Helmholtz);
    if cfg.model != Some(ModelArg::Helmholtz) {
        bail!("field needs the helmholtz model");
    }
    let t_end = *cfg.t_end.get_or_insert(2.0);
    let steps = *cfg.steps.get_or_insert(40);
    let r = *cfg.r.get_or_insert(1.5);
    let q = *cfg.q.get_or_insert(2.5);
    let width = *cfg.tolerance.get_or_insert(1e-3);
    let basis = Arc::new(build_basis(&cfg)?);
    let pts = basis.grid().points();
    let x0 = *cfg.x0.get_or_insert(grid_middle(&basis));
    let sigma = *cfg.sigma.get_or_insert((pts[pts.len() - 1] - pts[0]) / 32.0);
    let k = *basis.constants();

    // A Gaussian source switched on at t = 0.
    let times = linspace(0.0, t_end, steps + 1);
    let source = SourceField::from_fn(basis.grid().clone(), times.clone(), |x: f64, _t: f64| {
        let d = (x - x0) / sigma;
        Complex::new((-0.5 * d * d).exp(), 0.0)
    })?;
    let window = TimeWindow::new(times.clone(), false)?;
    let ret = step_factor_kernel(&wave_auxiliary_kernel(&basis, &window)?, Direction::Retarded)?;
    let psi = field_from_source(&ret, &source)?;
    let nonzero_at_start = psi.values[0].iter().filter(|v| v.norm() != 0.0).count();

    // Point charge appearing at the origin, seen at distance r.
    let charge = PointSource::emerging_charge(q);
    let mut rows = Vec::with_capacity(times.len());
    let mut early = 0usize;
    let mut late = 0.0f64;
    for &t in &times {
        let conv = em_potential_from_source(&charge, r, t, k.c, k.epsilon0, width)?;
        let exact = point_charge_potential(q, k.epsilon0, r, t, k.c)?;
        if t < r / k.c - width && conv != 0.0 {
            early += 1;
        }
        if t > r / k.c + width {
            late = late.max((conv - exact).abs() / exact.abs());
        }
        rows.push(vec![t, conv, exact]);
    }
    let checks = vec![
        Check::exact("source field zero at t = 0", nonzero_at_start),
        Check::exact("potential before r/c", early),
        Check::below("potential after r/c", late, 1e-10),
    ];
    let out = prepare(&cfg)?;
    io::write_field(&out.join("field.csv"), &psi)?;
    io::write_table(&out.join("point_charge.csv"), &["t", "convolved", "closed_form"], rows)?;
    io::write_json(
        &out.join("report.json"),
        &json!({
            "model": basis.model().name(),
            "x0": x0, "sigma": sigma, "t_end": t_end, "steps": steps,
            "r": r, "q": q, "pulse_width": width,
            "checks": checks,
        }),
    )?;
    println!("field on {} points x {} times", pts.len(), times.len());
    print_checks(&checks);
    Ok(outcome(&checks, "field"))
}

pub fn freq(mut cfg: RunConfig) -> Result<Outcome> {
    model_defaults(&mut cfg, ModelArg::Well);
    let eta = *cfg.eta.get_or_insert(0.05);
    let direction = *cfg.direction.get_or_insert(DirectionArg::Retarded);
    let with_convolution = *cfg.convolution.get_or_insert(false);
    let basis = build_basis(&cfg)?;
    let model = basis.model();
    let k_const = *basis.constants();

    let momentum = model == Model::Relativistic;
    if direction == DirectionArg::Feynman && !momentum {
        bail!("the feynman combination is built for the relativistic model");
    }
    let density = if momentum {
        cfg.k.get_or_insert(1.0);
        None
    } else {
        let (x, xp) = if model == Model::Well {
            let a = cfg.a.unwrap_or(1.0);
            (0.31 * a, 0.77 * a)
        } else {
            let m = grid_middle(&basis);
            (m, m)
        };
        let x = *cfg.x.get_or_insert(x);
        let xp = *cfg.x_prime.get_or_insert(xp);
        Some(spectral_density(&basis, x, xp)?)
    };
    let wmax = match &density {
        Some(d) => d.max_abs_frequency(),
        None => greenfn::freqdomain::relativistic_frequency(cfg.k.unwrap_or(1.0), &k_const)?,
    };
    let lo = *cfg.omega_min.get_or_insert(-1.2 * wmax - 10.0 * eta);
    let hi = *cfg.omega_max.get_or_insert(1.2 * wmax + 10.0 * eta);
    let points = *cfg.omega_points.get_or_insert(2001);
    let omega = linspace(lo, hi, points);

    let dir: ResponseDirection = direction.into();
    let response = match (&density, direction) {
        (Some(d), _) => response_from_density(d, &omega, eta, dir)?,
        (None, DirectionArg::Feynman) => feynman_combination(cfg.k.unwrap_or(1.0), &k_const, &omega, eta)?,
        (None, _) => momentum_response_relativistic(cfg.k.unwrap_or(1.0), &k_const, &omega, eta, dir)?,
    };
    let census = response.pole_census();
    let mut checks = vec![Check::exact("pole half-plane law", usize::from(!census.law_holds))];

    let out = prepare(&cfg)?;
    io::write_response(&out.join("response.csv"), &response)?;
    let mut convolution_deviation = None;
    if with_convolution {
        let Some(d) = &density else {
            bail!("convolution needs a position density");
        };
        let conv = convolution_response(d, &omega, eta, dir, ConvolutionOptions::default())?;
        let (_, sup) = relative_deviation(&conv.values, &response.values);
        checks.push(Check::below("convolution vs line sum", sup, 1e-3));
        convolution_deviation = Some(sup);
        io::write_response(&out.join("convolution.csv"), &conv)?;
    }
    io::write_json(
        &out.join("report.json"),
        &json!({
            "model": model.name(),
            "eta": eta,
            "direction": dir.name(),
            "density": density,
            "poles": response.poles,
            "census": census,
            "convolution_deviation": convolution_deviation,
            "checks": checks,
        }),
    )?;
    println!(
        "{} response, eta = {eta:e}: {} poles below, {} above",
        dir.name(),
        census.below,
        census.above
    );
    print_checks(&checks);
    Ok(outcome(&checks, "freq"))
}

pub fn distcheck(mut cfg: RunConfig) -> Result<Outcome> {
    let eta = *cfg.eta.get_or_insert(1e-3);
    let flavors: Vec<Flavor> = cfg
        .flavors
        .get_or_insert_with(|| vec![FlavorArg::Arctan, FlavorArg::Exponential, FlavorArg::Linear])
        .iter()
        .map(|&f| f.into())
        .collect();
    let out = prepare(&cfg)?;

    let xs = linspace(-20.0 * eta, 20.0 * eta, 1601);
    let mut ks: Vec<f64> = linspace(-1.0, 1.0, 41).into_iter().map(|e| 10f64.powf(e)).collect();
    ks.extend(ks.clone().into_iter().map(|k| -k));
    let mut records = Vec::new();
    for fl in flavors {
        let rows = xs
            .iter()
            .map(|&x| vec![x, step_value(fl, eta, x), delta_value(fl, eta, x)]);
        io::write_table(&out.join(format!("curves_{}.csv", fl.name())), &["x", "step", "delta"], rows)?;
        let deriv = derivative_identity_residual(fl, eta, &xs)?;
        let ft = regularized_ft(&RegularizedFamily::step(fl, eta)?, &ks, &FtOptions::default())?;
        let moments = moment_report(&RegularizedFamily::delta(fl, eta)?, 2)?;
        println!(
            "{}: derivative {:.3e}, transform deviation {:.3e} (relative {:.3e}), mass {:.12}",
            fl.name(),
            deriv.analytic,
            ft.max_deviation,
            ft.max_relative_deviation,
            moments[0].value
        );
        records.push(json!({
            "flavor": fl.name(),
            "derivative": deriv,
            "transform": {
                "max_deviation": ft.max_deviation,
                "max_relative_deviation": ft.max_relative_deviation,
                "boundary_term": ft.boundary_term,
                "damping": ft.damping,
                "x_left": ft.x_left,
                "x_right": ft.x_right,
            },
            "moments": moments,
        }));
    }

    // Sokhotski-Plemelj on a Gaussian, sampled finely enough for this eta.
    let h = eta / 2.5;
    let n = (16.0 / h).round() as usize + 1;
    let grid = Arc::new(Grid1D::uniform(-8.0, 8.0, n)?);
    let f = SampledFunction::from_real_fn(grid, |x: f64| (-x * x).exp())?;
    let pv = sokhotski_plemelj(&f, eta)?;
    println!(
        "gaussian: full {:.6e}{:+.6e}i, principal {:.3e}, residual {:.3e}",
        pv.full.re, pv.full.im, pv.principal.norm(), pv.residual
    );
    io::write_json(
        &out.join("distcheck.json"),
        &json!({ "eta": eta, "ks": ks, "flavors": records, "plemelj": pv }),
    )?;
    Ok(Outcome::Pass)
}

pub fn validate(mut cfg: RunConfig) -> Result<Outcome> {
    let defaults = ValidationConfig::default();
    let vc = ValidationConfig {
        seed: *cfg.seed.get_or_insert(defaults.seed),
        only: cfg.only.get_or_insert_with(Vec::new).clone(),
        inject_eta_flip: *cfg.inject_eta_flip.get_or_insert(false),
    };
    let known: Vec<&str> = greenfn::validation::criteria()
        .iter()
        .flat_map(|(id, group)| [*id, *group])
        .chain(["10"])
        .collect();
    if let Some(bad) = vc.only.iter().find(|s| !known.contains(&s.as_str())) {
        bail!("unknown criterion or group {bad:?}");
    }
    let out = prepare(&cfg)?;
    let report = run_suite(&vc);
    for c in &report.criteria {
        println!("{}", c.summary());
    }
    write_report(&out, &report)?;
    let failed = report.failed();
    if failed.is_empty() {
        println!("all {} criteria passed", report.criteria.len());
        Ok(Outcome::Pass)
    } else {
        Ok(Outcome::Fail(format!("failed criteria: {}", failed.join(", "))))
    }
}

fn write_report(out: &Path, report: &greenfn::validation::ValidationReport) -> Result<()> {
    io::write_json(&out.join("validation.json"), report)?;
    Ok(())
}
