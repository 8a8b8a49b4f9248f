//! Nascent step and delta sequences and the limits built from them: the
//! derivative identity, Sokhotski–Plemelj, and regularized Fourier transforms
//! of the step.
//!
//! Flavors (all with width parameter `eta`):
//! - arctan: step `atan(x/eta)/pi + 1/2`, delta the Lorentzian `eta/(pi(eta^2 + x^2))`;
//! - exponential: step `e^{x/eta}/2` for `x <= 0`, `1 - e^{-x/eta}/2` above, delta `e^{-|x|/eta}/(2 eta)`;
//! - linear: a ramp across `|x| <= eta/2`, delta the box of height `1/eta` there.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::SampledFunction;
use crate::quadrature::{graded_edges, merge_edges, PanelRule};
use crate::scalar::{cis, Real};

const PANEL_ORDER: usize = 16;

/// Domain half-width, in units of `eta`, for the fast-decaying flavors.
const COMPACT_SPAN: f64 = 50.0;
/// Half-width, in units of `eta`, used for the Lorentzian; its tail mass
/// outside is `2/(pi * 1e7)`.
const LORENTZIAN_SPAN: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Step,
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Arctan,
    Exponential,
    Linear,
}

impl Flavor {
    pub const ALL: [Flavor; 3] = [Flavor::Arctan, Flavor::Exponential, Flavor::Linear];

    pub fn name(self) -> &'static str {
        match self {
            Flavor::Arctan => "arctan",
            Flavor::Exponential => "exponential",
            Flavor::Linear => "linear",
        }
    }

    /// Points where the step is not smooth (excluded from derivative checks).
    fn kinks<T: Real>(self, eta: T) -> Vec<T> {
        match self {
            Flavor::Linear => vec![-eta * T::lit(0.5), eta * T::lit(0.5)],
            _ => Vec::new(),
        }
    }
}

/// A nascent step or delta of one flavor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedFamily<T> {
    pub kind: FamilyKind,
    pub flavor: Flavor,
    pub eta: T,
    /// Explicit integration domain; `None` picks a default per operation.
    pub domain: Option<(T, T)>,
}

impl<T: Real> RegularizedFamily<T> {
    pub fn new(kind: FamilyKind, flavor: Flavor, eta: T) -> Result<Self> {
        if !(eta > T::zero()) || !eta.is_finite() {
            return invalid(format!("eta must be positive and finite, got {eta}"));
        }
        Ok(Self {
            kind,
            flavor,
            eta,
            domain: None,
        })
    }

    pub fn step(flavor: Flavor, eta: T) -> Result<Self> {
        Self::new(FamilyKind::Step, flavor, eta)
    }

    pub fn delta(flavor: Flavor, eta: T) -> Result<Self> {
        Self::new(FamilyKind::Delta, flavor, eta)
    }

    pub fn with_domain(mut self, left: T, right: T) -> Result<Self> {
        if !(left < right) || !left.is_finite() || !right.is_finite() {
            return invalid(format!("domain [{left}, {right}] is empty or not finite"));
        }
        self.domain = Some((left, right));
        Ok(self)
    }

    /// The explicit domain, or `+-50 eta` (`+-1e7 eta` for the Lorentzian,
    /// whose tails decay only like `1/x^2`).
    pub fn domain(&self) -> (T, T) {
        self.domain.unwrap_or_else(|| {
            let span = match self.flavor {
                Flavor::Arctan => LORENTZIAN_SPAN,
                _ => COMPACT_SPAN,
            };
            let h = self.eta * T::lit(span);
            (-h, h)
        })
    }

    pub fn eval(&self, x: T) -> T {
        family_eval(self, x)
    }

    /// Panel rule adapted to the family on its domain.
    fn rule(&self, far_width: Option<T>) -> PanelRule<T> {
        let (a, b) = self.domain();
        rule_for(self.flavor, self.eta, a, b, far_width)
    }
}

fn rule_for<T: Real>(flavor: Flavor, eta: T, a: T, b: T, far_width: Option<T>) -> PanelRule<T> {
    let graded = graded_edges(T::zero(), eta, a, b, far_width);
    let edges = merge_edges(&[graded, flavor.kinks(eta)], a, b);
    PanelRule::from_edges(&edges, PANEL_ORDER)
}

/// Closed-form value of the family at `x`.
pub fn family_eval<T: Real>(family: &RegularizedFamily<T>, x: T) -> T {
    match family.kind {
        FamilyKind::Step => step_value(family.flavor, family.eta, x),
        FamilyKind::Delta => delta_value(family.flavor, family.eta, x),
    }
}

pub fn step_value<T: Real>(flavor: Flavor, eta: T, x: T) -> T {
    let half = T::lit(0.5);
    match flavor {
        Flavor::Arctan => (x / eta).atan() / T::PI() + half,
        Flavor::Exponential => {
            if x <= T::zero() {
                half * (x / eta).exp()
            } else {
                T::one() - half * (-x / eta).exp()
            }
        }
        Flavor::Linear => {
            if x < -eta * half {
                T::zero()
            } else if x > eta * half {
                T::one()
            } else {
                x / eta + half
            }
        }
    }
}

pub fn delta_value<T: Real>(flavor: Flavor, eta: T, x: T) -> T {
    match flavor {
        Flavor::Arctan => eta / (T::PI() * (eta * eta + x * x)),
        Flavor::Exponential => (-x.abs() / eta).exp() / (eta + eta),
        Flavor::Linear => {
            if x.abs() <= eta * T::lit(0.5) {
                T::one() / eta
            } else {
                T::zero()
            }
        }
    }
}

/// Derivative of the step, differentiated term by term from its own formula.
fn step_derivative<T: Real>(flavor: Flavor, eta: T, x: T) -> T {
    match flavor {
        Flavor::Arctan => {
            let u = x / eta;
            (T::one() / eta) / (T::one() + u * u) / T::PI()
        }
        Flavor::Exponential => {
            let half = T::lit(0.5) / eta;
            if x <= T::zero() {
                half * (x / eta).exp()
            } else {
                half * (-x / eta).exp()
            }
        }
        Flavor::Linear => {
            if x.abs() < eta * T::lit(0.5) {
                T::one() / eta
            } else {
                T::zero()
            }
        }
    }
}

/// `theta_eta(x) - H(x)`, written so that it stays accurate far from 0.
fn step_defect<T: Real>(flavor: Flavor, eta: T, x: T) -> T {
    let half = T::lit(0.5);
    match flavor {
        Flavor::Arctan => {
            if x == T::zero() {
                return T::zero();
            }
            let tail = (eta / x.abs()).atan() / T::PI();
            if x > T::zero() {
                -tail
            } else {
                tail
            }
        }
        Flavor::Exponential => {
            if x <= T::zero() {
                half * (x / eta).exp()
            } else {
                -half * (-x / eta).exp()
            }
        }
        Flavor::Linear => {
            if x.abs() > eta * half {
                T::zero()
            } else if x < T::zero() {
                x / eta + half
            } else {
                x / eta - half
            }
        }
    }
}

/// Half-width beyond which `theta_eta - H` is below `1e-20`, if finite.
fn defect_reach<T: Real>(flavor: Flavor, eta: T) -> Option<T> {
    match flavor {
        Flavor::Arctan => None,
        Flavor::Exponential => Some(eta * T::lit(46.0)),
        Flavor::Linear => Some(eta * T::lit(0.5)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeReport<T> {
    /// `max |d/dx theta_eta - delta_eta|` with the analytic derivative.
    pub analytic: T,
    /// The same with centered differences (cross-check, `O(h^2)`).
    pub centered: T,
    /// `eta * sup theta_eta` on the grid: the finite-eta size of the
    /// infinitesimal correction term in the derivative identity.
    pub correction: T,
    /// Grid points skipped because they sit on (or straddle) a kink.
    pub excluded: usize,
}

/// Compares the derivative of the nascent step with the matching delta on a
/// sorted grid `xs`. Spacing must stay below `eta/4`.
pub fn derivative_identity_residual<T: Real>(
    flavor: Flavor,
    eta: T,
    xs: &[T],
) -> Result<DerivativeReport<T>> {
    if !(eta > T::zero()) {
        return invalid("eta must be positive");
    }
    if xs.len() < 3 {
        return invalid("derivative check needs at least 3 points");
    }
    let mut h_max = T::zero();
    for w in xs.windows(2) {
        let h = w[1] - w[0];
        if !(h > T::zero()) {
            return invalid("grid must be strictly increasing");
        }
        h_max = h_max.max(h);
    }
    if h_max >= eta * T::lit(0.25) {
        return invalid(format!(
            "grid spacing {h_max:.3e} is not below eta/4 = {:.3e}",
            eta * T::lit(0.25)
        ));
    }
    let kinks = flavor.kinks(eta);
    let near_kink = |a: T, b: T| {
        kinks
            .iter()
            .any(|&k| k >= a - eta * T::lit(1e-9) && k <= b + eta * T::lit(1e-9))
    };

    let mut report = DerivativeReport {
        analytic: T::zero(),
        centered: T::zero(),
        correction: T::zero(),
        excluded: 0,
    };
    let mut sup_step = T::zero();
    for (i, &x) in xs.iter().enumerate() {
        sup_step = sup_step.max(step_value(flavor, eta, x).abs());
        if near_kink(x, x) {
            report.excluded += 1;
            continue;
        }
        let delta = delta_value(flavor, eta, x);
        report.analytic = report
            .analytic
            .max((step_derivative(flavor, eta, x) - delta).abs());
        if i > 0 && i + 1 < xs.len() && !near_kink(xs[i - 1], xs[i + 1]) {
            let fd = (step_value(flavor, eta, xs[i + 1]) - step_value(flavor, eta, xs[i - 1]))
                / (xs[i + 1] - xs[i - 1]);
            report.centered = report.centered.max((fd - delta).abs());
        }
    }
    report.correction = eta * sup_step;
    Ok(report)
}

/// `int delta_eta(x - x0) g(x) dx` on the family's domain shifted to `x0`.
pub fn sift<T: Real>(family: &RegularizedFamily<T>, g: impl Fn(T) -> T, x0: T) -> T {
    let rule = family.rule(None);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * delta_value(family.flavor, family.eta, x) * g(x + x0))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrincipalValueResult<T> {
    /// `int f(x)/(x + i eta) dx`.
    pub full: Complex<T>,
    /// Principal value `P int f(x)/x dx`.
    pub principal: Complex<T>,
    /// `-i pi f(0)`.
    pub delta: Complex<T>,
    /// `|full - (principal + delta)|`.
    pub residual: T,
    pub eta: T,
    /// Half-width of the exclusion window before extrapolation.
    pub exclusion: T,
}

/// Cubic Lagrange interpolation on an equispaced grid.
fn interpolate<T: Real>(points: &[T], values: &[Complex<T>], h: T, x: T) -> Complex<T> {
    let n = points.len();
    let s = ((x - points[0]) / h).floor().to_isize().unwrap_or(0);
    let start = (s - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = Complex::new(T::zero(), T::zero());
    for j in start..start + 4 {
        let mut l = T::one();
        for m in start..start + 4 {
            if m != j {
                l = l * (x - points[m]) / (points[j] - points[m]);
            }
        }
        acc = acc + values[j] * l;
    }
    acc
}

/// Splits `int f/(x + i eta)` into its principal part and the `-i pi f(0)`
/// term.
///
/// The full integral subtracts `f(0)` and integrates the remainder with the
/// grid weights; the subtracted piece is done in closed form. The principal
/// value excludes `|x| < eps`, `eps = max(5h, eta/10)`, and removes the
/// `O(eps)` and `O(eps^3)` errors by Richardson extrapolation over `eps`,
/// `2 eps` and `4 eps`.
pub fn sokhotski_plemelj<T: Real>(f: &SampledFunction<T>, eta: T) -> Result<PrincipalValueResult<T>> {
    if !(eta > T::zero()) {
        return invalid("eta must be positive");
    }
    let grid = f.grid();
    let h = grid
        .spacing()
        .ok_or_else(|| Error::InvalidInput("principal value needs an equispaced grid".into()))?;
    if h > eta * T::lit(0.5) {
        return invalid(format!(
            "grid spacing {h:.3e} exceeds eta/2 = {:.3e}",
            eta * T::lit(0.5)
        ));
    }
    let x = grid.points();
    let v = f.values();
    let n = x.len();
    let peak = f.max_abs();
    let ends = v[0].norm().max(v[n - 1].norm());
    if ends > T::lit(1e-8) * peak {
        return Err(Error::NotDecayed(format!(
            "|f| at the ends is {ends:.3e}, peak {peak:.3e}"
        )));
    }
    let (a, b) = (x[0], x[n - 1]);
    let exclusion = (h * T::lit(5.0)).max(eta * T::lit(0.1));
    if !(a < -exclusion * T::lit(8.0) && b > exclusion * T::lit(8.0)) {
        return invalid("the domain must contain the origin well inside it");
    }

    let f0 = interpolate(x, v, h, T::zero());
    let i = Complex::new(T::zero(), T::one());
    let ieta = i * eta;
    let log_term = ((Complex::new(b, T::zero()) + ieta) / (Complex::new(a, T::zero()) + ieta)).ln();
    let remainder: Complex<T> = x
        .iter()
        .zip(v)
        .zip(grid.weights())
        .map(|((&xj, &fj), &w)| (fj - f0) / (Complex::new(xj, T::zero()) + ieta) * w)
        .sum();
    let full = remainder + f0 * log_term;

    let truncated = |eps: T| -> Complex<T> {
        let panel = h * T::lit(4.0);
        let mut sum = Complex::new(T::zero(), T::zero());
        for (lo, hi) in [(a, -eps), (eps, b)] {
            let count = ((hi - lo) / panel).ceil().to_usize().unwrap_or(1).max(1);
            let edges: Vec<T> = (0..=count)
                .map(|j| lo + (hi - lo) * T::from_usize_lossy(j) / T::from_usize_lossy(count))
                .collect();
            let rule = PanelRule::from_edges(&edges, 8);
            for (&xq, &wq) in rule.nodes.iter().zip(&rule.weights) {
                sum = sum + interpolate(x, v, h, xq) * (wq / xq);
            }
        }
        sum
    };
    // P(eps) = P + a eps + b eps^3 + ...; combine eps, 2 eps, 4 eps.
    let principal = (truncated(exclusion) * T::lit(16.0)
        - truncated(exclusion * T::lit(2.0)) * T::lit(10.0)
        + truncated(exclusion * T::lit(4.0)))
        / T::lit(7.0);
    let delta = -i * T::PI() * f0;
    let residual = (full - principal - delta).norm();
    Ok(PrincipalValueResult {
        full,
        principal,
        delta,
        residual,
        eta,
        exclusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtOptions<T> {
    /// Exponential damping `eta'`; `None` ties it to the family's `eta`.
    pub damping: Option<T>,
    /// Left end (positive distance from 0); `None` picks `max(50/min|k|, 50 eta)`.
    pub x_left: Option<T>,
    /// Right end; `None` picks `max(40/eta', 50/min|k|)`.
    pub x_right: Option<T>,
}

impl<T> Default for FtOptions<T> {
    fn default() -> Self {
        Self {
            damping: None,
            x_left: None,
            x_right: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularizedFt<T> {
    pub ks: Vec<T>,
    pub values: Vec<Complex<T>>,
    /// `i/(k + i eta')`.
    pub reference: Vec<Complex<T>>,
    pub max_deviation: T,
    /// `max |value - reference| / |reference|`.
    pub max_relative_deviation: T,
    /// Largest integration-by-parts boundary term
    /// `|[theta_eta e^{(ik - eta')x}/(ik - eta')]|` over the domain ends.
    pub boundary_term: T,
    pub damping: T,
    pub x_left: T,
    pub x_right: T,
}

fn check_ks<T: Real>(ks: &[T]) -> Result<(T, T)> {
    if ks.is_empty() {
        return invalid("k grid is empty");
    }
    let mut lo = T::infinity();
    let mut hi = T::zero();
    for &k in ks {
        if !k.is_finite() {
            return invalid("k grid must be finite");
        }
        if k != T::zero() {
            lo = lo.min(k.abs());
        }
        hi = hi.max(k.abs());
    }
    Ok((lo, hi))
}

/// `int e^{(ik - eta') x} theta_eta(x) dx` over `[-x_left, x_right]`.
///
/// The step is split as `H(x) + (theta_eta - H)`: the Heaviside part is done
/// in closed form, the defect by graded Gauss–Legendre panels (uniform panels
/// of length `min(1, pi/max|k|)` away from the origin). Panels cover only the
/// region where the defect is above `1e-20`.
pub fn regularized_ft<T: Real>(
    family: &RegularizedFamily<T>,
    ks: &[T],
    opts: &FtOptions<T>,
) -> Result<RegularizedFt<T>> {
    if family.kind != FamilyKind::Step {
        return invalid("regularized transform expects a step family");
    }
    let (k_min, k_max) = check_ks(ks)?;
    if k_min == T::infinity() {
        return invalid("k grid needs a nonzero entry");
    }
    let eta = family.eta;
    let damping = opts.damping.unwrap_or(eta);
    if !(damping > T::zero()) {
        return invalid("damping must be positive");
    }
    let fifty = T::lit(50.0);
    let need_left = (fifty / k_min).max(fifty * eta);
    let need_right = (T::lit(40.0) / damping).max(fifty / k_min);
    let x_left = opts.x_left.unwrap_or(need_left);
    let x_right = opts.x_right.unwrap_or(need_right);
    if x_left < fifty * eta || x_left + x_right < fifty / k_min || x_right < T::lit(40.0) / damping {
        return Err(Error::InsufficientSpan(format!(
            "domain [-{x_left:.3e}, {x_right:.3e}] needs left >= 50 eta = {:.3e}, \
             span >= 50/min|k| = {:.3e} and right >= 40/eta' = {:.3e}",
            fifty * eta,
            fifty / k_min,
            T::lit(40.0) / damping
        )));
    }

    let (lo, hi) = match defect_reach(family.flavor, eta) {
        Some(r) => ((-r).max(-x_left), r.min(x_right)),
        None => (-x_left, x_right),
    };
    let far = T::one().min(T::PI() / k_max);
    let rule = rule_for(family.flavor, eta, lo, hi, Some(far));
    let weighted: Vec<(T, T)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| (x, w * step_defect(family.flavor, eta, x) * (-damping * x).exp()))
        .filter(|&(_, g)| g != T::zero())
        .collect();

    let i = Complex::new(T::zero(), T::one());
    let values: Vec<Complex<T>> = ks
        .par_iter()
        .map(|&k| {
            let defect: Complex<T> = weighted.iter().map(|&(x, g)| cis(k * x) * g).sum();
            let s = i * k - damping;
            let heaviside = ((s * x_right).exp() - T::one()) / s;
            defect + heaviside
        })
        .collect();

    let reference: Vec<Complex<T>> = ks
        .iter()
        .map(|&k| i / Complex::new(k, damping))
        .collect();
    let mut max_deviation = T::zero();
    let mut max_relative_deviation = T::zero();
    let mut boundary_term = T::zero();
    let left_value = step_value(family.flavor, eta, -x_left) * (damping * x_left).exp();
    let right_value = step_value(family.flavor, eta, x_right) * (-damping * x_right).exp();
    for ((&k, v), r) in ks.iter().zip(&values).zip(&reference) {
        let d = (v - r).norm();
        max_deviation = max_deviation.max(d);
        max_relative_deviation = max_relative_deviation.max(d / r.norm());
        let s = Complex::new(-damping, k).norm();
        boundary_term = boundary_term.max((left_value + right_value) / s);
    }
    Ok(RegularizedFt {
        ks: ks.to_vec(),
        values,
        reference,
        max_deviation,
        max_relative_deviation,
        boundary_term,
        damping,
        x_left,
        x_right,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaFt<T> {
    pub ks: Vec<T>,
    pub values: Vec<Complex<T>>,
    pub max_deviation: T,
    pub half_width: T,
}

/// `max_k |int e^{(ik - eta) x} delta_eta(x) dx - 1|` for `|k| <= 1/(10 eta)`.
///
/// Default domain `+-max(50 eta, 50/max|k|)`. The damped Lorentzian integral
/// grows with the domain (the `e^{eta |x|}` factor beats the `1/x^2` tail), so
/// its value depends on this choice; the other flavors decay and do not care.
pub fn delta_ft_check<T: Real>(family: &RegularizedFamily<T>, ks: &[T]) -> Result<DeltaFt<T>> {
    if family.kind != FamilyKind::Delta {
        return invalid("delta transform check expects a delta family");
    }
    let (_, k_max) = check_ks(ks)?;
    let eta = family.eta;
    let k_limit = T::one() / (eta * T::lit(10.0));
    if k_max > k_limit * (T::one() + T::epsilon() * T::lit(16.0)) {
        return invalid(format!("|k| = {k_max} exceeds 1/(10 eta) = {k_limit}"));
    }
    let fifty = T::lit(50.0);
    let (left, right) = match family.domain {
        Some((a, b)) => {
            if b - a < fifty * eta {
                return Err(Error::InsufficientSpan(format!(
                    "domain span {:.3e} is below 50 eta = {:.3e}",
                    b - a,
                    fifty * eta
                )));
            }
            (a, b)
        }
        None => {
            let mut h = fifty * eta;
            if k_max > T::zero() {
                h = h.max(fifty / k_max);
            }
            (-h, h)
        }
    };
    let (lo, hi) = match defect_reach(family.flavor, eta) {
        Some(r) => (left.max(-r), right.min(r)),
        None => (left, right),
    };
    let far = if k_max > T::zero() {
        T::one().min(T::PI() / k_max)
    } else {
        T::one()
    };
    let rule = rule_for(family.flavor, eta, lo, hi, Some(far));
    let weighted: Vec<(T, T)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| (x, w * delta_value(family.flavor, eta, x) * (-eta * x).exp()))
        .collect();
    let values: Vec<Complex<T>> = ks
        .par_iter()
        .map(|&k| weighted.iter().map(|&(x, g)| cis(k * x) * g).sum())
        .collect();
    let max_deviation = values
        .iter()
        .map(|v| (v - Complex::new(T::one(), T::zero())).norm())
        .fold(T::zero(), T::max);
    Ok(DeltaFt {
        ks: ks.to_vec(),
        values,
        max_deviation,
        half_width: right.max(-left),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moment<T> {
    pub order: u32,
    pub value: T,
    /// The moment keeps growing with the domain (Lorentzian, even orders >= 2).
    pub divergent: bool,
}

/// Moments `int x^n delta_eta(x) dx` for `n = 0..=max_order`.
///
/// Each moment is evaluated on the domain and on its double; a change larger
/// than `1e-6` relative flags it as divergent rather than reporting a
/// truncated number.
pub fn moment_report<T: Real>(family: &RegularizedFamily<T>, max_order: u32) -> Result<Vec<Moment<T>>> {
    if family.kind != FamilyKind::Delta {
        return invalid("moments need a delta family");
    }
    let (a, b) = family.domain();
    if b - a < T::lit(COMPACT_SPAN) * family.eta {
        return Err(Error::InsufficientSpan(format!(
            "domain span {:.3e} is below 50 eta",
            b - a
        )));
    }
    let doubled = RegularizedFamily {
        domain: Some((a + a, b + b)),
        ..*family
    };
    let rules = [family.rule(None), doubled.rule(None)];
    let moment = |rule: &PanelRule<T>, n: u32| -> T {
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * delta_value(family.flavor, family.eta, x) * x.powi(n as i32))
            .sum()
    };
    Ok((0..=max_order)
        .map(|n| {
            let m = moment(&rules[0], n);
            let m2 = moment(&rules[1], n);
            let scale = family.eta.powi(n as i32).max(m.abs());
            Moment {
                order: n,
                value: m,
                divergent: (m2 - m).abs() > T::lit(1e-6) * scale,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use std::sync::Arc;

    type Fam = RegularizedFamily<f64>;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn closed_form_values() {
        let s = Fam::step(Flavor::Arctan, 0.1).unwrap();
        assert_eq!(s.eval(0.0), 0.5);
        let d = Fam::delta(Flavor::Arctan, 0.1).unwrap();
        assert!((d.eval(0.0) - 1.0 / (std::f64::consts::PI * 0.1)).abs() < 1e-14);
        assert!((d.eval(0.0) - 3.1831).abs() < 1e-4);
        let e = Fam::step(Flavor::Exponential, 0.1).unwrap();
        assert!(e.eval(-5.0) < 1e-20);
        let l = Fam::step(Flavor::Linear, 0.1).unwrap();
        assert_eq!(l.eval(0.0), 0.5);
        let b = Fam::delta(Flavor::Linear, 0.1).unwrap();
        assert!((b.eval(0.04) - 10.0).abs() < 1e-12);
        assert_eq!(b.eval(0.06), 0.0);
    }

    #[test]
    fn rejects_bad_eta() {
        assert!(Fam::step(Flavor::Linear, 0.0).is_err());
        assert!(Fam::delta(Flavor::Linear, f64::NAN).is_err());
    }

    #[test]
    fn steps_are_monotone_with_limits() {
        for flavor in Flavor::ALL {
            for eta in [1e-3, 0.1, 2.0] {
                let xs = linspace(-60.0 * eta, 60.0 * eta, 2001);
                let v: Vec<f64> = xs.iter().map(|&x| step_value(flavor, eta, x)).collect();
                assert!(v.windows(2).all(|w| w[1] >= w[0]), "{flavor:?}");
                assert!(step_value(flavor, eta, -1e9 * eta) < 1e-9);
                assert!(step_value(flavor, eta, 1e9 * eta) > 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn deltas_have_unit_mass() {
        for flavor in Flavor::ALL {
            let d = Fam::delta(flavor, 0.01).unwrap();
            let m = sift(&d, |_| 1.0, 0.0);
            assert!((m - 1.0).abs() < 1e-6, "{flavor:?}: {m}");
        }
    }

    #[test]
    fn derivative_identity_per_flavor() {
        for flavor in Flavor::ALL {
            let eta = 0.01;
            let xs = linspace(-0.5, 0.5, 4001);
            let r = derivative_identity_residual(flavor, eta, &xs).unwrap();
            assert!(r.analytic < 1e-12, "{flavor:?}: {}", r.analytic);
            // h = 2.5e-4 against a width of 1e-2
            assert!(r.centered < 0.05 / eta, "{flavor:?}: {}", r.centered);
        }
        let xs = linspace(-0.5, 0.5, 4001);
        let r = derivative_identity_residual(Flavor::Linear, 0.01, &xs).unwrap();
        assert_eq!(r.excluded, 2);
        assert!(r.centered < 1e-8);
    }

    #[test]
    fn derivative_identity_rejects_coarse_grid() {
        let xs = linspace(-1.0, 1.0, 11);
        assert!(derivative_identity_residual(Flavor::Arctan, 0.1, &xs).is_err());
    }

    #[test]
    fn correction_term_scales_linearly() {
        let etas = [1e-2, 1e-3, 1e-4];
        let c: Vec<f64> = etas
            .iter()
            .map(|&eta| {
                let xs = linspace(-0.1, 0.1, 16001);
                derivative_identity_residual(Flavor::Exponential, eta, &xs)
                    .unwrap()
                    .correction
            })
            .collect();
        for w in 0..2 {
            let slope = (c[w].ln() - c[w + 1].ln()) / (etas[w].ln() - etas[w + 1].ln());
            assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
        }
    }

    #[test]
    fn sifting_error_shrinks_with_eta() {
        let g = |x: f64| (x * 1.3).cos() + 0.2 * x;
        for flavor in Flavor::ALL {
            let errs: Vec<f64> = [1e-1, 1e-2, 1e-3]
                .iter()
                .map(|&eta| {
                    let d = Fam::delta(flavor, eta)
                        .unwrap()
                        .with_domain(-30.0, 30.0)
                        .unwrap();
                    (sift(&d, g, 0.4) - g(0.4)).abs()
                })
                .collect();
            assert!(errs[1] < errs[0] && errs[2] < errs[1], "{flavor:?}: {errs:?}");
        }
    }

    fn gaussian(h: f64, eta: f64) -> PrincipalValueResult<f64> {
        let n = (40.0 / h).round() as usize + 1;
        let grid = Arc::new(Grid1D::uniform(-20.0, 20.0, n).unwrap());
        let f = SampledFunction::from_real_fn(grid, |x: f64| (-x * x).exp()).unwrap();
        sokhotski_plemelj(&f, eta).unwrap()
    }

    #[test]
    fn sokhotski_plemelj_gaussian() {
        let eta = 1e-3;
        let r = gaussian(eta / 2.0, eta);
        // Even f: the principal part vanishes.
        assert!(r.principal.norm() < 1e-8, "{:?}", r.principal);
        assert!((r.delta.im + std::f64::consts::PI).abs() < 1e-12);
        // Exact: Im int e^{-x^2}/(x + i eta) = -pi e^{eta^2} erfc(eta).
        let exact = -std::f64::consts::PI * (eta * eta).exp() * statrs::function::erf::erfc(eta);
        assert!((r.full.im - exact).abs() < 1e-8, "{} vs {exact}", r.full.im);
        assert!(r.full.re.abs() < 1e-8);
    }

    #[test]
    fn sokhotski_plemelj_tolerance_is_linear_in_eta() {
        let res: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&eta| gaussian(eta / 2.5, eta).residual)
            .collect();
        for w in res.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 10.0).abs() < 1.0, "{res:?}");
        }
    }

    #[test]
    fn sokhotski_plemelj_odd_part() {
        // f = x e^{-x^2}: P int f/x = sqrt(pi), f(0) = 0.
        let grid = Arc::new(Grid1D::uniform(-20.0, 20.0, 8001).unwrap());
        let f = SampledFunction::from_real_fn(grid, |x: f64| x * (-x * x).exp()).unwrap();
        let r = sokhotski_plemelj(&f, 0.01).unwrap();
        assert!((r.principal.re - std::f64::consts::PI.sqrt()).abs() < 1e-6, "{:?}", r);
        assert!(r.delta.norm() < 1e-12);
    }

    #[test]
    fn sokhotski_plemelj_rejects_bad_input() {
        let grid = Arc::new(Grid1D::uniform(-2.0, 2.0, 4001).unwrap());
        let f = SampledFunction::from_real_fn(grid.clone(), |x: f64| (-x * x).exp()).unwrap();
        assert!(matches!(sokhotski_plemelj(&f, 0.01), Err(Error::NotDecayed(_))));
        let grid = Arc::new(Grid1D::uniform(-20.0, 20.0, 401).unwrap());
        let f = SampledFunction::from_real_fn(grid, |x: f64| (-x * x).exp()).unwrap();
        assert!(sokhotski_plemelj(&f, 0.01).is_err());
    }

    #[test]
    fn step_transform_reference_value() {
        let r = Complex::<f64>::i() / Complex::new(1.0, 1e-3);
        assert!((r.re - 1e-3).abs() < 1e-8 && (r.im - 0.999999).abs() < 1e-6);
        let s = Fam::step(Flavor::Exponential, 1e-3).unwrap();
        let ft = regularized_ft(&s, &[1.0], &FtOptions::default()).unwrap();
        assert!((ft.values[0] - r).norm() < 1e-5);
    }

    #[test]
    fn exponential_step_transform_matches_closed_form() {
        // Left half: 1/(2(1/eta + ik - eta')); right: 1/(eta' - ik) - 1/(2(1/eta + eta' - ik)).
        let eta = 0.05;
        let s = Fam::step(Flavor::Exponential, eta).unwrap();
        let ks = [-3.0, -0.5, 0.2, 1.0, 4.0];
        let ft = regularized_ft(&s, &ks, &FtOptions::default()).unwrap();
        for (&k, v) in ks.iter().zip(&ft.values) {
            let i = Complex::i();
            let exact = 0.5 / (1.0 / eta + i * k - eta) + 1.0 / (eta - i * k)
                - 0.5 / (1.0 / eta + eta - i * k);
            assert!((v - exact).norm() < 1e-11, "k = {k}: {v} vs {exact}");
        }
    }

    #[test]
    fn step_transform_modulus_is_lorentzian() {
        let eta = 1e-3;
        let ks: Vec<f64> = (0..=20).map(|j| 0.1 * 100f64.powf(j as f64 / 20.0)).collect();
        let s = Fam::step(Flavor::Exponential, eta).unwrap();
        let ft = regularized_ft(&s, &ks, &FtOptions::default()).unwrap();
        for (&k, v) in ks.iter().zip(&ft.values) {
            let rel = v.norm_sqr() * (k * k + eta * eta) - 1.0;
            assert!(rel.abs() < 1e-3, "k = {k}: {rel}");
        }
    }

    #[test]
    fn flavors_agree_as_eta_shrinks() {
        let spread: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&eta| {
                let v: Vec<Complex<f64>> = Flavor::ALL
                    .iter()
                    .map(|&fl| {
                        let s = Fam::step(fl, eta).unwrap();
                        regularized_ft(&s, &[1.0], &FtOptions::default()).unwrap().values[0]
                    })
                    .collect();
                (v[0] - v[1]).norm().max((v[1] - v[2]).norm()).max((v[0] - v[2]).norm())
            })
            .collect();
        assert!(spread[1] < spread[0] && spread[2] < spread[1], "{spread:?}");
    }

    #[test]
    fn boundary_term_vanishes_for_decaying_flavors() {
        for flavor in [Flavor::Exponential, Flavor::Linear] {
            let s = Fam::step(flavor, 1e-3).unwrap();
            let ft = regularized_ft(&s, &[0.1, 1.0, 10.0], &FtOptions::default()).unwrap();
            assert!(ft.boundary_term < 1e-10, "{flavor:?}: {}", ft.boundary_term);
        }
    }

    #[test]
    fn transform_rejects_short_domain() {
        let s = Fam::step(Flavor::Linear, 1e-2).unwrap();
        let opts = FtOptions {
            x_right: Some(10.0),
            ..FtOptions::default()
        };
        assert!(matches!(
            regularized_ft(&s, &[1.0], &opts),
            Err(Error::InsufficientSpan(_))
        ));
    }

    #[test]
    fn decoupled_damping_changes_the_limit() {
        let s = Fam::step(Flavor::Exponential, 1e-3).unwrap();
        let opts = FtOptions {
            damping: Some(1e-2),
            ..FtOptions::default()
        };
        let ft = regularized_ft(&s, &[1.0], &opts).unwrap();
        assert_eq!(ft.damping, 1e-2);
        assert!(ft.max_deviation < 1e-5);
    }

    #[test]
    fn delta_transform() {
        let d = Fam::delta(Flavor::Arctan, 1e-2).unwrap();
        let ks: Vec<f64> = (0..=20).map(|j| -1.0 + 0.1 * j as f64).collect();
        let r = delta_ft_check(&d, &ks).unwrap();
        assert!(r.max_deviation < 1e-2, "{}", r.max_deviation);
        // Exponential flavor: exact value 1/(1 - eta^2 (ik - eta)^2).
        let eta = 1e-2;
        let e = Fam::delta(Flavor::Exponential, eta).unwrap();
        let r = delta_ft_check(&e, &ks).unwrap();
        for (&k, v) in ks.iter().zip(&r.values) {
            let s = Complex::new(-eta, k) * eta;
            let exact = 1.0 / (1.0 - s * s);
            assert!((v - exact).norm() < 1e-12);
        }
        assert!(delta_ft_check(&e, &[20.0]).is_err());
    }

    #[test]
    fn delta_transform_improves_with_eta() {
        for flavor in Flavor::ALL {
            let devs: Vec<f64> = [1e-1, 1e-2, 1e-3]
                .iter()
                .map(|&eta| {
                    let d = Fam::delta(flavor, eta).unwrap();
                    delta_ft_check(&d, &[0.5]).unwrap().max_deviation
                })
                .collect();
            assert!(devs[1] < devs[0] && devs[2] < devs[1], "{flavor:?}: {devs:?}");
        }
    }

    #[test]
    fn moments() {
        let box_ = Fam::delta(Flavor::Linear, 0.3).unwrap();
        let m = moment_report(&box_, 4).unwrap();
        assert!((m[0].value - 1.0).abs() < 1e-12);
        assert!(m[1].value.abs() < 1e-12);
        assert!((m[2].value - 0.0075).abs() < 1e-12);
        assert!(m.iter().all(|m| !m.divergent));

        let e = Fam::delta(Flavor::Exponential, 0.2).unwrap();
        let m = moment_report(&e, 4).unwrap();
        assert!((m[2].value - 2.0 * 0.04).abs() < 1e-12);
        assert!((m[4].value - 24.0 * 0.2f64.powi(4)).abs() < 1e-12);

        let l = Fam::delta(Flavor::Arctan, 0.01).unwrap();
        let m = moment_report(&l, 4).unwrap();
        assert!((m[0].value - 1.0).abs() < 1e-6, "{}", m[0].value);
        assert!(m[1].value.abs() < 1e-10 && !m[1].divergent);
        assert!(m[2].divergent && m[4].divergent);
        assert!(!m[0].divergent);
    }
}
