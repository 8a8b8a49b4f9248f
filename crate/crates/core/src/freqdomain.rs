//! Frequency-domain Green's functions with finite regularization `eta`:
//! spectral densities, responses, pole inventories and the inverse transform.
//!
//! Conventions: a density line `(omega_l, w_l)` stands for the time-domain
//! auxiliary kernel `sum_l w_l exp(-i omega_l tau)`. The retarded response
//! `sum_l w_l / (omega - omega_l + i eta)` is the transform
//! `int dtau exp(i omega tau) G(tau)` of `-i theta(tau) e^{-eta tau} sum_l w_l e^{-i omega_l tau}`,
//! the minus-i normalization of the retarded kernel.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{flat_top, graded_edges, merge_edges, PanelRule};
use crate::scalar::{cis, Real};
use crate::spectra::{EigenSystem, Model, PhysicalConstants};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line<T> {
    pub omega: T,
    pub weight: Complex<T>,
    /// `+1` for first-order lines; `+1`/`-1` for the two second-order lines
    /// at `+-sqrt(E) c`.
    pub sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityLabel<T> {
    Points { x: T, x_prime: T },
    Momentum { k: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityOrder {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity<T> {
    pub lines: Vec<Line<T>>,
    pub label: DensityLabel<T>,
    pub order: DensityOrder,
}

impl<T: Real> SpectralDensity<T> {
    /// Time-domain auxiliary kernel `sum_l w_l exp(-i omega_l tau)`.
    pub fn time_kernel(&self, tau: T) -> Complex<T> {
        self.lines
            .iter()
            .fold(Complex::new(T::zero(), T::zero()), |acc, l| {
                acc + l.weight * cis(-l.omega * tau)
            })
    }

    pub fn max_abs_frequency(&self) -> T {
        self.lines.iter().map(|l| l.omega.abs()).fold(T::zero(), T::max)
    }

    /// `1e-2` times the smallest gap between distinct line frequencies.
    pub fn default_eta(&self) -> T {
        let mut w: Vec<T> = self.lines.iter().map(|l| l.omega).collect();
        w.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let gap = w
            .windows(2)
            .map(|p| p[1] - p[0])
            .filter(|&d| d > T::epsilon() * (T::one() + p_abs(&w)))
            .fold(T::infinity(), T::min);
        if gap.is_finite() {
            gap * T::lit(1e-2)
        } else {
            T::lit(1e-2)
        }
    }
}

fn p_abs<T: Real>(w: &[T]) -> T {
    w.iter().map(|v| v.abs()).fold(T::zero(), T::max)
}

/// Density of a basis at the point pair `(x, x')`.
///
/// First-order models give lines at `E_n / hbar` with weights
/// `phi_n(x) phi_n*(x')`. Helmholtz bases give pairs at `+-sqrt(E_n) c` with
/// weights `+-i c phi_n(x) phi_n*(x') / (2 sqrt(E_n))`, so that the lines sum
/// to `c phi phi* sin(sqrt(E) c tau) / sqrt(E)`. Zero modes contribute a
/// pair at `+-0` and are rejected.
pub fn spectral_density<T: Real>(basis: &EigenSystem<T>, x: T, x_prime: T) -> Result<SpectralDensity<T>> {
    if basis.is_empty() {
        return invalid("density needs a non-empty basis");
    }
    let a = basis.mode_values(x);
    let b = basis.mode_values(x_prime);
    let k = basis.constants();
    let mut lines = Vec::new();
    let order = if basis.model() == Model::Helmholtz {
        for n in 0..basis.len() {
            let e = basis.energies()[n];
            if !(e > T::zero()) {
                return invalid(format!(
                    "wave density needs positive eigenvalues, mode {} has {e}",
                    basis.labels()[n]
                ));
            }
            let q = e.sqrt();
            let w = a[n] * b[n].conj() * Complex::new(T::zero(), k.c / (T::lit(2.0) * q));
            lines.push(Line { omega: q * k.c, weight: w, sign: 1 });
            lines.push(Line { omega: -q * k.c, weight: -w, sign: -1 });
        }
        DensityOrder::Second
    } else {
        for n in 0..basis.len() {
            lines.push(Line {
                omega: basis.energies()[n] / k.hbar,
                weight: a[n] * b[n].conj(),
                sign: 1,
            });
        }
        DensityOrder::First
    };
    Ok(SpectralDensity {
        lines,
        label: DensityLabel::Points { x, x_prime },
        order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseDirection {
    Retarded,
    Advanced,
    Feynman,
}

impl ResponseDirection {
    pub fn name(self) -> &'static str {
        match self {
            ResponseDirection::Retarded => "retarded",
            ResponseDirection::Advanced => "advanced",
            ResponseDirection::Feynman => "feynman",
        }
    }

    /// `+1` for retarded (`+i eta`), `-1` for advanced.
    fn eta_sign<T: Real>(self) -> Result<T> {
        match self {
            ResponseDirection::Retarded => Ok(T::one()),
            ResponseDirection::Advanced => Ok(-T::one()),
            ResponseDirection::Feynman => {
                invalid("a single-sign response cannot be feynman; use feynman_combination")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole<T> {
    pub position: Complex<T>,
    pub residue: Complex<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqResponse<T> {
    pub omega: Vec<T>,
    pub values: Vec<Complex<T>>,
    pub eta: T,
    pub direction: ResponseDirection,
    pub poles: Vec<Pole<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PoleCensus {
    pub below: usize,
    pub above: usize,
    pub on_axis: usize,
    /// Whether the inventory satisfies the half-plane law for its direction.
    pub law_holds: bool,
}

impl<T: Real> FreqResponse<T> {
    /// Counts poles per half-plane and checks the law exactly: retarded
    /// poles at `Im = -eta`, advanced at `+eta`, feynman in both halves.
    pub fn pole_census(&self) -> PoleCensus {
        let below = self.poles.iter().filter(|p| p.position.im < T::zero()).count();
        let above = self.poles.iter().filter(|p| p.position.im > T::zero()).count();
        let on_axis = self.poles.len() - below - above;
        let law_holds = match self.direction {
            ResponseDirection::Retarded => self.poles.iter().all(|p| p.position.im == -self.eta),
            ResponseDirection::Advanced => self.poles.iter().all(|p| p.position.im == self.eta),
            ResponseDirection::Feynman => {
                below >= 1
                    && above >= 1
                    && self.poles.iter().all(|p| p.position.im.abs() == self.eta)
            }
        };
        PoleCensus {
            below,
            above,
            on_axis,
            law_holds,
        }
    }

    /// Test hook: flips the sign of `eta` in the inventory and the values,
    /// as a wrongly regularized response would have it.
    #[doc(hidden)]
    pub fn inject_eta_sign_flip(&mut self) {
        for p in &mut self.poles {
            p.position.im = -p.position.im;
        }
        self.values = self
            .omega
            .iter()
            .map(|&w| evaluate_poles(&self.poles, w))
            .collect();
    }

    /// Response at an arbitrary frequency from the pole inventory.
    pub fn evaluate(&self, omega: T) -> Complex<T> {
        evaluate_poles(&self.poles, omega)
    }

    /// Time-domain function the response transforms from:
    /// `-i r theta(tau) e^{-i p tau}` for poles below the axis and
    /// `+i r theta(-tau) e^{-i p tau}` above, with `theta(0) = 1/2`.
    pub fn time_domain_oracle(&self, tau: T) -> Complex<T> {
        let i = Complex::new(T::zero(), T::one());
        self.poles.iter().fold(Complex::new(T::zero(), T::zero()), |acc, p| {
            let e = (-i * p.position * tau).exp();
            let step = if p.position.im < T::zero() {
                crate::scalar::theta(tau)
            } else {
                crate::scalar::theta(-tau)
            };
            let s = if p.position.im < T::zero() { -i } else { i };
            acc + s * p.residue * e * step
        })
    }
}

fn evaluate_poles<T: Real>(poles: &[Pole<T>], omega: T) -> Complex<T> {
    poles.iter().fold(Complex::new(T::zero(), T::zero()), |acc, p| {
        acc + p.residue / (Complex::new(omega, T::zero()) - p.position)
    })
}

fn check_eta<T: Real>(eta: T) -> Result<()> {
    if !(eta > T::zero()) || !eta.is_finite() {
        return invalid(format!("eta must be positive, got {eta}"));
    }
    Ok(())
}

fn from_poles<T: Real>(
    omega: &[T],
    eta: T,
    direction: ResponseDirection,
    poles: Vec<Pole<T>>,
) -> FreqResponse<T> {
    let values = omega.par_iter().map(|&w| evaluate_poles(&poles, w)).collect();
    FreqResponse {
        omega: omega.to_vec(),
        values,
        eta,
        direction,
        poles,
    }
}

/// `sum_l w_l / (omega - omega_l +- i eta)`.
pub fn response_from_density<T: Real>(
    density: &SpectralDensity<T>,
    omega: &[T],
    eta: T,
    direction: ResponseDirection,
) -> Result<FreqResponse<T>> {
    check_eta(eta)?;
    let s = direction.eta_sign::<T>()?;
    let poles = density
        .lines
        .iter()
        .map(|l| Pole {
            position: Complex::new(l.omega, -s * eta),
            residue: l.weight,
        })
        .collect();
    Ok(from_poles(omega, eta, direction, poles))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionOptions<T> {
    /// Lorentzian line width as a fraction of `eta`.
    pub broadening_ratio: T,
    /// Quadrature nodes per line width in the innermost panels.
    pub points_per_width: usize,
}

impl<T: Real> Default for ConvolutionOptions<T> {
    fn default() -> Self {
        Self {
            broadening_ratio: T::lit(0.1),
            points_per_width: 64,
        }
    }
}

const PANEL_ORDER: usize = 16;

/// `(1/2pi) int d omega' g(omega') / (omega - omega' +- i eta)` by quadrature.
///
/// Each line of `g = 2 pi sum_l w_l delta(omega' - omega_l)` is broadened to
/// a Lorentzian of width `gamma = ratio * eta`; the kernel then carries
/// `eta - gamma`, which keeps the result equal to the line-sum response (the
/// Lorentzian convolution adds `gamma` back). The integral is taken on
/// panels graded geometrically around both `omega_l` and `omega`.
pub fn convolution_response<T: Real>(
    density: &SpectralDensity<T>,
    omega: &[T],
    eta: T,
    direction: ResponseDirection,
    options: ConvolutionOptions<T>,
) -> Result<FreqResponse<T>> {
    check_eta(eta)?;
    let s = direction.eta_sign::<T>()?;
    let ratio = options.broadening_ratio;
    if !(ratio > T::zero() && ratio < T::one()) {
        return invalid("broadening ratio must lie in (0, 1)");
    }
    if options.points_per_width < 8 {
        return Err(Error::Unresolved(format!(
            "{} quadrature points per line width; at least 8 are needed",
            options.points_per_width
        )));
    }
    let gamma = ratio * eta;
    let eta_k = eta - gamma;
    let nodes_width = T::lit(4.0 * PANEL_ORDER as f64 / options.points_per_width as f64);
    let reach = T::lit(1e4)
        * (density.max_abs_frequency()
            + omega.iter().map(|w| w.abs()).fold(T::zero(), T::max)
            + eta);
    let values = omega
        .par_iter()
        .map(|&w| {
            let mut total = Complex::new(T::zero(), T::zero());
            for line in &density.lines {
                let (lo, hi) = (line.omega.min(w) - reach, line.omega.max(w) + reach);
                let edges = merge_edges(
                    &[
                        graded_edges(line.omega, gamma * nodes_width, lo, hi, None),
                        graded_edges(w, eta_k * nodes_width, lo, hi, None),
                    ],
                    lo,
                    hi,
                );
                let rule = PanelRule::from_edges(&edges, PANEL_ORDER);
                let mut acc = Complex::new(T::zero(), T::zero());
                for (&x, &q) in rule.nodes.iter().zip(&rule.weights) {
                    let d = x - line.omega;
                    let lorentz = gamma / (T::PI() * (d * d + gamma * gamma));
                    acc = acc + Complex::new(q * lorentz, T::zero())
                        / Complex::new(w - x, s * eta_k);
                }
                total = total + line.weight * acc;
            }
            total
        })
        .collect();
    let poles = density
        .lines
        .iter()
        .map(|l| Pole {
            position: Complex::new(l.omega, -s * eta),
            residue: l.weight,
        })
        .collect();
    Ok(FreqResponse {
        omega: omega.to_vec(),
        values,
        eta,
        direction,
        poles,
    })
}

/// `(max pointwise relative deviation, sup-norm relative deviation)`.
pub fn relative_deviation<T: Real>(a: &[Complex<T>], reference: &[Complex<T>]) -> (T, T) {
    let sup = reference.iter().map(|v| v.norm()).fold(T::zero(), T::max);
    let floor = sup * T::lit(1e-12) + T::min_positive_value();
    let mut pointwise = T::zero();
    let mut worst = T::zero();
    for (x, y) in a.iter().zip(reference) {
        let d = (x - y).norm();
        pointwise = pointwise.max(d / y.norm().max(floor));
        worst = worst.max(d);
    }
    (pointwise, worst / sup.max(T::min_positive_value()))
}

/// `E_k / hbar` for a relativistic momentum.
pub fn relativistic_frequency<T: Real>(k: T, constants: &PhysicalConstants<T>) -> Result<T> {
    constants.validate()?;
    let c = constants.c;
    let m = constants.mass;
    let hbar = constants.hbar;
    Ok((m * m * c.powi(4) + c * c * hbar * hbar * k * k).sqrt() / hbar)
}

/// Momentum-diagonal two-branch response: retarded
/// `1/(omega - w_k + i eta) + 1/(omega + w_k + i eta)`, advanced with `-i eta`.
pub fn momentum_response_relativistic<T: Real>(
    k: T,
    constants: &PhysicalConstants<T>,
    omega: &[T],
    eta: T,
    direction: ResponseDirection,
) -> Result<FreqResponse<T>> {
    check_eta(eta)?;
    let s = direction.eta_sign::<T>()?;
    let wk = relativistic_frequency(k, constants)?;
    let one = Complex::new(T::one(), T::zero());
    let poles = vec![
        Pole { position: Complex::new(wk, -s * eta), residue: one },
        Pole { position: Complex::new(-wk, -s * eta), residue: one },
    ];
    Ok(from_poles(omega, eta, direction, poles))
}

/// `2 (omega +- i eta) / ((omega +- i eta)^2 - w_k^2)`, the two branch terms
/// over a common denominator.
pub fn combined_rational_form<T: Real>(omega: T, wk: T, eta: T, direction: ResponseDirection) -> Result<Complex<T>> {
    let s = direction.eta_sign::<T>()?;
    let z = Complex::new(omega, s * eta);
    Ok(z * T::lit(2.0) / (z * z - Complex::new(wk * wk, T::zero())))
}

/// Pieced-together combination: positive branch retarded, negative branch
/// advanced, `1/(omega - w_k + i eta) + 1/(omega + w_k - i eta)`.
pub fn feynman_combination<T: Real>(
    k: T,
    constants: &PhysicalConstants<T>,
    omega: &[T],
    eta: T,
) -> Result<FreqResponse<T>> {
    check_eta(eta)?;
    let wk = relativistic_frequency(k, constants)?;
    let one = Complex::new(T::one(), T::zero());
    let poles = vec![
        Pole { position: Complex::new(wk, -eta), residue: one },
        Pole { position: Complex::new(-wk, eta), residue: one },
    ];
    Ok(from_poles(omega, eta, ResponseDirection::Feynman, poles))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundTrip {
    /// Largest deviation from the pole oracle outside the guard band.
    pub max_deviation: f64,
    /// Largest magnitude on the side where the response must vanish.
    pub max_leakage: f64,
    /// Largest magnitude on the supported side.
    pub peak: f64,
    /// Samples within this distance of `tau = 0` are excluded.
    pub guard: f64,
}

impl RoundTrip {
    pub fn leakage_ratio(&self) -> f64 {
        self.max_leakage / self.peak
    }
}

/// Inverse transform `(1/2pi) int d omega e^{-i omega tau} G(omega)` by a
/// direct sum over the (uniform) response grid, with a smooth flat-top
/// window over the outer half of the band. The result is compared with the
/// pole-inventory oracle.
pub fn inverse_transform_roundtrip<T: Real>(response: &FreqResponse<T>, taus: &[T]) -> Result<RoundTrip> {
    let w = &response.omega;
    if w.len() < 16 {
        return Err(Error::InsufficientSpan("need at least 16 frequency samples".into()));
    }
    let dw = w[1] - w[0];
    if !(dw > T::zero())
        || w.windows(2).any(|p| ((p[1] - p[0]) - dw).abs() > T::lit(1e-9) * dw)
    {
        return invalid("inverse transform needs a uniform frequency grid");
    }
    let (lo, hi) = (w[0], w[w.len() - 1]);
    let center = (lo + hi) * T::lit(0.5);
    let half = (hi - lo) * T::lit(0.5);
    let flat = T::lit(0.5);
    let eta = response.eta;
    let needed = T::lit(10.0) / eta;
    if hi - lo < needed {
        return Err(Error::InsufficientSpan(format!(
            "frequency band {:.6e} is narrower than 10/eta = {:.6e}",
            (hi - lo).as_f64(),
            needed.as_f64()
        )));
    }
    for p in &response.poles {
        let x = p.position.re;
        if ((x - center) / half).abs() > flat {
            return Err(Error::InsufficientSpan(format!(
                "pole at {:.6e} lies outside the flat part of the window",
                x.as_f64()
            )));
        }
    }
    let guard = T::lit(40.0) * T::PI() / (hi - lo);
    let period = T::TAU() / dw;
    let windowed: Vec<Complex<T>> = w
        .iter()
        .zip(&response.values)
        .map(|(&x, v)| v * flat_top((x - center) / half, flat))
        .collect();
    let results: Vec<(T, Complex<T>, Complex<T>)> = taus
        .par_iter()
        .filter(|t| t.abs() >= guard && t.abs() < period * T::lit(0.25))
        .map(|&tau| {
            let sum = w
                .iter()
                .zip(&windowed)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (&x, v)| acc + v * cis(-x * tau));
            (tau, sum * dw / T::TAU(), response.time_domain_oracle(tau))
        })
        .collect();
    if results.is_empty() {
        return invalid("no time samples outside the guard band");
    }
    let supported = |tau: T| match response.direction {
        ResponseDirection::Retarded => tau > T::zero(),
        ResponseDirection::Advanced => tau < T::zero(),
        ResponseDirection::Feynman => true,
    };
    let mut dev = 0.0f64;
    let mut leak = 0.0f64;
    let mut peak = 0.0f64;
    for (tau, got, oracle) in results {
        dev = dev.max((got - oracle).norm().as_f64());
        if supported(tau) {
            peak = peak.max(got.norm().as_f64());
        } else {
            leak = leak.max(got.norm().as_f64());
        }
    }
    Ok(RoundTrip {
        max_deviation: dev,
        max_leakage: leak,
        peak,
        guard: guard.as_f64(),
    })
}
