//! First-order (Schrödinger-type) kernels: auxiliary, retarded and advanced
//! spectral sums, propagation, composition and closed-form references.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{same_grid, SampledFunction};
use crate::quadrature::flat_top;
use crate::scalar::{cis, theta, Real};
use crate::spectra::{EigenSystem, PhysicalConstants};

/// Smallest `|sin(omega tau)|` accepted by the oscillator closed form.
pub const CAUSTIC_TOLERANCE: f64 = 1e-6;

/// Overall normalization of first-order kernels.
///
/// `Consistent` kernels reduce to the discrete delta at `tau = 0+` and solve
/// `i hbar dG/dt - H G = i hbar delta(t) delta(x - x')` with the step factor.
/// `MinusI` multiplies every value by `-i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    #[default]
    Consistent,
    MinusI,
}

impl Convention {
    pub fn factor<T: Real>(self) -> Complex<T> {
        match self {
            Convention::Consistent => Complex::new(T::one(), T::zero()),
            Convention::MinusI => Complex::new(T::zero(), -T::one()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Convention::Consistent => "consistent",
            Convention::MinusI => "minus-i",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Auxiliary,
    Retarded,
    Advanced,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Auxiliary => "auxiliary",
            KernelKind::Retarded => "retarded",
            KernelKind::Advanced => "advanced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Retarded,
    Advanced,
}

impl Direction {
    /// Step factor applied to the auxiliary kernel: `theta(tau)` or `-theta(-tau)`.
    pub fn step<T: Real>(self, tau: T) -> T {
        match self {
            Direction::Retarded => theta(tau),
            Direction::Advanced => -theta(-tau),
        }
    }

    pub fn kind(self) -> KernelKind {
        match self {
            Direction::Retarded => KernelKind::Retarded,
            Direction::Advanced => KernelKind::Advanced,
        }
    }
}

/// Ordered time-difference samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWindow<T> {
    samples: Vec<T>,
    zero_plus: bool,
}

impl<T: Real> TimeWindow<T> {
    /// Sorts the samples. With `zero_plus`, a sample at `1e-9` of the span is
    /// added (unless an equally small positive sample exists) to stand in for
    /// the one-sided limit `tau -> 0+`.
    pub fn new(mut samples: Vec<T>, zero_plus: bool) -> Result<Self> {
        if samples.is_empty() {
            return invalid("time window needs at least one sample");
        }
        if samples.iter().any(|t| !t.is_finite()) {
            return invalid("time samples must be finite");
        }
        samples.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        if samples.windows(2).any(|p| p[1] <= p[0]) {
            return invalid("time samples must be distinct");
        }
        if zero_plus {
            let span = Self::span_of(&samples);
            let eps = span * T::lit(1e-9);
            let has_small = samples
                .iter()
                .any(|&t| t > T::zero() && t <= span * T::lit(1e-6));
            if !has_small {
                samples.push(eps);
                samples.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                if samples.windows(2).any(|p| p[1] <= p[0]) {
                    return invalid("zero-plus sample collides with an existing sample");
                }
            }
        }
        Ok(Self { samples, zero_plus })
    }

    fn span_of(samples: &[T]) -> T {
        let span = samples[samples.len() - 1] - samples[0];
        if span > T::zero() {
            span
        } else {
            samples[0].abs().max(T::one())
        }
    }

    /// `count` evenly spaced samples on `[start, end]`.
    pub fn linspace(start: T, end: T, count: usize, zero_plus: bool) -> Result<Self> {
        if count < 2 || end <= start {
            return invalid("linspace window needs count >= 2 and end > start");
        }
        let h = (end - start) / T::from_usize_lossy(count - 1);
        Self::new(
            (0..count).map(|i| start + h * T::from_usize_lossy(i)).collect(),
            zero_plus,
        )
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn zero_plus(&self) -> bool {
        self.zero_plus
    }

    pub fn span(&self) -> T {
        Self::span_of(&self.samples)
    }

    /// Smallest strictly positive sample.
    pub fn smallest_positive(&self) -> Option<T> {
        self.samples.iter().copied().find(|&t| t > T::zero())
    }

    /// Index of a sample equal to `tau` up to round-off.
    pub fn index_of(&self, tau: T) -> Option<usize> {
        if let Some(i) = self.samples.iter().position(|&t| t == tau) {
            return Some(i);
        }
        let scale = self
            .samples
            .iter()
            .fold(tau.abs(), |m, &t| m.max(t.abs()))
            .max(T::min_positive_value());
        let tol = scale * T::epsilon() * T::lit(64.0);
        self.samples.iter().position(|&t| (t - tau).abs() <= tol)
    }
}

/// Dense `n x n` complex block, row-major, rows indexed by `x` and columns by `x'`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBlock<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> KernelBlock<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::new(T::zero(), T::zero()); n * n],
        }
    }

    pub fn from_data(n: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != n * n {
            return invalid(format!("{} values for an {n} x {n} block", data.len()));
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    pub fn max_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// `(A W B)_ik = sum_j A_ij w_j B_jk`.
    pub fn contract(&self, weights: &[T], other: &Self) -> Self {
        let n = self.n;
        let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
        data.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
            for j in 0..n {
                let a = self.get(i, j) * weights[j];
                for (o, b) in out.iter_mut().zip(other.row(j)) {
                    *o = *o + a * b;
                }
            }
        });
        Self { n, data }
    }
}

/// Two-point function sampled on `grid x grid x times`.
#[derive(Debug, Clone)]
pub struct Kernel<T> {
    basis: Arc<EigenSystem<T>>,
    window: TimeWindow<T>,
    blocks: Vec<KernelBlock<T>>,
    kind: KernelKind,
    order: Order,
    convention: Convention,
}

impl<T: Real> Kernel<T> {
    pub(crate) fn from_parts(
        basis: Arc<EigenSystem<T>>,
        window: TimeWindow<T>,
        blocks: Vec<KernelBlock<T>>,
        kind: KernelKind,
        order: Order,
        convention: Convention,
    ) -> Self {
        Self {
            basis,
            window,
            blocks,
            kind,
            order,
            convention,
        }
    }

    pub fn basis(&self) -> &Arc<EigenSystem<T>> {
        &self.basis
    }

    pub fn window(&self) -> &TimeWindow<T> {
        &self.window
    }

    pub fn times(&self) -> &[T] {
        self.window.samples()
    }

    pub fn blocks(&self) -> &[KernelBlock<T>] {
        &self.blocks
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn block_at(&self, tau: T) -> Result<&KernelBlock<T>> {
        self.window
            .index_of(tau)
            .map(|k| &self.blocks[k])
            .ok_or(Error::TimeNotInWindow { tau: tau.as_f64() })
    }

    /// Same kernel re-expressed in another convention.
    pub fn to_convention(&self, convention: Convention) -> Self {
        if convention == self.convention {
            return self.clone();
        }
        let factor = convention.factor::<T>() / self.convention.factor::<T>();
        Self {
            blocks: self.blocks.iter().map(|b| b.scaled(factor)).collect(),
            convention,
            ..self.clone()
        }
    }

    /// Block at `tau` in the consistent convention; a retarded or advanced
    /// block at exactly `tau = 0` is read as its one-sided limit.
    fn consistent_block(&self, tau: T) -> Result<KernelBlock<T>> {
        let raw = self.block_at(tau)?;
        let mut factor = Convention::Consistent.factor::<T>() / self.convention.factor::<T>();
        if tau == T::zero() && self.kind != KernelKind::Auxiliary {
            factor = factor / theta(T::zero());
        }
        Ok(raw.scaled(factor))
    }
}

fn ensure_first_order<T: Real>(basis: &EigenSystem<T>) -> Result<()> {
    if basis.is_empty() {
        return invalid("kernel needs a non-empty basis");
    }
    if !basis.model().is_first_order() {
        return invalid(format!(
            "{} basis does not describe a first-order problem",
            basis.model().name()
        ));
    }
    Ok(())
}

/// C-infinity spectral taper: weight 1 for `|label| <= start (max|label| + 1)`,
/// falling smoothly to 0 at `max|label| + 1`.
pub fn spectral_taper<T: Real>(basis: &EigenSystem<T>, start: T) -> Vec<T> {
    let top = basis.labels().iter().map(|l| l.abs()).max().unwrap_or(0) as f64 + 1.0;
    basis
        .labels()
        .iter()
        .map(|&l| flat_top(T::lit(l.abs() as f64 / top), start))
        .collect()
}

/// Assembles `sum_n w_n phi_n(x_i) phi_n*(x_j) f_n(tau)` for every window
/// sample.
pub(crate) fn assemble<T: Real>(
    basis: &EigenSystem<T>,
    window: &TimeWindow<T>,
    mode_weights: Option<&[T]>,
    factor: impl Fn(usize, T) -> Complex<T> + Sync,
) -> Vec<KernelBlock<T>> {
    let g = basis.grid().len();
    let modes = basis.modes();
    let weights: Vec<T> = match mode_weights {
        Some(w) => w.to_vec(),
        None => vec![T::one(); modes.len()],
    };
    window
        .samples()
        .par_iter()
        .map(|&tau| {
            let coef: Vec<Complex<T>> = (0..modes.len())
                .map(|n| factor(n, tau) * weights[n])
                .collect();
            let mut data = vec![Complex::new(T::zero(), T::zero()); g * g];
            data.par_chunks_mut(g).enumerate().for_each(|(i, out)| {
                for (n, mode) in modes.iter().enumerate() {
                    if coef[n] == Complex::new(T::zero(), T::zero()) {
                        continue;
                    }
                    let v = mode.values();
                    let a = v[i] * coef[n];
                    for (o, b) in out.iter_mut().zip(v) {
                        *o = *o + a * b.conj();
                    }
                }
            });
            KernelBlock { n: g, data }
        })
        .collect()
}

/// `K(x, x'; tau) = sum_n phi_n(x) phi_n*(x') exp(-i E_n tau / hbar)`, times
/// the convention factor. Relativistic bases sum both branches.
pub fn auxiliary_kernel<T: Real>(
    basis: &Arc<EigenSystem<T>>,
    window: &TimeWindow<T>,
    convention: Convention,
) -> Result<Kernel<T>> {
    auxiliary_kernel_tapered(basis, window, convention, None)
}

/// [`auxiliary_kernel`] with optional per-mode weights (see [`spectral_taper`]).
pub fn auxiliary_kernel_tapered<T: Real>(
    basis: &Arc<EigenSystem<T>>,
    window: &TimeWindow<T>,
    convention: Convention,
    mode_weights: Option<&[T]>,
) -> Result<Kernel<T>> {
    ensure_first_order(basis)?;
    if let Some(w) = mode_weights {
        if w.len() != basis.len() {
            return invalid("one taper weight per mode required");
        }
    }
    let hbar = basis.constants().hbar;
    let energies = basis.energies();
    let c = convention.factor::<T>();
    let blocks = assemble(basis, window, mode_weights, |n, tau| {
        c * cis(-energies[n] * tau / hbar)
    });
    Ok(Kernel::from_parts(
        basis.clone(),
        window.clone(),
        blocks,
        KernelKind::Auxiliary,
        Order::First,
        convention,
    ))
}

/// Multiplies an auxiliary kernel by `theta(tau)` (retarded) or
/// `-theta(-tau)` (advanced). Samples outside the support are exact zeros.
pub fn step_factor_kernel<T: Real>(aux: &Kernel<T>, direction: Direction) -> Result<Kernel<T>> {
    if aux.kind != KernelKind::Auxiliary {
        return Err(Error::WrongKind {
            expected: "auxiliary",
            found: aux.kind.name(),
        });
    }
    let blocks = aux
        .blocks
        .iter()
        .zip(aux.times())
        .map(|(b, &tau)| {
            let s = direction.step(tau);
            if s == T::zero() {
                KernelBlock::zeros(b.n)
            } else {
                b.scaled(Complex::new(s, T::zero()))
            }
        })
        .collect();
    Ok(Kernel {
        blocks,
        kind: direction.kind(),
        ..aux.clone()
    })
}

/// `psi(x_i, tau) = sum_j w_j G^R(x_i, x_j; tau) psi0(x_j)` in the consistent
/// convention. `tau = 0` is read as `0+`.
pub fn propagate<T: Real>(
    kernel: &Kernel<T>,
    psi0: &SampledFunction<T>,
    tau: T,
) -> Result<SampledFunction<T>> {
    if kernel.kind != KernelKind::Retarded {
        return Err(Error::WrongKind {
            expected: "retarded",
            found: kernel.kind.name(),
        });
    }
    if tau < T::zero() {
        return invalid("a retarded kernel cannot evolve a state into the past");
    }
    same_grid(kernel.basis.grid(), psi0.grid())?;
    let block = kernel.consistent_block(tau)?;
    let w = kernel.basis.grid().weights();
    let f: Vec<Complex<T>> = psi0
        .values()
        .iter()
        .zip(w)
        .map(|(v, &wj)| v * wj)
        .collect();
    let values = (0..block.n)
        .into_par_iter()
        .map(|i| {
            block
                .row(i)
                .iter()
                .zip(&f)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (g, v)| acc + g * v)
        })
        .collect();
    SampledFunction::new(psi0.grid().clone(), values)
}

/// `max |K(t1 + t2) - K(t1) W K(t2)|` scaled by the minimum weight (so that it
/// is comparable with the completeness residual), consistent convention.
/// A zero time is read as the one-sided limit `0+`.
pub fn composition_residual<T: Real>(kernel: &Kernel<T>, tau1: T, tau2: T) -> Result<T> {
    if kernel.order != Order::First {
        return invalid("composition applies to first-order kernels");
    }
    if kernel.kind == KernelKind::Advanced {
        return Err(Error::WrongKind {
            expected: "retarded or auxiliary",
            found: kernel.kind.name(),
        });
    }
    if tau1 < T::zero() || tau2 < T::zero() {
        return invalid("composition times must be non-negative");
    }
    let a = kernel.consistent_block(tau1)?;
    let b = kernel.consistent_block(tau2)?;
    let total = kernel.consistent_block(tau1 + tau2)?;
    let grid = kernel.basis.grid();
    let product = a.contract(grid.weights(), &b);
    Ok(total.max_diff(&product) * grid.min_weight())
}

/// `max |K(0+) - delta| / (1 / min weight)` for a first-order auxiliary or
/// retarded kernel.
pub fn initial_condition_residual<T: Real>(kernel: &Kernel<T>) -> Result<T> {
    if kernel.order != Order::First {
        return invalid("initial-condition law here is the first-order one");
    }
    let tau = match kernel.kind {
        KernelKind::Advanced => {
            return Err(Error::WrongKind {
                expected: "auxiliary or retarded",
                found: "advanced",
            })
        }
        _ if kernel.window.index_of(T::zero()).is_some() => T::zero(),
        _ => kernel
            .window
            .smallest_positive()
            .ok_or_else(|| Error::InvalidInput("window has no positive sample".into()))?,
    };
    let block = kernel.consistent_block(tau)?;
    Ok(delta_deviation(&block, kernel.basis.grid().weights(), T::one()))
}

/// `max |B - scale * delta| * min weight`.
pub(crate) fn delta_deviation<T: Real>(block: &KernelBlock<T>, weights: &[T], scale: T) -> T {
    let min_w = weights.iter().copied().fold(T::infinity(), T::min);
    let mut worst = T::zero();
    for i in 0..block.n {
        for j in 0..block.n {
            let mut v = block.get(i, j);
            if i == j {
                v.re = v.re - scale / weights[j];
            }
            worst = worst.max(v.norm());
        }
    }
    worst * min_w
}

/// Off-grid spectral sum at a single point pair, optionally tapered.
pub fn spectral_kernel_at<T: Real>(
    basis: &EigenSystem<T>,
    x: T,
    x_prime: T,
    tau: T,
    convention: Convention,
    mode_weights: Option<&[T]>,
) -> Complex<T> {
    let a = basis.mode_values(x);
    let b = basis.mode_values(x_prime);
    let hbar = basis.constants().hbar;
    let mut sum = Complex::new(T::zero(), T::zero());
    for n in 0..basis.len() {
        let w = mode_weights.map_or(T::one(), |w| w[n]);
        sum = sum + a[n] * b[n].conj() * cis(-basis.energies()[n] * tau / hbar) * w;
    }
    sum * convention.factor::<T>()
}

/// Free-particle kernel `(m / (2 pi i hbar tau))^{d/2} exp(i m dx^2 / (2 hbar tau))`
/// in the consistent convention, `d` = 1 or 3.
pub fn free_kernel_closed_form<T: Real>(
    dx: T,
    tau: T,
    constants: &PhysicalConstants<T>,
    dimension: u32,
) -> Result<Complex<T>> {
    constants.validate()?;
    if dimension != 1 && dimension != 3 {
        return invalid("dimension must be 1 or 3");
    }
    if tau == T::zero() || !tau.is_finite() {
        return invalid("free kernel is singular at tau = 0 (use the delta limit)");
    }
    let d = T::lit(dimension as f64);
    let half_d = d * T::lit(0.5);
    let m = constants.mass;
    let hbar = constants.hbar;
    let magnitude = (m / (T::TAU() * hbar * tau.abs())).powf(half_d);
    // 1/i = e^{-i pi/2}; a negative tau flips the sign of the quarter turn.
    let quarter = -tau.signum() * T::FRAC_PI_4() * d;
    let phase = m * dx * dx / (T::lit(2.0) * hbar * tau);
    Ok(cis(phase + quarter) * magnitude)
}

/// Oscillator kernel with the branch of the square root continued from the
/// free-particle limit; past each caustic the phase drops by `pi/2`.
pub fn oscillator_kernel_closed_form<T: Real>(
    x: T,
    x_prime: T,
    tau: T,
    constants: &PhysicalConstants<T>,
) -> Result<Complex<T>> {
    constants.validate()?;
    let m = constants.mass;
    let w = constants.omega;
    let hbar = constants.hbar;
    let wt = w * tau;
    let s = wt.sin();
    if s.abs() < T::lit(CAUSTIC_TOLERANCE) {
        return Err(Error::Caustic {
            sin: s.abs().as_f64(),
            tolerance: CAUSTIC_TOLERANCE,
        });
    }
    let magnitude = (m * w / (T::TAU() * hbar * s.abs())).sqrt();
    let crossings = (wt.abs() / T::PI()).floor();
    let turn = -(T::FRAC_PI_4() + T::FRAC_PI_2() * crossings) * tau.signum();
    let action = m * w * ((x * x + x_prime * x_prime) * wt.cos() - T::lit(2.0) * x * x_prime)
        / (T::lit(2.0) * hbar * s);
    Ok(cis(action + turn) * magnitude)
}

/// Residuals of `i hbar dG/dt - H G = i hbar delta(t) delta(x - x')` for the
/// retarded kernel of a basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeResidual {
    /// Integrated over `[-dt, dt]`: the jump of `G` at `t = 0` against the
    /// source, normalized by `hbar / min weight`.
    pub jump: f64,
    /// Centred difference at interior positive times (homogeneous equation),
    /// relative to `max |H G|`.
    pub interior: f64,
}

/// Discrete PDE residual with `H` applied through its eigen-decomposition.
pub fn first_order_pde_residual<T: Real>(
    basis: &Arc<EigenSystem<T>>,
    dt: T,
    convention: Convention,
) -> Result<PdeResidual> {
    ensure_first_order(basis)?;
    if !(dt > T::zero()) {
        return invalid("time step must be positive");
    }
    let hbar = basis.constants().hbar;
    let ihbar = Complex::new(T::zero(), hbar);
    let times = vec![-dt, T::zero(), dt * T::lit(0.5), dt, dt * T::lit(2.0), dt * T::lit(3.0)];
    let window = TimeWindow::new(times, false)?;
    let aux = auxiliary_kernel(basis, &window, convention)?;
    let ret = step_factor_kernel(&aux, Direction::Retarded)?;
    let c = convention.factor::<T>();
    let energies = basis.energies().to_vec();
    // H G^R(tau) assembled spectrally, one-sided (s = 1) at tau = 0.
    let hg = |tau: T| -> KernelBlock<T> {
        let s = if tau < T::zero() { T::zero() } else { T::one() };
        let mut blocks = assemble(basis, &TimeWindow::new(vec![tau], false).unwrap(), None, |n, t| {
            c * cis(-energies[n] * t / hbar) * energies[n] * s
        });
        blocks.pop().unwrap()
    };
    let weights = basis.grid().weights();
    let min_w = basis.grid().min_weight();
    let scale = min_w / hbar;

    // Jump: i hbar (G(dt) - G(-dt)) - int_{-dt}^{dt} H G - i hbar delta.
    // Simpson on [0, dt] (the integrand vanishes for tau < 0).
    let g_plus = ret.block_at(dt)?;
    let g_minus = ret.block_at(-dt)?;
    let h0 = hg(T::zero());
    let hm = hg(dt * T::lit(0.5));
    let h1 = hg(dt);
    let n = g_plus.size();
    let mut jump = T::zero();
    for i in 0..n {
        for j in 0..n {
            let integral = (h0.get(i, j) + hm.get(i, j) * T::lit(4.0) + h1.get(i, j)) * (dt / T::lit(6.0));
            let mut r = ihbar * (g_plus.get(i, j) - g_minus.get(i, j)) - integral;
            if i == j {
                r = r - ihbar / weights[j];
            }
            jump = jump.max(r.norm());
        }
    }

    // Interior: i hbar (G(3dt) - G(dt)) / (2 dt) - H G(2dt).
    let a = ret.block_at(dt * T::lit(3.0))?;
    let b = ret.block_at(dt)?;
    let h2 = hg(dt * T::lit(2.0));
    let mut interior = T::zero();
    for i in 0..n {
        for j in 0..n {
            let d = (a.get(i, j) - b.get(i, j)) * ihbar / (T::lit(2.0) * dt);
            interior = interior.max((d - h2.get(i, j)).norm());
        }
    }
    let h_scale = h2.max_abs().max(T::min_positive_value());
    Ok(PdeResidual {
        jump: (jump * scale).as_f64(),
        interior: (interior / h_scale).as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{
        build_free_basis, build_oscillator_basis, build_oscillator_basis_gauss_hermite,
        build_well_basis,
    };
    use std::f64::consts::PI;

    fn unit() -> PhysicalConstants<f64> {
        PhysicalConstants::default()
    }

    fn window(t: &[f64]) -> TimeWindow<f64> {
        TimeWindow::new(t.to_vec(), false).unwrap()
    }

    #[test]
    fn zero_plus_window() {
        let w = TimeWindow::new(vec![-1.0, 0.0, 1.0], true).unwrap();
        let eps = w.smallest_positive().unwrap();
        assert!(eps > 0.0 && eps <= 2e-6);
        assert_eq!(w.samples().len(), 4);
        assert!(TimeWindow::<f64>::new(vec![], false).is_err());
        assert!(TimeWindow::new(vec![1.0, 1.0], false).is_err());
    }

    #[test]
    fn single_mode_kernel_is_one_term() {
        let b = build_well_basis(1.0, 15, unit()).unwrap();
        let one = Arc::new(b.truncate(1).unwrap());
        let k = auxiliary_kernel(&one, &window(&[0.37]), Convention::Consistent).unwrap();
        let phi = one.modes()[0].values();
        let e1 = one.energies()[0];
        for i in 0..phi.len() {
            for j in 0..phi.len() {
                let expect = phi[i] * phi[j] * cis(-e1 * 0.37);
                assert!((k.blocks()[0].get(i, j) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn oscillator_origin_value_at_quarter_period() {
        // The sharp sum at the origin is an alternating series with slowly
        // decaying terms; the smooth taper is what makes 64 modes enough.
        let b = build_oscillator_basis(unit(), 64).unwrap();
        let taper = spectral_taper(&b, 0.3);
        let v = spectral_kernel_at(&b, 0.0, 0.0, PI / 2.0, Convention::Consistent, Some(&taper));
        let expect = Complex::new(0.28209479177387814, -0.28209479177387814);
        assert!((v - expect).norm() < 1e-4, "{v}");
        let closed = oscillator_kernel_closed_form(0.0, 0.0, PI / 2.0, &unit()).unwrap();
        assert!((closed - expect).norm() < 1e-12);
    }

    #[test]
    fn closed_forms_basic_values() {
        let v = free_kernel_closed_form(0.0, 1.0, &unit(), 3).unwrap();
        assert!((v.norm() - (2.0 * PI).powf(-1.5)).abs() < 1e-12);
        let a = free_kernel_closed_form(0.0, 1.0, &unit(), 1).unwrap();
        let b = free_kernel_closed_form(2f64.sqrt(), 1.0, &unit(), 1).unwrap();
        let dphase = (b / a).arg();
        assert!((dphase - 1.0).abs() < 1e-12);
        assert!(free_kernel_closed_form(0.0, 0.0, &unit(), 1).is_err());
        let s1 = oscillator_kernel_closed_form(0.4, -1.1, 0.8, &unit()).unwrap();
        let s2 = oscillator_kernel_closed_form(-1.1, 0.4, 0.8, &unit()).unwrap();
        assert_eq!(s1, s2);
        assert!(matches!(
            oscillator_kernel_closed_form(0.0, 0.0, PI, &unit()),
            Err(Error::Caustic { .. })
        ));
    }

    #[test]
    fn oscillator_short_time_matches_free() {
        let tau = 1e-3;
        let osc = oscillator_kernel_closed_form(0.1, 0.12, tau, &unit()).unwrap();
        let free = free_kernel_closed_form(0.02, tau, &unit(), 1).unwrap();
        assert!(((osc - free) / free).norm() < 1e-3);
    }

    #[test]
    fn oscillator_spectral_sum_at_off_axis_point() {
        let b = build_oscillator_basis_gauss_hermite(unit(), 96).unwrap();
        let taper = spectral_taper(&b, 0.3);
        let v = spectral_kernel_at(&b, 0.3, -0.2, 1.0, Convention::Consistent, Some(&taper));
        let c = oscillator_kernel_closed_form(0.3, -0.2, 1.0, &unit()).unwrap();
        assert!((v - c).norm() < 1e-5, "{}", (v - c).norm());
    }

    #[test]
    fn oscillator_branch_past_caustics() {
        // The continued branch must agree with the spectral sum beyond pi.
        let b = build_oscillator_basis_gauss_hermite(unit(), 400).unwrap();
        let taper = spectral_taper(&b, 0.3);
        for &wt in &[2.0, 4.0, 5.5, 7.5, -2.0, -4.0] {
            let v = spectral_kernel_at(&b, 0.2, 0.5, wt, Convention::Consistent, Some(&taper));
            let c = oscillator_kernel_closed_form(0.2, 0.5, wt, &unit()).unwrap();
            assert!((v - c).norm() < 1e-4 * c.norm(), "wt={wt}: {v} vs {c}");
        }
    }

    #[test]
    fn support_and_recombination() {
        let b = Arc::new(build_well_basis(1.0, 15, unit()).unwrap());
        let w = window(&[-1.0, -0.2, 0.0, 0.2, 1.0]);
        let aux = auxiliary_kernel(&b, &w, Convention::Consistent).unwrap();
        let r = step_factor_kernel(&aux, Direction::Retarded).unwrap();
        let a = step_factor_kernel(&aux, Direction::Advanced).unwrap();
        for (k, &tau) in w.samples().iter().enumerate() {
            if tau < 0.0 {
                assert!(r.blocks()[k].data().iter().all(|v| v.re == 0.0 && v.im == 0.0));
            }
            if tau > 0.0 {
                assert!(a.blocks()[k].data().iter().all(|v| v.re == 0.0 && v.im == 0.0));
            }
            // aux(tau) = G^R(tau) - G^A(tau) at every tau
            let recon = r.blocks()[k].data().iter().zip(a.blocks()[k].data());
            for ((p, q), o) in recon.zip(aux.blocks()[k].data()) {
                assert!((p - q - o).norm() < 1e-14);
            }
        }
        assert!(step_factor_kernel(&r, Direction::Retarded).is_err());
    }

    #[test]
    fn propagation_of_eigenstates() {
        let b = Arc::new(build_well_basis(1.0, 31, unit()).unwrap());
        let w = TimeWindow::new(vec![0.0, 0.25], true).unwrap();
        let r = step_factor_kernel(
            &auxiliary_kernel(&b, &w, Convention::MinusI).unwrap(),
            Direction::Retarded,
        )
        .unwrap();
        let phi = &b.modes()[0];
        let out = propagate(&r, phi, 0.25).unwrap();
        let e1 = b.energies()[0];
        for (o, p) in out.values().iter().zip(phi.values()) {
            assert!((o - p * cis(-e1 * 0.25)).norm() < 1e-8);
        }
        assert!(propagate(&r, phi, -0.25).is_err());
        assert!(matches!(
            propagate(&r, phi, 0.3),
            Err(Error::TimeNotInWindow { .. })
        ));
    }

    #[test]
    fn free_plane_wave_stays_plane_wave() {
        let b = Arc::new(build_free_basis(10.0, 16, unit()).unwrap());
        let w = window(&[0.7]);
        let r = step_factor_kernel(
            &auxiliary_kernel(&b, &w, Convention::Consistent).unwrap(),
            Direction::Retarded,
        )
        .unwrap();
        let idx = 5;
        let out = propagate(&r, &b.modes()[idx], 0.7).unwrap();
        let ph = cis(-b.energies()[idx] * 0.7);
        for (o, p) in out.values().iter().zip(b.modes()[idx].values()) {
            assert!((o - p * ph).norm() < 1e-8);
        }
    }

    #[test]
    fn composition_and_initial_condition() {
        let b = Arc::new(build_well_basis(1.0, 31, unit()).unwrap());
        let w = TimeWindow::new(vec![0.0, 0.1, 0.2, 0.3], true).unwrap();
        let r = step_factor_kernel(
            &auxiliary_kernel(&b, &w, Convention::Consistent).unwrap(),
            Direction::Retarded,
        )
        .unwrap();
        assert!(composition_residual(&r, 0.1, 0.2).unwrap() < 1e-8);
        let c0 = composition_residual(&r, 0.3, 0.0).unwrap();
        assert!(c0 <= b.completeness_residual() + 1e-12);
        assert!(initial_condition_residual(&r).unwrap() < 1e-6);
    }

    #[test]
    fn conjugation_and_hermiticity() {
        let b = Arc::new(build_oscillator_basis(unit(), 20).unwrap());
        let w = window(&[-0.6, 0.0, 0.6]);
        let k = auxiliary_kernel(&b, &w, Convention::Consistent).unwrap();
        let n = k.blocks()[0].size();
        for i in (0..n).step_by(7) {
            for j in (0..n).step_by(5) {
                let a = k.blocks()[0].get(i, j);
                let c = k.blocks()[2].get(j, i).conj();
                assert!((a - c).norm() < 1e-12);
                let h = k.blocks()[1].get(i, j) - k.blocks()[1].get(j, i).conj();
                assert!(h.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn minus_i_is_a_global_factor() {
        let b = Arc::new(build_well_basis(1.0, 9, unit()).unwrap());
        let w = window(&[0.0, 0.4]);
        let a = auxiliary_kernel(&b, &w, Convention::Consistent).unwrap();
        let m = auxiliary_kernel(&b, &w, Convention::MinusI).unwrap();
        for (x, y) in a.blocks().iter().zip(m.blocks()) {
            for (p, q) in x.data().iter().zip(y.data()) {
                assert_eq!(*q, p * Complex::new(0.0, -1.0));
            }
        }
        let back = m.to_convention(Convention::Consistent);
        assert!(back.blocks()[1].max_diff(&a.blocks()[1]) < 1e-15);
    }

    #[test]
    fn pde_residual_separates_conventions() {
        let b = Arc::new(build_well_basis(1.0, 31, unit()).unwrap());
        let good = first_order_pde_residual(&b, 1e-5, Convention::Consistent).unwrap();
        let bad = first_order_pde_residual(&b, 1e-5, Convention::MinusI).unwrap();
        assert!(good.jump < 1e-4, "{good:?}");
        assert!((bad.jump - 2f64.sqrt()).abs() < 1e-2, "{bad:?}");
        assert!(good.interior < 1e-3 && bad.interior < 1e-3);
    }
}
