//! Second-order (wave-type) kernels, electromagnetic pulse descriptors,
//! source convolution and initial-condition audits.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::firstorder::{
    assemble, delta_deviation, Convention, Direction, Kernel, KernelBlock, KernelKind, Order,
    TimeWindow,
};
use crate::grid::{same_grid, Grid1D, GridKind, SampledFunction};
use crate::quadrature::PanelRule;
use crate::scalar::{cis, theta, Real};
use crate::spectra::{Branch, EigenSystem, Model};

/// Frequencies `sqrt(E_n) c` of the wave operator for a basis, or an error if
/// the basis has no second-order reading.
fn wave_numbers<T: Real>(basis: &EigenSystem<T>) -> Result<Vec<T>> {
    if basis.is_empty() {
        return invalid("kernel needs a non-empty basis");
    }
    let k = basis.constants();
    match basis.model() {
        Model::Helmholtz => basis
            .energies()
            .iter()
            .map(|&e| {
                if e < T::zero() {
                    invalid(format!("negative wave eigenvalue {e}"))
                } else {
                    Ok(e.sqrt())
                }
            })
            .collect(),
        // Klein-Gordon reading: the operator eigenvalue is (E_k / hbar c)^2.
        Model::Relativistic => {
            if basis.branches().is_some_and(|b| b.contains(&Branch::Negative)) {
                return invalid("wave kernels use the positive branch only");
            }
            Ok(basis
                .energies()
                .iter()
                .map(|&e| e.abs() / (k.hbar * k.c))
                .collect())
        }
        m => invalid(format!("{} basis has no wave-equation reading", m.name())),
    }
}

/// `sin(q c tau) / q` with its limit `c tau` at `q = 0`.
fn sinc_factor<T: Real>(q: T, c: T, tau: T) -> T {
    if q == T::zero() {
        c * tau
    } else {
        (q * c * tau).sin() / q
    }
}

/// `G = c sum_n phi_n(x) phi_n*(x') sin(sqrt(E_n) c tau) / sqrt(E_n)`.
///
/// Accepts Helmholtz bases (`E = k^2`) and the positive branch of a
/// relativistic basis. Zero modes use the limit `c tau`.
pub fn wave_auxiliary_kernel<T: Real>(
    basis: &Arc<EigenSystem<T>>,
    window: &TimeWindow<T>,
) -> Result<Kernel<T>> {
    let q = wave_numbers(basis)?;
    let c = basis.constants().c;
    let blocks = assemble(basis, window, None, |n, tau| {
        Complex::new(c * sinc_factor(q[n], c, tau), T::zero())
    });
    Ok(Kernel::from_parts(
        basis.clone(),
        window.clone(),
        blocks,
        KernelKind::Auxiliary,
        Order::Second,
        Convention::Consistent,
    ))
}

/// Klein–Gordon auxiliary kernel in units `hbar = c = 1`:
/// `sum_k (1/L) e^{ik dx} sin(E_k tau) / E_k`, `E_k = +sqrt(k^2 + m^2)`.
pub fn kg_auxiliary_kernel<T: Real>(
    basis: &Arc<EigenSystem<T>>,
    window: &TimeWindow<T>,
) -> Result<Kernel<T>> {
    if basis.model() != Model::Relativistic {
        return invalid("Klein-Gordon kernel needs a relativistic basis");
    }
    let k = basis.constants();
    if k.hbar != T::one() || k.c != T::one() {
        return invalid("Klein-Gordon kernel is defined in units hbar = c = 1");
    }
    let positive = Arc::new(basis.branch_only(Branch::Positive)?);
    wave_auxiliary_kernel(&positive, window)
}

/// Off-grid Klein–Gordon kernel value at separation `dx`.
pub fn kg_kernel_at<T: Real>(basis: &EigenSystem<T>, dx: T, tau: T) -> Result<Complex<T>> {
    if basis.model() != Model::Relativistic {
        return invalid("Klein-Gordon kernel needs a relativistic basis");
    }
    let length = basis.length().expect("plane-wave basis has a box length");
    let mut sum = Complex::new(T::zero(), T::zero());
    for n in 0..basis.len() {
        if basis.branch(n) != Some(Branch::Positive) {
            continue;
        }
        let k = basis.wavenumber(n).expect("plane-wave basis");
        let e = basis.energies()[n];
        sum = sum + cis(k * dx) * ((e * tau).sin() / e);
    }
    Ok(sum / length)
}

/// `max |G(0)|` over the block at `tau = 0`.
pub fn wave_initial_value<T: Real>(kernel: &Kernel<T>) -> Result<T> {
    Ok(kernel.block_at(T::zero())?.max_abs())
}

/// One-sided difference `(G(dt) - G(0)) / dt` against `c^2 delta`, as
/// `max |. - c^2 delta| * min weight / c^2`.
pub fn wave_initial_derivative_residual<T: Real>(kernel: &Kernel<T>, dt: T) -> Result<T> {
    if kernel.order() != Order::Second || kernel.kind() != KernelKind::Auxiliary {
        return invalid("derivative audit needs a second-order auxiliary kernel");
    }
    let c = kernel.basis().constants().c;
    let g0 = kernel.block_at(T::zero())?;
    let g1 = kernel.block_at(dt)?;
    let n = g0.size();
    let inv = Complex::new(T::one() / dt, T::zero());
    let data: Vec<Complex<T>> = g1
        .data()
        .iter()
        .zip(g0.data())
        .map(|(a, b)| (a - b) * inv)
        .collect();
    let diff = KernelBlock::from_data(n, data)?;
    Ok(delta_deviation(&diff, kernel.basis().grid().weights(), c * c) / (c * c))
}

/// Analytic bound for the Taylor part of the one-sided difference:
/// `c^2 E_max dt^2 / 6`.
pub fn wave_derivative_scale<T: Real>(basis: &EigenSystem<T>) -> Result<T> {
    let q = wave_numbers(basis)?;
    let c = basis.constants().c;
    let qmax = q.iter().copied().fold(T::zero(), T::max);
    Ok(c * c * qmax * qmax)
}

/// Relative residual of `(-(1/c^2) d^2/dt^2 + d^2/dx^2) G` at `tau`, using
/// centred differences in time and a periodic second-difference Laplacian.
pub fn wave_pde_residual<T: Real>(basis: &Arc<EigenSystem<T>>, tau: T, dt: T) -> Result<T> {
    if basis.model() != Model::Helmholtz {
        return invalid("PDE residual is defined for the Helmholtz box");
    }
    if basis.grid().kind() != GridKind::Periodic {
        return invalid("PDE residual needs a periodic grid");
    }
    if !(dt > T::zero()) || tau - dt <= T::zero() {
        return invalid("need 0 < dt < tau");
    }
    let window = TimeWindow::new(vec![tau - dt, tau, tau + dt], false)?;
    let k = wave_auxiliary_kernel(basis, &window)?;
    let (a, b, c_) = (&k.blocks()[0], &k.blocks()[1], &k.blocks()[2]);
    let c = basis.constants().c;
    let h = basis.grid().spacing().expect("uniform periodic grid");
    let n = b.size();
    let mut worst = T::zero();
    let mut scale = T::zero();
    for i in 0..n {
        let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
        for j in 0..n {
            let dtt = (a.get(i, j) - b.get(i, j) * T::lit(2.0) + c_.get(i, j)) / (dt * dt);
            let dxx = (b.get(ip, j) - b.get(i, j) * T::lit(2.0) + b.get(im, j)) / (h * h);
            let r = -dtt / (c * c) + dxx;
            worst = worst.max(r.norm());
            scale = scale.max(dxx.norm());
        }
    }
    Ok(worst / scale.max(T::min_positive_value()))
}

/// Retarded or advanced point-source kernel `(1/4 pi R) delta(tau -+ R/c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseDescriptor<T> {
    pub amplitude: T,
    pub arrival: T,
    /// Width of the sampled nascent pulse; `None` for the bare descriptor.
    pub width: Option<T>,
    pub direction: Direction,
}

/// Electromagnetic vacuum kernel at separation `r` as a pulse descriptor.
pub fn em_kernel_closed_form<T: Real>(
    r: T,
    c: T,
    direction: Direction,
) -> Result<PulseDescriptor<T>> {
    if !(r > T::zero()) || !r.is_finite() {
        return invalid("separation must be positive (the self-field is singular)");
    }
    if !(c > T::zero()) {
        return invalid("c must be positive");
    }
    let delay = r / c;
    Ok(PulseDescriptor {
        amplitude: T::one() / (T::lit(4.0) * T::PI() * r),
        arrival: match direction {
            Direction::Retarded => delay,
            Direction::Advanced => -delay,
        },
        width: None,
        direction,
    })
}

impl<T: Real> PulseDescriptor<T> {
    pub fn with_width(self, width: T) -> Result<Self> {
        if !(width > T::zero()) {
            return invalid("pulse width must be positive");
        }
        Ok(Self {
            width: Some(width),
            ..self
        })
    }

    /// Support of the sampled pulse: `[arrival, arrival + w]` for retarded
    /// pulses, `[arrival - w, arrival]` for advanced ones.
    pub fn support(&self) -> Option<(T, T)> {
        let w = self.width?;
        Some(match self.direction {
            Direction::Retarded => (self.arrival, self.arrival + w),
            Direction::Advanced => (self.arrival - w, self.arrival),
        })
    }

    /// Nascent pulse `amplitude * (1 - cos(2 pi s / w)) / w` on its support,
    /// exactly zero outside. Unit area, so it sifts like the delta.
    pub fn sample(&self, tau: T) -> Result<T> {
        let (lo, hi) = self
            .support()
            .ok_or_else(|| Error::InvalidInput("descriptor has no width".into()))?;
        if tau <= lo || tau >= hi {
            return Ok(T::zero());
        }
        let w = hi - lo;
        let s = (tau - lo) / w;
        Ok(self.amplitude * (T::one() - (T::TAU() * s).cos()) / w)
    }

    /// Exact sifting of a source history: `amplitude * q(t - arrival)`.
    pub fn sift(&self, t: T, q: impl Fn(T) -> T) -> T {
        self.amplitude * q(t - self.arrival)
    }
}

/// Gaussian-regularized radial kernel in closed form,
/// `(c / 8 pi^2 R) sqrt(pi/eps) [e^{-(R - c tau)^2/4 eps} - e^{-(R + c tau)^2/4 eps}]`.
pub fn em_kernel_regularized<T: Real>(r: T, tau: T, c: T, eps: T) -> T {
    let four_eps = T::lit(4.0) * eps;
    let a = (r - c * tau).powi(2) / four_eps;
    let b = (r + c * tau).powi(2) / four_eps;
    c / (T::lit(8.0) * T::PI() * T::PI() * r) * (T::PI() / eps).sqrt() * ((-a).exp() - (-b).exp())
}

/// The same kernel from its radial wavenumber integral
/// `(c / 2 pi^2 R) int_0^inf sin(kR) sin(k c tau) e^{-eps k^2} dk`, by
/// panel quadrature. Independent of [`em_kernel_regularized`].
pub fn em_kernel_k_integral<T: Real>(r: T, tau: T, c: T, eps: T) -> T {
    let kmax = (T::lit(40.0) / eps).sqrt();
    let freq = r + c * tau.abs();
    let panel = (T::PI() / freq.max(T::lit(1e-12))).min(kmax / T::lit(8.0));
    let count = (kmax / panel).ceil().to_usize().unwrap_or(8).max(8);
    let edges: Vec<T> = (0..=count)
        .map(|i| kmax * T::from_usize_lossy(i) / T::from_usize_lossy(count))
        .collect();
    let rule = PanelRule::from_edges(&edges, 16);
    let integral = rule.integrate(|k| (k * r).sin() * (k * c * tau).sin() * (-eps * k * k).exp());
    c / (T::lit(2.0) * T::PI() * T::PI() * r) * integral
}

/// `theta(t) Q / (4 pi eps0 r) theta(t - r/c)`.
pub fn point_charge_potential<T: Real>(q: T, epsilon0: T, r: T, t: T, c: T) -> Result<T> {
    if !(r > T::zero()) {
        return invalid("r must be positive");
    }
    if !(epsilon0 > T::zero()) || !(c > T::zero()) {
        return invalid("epsilon0 and c must be positive");
    }
    Ok(theta(t) * q / (T::lit(4.0) * T::PI() * epsilon0 * r) * theta(t - r / c))
}

/// Charge history `Q(t')` of a point source at the origin.
pub struct PointSource<T> {
    charge: Box<dyn Fn(T) -> T + Send + Sync>,
    breakpoints: Vec<T>,
}

impl<T: Real> PointSource<T> {
    /// `Q(t')` with the listed non-smooth times.
    pub fn new(charge: impl Fn(T) -> T + Send + Sync + 'static, breakpoints: Vec<T>) -> Self {
        Self {
            charge: Box::new(charge),
            breakpoints,
        }
    }

    /// A charge `Q` that appears at `t' = 0`: `Q theta(t')`.
    pub fn emerging_charge(q: T) -> Self {
        Self::new(move |t| q * theta(t), vec![T::zero()])
    }

    pub fn charge(&self, t: T) -> T {
        (self.charge)(t)
    }
}

/// Potential at distance `r` and time `t` from convolving the sampled
/// retarded pulse (width `width`) with the source history, divided by eps0.
pub fn em_potential_from_source<T: Real>(
    source: &PointSource<T>,
    r: T,
    t: T,
    c: T,
    epsilon0: T,
    width: T,
) -> Result<T> {
    let pulse = em_kernel_closed_form(r, c, Direction::Retarded)?.with_width(width)?;
    let (lo, hi) = pulse.support().expect("width set");
    // tau = t - t' in [lo, hi]  <=>  t' in [t - hi, t - lo]
    let (a, b) = (t - hi, t - lo);
    let mut edges = vec![a, b];
    edges.extend(source.breakpoints.iter().copied().filter(|&s| s > a && s < b));
    edges.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    // Subdivide so the raised cosine is resolved to round-off.
    let mut fine = Vec::new();
    for pair in edges.windows(2) {
        let pieces = 8usize;
        for i in 0..pieces {
            fine.push(pair[0] + (pair[1] - pair[0]) * T::from_usize_lossy(i) / T::lit(pieces as f64));
        }
    }
    fine.push(b);
    let rule = PanelRule::from_edges(&fine, 16);
    let integral = rule.integrate(|tp| pulse.sample(t - tp).unwrap_or(T::zero()) * source.charge(tp));
    Ok(integral / epsilon0)
}

/// Source density `f(x, t')` on a grid and a uniform set of time samples.
#[derive(Debug, Clone)]
pub struct SourceField<T> {
    grid: Arc<Grid1D<T>>,
    times: Vec<T>,
    values: Vec<Vec<Complex<T>>>,
}

impl<T: Real> SourceField<T> {
    pub fn new(grid: Arc<Grid1D<T>>, times: Vec<T>, values: Vec<Vec<Complex<T>>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return invalid("one value row per time sample required");
        }
        if times.windows(2).any(|p| p[1] <= p[0]) {
            return invalid("source times must be increasing");
        }
        for row in &values {
            SampledFunction::new(grid.clone(), row.clone())?;
        }
        Ok(Self {
            grid,
            times,
            values,
        })
    }

    pub fn from_fn(
        grid: Arc<Grid1D<T>>,
        times: Vec<T>,
        f: impl Fn(T, T) -> Complex<T>,
    ) -> Result<Self> {
        let values = times
            .iter()
            .map(|&t| grid.points().iter().map(|&x| f(x, t)).collect())
            .collect();
        Self::new(grid, times, values)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn grid(&self) -> &Arc<Grid1D<T>> {
        &self.grid
    }
}

/// Space-time field `psi(x_i, t_k)`.
#[derive(Debug, Clone)]
pub struct SpaceTimeField<T> {
    pub grid: Arc<Grid1D<T>>,
    pub times: Vec<T>,
    pub values: Vec<Vec<Complex<T>>>,
}

/// `psi(x, t) = sum_{t'} sum_j dt' w_j G^R(x, x_j; t - t') f(x_j, t')`,
/// trapezoid in `t'`, evaluated at the source times. Lags with `t' > t` are
/// skipped because the retarded kernel vanishes there.
pub fn field_from_source<T: Real>(
    kernel: &Kernel<T>,
    source: &SourceField<T>,
) -> Result<SpaceTimeField<T>> {
    if kernel.kind() != KernelKind::Retarded {
        return Err(Error::WrongKind {
            expected: "retarded",
            found: kernel.kind().name(),
        });
    }
    same_grid(kernel.basis().grid(), &source.grid)?;
    let ts = &source.times;
    let m = ts.len();
    let tw: Vec<T> = (0..m)
        .map(|l| {
            let left = if l > 0 { ts[l] - ts[l - 1] } else { T::zero() };
            let right = if l + 1 < m { ts[l + 1] - ts[l] } else { T::zero() };
            (left + right) * T::lit(0.5)
        })
        .collect();
    let w = source.grid.weights();
    let g = source.grid.len();
    let values = (0..m)
        .into_par_iter()
        .map(|k| -> Result<Vec<Complex<T>>> {
            let mut out = vec![Complex::new(T::zero(), T::zero()); g];
            for l in 0..=k {
                let lag = ts[k] - ts[l];
                let block = kernel.block_at(lag)?;
                let f = &source.values[l];
                for (i, o) in out.iter_mut().enumerate() {
                    let row = block.row(i);
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for j in 0..g {
                        acc = acc + row[j] * f[j] * w[j];
                    }
                    *o = *o + acc * tw[l];
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpaceTimeField {
        grid: source.grid.clone(),
        times: ts.clone(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firstorder::step_factor_kernel;
    use crate::spectra::{build_helmholtz_basis, build_relativistic_branches, build_well_basis, PhysicalConstants};
    use std::f64::consts::PI;

    fn unit() -> PhysicalConstants<f64> {
        PhysicalConstants::default()
    }

    #[test]
    fn wave_kernel_vanishes_at_zero_and_is_odd() {
        let b = Arc::new(build_helmholtz_basis(6.0, 12, unit()).unwrap());
        let w = TimeWindow::new(vec![-0.3, 0.0, 0.3], false).unwrap();
        let k = wave_auxiliary_kernel(&b, &w).unwrap();
        assert!(k.blocks()[1].data().iter().all(|v| v.re == 0.0 && v.im == 0.0));
        for (a, b) in k.blocks()[0].data().iter().zip(k.blocks()[2].data()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn single_mode_wave_kernel() {
        let c = 1.7;
        let one = Arc::new(
            crate::spectra::build_helmholtz_basis(6.0, 4, PhysicalConstants { c, ..unit() })
                .unwrap()
                .select(&[3])
                .unwrap(),
        );
        let w = TimeWindow::new(vec![0.45], false).unwrap();
        let k = wave_auxiliary_kernel(&one, &w).unwrap();
        let e = one.energies()[0];
        let phi = one.modes()[0].values();
        for i in 0..phi.len() {
            for j in 0..phi.len() {
                let expect = phi[i] * phi[j].conj() * (c * (e.sqrt() * c * 0.45).sin() / e.sqrt());
                assert!((k.blocks()[0].get(i, j) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_mode_uses_linear_limit() {
        let b = Arc::new(build_helmholtz_basis(6.0, 4, unit()).unwrap().select(&[0]).unwrap());
        let w = TimeWindow::new(vec![0.8], false).unwrap();
        let k = wave_auxiliary_kernel(&b, &w).unwrap();
        let expect = 0.8 / 6.0;
        assert!((k.blocks()[0].get(0, 0).re - expect).abs() < 1e-14);
    }

    #[test]
    fn rejects_first_order_models() {
        let b = Arc::new(build_well_basis(1.0, 5, unit()).unwrap());
        let w = TimeWindow::new(vec![0.0], false).unwrap();
        assert!(wave_auxiliary_kernel(&b, &w).is_err());
    }

    #[test]
    fn derivative_matches_scaled_delta() {
        let c = 2.0;
        let b = Arc::new(build_helmholtz_basis(8.0, 16, PhysicalConstants { c, ..unit() }).unwrap());
        let dt = 1e-4;
        let w = TimeWindow::new(vec![0.0, dt], false).unwrap();
        let k = wave_auxiliary_kernel(&b, &w).unwrap();
        let r = wave_initial_derivative_residual(&k, dt).unwrap();
        let bound = b.completeness_residual() + 10.0 * dt * dt * wave_derivative_scale(&b).unwrap();
        assert!(r < bound, "{r} vs {bound}");
    }

    #[test]
    fn kg_kernel_properties() {
        let b = Arc::new(build_relativistic_branches(20.0, 64, unit()).unwrap());
        let dt = 1e-4;
        let w = TimeWindow::new(vec![0.0, dt], false).unwrap();
        let k = kg_auxiliary_kernel(&b, &w).unwrap();
        assert!(k.blocks()[0].data().iter().all(|v| v.norm() == 0.0));
        let r = wave_initial_derivative_residual(&k, dt).unwrap();
        let pos = b.branch_only(Branch::Positive).unwrap();
        let bound = pos.completeness_residual() + 10.0 * dt * dt * wave_derivative_scale(&pos).unwrap();
        assert!(r < bound);
        // heavier mass: the finite k-sum dephases and the kernel shrinks
        let mags: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&m| {
                let b = build_relativistic_branches(20.0, 64, PhysicalConstants { mass: m, ..unit() })
                    .unwrap();
                kg_kernel_at(&b, 0.5, 2.0).unwrap().norm()
            })
            .collect();
        assert!(mags[0] > mags[1] && mags[1] > mags[2], "{mags:?}");
        let wrong = Arc::new(
            build_relativistic_branches(20.0, 8, PhysicalConstants { c: 2.0, ..unit() }).unwrap(),
        );
        assert!(kg_auxiliary_kernel(&wrong, &w).is_err());
    }

    #[test]
    fn pulse_descriptors() {
        let p = em_kernel_closed_form(1.0, 1.0, Direction::Retarded).unwrap();
        assert!((p.amplitude - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(p.arrival, 1.0);
        let a = em_kernel_closed_form(1.0, 1.0, Direction::Advanced).unwrap();
        assert_eq!(a.arrival, -p.arrival);
        let q = em_kernel_closed_form(2.0, 1.0, Direction::Retarded).unwrap();
        assert_eq!(q.amplitude * 2.0, p.amplitude);
        assert!(em_kernel_closed_form(0.0, 1.0, Direction::Retarded).is_err());
        let s = p.with_width(0.1).unwrap();
        assert_eq!(s.sample(0.999).unwrap(), 0.0);
        assert_eq!(s.sample(1.0).unwrap(), 0.0);
        let rule = PanelRule::from_edges(&[1.0, 1.05, 1.1], 16);
        let area = rule.integrate(|t| s.sample(t).unwrap());
        assert!((area - p.amplitude).abs() < 1e-14);
    }

    #[test]
    fn radial_integral_confirms_pulse_signs() {
        let (r, c, eps) = (1.0f64, 1.0, 1e-2);
        for &tau in &[-1.2, -1.0, -0.4, 0.3, 0.9, 1.0, 1.1, 1.6] {
            let a = em_kernel_k_integral(r, tau, c, eps);
            let b = em_kernel_regularized(r, tau, c, eps);
            assert!((a - b).abs() < 1e-10, "tau={tau}: {a} vs {b}");
        }
        // positive pulse at +R/c, negative at -R/c
        assert!(em_kernel_regularized(1.0, 1.0, 1.0, 1e-3) > 0.0);
        assert!(em_kernel_regularized(1.0, -1.0, 1.0, 1e-3) < 0.0);
        // unit-area lobes of amplitude 1/(4 pi R)
        let rule = PanelRule::from_edges(&(0..=40).map(|i| 0.5 + i as f64 / 40.0).collect::<Vec<_>>(), 16);
        let area = rule.integrate(|t| em_kernel_regularized(1.0, t, 1.0, 1e-3));
        assert!((area - 1.0 / (4.0 * PI)).abs() < 1e-6);
    }

    #[test]
    fn point_charge_values() {
        let v = point_charge_potential(1.0, 1.0, 1.0, 2.0, 1.0).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(point_charge_potential(1.0, 1.0, 1.0, 0.5, 1.0).unwrap(), 0.0);
        assert_eq!(point_charge_potential(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 0.5 / (4.0 * PI));
        assert!(point_charge_potential(1.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn convolution_reproduces_point_charge() {
        let src = PointSource::emerging_charge(2.5);
        let (r, c, eps0, w) = (1.5f64, 2.0, 0.7, 1e-3);
        for &t in &[0.1, 0.5, 0.7499, 0.752, 1.0, 3.0] {
            let conv = em_potential_from_source(&src, r, t, c, eps0, w).unwrap();
            let exact = point_charge_potential(2.5, eps0, r, t, c).unwrap();
            if t < r / c {
                assert_eq!(conv, 0.0);
            } else {
                assert!((conv - exact).abs() < 1e-3 * exact.abs(), "t={t}: {conv} vs {exact}");
            }
        }
    }

    #[test]
    fn field_from_source_support() {
        let b = Arc::new(build_helmholtz_basis(6.0, 8, unit()).unwrap());
        let times: Vec<f64> = (0..6).map(|i| i as f64 * 0.1).collect();
        let mut lags: Vec<f64> = times.clone();
        lags.extend(times.iter().skip(1).map(|t| -t));
        let w = TimeWindow::new(lags, false).unwrap();
        let r = step_factor_kernel(&wave_auxiliary_kernel(&b, &w).unwrap(), Direction::Retarded).unwrap();
        let zero = SourceField::from_fn(b.grid().clone(), times.clone(), |_, _| Complex::new(0.0, 0.0)).unwrap();
        let f = field_from_source(&r, &zero).unwrap();
        assert!(f.values.iter().flatten().all(|v| v.norm() == 0.0));
        let late = SourceField::from_fn(b.grid().clone(), times.clone(), |x, t| {
            Complex::new(if t > 0.35 { (x).cos() } else { 0.0 }, 0.0)
        })
        .unwrap();
        let f = field_from_source(&r, &late).unwrap();
        for (k, &t) in times.iter().enumerate() {
            if t < 0.35 {
                assert!(f.values[k].iter().all(|v| v.norm() == 0.0));
            }
        }
        assert!(f.values[5].iter().any(|v| v.norm() > 0.0));
    }

    #[test]
    fn pde_residual_is_second_order_in_space() {
        let residual = |cutoff: usize| {
            let b = Arc::new(
                build_helmholtz_basis(2.0 * PI, cutoff, unit()).unwrap().truncate(5).unwrap(),
            );
            wave_pde_residual(&b, 0.5, 1e-3).unwrap()
        };
        let (coarse, fine) = (residual(32), residual(64));
        assert!(coarse < 5e-3, "{coarse}");
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }
}
