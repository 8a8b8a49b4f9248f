//! Model eigen-systems, state projection and completeness audits.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{same_grid, Grid1D, GridKind, SampledFunction};
use crate::scalar::{all_finite, Real};

/// Boundary magnitude above which a grid is considered too narrow for the
/// oscillator modes it must carry.
pub const EDGE_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants<T> {
    pub hbar: T,
    pub c: T,
    pub mass: T,
    pub omega: T,
    pub epsilon0: T,
}

impl<T: Real> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self {
            hbar: T::one(),
            c: T::one(),
            mass: T::one(),
            omega: T::one(),
            epsilon0: T::one(),
        }
    }
}

impl<T: Real> PhysicalConstants<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("hbar", self.hbar),
            ("c", self.c),
            ("mass", self.mass),
            ("omega", self.omega),
            ("epsilon0", self.epsilon0),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                return invalid(format!("constant {name} must be positive and finite, got {v}"));
            }
        }
        Ok(())
    }

    /// Inverse oscillator length `sqrt(m omega / hbar)`.
    pub fn alpha(&self) -> T {
        (self.mass * self.omega / self.hbar).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Free,
    Well,
    Oscillator,
    Relativistic,
    Helmholtz,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Free => "free",
            Model::Well => "well",
            Model::Oscillator => "oscillator",
            Model::Relativistic => "relativistic",
            Model::Helmholtz => "helmholtz",
        }
    }

    /// Models whose eigenvalues are energies of a first-order equation.
    pub fn is_first_order(self) -> bool {
        !matches!(self, Model::Helmholtz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Branch::Positive => T::one(),
            Branch::Negative => -T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape<T> {
    /// Plane waves on `[-length/2, length/2)`.
    Box { length: T },
    /// Sine modes on `(0, width)`.
    Well { width: T },
    Oscillator { alpha: T },
}

/// Truncated spectrum `{E_n, phi_n}` sampled on a grid.
#[derive(Debug, Clone)]
pub struct EigenSystem<T> {
    grid: Arc<Grid1D<T>>,
    energies: Vec<T>,
    modes: Vec<SampledFunction<T>>,
    labels: Vec<i64>,
    branches: Option<Vec<Branch>>,
    constants: PhysicalConstants<T>,
    model: Model,
    shape: Shape<T>,
}

/// Plane-wave labels ordered by `|j|`: `0, 1, -1, 2, -2, ...`.
fn plane_wave_labels(cutoff: usize) -> Vec<i64> {
    let mut labels = vec![0i64];
    for j in 1..=cutoff as i64 {
        labels.push(j);
        labels.push(-j);
    }
    labels
}

/// Calls `f(k, phi_k(x))` for `k < n`, using the normalized three-term
/// recurrence with running rescaling so that large `n` neither overflows nor
/// loses the Gaussian envelope.
pub(crate) fn hermite_functions<T: Real>(n: usize, alpha: T, x: T, mut f: impl FnMut(usize, T)) {
    if n == 0 {
        return;
    }
    let a = alpha.as_f64();
    let ax = a * x.as_f64();
    let mut log_scale = 0.25 * (a * a / std::f64::consts::PI).ln() - 0.5 * ax * ax;
    let mut prev = 0.0f64;
    let mut cur = 1.0f64;
    f(0, T::lit(log_scale.exp()));
    for k in 0..n - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * ax * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e100 {
            prev *= 1e-100;
            cur *= 1e-100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
        f(k + 1, T::lit(cur * log_scale.exp()));
    }
}

/// `phi_n(x)` for a single oscillator mode.
pub fn hermite_function<T: Real>(n: usize, alpha: T, x: T) -> T {
    let mut out = T::zero();
    hermite_functions(n + 1, alpha, x, |k, v| {
        if k == n {
            out = v;
        }
    });
    out
}

impl<T: Real> EigenSystem<T> {
    pub fn grid(&self) -> &Arc<Grid1D<T>> {
        &self.grid
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn modes(&self) -> &[SampledFunction<T>] {
        &self.modes
    }

    /// Integer quantum labels: `j` for plane waves, `n` otherwise.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn branches(&self) -> Option<&[Branch]> {
        self.branches.as_deref()
    }

    pub fn branch(&self, n: usize) -> Option<Branch> {
        self.branches.as_ref().map(|b| b[n])
    }

    pub fn constants(&self) -> &PhysicalConstants<T> {
        &self.constants
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Box length or well width; `None` for the oscillator.
    pub fn length(&self) -> Option<T> {
        match self.shape {
            Shape::Box { length } => Some(length),
            Shape::Well { width } => Some(width),
            Shape::Oscillator { .. } => None,
        }
    }

    /// Wavenumber of a plane-wave mode.
    pub fn wavenumber(&self, n: usize) -> Option<T> {
        match self.shape {
            Shape::Box { length } => {
                Some(T::TAU() * T::lit(self.labels[n] as f64) / length)
            }
            _ => None,
        }
    }

    /// Analytic value of mode `n` at an arbitrary coordinate.
    pub fn mode_value(&self, n: usize, x: T) -> Complex<T> {
        let label = self.labels[n];
        match self.shape {
            Shape::Box { length } => {
                let k = T::TAU() * T::lit(label as f64) / length;
                crate::scalar::cis(k * x) / length.sqrt()
            }
            Shape::Well { width } => {
                if x <= T::zero() || x >= width {
                    return Complex::new(T::zero(), T::zero());
                }
                let v = (T::lit(2.0) / width).sqrt()
                    * (T::PI() * T::lit(label as f64) * x / width).sin();
                Complex::new(v, T::zero())
            }
            Shape::Oscillator { alpha } => {
                Complex::new(hermite_function(label as usize, alpha, x), T::zero())
            }
        }
    }

    /// All mode values at `x`, in mode order.
    pub fn mode_values(&self, x: T) -> Vec<Complex<T>> {
        match self.shape {
            Shape::Oscillator { alpha } => {
                let top = self.labels.iter().copied().max().unwrap_or(0) as usize + 1;
                let mut table = vec![T::zero(); top];
                hermite_functions(top, alpha, x, |k, v| table[k] = v);
                self.labels
                    .iter()
                    .map(|&l| Complex::new(table[l as usize], T::zero()))
                    .collect()
            }
            _ => (0..self.len()).map(|n| self.mode_value(n, x)).collect(),
        }
    }

    /// Sub-basis made of the listed modes, in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return invalid("selection must keep at least one mode");
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return invalid(format!("mode index {bad} out of range ({} modes)", self.len()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            energies: indices.iter().map(|&i| self.energies[i]).collect(),
            modes: indices.iter().map(|&i| self.modes[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            branches: self
                .branches
                .as_ref()
                .map(|b| indices.iter().map(|&i| b[i]).collect()),
            constants: self.constants,
            model: self.model,
            shape: self.shape,
        })
    }

    /// The first `n` modes.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        self.select(&(0..n).collect::<Vec<_>>())
    }

    /// Modes of one energy branch (all modes if the basis is unbranched).
    pub fn branch_only(&self, branch: Branch) -> Result<Self> {
        match &self.branches {
            None => Ok(self.clone()),
            Some(b) => {
                let idx: Vec<usize> = (0..self.len()).filter(|&i| b[i] == branch).collect();
                self.select(&idx)
            }
        }
    }

    /// Groups of mode indices that each form one orthonormal family.
    fn families(&self) -> Vec<Vec<usize>> {
        match &self.branches {
            None => vec![(0..self.len()).collect()],
            Some(b) => [Branch::Positive, Branch::Negative]
                .iter()
                .map(|br| (0..self.len()).filter(|&i| b[i] == *br).collect::<Vec<_>>())
                .filter(|v| !v.is_empty())
                .collect(),
        }
    }

    /// `max |<phi_m, phi_n> - delta_mn|` over retained pairs, per branch.
    pub fn orthonormality_residual(&self) -> T {
        let w = self.grid.weights();
        self.families()
            .iter()
            .map(|fam| {
                fam.par_iter()
                    .enumerate()
                    .map(|(a, &m)| {
                        let fm = self.modes[m].values();
                        fam[a..]
                            .iter()
                            .map(|&n| {
                                let fn_ = self.modes[n].values();
                                let ip = fm
                                    .iter()
                                    .zip(fn_)
                                    .zip(w)
                                    .fold(Complex::new(T::zero(), T::zero()), |acc, ((p, q), &wi)| {
                                        acc + p.conj() * q * wi
                                    });
                                let target = if m == n { T::one() } else { T::zero() };
                                (ip - Complex::new(target, T::zero())).norm()
                            })
                            .fold(T::zero(), T::max)
                    })
                    .reduce(T::zero, T::max)
            })
            .fold(T::zero(), T::max)
    }

    /// Discrete completeness defect, normalized by `1 / min weight`.
    ///
    /// For branched bases each branch is audited separately, since both
    /// branches share the same spatial modes.
    pub fn completeness_residual(&self) -> T {
        let fam = self.families().into_iter().next().unwrap_or_default();
        let modes: Vec<&[Complex<T>]> = fam.iter().map(|&n| self.modes[n].values()).collect();
        let w = self.grid.weights();
        let g = self.grid.len();
        let worst = (0..g)
            .into_par_iter()
            .map(|i| {
                let mut row_worst = T::zero();
                for j in 0..g {
                    let mut s = Complex::new(T::zero(), T::zero());
                    for m in &modes {
                        s = s + m[i] * m[j].conj();
                    }
                    if i == j {
                        s.re = s.re - T::one() / w[j];
                    }
                    row_worst = row_worst.max(s.norm());
                }
                row_worst
            })
            .reduce(T::zero, T::max);
        worst * self.grid.min_weight()
    }

    fn check_edges(&self) -> Result<()> {
        if self.grid.kind() == GridKind::GaussHermite {
            return Ok(());
        }
        let pts = self.grid.points();
        let ends = [pts[0], pts[pts.len() - 1]];
        for (n, mode) in self.modes.iter().enumerate() {
            let v = mode.values();
            let edge = v[0].norm().max(v[v.len() - 1].norm());
            if edge.as_f64() >= EDGE_LIMIT {
                return Err(Error::GridTooNarrow {
                    mode: self.labels[n] as usize,
                    value: edge.as_f64(),
                    limit: EDGE_LIMIT,
                });
            }
        }
        let _ = ends;
        Ok(())
    }

    fn sample(
        grid: Arc<Grid1D<T>>,
        energies: Vec<T>,
        labels: Vec<i64>,
        branches: Option<Vec<Branch>>,
        constants: PhysicalConstants<T>,
        model: Model,
        shape: Shape<T>,
    ) -> Result<Self> {
        let mut sys = Self {
            grid,
            energies,
            modes: Vec::new(),
            labels,
            branches,
            constants,
            model,
            shape,
        };
        let pts = sys.grid.points().to_vec();
        let columns: Vec<Vec<Complex<T>>> = pts.par_iter().map(|&x| sys.mode_values(x)).collect();
        sys.modes = (0..sys.labels.len())
            .map(|n| {
                let vals = columns.iter().map(|col| col[n]).collect();
                SampledFunction::new(sys.grid.clone(), vals)
            })
            .collect::<Result<_>>()?;
        Ok(sys)
    }
}

fn check_box_grid<T: Real>(grid: &Grid1D<T>, length: T, modes: usize) -> Result<()> {
    if grid.kind() != GridKind::Periodic {
        return invalid("plane-wave bases need a periodic grid");
    }
    let span = grid.weights().iter().copied().sum::<T>();
    if ((span - length) / length).abs() > T::tol(1e-10) {
        return invalid(format!("periodic grid covers {span}, box length is {length}"));
    }
    if grid.len() < modes {
        return invalid(format!(
            "{modes} plane waves cannot be orthonormal on {} points; use at least {modes}",
            grid.len()
        ));
    }
    Ok(())
}

/// Default periodic grid for a box: `2N + 1` points, which is Fourier-complete.
pub fn box_grid<T: Real>(length: T, cutoff: usize) -> Result<Arc<Grid1D<T>>> {
    Ok(Arc::new(Grid1D::periodic(
        -length * T::lit(0.5),
        length,
        2 * cutoff + 1,
    )?))
}

/// Free-particle plane waves `e^{ikx}/sqrt(L)`, `k = 2 pi j / L`, `|j| <= N`.
pub fn build_free_basis<T: Real>(
    length: T,
    cutoff: usize,
    constants: PhysicalConstants<T>,
) -> Result<EigenSystem<T>> {
    if !(length > T::zero()) || cutoff < 1 {
        return invalid("free basis needs L > 0 and N >= 1");
    }
    build_free_basis_on(box_grid(length, cutoff)?, length, cutoff, constants)
}

pub fn build_free_basis_on<T: Real>(
    grid: Arc<Grid1D<T>>,
    length: T,
    cutoff: usize,
    constants: PhysicalConstants<T>,
) -> Result<EigenSystem<T>> {
    constants.validate()?;
    if !(length > T::zero()) || cutoff < 1 {
        return invalid("free basis needs L > 0 and N >= 1");
    }
    check_box_grid(&grid, length, 2 * cutoff + 1)?;
    let labels = plane_wave_labels(cutoff);
    let energies = labels
        .iter()
        .map(|&j| {
            let k = T::TAU() * T::lit(j as f64) / length;
            constants.hbar * constants.hbar * k * k / (T::lit(2.0) * constants.mass)
        })
        .collect();
    EigenSystem::sample(
        grid,
        energies,
        labels,
        None,
        constants,
        Model::Free,
        Shape::Box { length },
    )
}

/// Helmholtz plane waves with eigenvalue `E = k^2` (wave-equation operator).
pub fn build_helmholtz_basis<T: Real>(
    length: T,
    cutoff: usize,
    constants: PhysicalConstants<T>,
) -> Result<EigenSystem<T>> {
    constants.validate()?;
    if !(length > T::zero()) || cutoff < 1 {
        return invalid("helmholtz basis needs L > 0 and N >= 1");
    }
    let grid = box_grid(length, cutoff)?;
    let labels = plane_wave_labels(cutoff);
    let energies = labels
        .iter()
        .map(|&j| {
            let k = T::TAU() * T::lit(j as f64) / length;
            k * k
        })
        .collect();
    EigenSystem::sample(
        grid,
        energies,
        labels,
        None,
        constants,
        Model::Helmholtz,
        Shape::Box { length },
    )
}

/// Infinite square well on `(0, a)`, sampled on `N` interior nodes so the
/// sine basis is complete on the grid.
pub fn build_well_basis<T: Real>(
    width: T,
    cutoff: usize,
    constants: PhysicalConstants<T>,
) -> Result<EigenSystem<T>> {
    if !(width > T::zero()) || cutoff < 1 {
        return invalid("well basis needs a > 0 and N >= 1");
    }
    let grid = Arc::new(Grid1D::open_interval(T::zero(), width, cutoff)?);
    build_well_basis_on(grid, width, cutoff, constants)
}

pub fn build_well_basis_on<T: Real>(
    grid: Arc<Grid1D<T>>,
    width: T,
    cutoff: usize,
    constants: PhysicalConstants<T>,
) -> Result<EigenSystem<T>> {
    constants.validate()?;
    if !(width > T::zero()) || cutoff < 1 {
        return invalid("well basis needs a > 0 and N >= 1");
    }
    let pts = grid.points();
    if pts[0] < T::zero() || pts[pts.len() - 1] > width {
        return invalid("well grid must lie inside [0, a]");
    }
    if grid.len() < cutoff {
        return invalid(format!(
            "{cutoff} sine modes cannot be orthonormal on {} points",
            grid.len()
        ));
    }
    let labels: Vec<i64> = (1..=cutoff as i64).collect();
    let scale = T::PI() * T::PI() * constants.hbar * constants.hbar
        / (T::lit(2.0) * constants.mass * width * width);
    let energies = labels
        .iter()
        .map(|&n| scale * T::lit((n * n) as f64))
        .collect();
    EigenSystem::sample(
        grid,
        energies,
        labels,
        None,
        constants,
        Model::Well,
        Shape::Well { width },
    )
}

/// Default uniform grid for `n` oscillator modes: reaches six oscillator
/// lengths past the outermost turning point with about 1.5/sqrt(2n+1)
/// oscillator lengths between samples.
pub fn oscillator_grid<T: Real>(constants: &PhysicalConstants<T>, n: usize) -> Result<Arc<Grid1D<T>>> {
    constants.validate()?;
    let alpha = constants.alpha();
    let turn = T::from_usize_lossy(2 * n + 1).sqrt();
    let half = (turn + T::lit(6.0)) / alpha;
    let step = T::lit(1.5) / turn / alpha;
    let count = ((T::lit(2.0) * half / step).ceil().to_usize().unwrap_or(2)) + 1;
    Ok(Arc::new(Grid1D::uniform(-half, half, count.max(3))?))
}

/// Harmonic-oscillator Hermite functions on the default uniform grid.
pub fn build_oscillator_basis<T: Real>(
    constants: PhysicalConstants<T>,
    cutoff: usize,
) -> Result<EigenSystem<T>> {
    if cutoff < 1 {
        return invalid("oscillator basis needs N >= 1");
    }
    build_oscillator_basis_on(oscillator_grid(&constants, cutoff)?, constants, cutoff)
}

/// Oscillator modes on the `N`-point Gauss–Hermite grid, where the first `N`
/// modes are exactly orthonormal and complete.
pub fn build_oscillator_basis_gauss_hermite<T: Real>(
    constants: PhysicalConstants<T>,
    cutoff: usize,
) -> Result<EigenSystem<T>> {
    constants.validate()?;
    if cutoff < 1 {
        return invalid("oscillator basis needs N >= 1");
    }
    let grid = Arc::new(Grid1D::gauss_hermite(cutoff, constants.alpha())?);
    build_oscillator_basis_on(grid, constants, cutoff)
}

pub fn build_oscillator_basis_on<T: Real>(
    grid: Arc<Grid1D<T>>,
    constants: PhysicalConstants<T>,
    cutoff: usize,
) -> Result<EigenSystem<T>> {
    constants.validate()?;
    if cutoff < 1 {
        return invalid("oscillator basis needs N >= 1");
    }
    let labels: Vec<i64> = (0..cutoff as i64).collect();
    let energies = labels
        .iter()
        .map(|&n| (T::lit(n as f64) + T::lit(0.5)) * constants.hbar * constants.omega)
        .collect();
    let sys = EigenSystem::sample(
        grid,
        energies,
        labels,
        None,
        constants,
        Model::Oscillator,
        Shape::Oscillator {
            alpha: constants.alpha(),
        },
    )?;
    sys.check_edges()?;
    Ok(sys)
}

/// Relativistic plane waves with paired energies `+-sqrt(m^2c^4 + c^2 hbar^2 k^2)`.
///
/// Positive-branch modes come first, then the negative branch in the same
/// momentum order.
pub fn build_relativistic_branches<T: Real>(
    length: T,
    cutoff: usize,
    constants: PhysicalConstants<T>,
) -> Result<EigenSystem<T>> {
    constants.validate()?;
    if !(length > T::zero()) || cutoff < 1 {
        return invalid("relativistic basis needs L > 0 and cutoff >= 1");
    }
    let grid = box_grid(length, cutoff)?;
    let per_branch = plane_wave_labels(cutoff);
    let c = constants.c;
    let m = constants.mass;
    let mut energies = Vec::with_capacity(2 * per_branch.len());
    let mut labels = Vec::with_capacity(2 * per_branch.len());
    let mut branches = Vec::with_capacity(2 * per_branch.len());
    for branch in [Branch::Positive, Branch::Negative] {
        for &j in &per_branch {
            let k = T::TAU() * T::lit(j as f64) / length;
            let e = (m * m * c.powi(4) + c * c * constants.hbar * constants.hbar * k * k).sqrt();
            energies.push(branch.sign::<T>() * e);
            labels.push(j);
            branches.push(branch);
        }
    }
    EigenSystem::sample(
        grid,
        energies,
        labels,
        Some(branches),
        constants,
        Model::Relativistic,
        Shape::Box { length },
    )
}

/// Expansion coefficients of a state in a basis.
#[derive(Debug, Clone)]
pub struct Coefficients<T> {
    values: Vec<Complex<T>>,
    basis: Arc<EigenSystem<T>>,
}

impl<T: Real> Coefficients<T> {
    pub fn new(values: Vec<Complex<T>>, basis: Arc<EigenSystem<T>>) -> Result<Self> {
        if values.len() != basis.len() {
            return invalid(format!(
                "{} coefficients for {} modes",
                values.len(),
                basis.len()
            ));
        }
        if let Some(index) = all_finite(&values) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values, basis })
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn basis(&self) -> &Arc<EigenSystem<T>> {
        &self.basis
    }

    /// `sum_n c_n phi_n` on the basis grid.
    pub fn reconstruct(&self) -> SampledFunction<T> {
        let g = self.basis.grid().len();
        let mut out = vec![Complex::new(T::zero(), T::zero()); g];
        for (c, mode) in self.values.iter().zip(self.basis.modes()) {
            for (o, v) in out.iter_mut().zip(mode.values()) {
                *o = *o + c * v;
            }
        }
        SampledFunction::new(self.basis.grid().clone(), out)
            .expect("finite combination of finite modes")
    }

    /// `|c_last| / max |c_n|`, the projection tail used to pick cutoffs.
    pub fn tail_ratio(&self) -> T {
        let max = self.values.iter().map(|c| c.norm()).fold(T::zero(), T::max);
        if max == T::zero() {
            return T::zero();
        }
        self.values.last().map(|c| c.norm()).unwrap_or(T::zero()) / max
    }
}

/// `c_n = <phi_n, psi0>`.
pub fn project_state<T: Real>(
    basis: &Arc<EigenSystem<T>>,
    psi0: &SampledFunction<T>,
) -> Result<Coefficients<T>> {
    same_grid(basis.grid(), psi0.grid())?;
    let values = basis
        .modes()
        .par_iter()
        .map(|m| m.inner(psi0))
        .collect::<Result<Vec<_>>>()?;
    Coefficients::new(values, basis.clone())
}
