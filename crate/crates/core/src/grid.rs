//! Spatial/temporal discretization and sampled complex functions.
//!
//! Quadrature is trapezoidal on uniform grids: closed grids halve the two
//! endpoint weights, open-interval grids carry only interior nodes (the
//! integrand is taken to vanish at the omitted endpoints), periodic grids
//! weight every node equally. Gauss–Hermite grids carry the Christoffel
//! weights of the Hermite-function basis.

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::hermite_roots;
use crate::scalar::{all_finite, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Uniform,
    OpenInterval,
    Periodic,
    GaussHermite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D<T> {
    points: Vec<T>,
    weights: Vec<T>,
    kind: GridKind,
}

impl<T: Real> Grid1D<T> {
    /// Validates and wraps explicit points and weights.
    pub fn from_parts(points: Vec<T>, weights: Vec<T>, kind: GridKind) -> Result<Self> {
        if points.is_empty() {
            return invalid("grid needs at least one point");
        }
        if points.len() != weights.len() {
            return invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            ));
        }
        if points.iter().chain(&weights).any(|v| !v.is_finite()) {
            return invalid("grid points and weights must be finite");
        }
        if points.windows(2).any(|p| p[1] <= p[0]) {
            return invalid("grid points must be strictly increasing");
        }
        if weights.iter().any(|&w| w <= T::zero()) {
            return invalid("quadrature weights must be strictly positive");
        }
        if kind != GridKind::GaussHermite && points.len() > 2 {
            let h0 = points[1] - points[0];
            let worst = points
                .windows(2)
                .map(|p| ((p[1] - p[0]) - h0).abs())
                .fold(T::zero(), T::max);
            if worst > T::tol(1e-12) * h0 * T::from_usize_lossy(points.len()) {
                return invalid(format!(
                    "{kind:?} grid spacing deviates by {worst:e} (relative)"
                ));
            }
        }
        Ok(Self {
            points,
            weights,
            kind,
        })
    }

    /// Closed uniform grid on `[start, end]` including both endpoints.
    pub fn uniform(start: T, end: T, n: usize) -> Result<Self> {
        if n < 2 || end <= start {
            return invalid("uniform grid needs n >= 2 and end > start");
        }
        let h = (end - start) / T::from_usize_lossy(n - 1);
        let points: Vec<T> = (0..n)
            .map(|i| start + h * T::from_usize_lossy(i))
            .collect();
        let mut weights = vec![h; n];
        weights[0] = h * T::lit(0.5);
        weights[n - 1] = h * T::lit(0.5);
        Self::from_parts(points, weights, GridKind::Uniform)
    }

    /// `n` interior nodes of `(start, end)`, spacing `(end - start)/(n + 1)`.
    pub fn open_interval(start: T, end: T, n: usize) -> Result<Self> {
        if n < 1 || end <= start {
            return invalid("open-interval grid needs n >= 1 and end > start");
        }
        let h = (end - start) / T::from_usize_lossy(n + 1);
        let points = (1..=n).map(|i| start + h * T::from_usize_lossy(i)).collect();
        Self::from_parts(points, vec![h; n], GridKind::OpenInterval)
    }

    /// `n` nodes of the period `[start, start + length)`.
    pub fn periodic(start: T, length: T, n: usize) -> Result<Self> {
        if n < 1 || length <= T::zero() {
            return invalid("periodic grid needs n >= 1 and length > 0");
        }
        let h = length / T::from_usize_lossy(n);
        let points = (0..n).map(|i| start + h * T::from_usize_lossy(i)).collect();
        Self::from_parts(points, vec![h; n], GridKind::Periodic)
    }

    /// Roots of `H_n(alpha x)` with weights `1 / sum_k phi_k(x_i)^2`, which
    /// integrate products of the first `n` Hermite functions exactly.
    pub fn gauss_hermite(n: usize, alpha: T) -> Result<Self> {
        if n < 1 || alpha <= T::zero() {
            return invalid("Gauss-Hermite grid needs n >= 1 and alpha > 0");
        }
        let points: Vec<T> = hermite_roots(n)
            .into_iter()
            .map(|xi| T::lit(xi) / alpha)
            .collect();
        let weights = points
            .iter()
            .map(|&x| {
                let mut sum = T::zero();
                crate::spectra::hermite_functions(n, alpha, x, |_, v| sum = sum + v * v);
                T::one() / sum
            })
            .collect();
        Self::from_parts(points, weights, GridKind::GaussHermite)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn min_weight(&self) -> T {
        self.weights.iter().copied().fold(T::infinity(), T::min)
    }

    /// Node spacing for uniform-type grids.
    pub fn spacing(&self) -> Option<T> {
        match self.kind {
            GridKind::GaussHermite => None,
            _ if self.points.len() >= 2 => Some(self.points[1] - self.points[0]),
            GridKind::Uniform => None,
            _ => Some(self.weights[0]),
        }
    }

    /// Index of the node closest to `x`.
    pub fn nearest_index(&self, x: T) -> usize {
        let mut best = 0;
        for (i, &p) in self.points.iter().enumerate() {
            if (p - x).abs() < (self.points[best] - x).abs() {
                best = i;
            }
        }
        best
    }
}

/// Checks that two grid handles describe the same discretization.
pub(crate) fn same_grid<T: Real>(a: &Arc<Grid1D<T>>, b: &Arc<Grid1D<T>>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{:?} grid of {} points vs {:?} grid of {} points",
            a.kind,
            a.len(),
            b.kind,
            b.len()
        )))
    }
}

/// Complex samples of a function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T> {
    grid: Arc<Grid1D<T>>,
    values: Vec<Complex<T>>,
}

impl<T: Real> SampledFunction<T> {
    pub fn new(grid: Arc<Grid1D<T>>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = all_finite(&values) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid1D<T>>, f: impl Fn(T) -> Complex<T>) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: Arc<Grid1D<T>>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::from_fn(grid, |x| Complex::new(f(x), T::zero()))
    }

    pub fn zeros(grid: Arc<Grid1D<T>>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex::new(T::zero(), T::zero()); n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid1D<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    /// Quadrature integral `sum_i w_i f_i`.
    pub fn quad(&self) -> Complex<T> {
        self.values
            .iter()
            .zip(self.grid.weights())
            .fold(Complex::new(T::zero(), T::zero()), |acc, (v, &w)| {
                acc + v * w
            })
    }

    /// `quad(conj(self) * other)`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.weights())
            .fold(Complex::new(T::zero(), T::zero()), |acc, ((f, g), &w)| {
                acc + f.conj() * g * w
            }))
    }

    /// Discrete L2 norm under the grid measure.
    pub fn norm(&self) -> T {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, &w)| v.norm_sqr() * w)
            .sum::<T>()
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: Complex<T>, other: &Self, beta: Complex<T>) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(f, g)| alpha * f + beta * g)
            .collect();
        Self::new(self.grid.clone(), values)
    }

    /// Sup-norm distance to another sample set on the same grid.
    pub fn max_diff(&self, other: &Self) -> Result<T> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max))
    }
}

/// Single-node spike of height `1/w` whose quadrature integral is 1.
#[derive(Debug, Clone)]
pub struct DiscreteDelta<T> {
    grid: Arc<Grid1D<T>>,
    center: usize,
}

impl<T: Real> DiscreteDelta<T> {
    pub fn new(grid: Arc<Grid1D<T>>, center: usize) -> Result<Self> {
        if center >= grid.len() {
            return invalid(format!(
                "delta center {center} outside a {}-point grid",
                grid.len()
            ));
        }
        Ok(Self { grid, center })
    }

    /// Spike at the node nearest to `x`.
    pub fn nearest(grid: Arc<Grid1D<T>>, x: T) -> Self {
        let center = grid.nearest_index(x);
        Self { grid, center }
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn position(&self) -> T {
        self.grid.points()[self.center]
    }

    pub fn to_sampled(&self) -> SampledFunction<T> {
        let mut f = SampledFunction::zeros(self.grid.clone());
        f.values[self.center] = Complex::new(T::one() / self.grid.weights()[self.center], T::zero());
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn constant_integrates_to_length() {
        let g = Arc::new(Grid1D::uniform(0.0, 2.0, 17).unwrap());
        let f = SampledFunction::from_fn(g, |_| c(1.0)).unwrap();
        assert!((f.quad() - c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn delta_integrates_to_one_on_every_kind() {
        let grids = [
            Grid1D::uniform(-1.0, 3.0, 40).unwrap(),
            Grid1D::open_interval(0.0, 1.0, 31).unwrap(),
            Grid1D::periodic(0.0, 5.0, 64).unwrap(),
            Grid1D::gauss_hermite(21, 1.3).unwrap(),
        ];
        for g in grids {
            let g = Arc::new(g);
            for center in [0, g.len() / 2, g.len() - 1] {
                let d = DiscreteDelta::new(g.clone(), center).unwrap().to_sampled();
                assert!((d.quad() - c(1.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn sine_quadrature_matches_antiderivative() {
        let g = Arc::new(Grid1D::uniform(0.0, 1.0, 1024).unwrap());
        let f = SampledFunction::from_real_fn(g, |x| (PI * x).sin()).unwrap();
        assert!((f.quad() - c(2.0 / PI)).norm() < 1e-6);
    }

    #[test]
    fn delta_sifts_at_second_order() {
        let g_fn = |x: f64| (1.3 * x).cos() + x * x;
        // Off-node point at a fixed fraction of the coarsest cell; each
        // refinement swaps the fraction between 1/3 and 2/3, which leaves the
        // linear-interpolation error constant t(1 - t)/2 unchanged.
        let x0 = -1.0 + 0.02 / 3.0;
        let mut errors = Vec::new();
        for n in [101usize, 201, 401, 801] {
            let g = Arc::new(Grid1D::uniform(-1.0, 1.0, n).unwrap());
            let smooth = SampledFunction::from_real_fn(g.clone(), g_fn).unwrap();
            let delta = DiscreteDelta::nearest(g.clone(), x0);
            let sifted = delta.to_sampled().inner(&smooth).unwrap().re;
            assert!((sifted - g_fn(delta.position())).abs() < 1e-12);
            // Weighted pair of neighbouring spikes, still unit mass.
            let i = g.points().partition_point(|&p| p <= x0) - 1;
            let t = (x0 - g.points()[i]) / (g.points()[i + 1] - g.points()[i]);
            let mut vals = vec![c(0.0); n];
            vals[i] = c((1.0 - t) / g.weights()[i]);
            vals[i + 1] = c(t / g.weights()[i + 1]);
            let spike = SampledFunction::new(g.clone(), vals).unwrap();
            assert!((spike.quad() - c(1.0)).norm() < 1e-12);
            errors.push((spike.inner(&smooth).unwrap().re - g_fn(x0)).abs());
        }
        for pair in errors.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = Arc::new(Grid1D::uniform(0.0, 1.0, 5).unwrap());
        assert!(matches!(
            SampledFunction::new(g.clone(), vec![c(f64::NAN); 5]),
            Err(Error::NonFinite { index: 0 })
        ));
        assert!(SampledFunction::new(g.clone(), vec![c(1.0); 4]).is_err());
        let other = Arc::new(Grid1D::uniform(0.0, 1.0, 6).unwrap());
        let a = SampledFunction::zeros(g);
        let b = SampledFunction::zeros(other);
        assert!(matches!(a.inner(&b), Err(Error::GridMismatch(_))));
        assert!(Grid1D::from_parts(vec![0.0, 1.0], vec![1.0, 0.0], GridKind::Uniform).is_err());
        assert!(Grid1D::from_parts(vec![0.0, 1.0, 1.5], vec![1.0; 3], GridKind::Uniform).is_err());
    }

    #[test]
    fn gauss_hermite_weights_integrate_gaussian() {
        let alpha = 1.7f64;
        let g = Grid1D::gauss_hermite(30, alpha).unwrap();
        let q: f64 = g
            .points()
            .iter()
            .zip(g.weights())
            .map(|(&x, &w)| w * (-(alpha * x).powi(2)).exp() * x * x)
            .sum();
        let exact = PI.sqrt() / (2.0 * alpha.powi(3));
        assert!((q - exact).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let g = Arc::new(Grid1D::<f32>::uniform(0.0, 2.0, 33).unwrap());
        let f = SampledFunction::from_real_fn(g, |_| 1.0).unwrap();
        assert!((f.quad().re - 2.0).abs() < 1e-5);
    }
}
