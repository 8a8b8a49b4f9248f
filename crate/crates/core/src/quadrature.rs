//! Gauss rules, composite panel quadrature and smooth tapers.
//!
//! Rules are generated in `f64` by the Golub–Welsch eigenvalue method and
//! converted to the working scalar afterwards.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::scalar::Real;

/// Nodes/weights of a symmetric three-term recurrence via Golub–Welsch.
fn golub_welsch(n: usize, off_diag: impl Fn(usize) -> f64, mu0: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = off_diag(k);
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut x, w) = golub_welsch(
        n,
        |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        },
        2.0,
    );
    // Exact antisymmetry of the nodes keeps odd moments at round-off.
    for i in 0..n / 2 {
        let m = 0.5 * (x[n - 1 - i] - x[i]);
        x[i] = -m;
        x[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Physicists' Gauss–Hermite nodes (roots of `H_n`), ascending.
pub fn hermite_roots(n: usize) -> Vec<f64> {
    assert!(n >= 1, "rule needs at least one node");
    // Only the eigenvalues are needed, which keeps large rules cheap.
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut x: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    x.sort_by(f64::total_cmp);
    for i in 0..n / 2 {
        let m = 0.5 * (x[n - 1 - i] - x[i]);
        x[i] = -m;
        x[n - 1 - i] = m;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    x
}

/// Composite quadrature rule: nodes and weights in the working scalar.
#[derive(Debug, Clone)]
pub struct PanelRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> PanelRule<T> {
    /// Applies an `order`-point Gauss–Legendre rule on every panel between
    /// consecutive (sorted, deduplicated) edges.
    pub fn from_edges(edges: &[T], order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(edges.len() * order);
        let mut weights = Vec::with_capacity(edges.len() * order);
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let half = (b - a) * T::lit(0.5);
            let mid = (a + b) * T::lit(0.5);
            for (&x, &w) in gx.iter().zip(&gw) {
                nodes.push(mid + half * T::lit(x));
                weights.push(half * T::lit(w));
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Panel edges graded geometrically away from `center`.
///
/// The innermost panel has width `width / 4`; widths double until they reach
/// `far_width`, after which panels stay at `far_width` until `left`/`right`.
/// With `far_width = None` the doubling continues to the ends.
pub fn graded_edges<T: Real>(
    center: T,
    width: T,
    left: T,
    right: T,
    far_width: Option<T>,
) -> Vec<T> {
    let mut edges = vec![center];
    for (end, dir) in [(right, T::one()), (left, -T::one())] {
        let reach = (end - center) * dir;
        if reach <= T::zero() {
            continue;
        }
        let mut step = width * T::lit(0.25);
        let mut offset = T::zero();
        loop {
            if let Some(cap) = far_width {
                if step > cap {
                    step = cap;
                }
            }
            offset = offset + step;
            if offset >= reach * (T::one() - T::epsilon() * T::lit(16.0)) {
                edges.push(end);
                break;
            }
            edges.push(center + dir * offset);
            if far_width.is_none() || step < far_width.unwrap() {
                step = step * T::lit(2.0);
            }
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).expect("finite edges"));
    edges.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * (a.abs() + b.abs()));
    edges
}

/// Merges several edge sets, dropping points outside `[left, right]`.
pub fn merge_edges<T: Real>(sets: &[Vec<T>], left: T, right: T) -> Vec<T> {
    let mut all: Vec<T> = sets
        .iter()
        .flatten()
        .copied()
        .filter(|&x| x >= left && x <= right)
        .collect();
    all.push(left);
    all.push(right);
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite edges"));
    all.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * (a.abs() + b.abs()));
    all
}

/// C-infinity transition from 1 (at `u <= 0`) to 0 (at `u >= 1`).
pub fn smooth_step_down<T: Real>(u: T) -> T {
    if u <= T::zero() {
        return T::one();
    }
    if u >= T::one() {
        return T::zero();
    }
    let bump = |s: T| (-T::one() / s).exp();
    let a = bump(T::one() - u);
    let b = bump(u);
    a / (a + b)
}

/// Flat-top taper: 1 for `|r| <= flat`, smoothly down to 0 at `|r| >= 1`.
pub fn flat_top<T: Real>(r: T, flat: T) -> T {
    let r = r.abs();
    smooth_step_down((r - flat) / (T::one() - flat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        for p in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}: {q} vs {exact}");
        }
    }

    #[test]
    fn hermite_roots_are_roots() {
        // H_5(x) = 32x^5 - 160x^3 + 120x
        for x in hermite_roots(5) {
            let h = 32.0 * x.powi(5) - 160.0 * x.powi(3) + 120.0 * x;
            assert!(h.abs() < 1e-11, "{x} -> {h}");
        }
    }

    #[test]
    fn graded_rule_handles_lorentzian_tails() {
        let eta = 1e-3f64;
        let edges = graded_edges(0.0, eta, -1e4 * eta, 1e4 * eta, None);
        let rule = PanelRule::from_edges(&edges, 16);
        let mass = rule.integrate(|x| eta / std::f64::consts::PI / (x * x + eta * eta));
        let exact = 2.0 / std::f64::consts::PI * (1e4f64).atan();
        assert!((mass - exact).abs() < 1e-12);
    }

    #[test]
    fn flat_top_shape() {
        assert_eq!(flat_top(0.3f64, 0.5), 1.0);
        assert_eq!(flat_top(1.2f64, 0.5), 0.0);
        let mid = flat_top(0.75f64, 0.5);
        assert!((mid - 0.5).abs() < 1e-12);
    }
}
