//! Quadrature grids realizing a discrete L² inner product on an interval.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods win when std is linked
use num_traits::Float;

use crate::{Error, Result};

/// Node/weight rule used by a [`QuadratureGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFamily {
    /// Chebyshev points of the second kind with Clenshaw–Curtis weights.
    ChebyshevCC,
    /// Equispaced nodes with trapezoid weights.
    UniformTrapezoid,
}

/// Strictly increasing nodes with positive weights summing to `b - a`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    family: GridFamily,
    interval: (f64, f64),
}

impl QuadratureGrid {
    /// Builds an `n`-point grid of the given family on `[a, b]`.
    pub fn new(family: GridFamily, n: usize, a: f64, b: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 nodes, got {n}")));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::invalid(format!("degenerate interval [{a}, {b}]")));
        }
        let (ref_nodes, ref_weights) = match family {
            GridFamily::ChebyshevCC => clenshaw_curtis(n),
            GridFamily::UniformTrapezoid => trapezoid(n),
        };
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut nodes: Vec<f64> = ref_nodes.iter().map(|&t| mid + half * t).collect();
        nodes[0] = a;
        nodes[n - 1] = b;
        let weights = ref_weights.iter().map(|&w| half * w).collect();
        Ok(Self {
            nodes,
            weights,
            family,
            interval: (a, b),
        })
    }

    /// Rebuilds a grid from declared node locations, recomputing the weights
    /// of `family`. The nodes must match that family on `[first, last]`.
    pub fn from_nodes(family: GridFamily, nodes: &[f64]) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("grid needs at least 2 nodes"));
        }
        let a = nodes[0];
        let b = nodes[nodes.len() - 1];
        let grid = Self::new(family, nodes.len(), a, b)?;
        let tol = 1e-9 * (b - a);
        for (i, (&given, &expect)) in nodes.iter().zip(&grid.nodes).enumerate() {
            if (given - expect).abs() > tol {
                return Err(Error::GridMismatch(format!(
                    "node {i} is {given}, expected {expect} for a {family:?} grid"
                )));
            }
        }
        Ok(grid)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.sqrt()).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn family(&self) -> GridFamily {
        self.family
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// Quadrature of `f` given by its values at the nodes.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Discrete inner product `sum_i w_i f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    pub(crate) fn same_as(&self, other: &QuadratureGrid) -> bool {
        self.family == other.family && self.interval == other.interval && self.len() == other.len()
    }
}

// Chebyshev points of the second kind on [-1, 1], ascending, with the
// closed-form Clenshaw–Curtis weights.
fn clenshaw_curtis(n: usize) -> (Vec<f64>, Vec<f64>) {
    let big_n = n - 1;
    let nf = big_n as f64;
    let pi = core::f64::consts::PI;
    // -cos(k pi / N) written as a sine keeps the nodes exactly antisymmetric.
    let nodes = (0..n)
        .map(|k| (pi * (2.0 * k as f64 - nf) / (2.0 * nf)).sin())
        .collect();
    let half = big_n / 2;
    let weights = (0..n)
        .map(|k| {
            let theta = pi * k as f64 / nf;
            let mut s = 0.0;
            for j in 1..=half {
                let b = if 2 * j == big_n { 1.0 } else { 2.0 };
                let jf = j as f64;
                s += b / (4.0 * jf * jf - 1.0) * (2.0 * jf * theta).cos();
            }
            let c = if k == 0 || k == big_n { 1.0 } else { 2.0 };
            c / nf * (1.0 - s)
        })
        .collect();
    (nodes, weights)
}

fn trapezoid(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 / (n - 1) as f64;
    let nodes = (0..n).map(|k| -1.0 + h * k as f64).collect();
    let weights = (0..n)
        .map(|k| if k == 0 || k == n - 1 { 0.5 * h } else { h })
        .collect();
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_cc_is_trapezoid() {
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, 2, -1.0, 1.0).unwrap();
        assert_eq!(g.nodes(), &[-1.0, 1.0]);
        assert!((g.weights()[0] - 1.0).abs() < 1e-15);
        assert!((g.weights()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_length() {
        for fam in [GridFamily::ChebyshevCC, GridFamily::UniformTrapezoid] {
            for n in [2, 3, 10, 33, 600] {
                let g = QuadratureGrid::new(fam, n, 0.5, 3.0).unwrap();
                let s: f64 = g.weights().iter().sum();
                assert!((s - 2.5).abs() < 1e-10, "{fam:?} {n}: {s}");
                assert!(g.weights().iter().all(|&w| w > 0.0));
                assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn cc_integrates_quartic() {
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, 33, -1.0, 1.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| x.powi(4)).collect();
        assert!((g.integrate(&f) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn cc_is_spectral_on_smooth_functions() {
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, 40, 0.0, 2.0).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|x| x.exp()).collect();
        assert!((g.integrate(&f) - (2.0f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(QuadratureGrid::new(GridFamily::ChebyshevCC, 1, -1.0, 1.0).is_err());
        assert!(QuadratureGrid::new(GridFamily::ChebyshevCC, 5, 1.0, 1.0).is_err());
        assert!(QuadratureGrid::new(GridFamily::UniformTrapezoid, 5, 2.0, 1.0).is_err());
    }

    #[test]
    fn from_nodes_round_trips_and_validates() {
        let g = QuadratureGrid::new(GridFamily::ChebyshevCC, 17, -1.0, 1.0).unwrap();
        let again = QuadratureGrid::from_nodes(GridFamily::ChebyshevCC, g.nodes()).unwrap();
        assert_eq!(g, again);
        assert!(QuadratureGrid::from_nodes(GridFamily::UniformTrapezoid, g.nodes()).is_err());
    }
}
