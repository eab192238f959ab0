//! One-dimensional Lagrange-Laguerre machinery.
//!
//! # Weight conventions
//!
//! A [`QuadratureRule`] carries two weight vectors for the same nodes `x_k`
//! (the zeros of the Laguerre polynomial `L_M`):
//!
//! * `weights` (`w_k`) fold the Laguerre weight into the measure:
//!   `∫₀^∞ G(x) e^{-x} dx ≈ Σ w_k G(x_k)`, exact for polynomial `G` of degree
//!   `≤ 2M-1`. They sum to one.
//! * `mesh_weights` (`λ_k = w_k e^{x_k}`) integrate plain functions,
//!   `∫₀^∞ G(x) dx ≈ Σ λ_k G(x_k)`. Lagrange functions carry `e^{-x/2}`
//!   explicitly, so a product of two of them times a polynomial is integrated
//!   by the mesh weights with the same accuracy as the `w_k` rule above.
//!
//! The Lagrange conditions read `f_i(x_j) = λ_i^{-1/2} δ_ij` in terms of the
//! mesh weights.
//!
//! Supported envelope: `M ≤ 40`. Nothing overflows below `M ≈ 60`; larger
//! orders are accepted but untested.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest mesh order covered by the test suite.
pub const MAX_SUPPORTED_ORDER: usize = 40;

/// Relative window around a node inside which `f_i` switches to its Taylor
/// expansion.
const NODE_WINDOW: f64 = 1e-6;

/// Gauss-Laguerre nodes and weights for one mesh axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    mesh_weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Zeros of `L_M`, strictly increasing.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for `∫ G(x) e^{-x} dx`; they sum to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weights for `∫ G(x) dx`, i.e. `w_k e^{x_k}`.
    pub fn mesh_weights(&self) -> &[f64] {
        &self.mesh_weights
    }

    pub fn largest_node(&self) -> f64 {
        *self.nodes.last().expect("rule has at least one node")
    }

    /// `Σ w_k g(x_k)`, approximating `∫₀^∞ g(x) e^{-x} dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }
}

/// Builds the `M`-point Gauss-Laguerre rule.
///
/// Nodes start from the eigenvalues of the symmetric Jacobi matrix and are
/// polished by Newton steps on the three-term recurrence; weights come from
/// `w_k = 1 / (x_k L'_M(x_k)²)`.
pub fn gauss_laguerre_rule(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::InvalidInput("quadrature order must be at least 1".into()));
    }
    let m = order;
    let mut jacobi = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        jacobi[(k, k)] = (2 * k + 1) as f64;
        if k + 1 < m {
            jacobi[(k, k + 1)] = (k + 1) as f64;
            jacobi[(k + 1, k)] = (k + 1) as f64;
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (l, dl) = laguerre_with_derivative(m, *x);
            let step = l / dl;
            *x -= step;
            if step.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
    }

    let mut weights = Vec::with_capacity(m);
    let mut mesh_weights = Vec::with_capacity(m);
    for &x in &nodes {
        let dl = laguerre_derivative_at_root(m, x);
        let w = 1.0 / (x * dl * dl);
        weights.push(w);
        mesh_weights.push(w * x.exp());
    }

    Ok(QuadratureRule { order: m, nodes, weights, mesh_weights })
}

/// `L_n(x)` by the three-term recurrence.
pub fn laguerre_value(n: usize, x: f64) -> f64 {
    laguerre_pair(n, x).0
}

/// `(L_n(x), L_{n-1}(x))`, with `L_{-1} = 0`.
fn laguerre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `(L_n(x), L_n'(x))` for `x ≠ 0`.
pub fn laguerre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (l, lm1) = laguerre_pair(n, x);
    let nf = n as f64;
    (l, nf * (l - lm1) / x)
}

/// `L_n'(x)` at a zero of `L_n`, where it reduces to `-n L_{n-1}(x) / x`.
fn laguerre_derivative_at_root(n: usize, x: f64) -> f64 {
    let (_, lm1) = laguerre_pair(n, x);
    -(n as f64) * lm1 / x
}

/// Mesh size and scale, shared by the three perimetric axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub points_per_axis: usize,
    /// Perimetric length per dimensionless node unit.
    pub scale: f64,
}

impl MeshSpec {
    pub fn new(points_per_axis: usize, scale: f64) -> Result<Self> {
        if points_per_axis < 2 {
            return Err(Error::InvalidInput(format!("mesh needs at least 2 points per axis, got {points_per_axis}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput(format!("mesh scale must be positive, got {scale}")));
        }
        Ok(Self { points_per_axis, scale })
    }
}

/// Which member of the Lagrange-Laguerre family to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LagrangeKind {
    /// `f_i(x) = (-1)^i x_i^{1/2} L_M(x) / (x - x_i) e^{-x/2}`; nonzero at the
    /// origin. Used by the Hamiltonian, since the wavefunction does not vanish
    /// on the boundary planes of the perimetric octant.
    #[default]
    Plain,
    /// `f_i(x) = (-1)^i x_i^{-1/2} x L_M(x) / (x - x_i) e^{-x/2}`; vanishes at
    /// the origin.
    Regularized,
}

/// Lagrange-Laguerre functions attached to a quadrature rule.
///
/// Indices are zero-based: `i = 0` is the smallest node. The sign factor is
/// `(-1)^{i+1}` so that every `f_i(x_i)` is positive.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    rule: QuadratureRule,
    kind: LagrangeKind,
    /// `L_M'(x_i)`.
    slopes: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(rule: QuadratureRule, kind: LagrangeKind) -> Self {
        let m = rule.order();
        let slopes = rule.nodes().iter().map(|&x| laguerre_derivative_at_root(m, x)).collect();
        Self { rule, kind, slopes }
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn kind(&self) -> LagrangeKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.rule.order()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sign(i: usize) -> f64 {
        if i % 2 == 0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Factor multiplying `L_M(x)/(x - x_i) e^{-x/2}`.
    fn prefactor(&self, i: usize, x: f64) -> f64 {
        let xi = self.rule.nodes()[i];
        let s = Self::sign(i);
        match self.kind {
            LagrangeKind::Plain => s * xi.sqrt(),
            LagrangeKind::Regularized => s * x / xi.sqrt(),
        }
    }

    /// `f_i(x)`. Inside `|x - x_i| < 1e-6 x_i` the quotient `L_M(x)/(x - x_i)`
    /// is replaced by its second-order Taylor expansion about the node.
    pub fn value(&self, i: usize, x: f64) -> f64 {
        let m = self.len();
        let xi = self.rule.nodes()[i];
        let dx = x - xi;
        let quotient = if dx.abs() < NODE_WINDOW * xi {
            // derivatives of L_M at a root, from x L'' + (1 - x) L' + M L = 0
            let d1 = self.slopes[i];
            let d2 = (xi - 1.0) * d1 / xi;
            let d3 = ((xi - 2.0) * d2 - (m as f64 - 1.0) * d1) / xi;
            d1 + 0.5 * d2 * dx + d3 * dx * dx / 6.0
        } else {
            laguerre_value(m, x) / dx
        };
        self.prefactor(i, x) * quotient * (-0.5 * x).exp()
    }

    /// Table `d[i][j] = f_i'(x_j)` from the closed-form derivative, row-major
    /// with `i` the function index.
    pub fn derivative_table(&self) -> Vec<f64> {
        let m = self.len();
        let nodes = self.rule.nodes();
        let mut table = vec![0.0; m * m];
        for i in 0..m {
            let xi = nodes[i];
            let s = Self::sign(i);
            for j in 0..m {
                let xj = nodes[j];
                let ej = (-0.5 * xj).exp();
                table[i * m + j] = if i == j {
                    match self.kind {
                        LagrangeKind::Plain => -s * self.slopes[i] * ej / (2.0 * xi.sqrt()),
                        LagrangeKind::Regularized => s * self.slopes[i] * ej / (2.0 * xi.sqrt()),
                    }
                } else {
                    let base = self.slopes[j] * ej / (xj - xi);
                    match self.kind {
                        LagrangeKind::Plain => s * xi.sqrt() * base,
                        LagrangeKind::Regularized => s * xj * base / xi.sqrt(),
                    }
                };
            }
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_order_rejected() {
        assert!(gauss_laguerre_rule(0).is_err());
    }

    #[test]
    fn one_point_rule() {
        let r = gauss_laguerre_rule(1).unwrap();
        assert_relative_eq!(r.nodes()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.weights()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn two_point_rule() {
        // roots of (x² - 4x + 2)/2; weights from exactness on 1 and x:
        // w1 + w2 = 1, w1 x1 + w2 x2 = 1
        let s2 = 2f64.sqrt();
        let (x1, x2) = (2.0 - s2, 2.0 + s2);
        let w2 = (1.0 - x1) / (x2 - x1);
        let w1 = 1.0 - w2;
        let r = gauss_laguerre_rule(2).unwrap();
        assert_relative_eq!(r.nodes()[0], x1, max_relative = 1e-14);
        assert_relative_eq!(r.nodes()[1], x2, max_relative = 1e-14);
        assert_relative_eq!(r.weights()[0], w1, max_relative = 1e-14);
        assert_relative_eq!(r.weights()[1], w2, max_relative = 1e-14);
    }

    #[test]
    fn three_point_rule_integrates_x4() {
        let r = gauss_laguerre_rule(3).unwrap();
        assert_relative_eq!(r.integrate(|x| x.powi(4)), 24.0, max_relative = 1e-13);
    }

    #[test]
    fn laguerre_values() {
        assert_eq!(laguerre_value(0, 3.7), 1.0);
        assert_eq!(laguerre_value(1, 1.0), 0.0);
        assert!(laguerre_value(2, 2.0 + 2f64.sqrt()).abs() < 1e-14);
        // L_3(x) = (-x³ + 9x² - 18x + 6)/6
        let x = 1.3;
        let l3 = (-x * x * x + 9.0 * x * x - 18.0 * x + 6.0) / 6.0;
        assert_relative_eq!(laguerre_value(3, x), l3, max_relative = 1e-14);
    }

    #[test]
    fn nodes_are_roots_and_sorted() {
        for m in [2, 5, 13, 25, 40] {
            let r = gauss_laguerre_rule(m).unwrap();
            for w in r.nodes().windows(2) {
                assert!(w[0] < w[1]);
            }
            for (&x, &w) in r.nodes().iter().zip(r.weights()) {
                assert!(x > 0.0 && w > 0.0);
                // scale the residual by the local slope so that the check is
                // about node position, not polynomial magnitude
                let (l, dl) = laguerre_with_derivative(m, x);
                assert!((l / dl).abs() < 1e-13 * x.max(1.0), "M={m} x={x}");
            }
            let total: f64 = r.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "M={m} sum={total}");
        }
    }

    #[test]
    fn node_window_branch_is_continuous() {
        let r = gauss_laguerre_rule(12).unwrap();
        for kind in [LagrangeKind::Plain, LagrangeKind::Regularized] {
            let b = LagrangeBasis::new(r.clone(), kind);
            for i in [0, 5, 11] {
                let xi = r.nodes()[i];
                let inside = b.value(i, xi * (1.0 + 0.999e-6));
                let outside = b.value(i, xi * (1.0 + 1.001e-6));
                assert_relative_eq!(inside, outside, max_relative = 1e-8);
                assert!(b.value(i, xi * (1.0 + 1e-15)).is_finite());
            }
        }
    }

    #[test]
    fn regularized_vanishes_at_origin_plain_does_not() {
        for m in [2, 7, 20] {
            let r = gauss_laguerre_rule(m).unwrap();
            let reg = LagrangeBasis::new(r.clone(), LagrangeKind::Regularized);
            assert_eq!(reg.value(0, 0.0), 0.0);
            let plain = LagrangeBasis::new(r.clone(), LagrangeKind::Plain);
            // L_M(0) = 1, so f_1(0) = x_1^{-1/2}
            assert_relative_eq!(plain.value(0, 0.0), 1.0 / r.nodes()[0].sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn two_point_derivative_table() {
        // M = 2, plain functions written out: with L_2(x) = (x-a)(x-b)/2,
        //   f_1(x) = -sqrt(a) (x-b)/2 e^{-x/2},  f_2(x) = sqrt(b) (x-a)/2 e^{-x/2}
        // so f_1'(x) = -sqrt(a)/2 e^{-x/2} (1 - (x-b)/2), etc.
        let s2 = 2f64.sqrt();
        let (a, b) = (2.0 - s2, 2.0 + s2);
        let d1 = |x: f64| -a.sqrt() / 2.0 * (-x / 2.0).exp() * (1.0 - (x - b) / 2.0);
        let d2 = |x: f64| b.sqrt() / 2.0 * (-x / 2.0).exp() * (1.0 - (x - a) / 2.0);
        let basis = LagrangeBasis::new(gauss_laguerre_rule(2).unwrap(), LagrangeKind::Plain);
        let t = basis.derivative_table();
        assert_relative_eq!(t[0], d1(a), max_relative = 1e-13);
        assert_relative_eq!(t[1], d1(b), max_relative = 1e-13);
        assert_relative_eq!(t[2], d2(a), max_relative = 1e-13);
        assert_relative_eq!(t[3], d2(b), max_relative = 1e-13);

        // regularized: f_1 = -(x/sqrt(a)) (x-b)/2 e^{-x/2}
        let r1 = |x: f64| -(-x / 2.0).exp() / (2.0 * a.sqrt()) * ((2.0 * x - b) - x * (x - b) / 2.0);
        let r2 = |x: f64| (-x / 2.0).exp() / (2.0 * b.sqrt()) * ((2.0 * x - a) - x * (x - a) / 2.0);
        let basis = LagrangeBasis::new(gauss_laguerre_rule(2).unwrap(), LagrangeKind::Regularized);
        let t = basis.derivative_table();
        assert_relative_eq!(t[0], r1(a), max_relative = 1e-13);
        assert_relative_eq!(t[1], r1(b), max_relative = 1e-13);
        assert_relative_eq!(t[2], r2(a), max_relative = 1e-13);
        assert_relative_eq!(t[3], r2(b), max_relative = 1e-13);
    }

    #[test]
    fn mesh_spec_validation() {
        assert!(MeshSpec::new(1, 0.3).is_err());
        assert!(MeshSpec::new(10, 0.0).is_err());
        assert!(MeshSpec::new(10, f64::NAN).is_err());
        assert!(MeshSpec::new(10, 0.3).is_ok());
    }
}
