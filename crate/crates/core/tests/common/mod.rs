//! Reference computations shared by the integration tests, written
//! independently of the library's numerics.
#![allow(dead_code)]

use std::f64::consts::PI;

use trimer::Distances;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `∫∫∫_{[0,L]³} g(x, y, z)` by a tensor Gauss-Legendre rule.
pub fn cube_integral<F: Fn(f64, f64, f64) -> f64>(g: F, len: f64, n: usize) -> f64 {
    let (t, w) = gauss_legendre(n);
    let x: Vec<f64> = t.iter().map(|t| 0.5 * len * (t + 1.0)).collect();
    let w: Vec<f64> = w.iter().map(|w| 0.5 * len * w).collect();
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                total += w[a] * w[b] * w[c] * g(x[a], x[b], x[c]);
            }
        }
    }
    total
}

/// S-state integral `∫ f 8π² r12 r13 r23 dr12 dr13 dr23` over the triangle
/// domain, in perimetric variables (`dr12 dr13 dr23 = dx dy dz / 4`).
pub fn s_state_integral<F: Fn(&Distances) -> f64>(f: F, len: f64, n: usize) -> f64 {
    cube_integral(
        |x, y, z| {
            let d = Distances::new(0.5 * (x + y), 0.5 * (x + z), 0.5 * (y + z));
            f(&d) * 8.0 * PI * PI * d.r12 * d.r13 * d.r23 * 0.25
        },
        len,
        n,
    )
}

/// Five-point central difference.
pub fn five_point<F: Fn(f64) -> f64>(f: F, x: f64, s: f64) -> f64 {
    (f(x - 2.0 * s) - 8.0 * f(x - s) + 8.0 * f(x + s) - f(x + 2.0 * s)) / (12.0 * s)
}
