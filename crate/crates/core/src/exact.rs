//! Closed-form results at zero rest length.
//!
//! At `R = 0` the problem separates into two identical isotropic oscillators
//! in Jacobi coordinates and the S-state levels are `E_N = 3ω(2N + 3)` with
//! degeneracy `(N+1)(N+2)/2`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::geometry::Distances;

/// ρ-representation quantum numbers, `N = N1 + N2 + N3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RhoLabel {
    pub n1: u32,
    pub n2: u32,
    pub n3: u32,
}

impl RhoLabel {
    pub fn total(&self) -> u32 {
        self.n1 + self.n2 + self.n3
    }
}

/// Jacobi-oscillator quantum numbers of an S-state: radial `n1`, `n2`, a
/// common angular momentum `l` and opposite magnetic numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JacobiLabel {
    pub n1: u32,
    pub n2: u32,
    pub l: u32,
    pub s1: i32,
    pub s2: i32,
}

impl JacobiLabel {
    pub fn new(n1: u32, n2: u32, l: u32) -> Self {
        Self { n1, n2, l, s1: 0, s2: 0 }
    }

    pub fn total(&self) -> u32 {
        self.n1 + self.n2 + self.l
    }

    /// S-state constraint plus `|s| ≤ l`.
    pub fn is_valid(&self) -> bool {
        self.s1 == -self.s2 && self.s1.unsigned_abs() <= self.l
    }

    /// Energy of oscillator `k ∈ {1, 2}`: `3ω(2 n_k + l + 3/2)`.
    pub fn oscillator_energy(&self, k: usize, omega: f64) -> f64 {
        let n = if k == 1 { self.n1 } else { self.n2 };
        3.0 * omega * (2.0 * n as f64 + self.l as f64 + 1.5)
    }
}

pub fn energy_level(n: u32, omega: f64) -> f64 {
    3.0 * omega * (2.0 * n as f64 + 3.0)
}

pub fn jacobi_energy(label: &JacobiLabel, omega: f64) -> f64 {
    3.0 * omega * (2.0 * (label.n1 + label.n2) as f64 + 2.0 * label.l as f64 + 3.0)
}

pub fn degeneracy(n: u32) -> u32 {
    (n + 1) * (n + 2) / 2
}

/// Number of distinct sub-levels level `N` splits into once `R > 0`.
pub fn split_count(n: u32) -> u32 {
    (n * (n + 1) + 2) / 2
}

fn nonzero_count(v: &[u32]) -> usize {
    v.iter().filter(|&&c| c > 0).count()
}

/// Compositions of `n` into `parts` non-negative integers, ordered by the
/// number of non-zero entries and then descending lexicographically.
fn compositions(n: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            rec(remaining - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, parts, &mut Vec::new(), &mut out);
    // stable sort keeps the descending-lexicographic order within a class
    out.sort_by_key(|c| nonzero_count(c));
    out
}

/// Both labelings of level `N` side by side. Jacobi labels run over
/// ascending `l`; within one `l`, and in the ρ column, labels are ordered by
/// the number of nonzero entries, then descending lexicographically. The
/// two columns are independent bases of the same eigenspace; rows are not
/// paired by any correspondence.
pub fn enumerate_labels(n: u32) -> Vec<(JacobiLabel, RhoLabel)> {
    let mut jacobi = Vec::new();
    for l in 0..=n {
        for c in compositions(n - l, 2) {
            jacobi.push(JacobiLabel::new(c[0], c[1], l));
        }
    }
    let rho = compositions(n, 3).into_iter().map(|c| RhoLabel { n1: c[0], n2: c[1], n3: c[2] });
    jacobi.into_iter().zip(rho).collect()
}

/// Normalized ground state at `R = 0` (energy `9ω` for unit mass).
///
/// The prefactor `3^{3/4} ω^{3/2} / π^{3/2}` normalizes it under
/// `8π² r12 r13 r23 dr12 dr13 dr23` on the triangle domain.
pub fn psi0(d: &Distances, omega: f64) -> f64 {
    let norm = 3f64.powf(0.75) * omega.powf(1.5) / PI.powf(1.5);
    let [a, b, c] = d.squared();
    norm * (-0.5 * omega * (a + b + c)).exp()
}

/// The three degenerate `N = 1` states `(1 - ω ρ_k) e^{-ω Σρ/2}`, with
/// `k = 0, 1, 2` selecting `ρ12`, `ρ13`, `ρ23`. Normalized like [`psi0`];
/// the prefactor is `3^{5/4} ω^{3/2} / (√2 π^{3/2})`.
pub fn psi1(k: usize, d: &Distances, omega: f64) -> f64 {
    assert!(k < 3, "psi1 index must be 0, 1 or 2");
    let norm = 3f64.powf(1.25) * omega.powf(1.5) / (2f64.sqrt() * PI.powf(1.5));
    let rho = d.squared();
    let sum: f64 = rho.iter().sum();
    norm * (1.0 - omega * rho[k]) * (-0.5 * omega * sum).exp()
}
