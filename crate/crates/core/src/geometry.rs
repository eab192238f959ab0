//! Coordinate charts on the three-body configuration space and the
//! potentials defined on it.
//!
//! Distances `(r12, r13, r23)` map linearly onto perimetric coordinates
//! `x = r12 + r13 - r23`, `y = r12 - r13 + r23`, `z = -r12 + r13 + r23`,
//! which turns the triangle-inequality domain into the octant `[0, ∞)³`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Perimetric components in `[-BOUNDARY_SLACK, 0)` are treated as roundoff
/// and clamped to zero.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// Mass, angular frequency and common rest length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub mass: f64,
    pub omega: f64,
    pub rest_length: f64,
}

impl SystemParams {
    pub fn new(mass: f64, omega: f64, rest_length: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        if !(rest_length >= 0.0 && rest_length.is_finite()) {
            return Err(Error::InvalidInput(format!("rest length must be non-negative, got {rest_length}")));
        }
        Ok(Self { mass, omega, rest_length })
    }

    /// Unit mass.
    pub fn unit_mass(omega: f64, rest_length: f64) -> Result<Self> {
        Self::new(1.0, omega, rest_length)
    }
}

/// Pair-dependent couplings and rest lengths:
/// `Ṽ = (3/2) ω² Σ ν_ij (r_ij - R_ij)²`. Couplings may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedParams {
    pub nu12: f64,
    pub nu13: f64,
    pub nu23: f64,
    pub r12: f64,
    pub r13: f64,
    pub r23: f64,
    pub omega: f64,
}

impl GeneralizedParams {
    pub fn new(nu: [f64; 3], rest: [f64; 3], omega: f64) -> Result<Self> {
        if rest.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidInput(format!("rest lengths must be positive, got {rest:?}")));
        }
        if nu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("couplings must be finite, got {nu:?}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        Ok(Self { nu12: nu[0], nu13: nu[1], nu23: nu[2], r12: rest[0], r13: rest[1], r23: rest[2], omega })
    }
}

/// The three inter-particle distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    pub r12: f64,
    pub r13: f64,
    pub r23: f64,
}

impl Distances {
    pub fn new(r12: f64, r13: f64, r23: f64) -> Self {
        Self { r12, r13, r23 }
    }

    /// Squared distances `(ρ12, ρ13, ρ23)`.
    pub fn squared(&self) -> [f64; 3] {
        [self.r12 * self.r12, self.r13 * self.r13, self.r23 * self.r23]
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r12, self.r13, self.r23]
    }

    /// True when the triple satisfies the triangle inequality.
    pub fn is_valid(&self) -> bool {
        area_squared(self) >= 0.0 && self.as_array().iter().all(|&r| r >= 0.0)
    }
}

/// Perimetric coordinates, each in `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerimetricPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PerimetricPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

fn clamp_component(v: f64) -> Option<f64> {
    if v >= 0.0 {
        Some(v)
    } else if v >= -BOUNDARY_SLACK {
        Some(0.0)
    } else {
        None
    }
}

pub fn perimetric_from_distances(d: &Distances) -> Result<PerimetricPoint> {
    let x = d.r12 + d.r13 - d.r23;
    let y = d.r12 - d.r13 + d.r23;
    let z = -d.r12 + d.r13 + d.r23;
    match (clamp_component(x), clamp_component(y), clamp_component(z)) {
        (Some(x), Some(y), Some(z)) => Ok(PerimetricPoint { x, y, z }),
        _ => Err(Error::OutsideDomain { r12: d.r12, r13: d.r13, r23: d.r23 }),
    }
}

pub fn distances_from_perimetric(p: &PerimetricPoint) -> Distances {
    Distances { r12: 0.5 * (p.x + p.y), r13: 0.5 * (p.x + p.z), r23: 0.5 * (p.y + p.z) }
}

/// Heron's formula for the squared triangle area; negative outside the
/// physical domain.
pub fn area_squared(d: &Distances) -> f64 {
    let (a, b, c) = (d.r12, d.r13, d.r23);
    (a + b + c) * (a + b - c) * (a - b + c) * (-a + b + c) / 16.0
}

/// `V_R = (3/2) m ω² [(r12-R)² + (r13-R)² + (r23-R)²]`.
pub fn potential(d: &Distances, p: &SystemParams) -> f64 {
    let r = p.rest_length;
    let sum: f64 = d.as_array().iter().map(|&rij| (rij - r) * (rij - r)).sum();
    1.5 * p.mass * p.omega * p.omega * sum
}

pub fn potential_generalized(d: &Distances, g: &GeneralizedParams) -> f64 {
    let t12 = g.nu12 * (d.r12 - g.r12).powi(2);
    let t13 = g.nu13 * (d.r13 - g.r13).powi(2);
    let t23 = g.nu23 * (d.r23 - g.r23).powi(2);
    1.5 * g.omega * g.omega * (t12 + t13 + t23)
}

/// Density of the S-state measure `d³r = 8π² r12 r13 r23 dr12 dr13 dr23`.
pub fn radial_measure_weight(d: &Distances) -> f64 {
    8.0 * PI * PI * d.r12 * d.r13 * d.r23
}

/// `(x+y)(x+z)(y+z)`, equal to `8 r12 r13 r23`.
pub fn perimetric_volume_weight(p: &PerimetricPoint) -> f64 {
    (p.x + p.y) * (p.x + p.z) * (p.y + p.z)
}
