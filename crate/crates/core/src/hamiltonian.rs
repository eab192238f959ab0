//! Discretized S-state Hamiltonian on the perimetric Lagrange mesh.
//!
//! Basis functions are `F_ijk(x,y,z) = N_ijk^{-1/2} f_i(x/h) f_j(y/h) f_k(z/h)`
//! with `N_ijk = h³ (h u_i + h u_j)(h u_i + h u_k)(h u_j + h u_k)`, so that
//! they are orthonormal under the mesh quadrature with volume element
//! `(x+y)(x+z)(y+z) dx dy dz`. The potential is diagonal; the kinetic matrix
//! is the Gauss-quadrature evaluation of `2 ∫ Σ A_ab ∂_a F ∂_b G` (unit
//! mass), which only couples basis functions sharing at least one axis index.
//!
//! Flat index of `(i, j, k)` is `(i M + j) M + k`.
//!
//! A mass other than one enters through `H_m = (1/m) H_1` evaluated with
//! `mω` in place of `ω`, which amounts to dividing the kinetic part by `m`.

use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::LinearOperator;
use crate::error::{Error, Result};
use crate::geometry::{
    distances_from_perimetric, potential, potential_generalized, GeneralizedParams, PerimetricPoint, SystemParams,
};
use crate::quadrature::{
    gauss_laguerre_rule, LagrangeBasis, LagrangeKind, MeshSpec, QuadratureRule, MAX_SUPPORTED_ORDER,
};

/// Above this dimension `to_dense` refuses to build a matrix.
pub const DENSE_LIMIT: usize = 12;

/// Which potential is put on the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Interaction {
    Symmetric(SystemParams),
    /// Pair-dependent couplings; the kinetic term uses unit mass.
    Generalized(GeneralizedParams),
}

impl Interaction {
    pub fn mass(&self) -> f64 {
        match self {
            Interaction::Symmetric(p) => p.mass,
            Interaction::Generalized(_) => 1.0,
        }
    }

    pub fn value_at(&self, p: &PerimetricPoint) -> f64 {
        let d = distances_from_perimetric(p);
        match self {
            Interaction::Symmetric(s) => potential(&d, s),
            Interaction::Generalized(g) => potential_generalized(&d, g),
        }
    }
}

/// Zero-based per-axis mesh indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl BasisIndex {
    pub fn new(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k }
    }

    pub fn flat(&self, m: usize) -> usize {
        (self.i * m + self.j) * m + self.k
    }

    pub fn from_flat(idx: usize, m: usize) -> Self {
        Self { i: idx / (m * m), j: (idx / m) % m, k: idx % m }
    }
}

/// Kinetic coefficients `A_ab(x, y, z)` of the quadratic form
/// `∫ Σ A_ab ∂_a F ∂_b G dx dy dz`.
pub fn a_coefficients(x: f64, y: f64, z: f64) -> [[f64; 3]; 3] {
    let s = x + y + z;
    let a12 = -x * y * (x + y);
    let a13 = -x * z * (x + z);
    let a23 = -y * z * (y + z);
    let a11 = x * (y + z) * s + x * z * (x + z) + x * y * (x + y);
    let a22 = y * z * (y + z) + y * (x + z) * s + x * y * (x + y);
    let a33 = y * z * (y + z) + x * z * (x + z) + z * (x + y) * s;
    [[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]]
}

/// `N_ijk = h³ (h u_i + h u_j)(h u_i + h u_k)(h u_j + h u_k)`.
pub fn normalization(idx: BasisIndex, mesh: &MeshSpec, rule: &QuadratureRule) -> f64 {
    let h = mesh.scale;
    let u = rule.nodes();
    let (x, y, z) = (h * u[idx.i], h * u[idx.j], h * u[idx.k]);
    h * h * h * (x + y) * (x + z) * (y + z)
}

/// Potential at the mesh point of `idx`.
pub fn potential_diagonal(idx: BasisIndex, mesh: &MeshSpec, rule: &QuadratureRule, interaction: &Interaction) -> f64 {
    let h = mesh.scale;
    let u = rule.nodes();
    interaction.value_at(&PerimetricPoint::new(h * u[idx.i], h * u[idx.j], h * u[idx.k]))
}

/// One kinetic matrix element `<F_row|T|F_col>` for unit mass, written out
/// term by term: three single-axis sums and three cross terms.
///
/// `deriv[a * M + b] = f_a'(u_b)`.
pub fn kinetic_element(row: BasisIndex, col: BasisIndex, mesh: &MeshSpec, rule: &QuadratureRule, deriv: &[f64]) -> f64 {
    let m = rule.order();
    let h = mesh.scale;
    let u = rule.nodes();
    let lam = rule.mesh_weights();
    let d = |a: usize, b: usize| deriv[a * m + b];
    let a = |p: usize, q: usize, r: usize| a_coefficients(h * u[p], h * u[q], h * u[r]);
    let (ip, jp, kp) = (row.i, row.j, row.k);
    let (i, j, k) = (col.i, col.j, col.k);
    let inv_h2 = 1.0 / (h * h);

    let mut sum = 0.0;
    if j == jp && k == kp {
        sum += (0..m).map(|n| lam[n] * a(n, j, k)[0][0] * d(i, n) * d(ip, n)).sum::<f64>() * inv_h2;
    }
    if i == ip && k == kp {
        sum += (0..m).map(|n| lam[n] * a(i, n, k)[1][1] * d(j, n) * d(jp, n)).sum::<f64>() * inv_h2;
    }
    if i == ip && j == jp {
        sum += (0..m).map(|n| lam[n] * a(i, j, n)[2][2] * d(k, n) * d(kp, n)).sum::<f64>() * inv_h2;
    }
    if k == kp {
        sum += inv_h2
            * ((lam[i] * lam[jp]).sqrt() * a(i, jp, k)[0][1] * d(ip, i) * d(j, jp)
                + (lam[ip] * lam[j]).sqrt() * a(ip, j, k)[0][1] * d(i, ip) * d(jp, j));
    }
    if j == jp {
        sum += inv_h2
            * ((lam[i] * lam[kp]).sqrt() * a(i, j, kp)[0][2] * d(ip, i) * d(k, kp)
                + (lam[ip] * lam[k]).sqrt() * a(ip, j, k)[0][2] * d(i, ip) * d(kp, k));
    }
    if i == ip {
        sum += inv_h2
            * ((lam[j] * lam[kp]).sqrt() * a(i, j, kp)[1][2] * d(jp, j) * d(k, kp)
                + (lam[jp] * lam[k]).sqrt() * a(i, jp, k)[1][2] * d(j, jp) * d(kp, k));
    }
    let n_row = normalization(row, mesh, rule);
    let n_col = normalization(col, mesh, rule);
    2.0 * h * h * h * sum / (n_row * n_col).sqrt()
}

/// The assembled operator `H = T + diag(V)`, stored in factored form.
///
/// The kinetic part is applied as three forward contractions with the
/// derivative table, pointwise weighting by `λ A_ab` at the mesh points and
/// three backward contractions: `O(M⁴)` work and `O(M³)` storage per
/// product. [`AssembledOperator::kinetic_element`] evaluates single entries
/// from the explicit formula instead.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    mesh: MeshSpec,
    interaction: Interaction,
    basis: LagrangeBasis,
    deriv: Vec<f64>,
    deriv_t: Vec<f64>,
    inv_sqrt_norm: Vec<f64>,
    potential: Vec<f64>,
    /// `λ_a A_aa` at each mesh point, for the single-axis terms.
    axis_coef: [Vec<f64>; 3],
    /// `sqrt(λ_a λ_b) A_ab` at each mesh point for (a,b) = (x,y), (x,z), (y,z).
    cross_coef: [Vec<f64>; 3],
}

/// Builds the operator with the plain Lagrange-Laguerre basis.
pub fn assemble(mesh: MeshSpec, interaction: Interaction) -> Result<AssembledOperator> {
    AssembledOperator::build(mesh, interaction, LagrangeKind::Plain)
}

impl AssembledOperator {
    pub fn build(mesh: MeshSpec, interaction: Interaction, kind: LagrangeKind) -> Result<Self> {
        let m = mesh.points_per_axis;
        if m > MAX_SUPPORTED_ORDER {
            return Err(Error::Envelope { points_per_axis: m, max: MAX_SUPPORTED_ORDER });
        }
        let mesh = MeshSpec::new(m, mesh.scale)?;
        let rule = gauss_laguerre_rule(m)?;
        let basis = LagrangeBasis::new(rule, kind);
        let deriv = basis.derivative_table();
        let mut deriv_t = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..m {
                deriv_t[b * m + a] = deriv[a * m + b];
            }
        }

        let h = mesh.scale;
        let rule = basis.rule();
        let u = rule.nodes();
        let lam = rule.mesh_weights();
        let dim = m * m * m;
        let mut inv_sqrt_norm = vec![0.0; dim];
        let mut pot = vec![0.0; dim];
        let mut axis_coef = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
        let mut cross_coef = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let idx = BasisIndex::new(i, j, k);
                    let f = idx.flat(m);
                    let (x, y, z) = (h * u[i], h * u[j], h * u[k]);
                    inv_sqrt_norm[f] = 1.0 / normalization(idx, &mesh, rule).sqrt();
                    pot[f] = interaction.value_at(&PerimetricPoint::new(x, y, z));
                    let a = a_coefficients(x, y, z);
                    axis_coef[0][f] = lam[i] * a[0][0];
                    axis_coef[1][f] = lam[j] * a[1][1];
                    axis_coef[2][f] = lam[k] * a[2][2];
                    cross_coef[0][f] = (lam[i] * lam[j]).sqrt() * a[0][1];
                    cross_coef[1][f] = (lam[i] * lam[k]).sqrt() * a[0][2];
                    cross_coef[2][f] = (lam[j] * lam[k]).sqrt() * a[1][2];
                }
            }
        }

        Ok(Self { mesh, interaction, basis, deriv, deriv_t, inv_sqrt_norm, potential: pot, axis_coef, cross_coef })
    }

    pub fn mesh(&self) -> &MeshSpec {
        &self.mesh
    }

    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    pub fn rule(&self) -> &QuadratureRule {
        self.basis.rule()
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn points_per_axis(&self) -> usize {
        self.mesh.points_per_axis
    }

    /// `f_a'(u_b)` at `a * M + b`.
    pub fn derivative_table(&self) -> &[f64] {
        &self.deriv
    }

    pub fn potential_diag(&self) -> &[f64] {
        &self.potential
    }

    /// `N_ijk^{-1/2}` per flat index.
    pub fn inv_sqrt_norm(&self) -> &[f64] {
        &self.inv_sqrt_norm
    }

    fn kinetic_prefactor(&self) -> f64 {
        2.0 * self.mesh.scale / self.interaction.mass()
    }

    /// Kinetic entry including the `1/m` factor.
    pub fn kinetic_element(&self, row: BasisIndex, col: BasisIndex) -> f64 {
        kinetic_element(row, col, &self.mesh, self.rule(), &self.deriv) / self.interaction.mass()
    }

    /// Full matrix entry.
    pub fn element(&self, row: BasisIndex, col: BasisIndex) -> f64 {
        let mut v = self.kinetic_element(row, col);
        if row == col {
            v += self.potential[row.flat(self.points_per_axis())];
        }
        v
    }

    /// Entries that the kinetic formula can make non-zero: rows and columns
    /// sharing at least one axis index. Equals `M³ (3M² - 3M + 1)`.
    pub fn structural_nonzeros(&self) -> usize {
        let m = self.points_per_axis();
        m * m * m * (3 * m * m - 3 * m + 1)
    }

    /// Dense matrix, built entry by entry from the explicit formula. Only for
    /// `M ≤ DENSE_LIMIT`.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let m = self.points_per_axis();
        if m > DENSE_LIMIT {
            return Err(Error::Envelope { points_per_axis: m, max: DENSE_LIMIT });
        }
        let dim = m * m * m;
        let mut out = DMatrix::<f64>::zeros(dim, dim);
        for r in 0..dim {
            let row = BasisIndex::from_flat(r, m);
            for c in r..dim {
                let col = BasisIndex::from_flat(c, m);
                if row.i != col.i && row.j != col.j && row.k != col.k {
                    continue;
                }
                let v = self.element(row, col);
                out[(r, c)] = v;
                out[(c, r)] = v;
            }
        }
        Ok(out)
    }

    /// Writes the operator tables in a little-endian debug layout:
    ///
    /// ```text
    /// b"TRIMEROP" | u32 version=1 | u32 M | f64 h | u8 kind (0 plain, 1 regularized)
    /// u8 interaction (0 symmetric, 1 generalized) | params as f64
    ///   (m, ω, R) or (ν12, ν13, ν23, R12, R13, R23, ω)
    /// [M³] potential | [M³] N^{-1/2} | [M²] derivative table
    /// [3 × M³] λ A_aa | [3 × M³] sqrt(λλ) A_ab
    /// ```
    ///
    /// Not a stable format.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"TRIMEROP")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.points_per_axis() as u32).to_le_bytes())?;
        w.write_all(&self.mesh.scale.to_le_bytes())?;
        let kind = match self.basis.kind() {
            LagrangeKind::Plain => 0u8,
            LagrangeKind::Regularized => 1u8,
        };
        w.write_all(&[kind])?;
        let params: Vec<f64> = match self.interaction {
            Interaction::Symmetric(p) => {
                w.write_all(&[0u8])?;
                vec![p.mass, p.omega, p.rest_length]
            }
            Interaction::Generalized(g) => {
                w.write_all(&[1u8])?;
                vec![g.nu12, g.nu13, g.nu23, g.r12, g.r13, g.r23, g.omega]
            }
        };
        let sections = [&params, &self.potential, &self.inv_sqrt_norm, &self.deriv]
            .into_iter()
            .chain(self.axis_coef.iter())
            .chain(self.cross_coef.iter());
        for section in sections {
            for v in section.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// `dst[.., p, ..] = Σ_q mat[p M + q] src[.., q, ..]` along `axis`.
fn contract(m: usize, axis: usize, mat: &[f64], src: &[f64], dst: &mut [f64]) {
    dst.fill(0.0);
    match axis {
        0 => {
            let plane = m * m;
            for (p, out) in dst.chunks_exact_mut(plane).enumerate() {
                for (q, inp) in src.chunks_exact(plane).enumerate() {
                    let c = mat[p * m + q];
                    for (o, s) in out.iter_mut().zip(inp) {
                        *o += c * s;
                    }
                }
            }
        }
        1 => {
            let plane = m * m;
            for (out_plane, in_plane) in dst.chunks_exact_mut(plane).zip(src.chunks_exact(plane)) {
                for (p, out) in out_plane.chunks_exact_mut(m).enumerate() {
                    for (q, inp) in in_plane.chunks_exact(m).enumerate() {
                        let c = mat[p * m + q];
                        for (o, s) in out.iter_mut().zip(inp) {
                            *o += c * s;
                        }
                    }
                }
            }
        }
        _ => {
            for (out, inp) in dst.chunks_exact_mut(m).zip(src.chunks_exact(m)) {
                for (p, o) in out.iter_mut().enumerate() {
                    let row = &mat[p * m..(p + 1) * m];
                    *o = row.iter().zip(inp).map(|(a, b)| a * b).sum();
                }
            }
        }
    }
}

impl LinearOperator for AssembledOperator {
    fn dim(&self) -> usize {
        self.potential.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.points_per_axis();
        let dim = self.dim();
        let w: Vec<f64> = x.iter().zip(&self.inv_sqrt_norm).map(|(a, b)| a * b).collect();
        // derivatives along each axis at the mesh points
        let mut grads = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
        for (axis, g) in grads.iter_mut().enumerate() {
            contract(m, axis, &self.deriv_t, &w, g);
        }
        let [ax, ay, az] = &self.axis_coef;
        let [cxy, cxz, cyz] = &self.cross_coef;
        let [g0, g1, g2] = &grads;
        let mut flux = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
        for f in 0..dim {
            flux[0][f] = ax[f] * g0[f] + cxy[f] * g1[f] + cxz[f] * g2[f];
            flux[1][f] = ay[f] * g1[f] + cxy[f] * g0[f] + cyz[f] * g2[f];
            flux[2][f] = az[f] * g2[f] + cxz[f] * g0[f] + cyz[f] * g1[f];
        }
        let mut acc = vec![0.0; dim];
        let mut tmp = vec![0.0; dim];
        for (axis, fl) in flux.iter().enumerate() {
            contract(m, axis, &self.deriv, fl, &mut tmp);
            for (a, t) in acc.iter_mut().zip(&tmp) {
                *a += t;
            }
        }
        let pref = self.kinetic_prefactor();
        for f in 0..dim {
            y[f] = self.potential[f] * x[f] + pref * self.inv_sqrt_norm[f] * acc[f];
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let m = self.points_per_axis();
        Some(
            (0..self.dim())
                .map(|f| {
                    let idx = BasisIndex::from_flat(f, m);
                    self.element(idx, idx)
                })
                .collect(),
        )
    }
}
