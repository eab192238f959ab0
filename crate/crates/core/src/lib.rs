//! S-state spectrum of three identical particles bound by harmonic springs
//! with a finite rest length `R`.
//!
//! The solver discretizes the reduced (`L = 0`) Hamiltonian on a tensor
//! Lagrange-Laguerre mesh in perimetric coordinates. Around it sit the exact
//! `R = 0` results, a first-order perturbative estimate, a two-parameter
//! variational estimate and tooling for level labeling, `R` scans and the
//! equilibrium rest length.
//!
//! All quantities are in Hartree atomic units.

pub mod approx;
pub mod eigen;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod hamiltonian;
pub mod optimize;
pub mod quadrature;
pub mod report;
pub mod spectrum;

pub use error::{Error, Result};
pub use geometry::{Distances, GeneralizedParams, PerimetricPoint, SystemParams};
pub use hamiltonian::{assemble, AssembledOperator, Interaction};
pub use quadrature::{gauss_laguerre_rule, LagrangeBasis, LagrangeKind, MeshSpec, QuadratureRule};
pub use spectrum::{LevelRow, LevelTable, MeshPolicy, ScaleChoice, SpectrumResult};
