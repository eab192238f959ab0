//! Eigenvalues of the assembled operator, level labeling, `R` scans and the
//! equilibrium rest length.

use std::cell::RefCell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::{lowest_eigenpairs_from, EigenOptions};
use crate::error::{Error, Result};
use crate::exact::degeneracy;
use crate::geometry::SystemParams;
use crate::hamiltonian::{assemble, AssembledOperator, Interaction};
use crate::optimize::golden_section;
use crate::quadrature::{gauss_laguerre_rule, MeshSpec};

/// Relative gap below which neighbouring eigenvalues are one cluster.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

/// Residual tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Smallest residual tolerance accepted.
pub const MIN_TOL: f64 = 1e-13;

/// Multiplier applied to [`default_scale`] by [`ScaleChoice::Auto`] unless
/// overridden. The bare heuristic sizes the mesh for the ground state; the
/// excited multiplets need about twice the extent.
pub const DEFAULT_STRETCH: f64 = 2.0;

/// Step of the coarse scan that brackets the minimum.
pub const COARSE_STEP: f64 = 0.25;

/// Converged eigenvalues with their residual certificates.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    pub values: Vec<f64>,
    /// `‖H v - E v‖` for each returned pair.
    pub residuals: Vec<f64>,
    pub tol: f64,
    pub iterations: usize,
    pub matvecs: usize,
    #[serde(skip)]
    pub vectors: Vec<Vec<f64>>,
}

impl SpectrumResult {
    /// Whether every pair satisfies `‖H v - E v‖ ≤ tol · max(1, |E|)`.
    pub fn certified(&self) -> bool {
        self.values.iter().zip(&self.residuals).all(|(e, r)| *r <= self.tol * e.abs().max(1.0))
    }
}

fn check_request(op: &AssembledOperator, count: usize, tol: f64) -> Result<()> {
    use crate::eigen::LinearOperator;
    if count == 0 || count > op.dim() {
        return Err(Error::InvalidInput(format!("count must be in 1..={}, got {count}", op.dim())));
    }
    if !(tol >= MIN_TOL) {
        return Err(Error::InvalidInput(format!("tolerance must be at least {MIN_TOL:e}, got {tol:e}")));
    }
    Ok(())
}

/// The `count` lowest eigenvalues of `op`.
pub fn lowest_eigenvalues(op: &AssembledOperator, count: usize, tol: f64) -> Result<SpectrumResult> {
    solve_spectrum(op, &EigenOptions { count, tol, ..EigenOptions::default() }, &[])
}

/// Eigenvalues with full control over the solver; `start` seeds the
/// iterative start block.
pub fn solve_spectrum(op: &AssembledOperator, opts: &EigenOptions, start: &[Vec<f64>]) -> Result<SpectrumResult> {
    check_request(op, opts.count, opts.tol)?;
    let sol = lowest_eigenpairs_from(op, opts, start)?;
    let res = SpectrumResult {
        values: sol.values,
        residuals: sol.residuals,
        tol: opts.tol,
        iterations: sol.iterations,
        matvecs: sol.matvecs,
        vectors: sol.vectors,
    };
    if !res.certified() {
        let worst = res.values.iter().zip(&res.residuals).map(|(e, r)| r / e.abs().max(1.0)).fold(0.0f64, f64::max);
        return Err(Error::NotConverged {
            iterations: res.iterations,
            worst_residual: worst,
            best_values: res.values,
            best_residuals: res.residuals,
        });
    }
    Ok(res)
}

/// One sub-level `E_{N,n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    #[serde(rename = "N")]
    pub level: u32,
    pub n: u32,
    #[serde(rename = "E")]
    pub energy: f64,
    pub multiplicity: usize,
    /// Largest residual norm within the cluster.
    pub residual: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LevelTable {
    pub rows: Vec<LevelRow>,
    /// Highest `N` whose whole multiplet lies inside the computed states.
    pub complete_through: Option<u32>,
    pub warnings: Vec<String>,
}

impl LevelTable {
    pub fn level(&self, big_n: u32) -> Vec<&LevelRow> {
        self.rows.iter().filter(|r| r.level == big_n).collect()
    }

    pub fn multiplicities(&self, big_n: u32) -> Vec<usize> {
        self.level(big_n).iter().map(|r| r.multiplicity).collect()
    }

    pub fn energy(&self, big_n: u32, n: u32) -> Option<f64> {
        self.rows.iter().find(|r| r.level == big_n && r.n == n).map(|r| r.energy)
    }
}

/// `N` of the state at zero-based position `idx` in the ordered spectrum,
/// counting `degeneracy(N)` states per multiplet.
fn level_of(idx: usize) -> u32 {
    let mut n = 0;
    let mut end = 0usize;
    loop {
        end += degeneracy(n) as usize;
        if idx < end {
            return n;
        }
        n += 1;
    }
}

/// Groups eigenvalues into clusters and assigns `(N, n)` labels.
///
/// Neighbours whose relative gap is below `cluster_tol` share a cluster.
/// `N` comes from counting states against the `R = 0` degeneracies, which
/// presumes no crossing between multiplets; a cluster straddling a multiplet
/// boundary, or a gap within a factor 10 of `cluster_tol`, is reported in
/// `warnings`.
pub fn label_levels(res: &SpectrumResult, cluster_tol: f64) -> LevelTable {
    let values = &res.values;
    let mut table = LevelTable::default();
    if values.is_empty() {
        return table;
    }
    let mut clusters: Vec<(usize, usize)> = vec![(0, 1)];
    for i in 1..values.len() {
        let gap = (values[i] - values[i - 1]).abs() / values[i].abs().max(f64::MIN_POSITIVE);
        if gap > cluster_tol / 10.0 && gap < cluster_tol * 10.0 {
            table.warnings.push(format!(
                "ambiguous gap {gap:.2e} between states {} and {} (E = {:.12})",
                i - 1,
                i,
                values[i]
            ));
        }
        if gap < cluster_tol {
            clusters.last_mut().unwrap().1 += 1;
        } else {
            clusters.push((i, 1));
        }
    }

    let mut sub = 0;
    let mut current = u32::MAX;
    for (start, mult) in clusters {
        let big_n = level_of(start);
        if level_of(start + mult - 1) != big_n {
            table.warnings.push(format!(
                "cluster at E = {:.12} (states {}..{}) straddles the N = {} multiplet boundary",
                values[start],
                start,
                start + mult - 1,
                big_n
            ));
        }
        if big_n != current {
            current = big_n;
            sub = 0;
        }
        let residual = res.residuals[start..start + mult].iter().copied().fold(0.0, f64::max);
        table.rows.push(LevelRow { level: big_n, n: sub, energy: values[start], multiplicity: mult, residual });
        sub += 1;
    }

    let total = values.len();
    let mut covered = 0usize;
    let mut n = 0;
    while covered + degeneracy(n) as usize <= total {
        covered += degeneracy(n) as usize;
        table.complete_through = Some(n);
        n += 1;
    }
    table
}

/// How the mesh scale is chosen for each solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScaleChoice {
    Fixed(f64),
    /// `stretch × default_scale(params, M)`.
    Auto {
        stretch: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshPolicy {
    pub points_per_axis: usize,
    pub scale: ScaleChoice,
}

impl MeshPolicy {
    pub fn auto(points_per_axis: usize) -> Self {
        Self { points_per_axis, scale: ScaleChoice::Auto { stretch: DEFAULT_STRETCH } }
    }

    pub fn fixed(points_per_axis: usize, scale: f64) -> Self {
        Self { points_per_axis, scale: ScaleChoice::Fixed(scale) }
    }

    pub fn resolve(&self, params: &SystemParams) -> Result<MeshSpec> {
        let h = match self.scale {
            ScaleChoice::Fixed(h) => h,
            ScaleChoice::Auto { stretch } => stretch * default_scale(params, self.points_per_axis)?,
        };
        MeshSpec::new(self.points_per_axis, h)
    }
}

/// Heuristic scale `h = (2R + 8/√(3mω)) / x_M`, with `x_M` the largest node:
/// the last mesh point sits a few oscillator lengths beyond the equilateral
/// configuration of side `R`.
pub fn default_scale(params: &SystemParams, points_per_axis: usize) -> Result<f64> {
    let x_max = gauss_laguerre_rule(points_per_axis)?.largest_node();
    let extent = 2.0 * params.rest_length + 8.0 / (3.0 * params.mass * params.omega).sqrt();
    Ok(extent / x_max)
}

/// Assembles and solves one symmetric system.
pub fn solve_params(
    params: SystemParams,
    policy: &MeshPolicy,
    count: usize,
    tol: f64,
    start: &[Vec<f64>],
) -> Result<(MeshSpec, SpectrumResult)> {
    let mesh = policy.resolve(&params)?;
    let op = assemble(mesh, Interaction::Symmetric(params))?;
    let res = solve_spectrum(&op, &EigenOptions { count, tol, ..EigenOptions::default() }, start)?;
    Ok((mesh, res))
}

/// Lowest eigenvalue for `params`.
pub fn ground_energy(params: SystemParams, policy: &MeshPolicy, tol: f64) -> Result<f64> {
    Ok(solve_params(params, policy, 1, tol, &[])?.1.values[0])
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub rest_length: f64,
    pub mesh: MeshSpec,
    pub spectrum: SpectrumResult,
    pub table: LevelTable,
}

/// One labeled table per rest length; points are solved independently and
/// in parallel.
pub fn energy_scan(
    base: SystemParams,
    rest_lengths: &[f64],
    policy: &MeshPolicy,
    count: usize,
    tol: f64,
) -> Result<Vec<ScanPoint>> {
    rest_lengths
        .par_iter()
        .map(|&r| {
            let params = SystemParams::new(base.mass, base.omega, r)?;
            let (mesh, spectrum) = solve_params(params, policy, count, tol, &[])?;
            let table = label_levels(&spectrum, DEFAULT_CLUSTER_TOL);
            Ok(ScanPoint { rest_length: r, mesh, spectrum, table })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum {
    pub rest_length: f64,
    pub energy: f64,
    pub evaluations: usize,
}

/// Rest length minimizing the ground-state energy at unit mass.
///
/// A coarse scan with step [`COARSE_STEP`] over `bracket` locates an
/// interior discrete minimum, then golden-section search refines `R` to
/// `tol_r`. Each evaluation is a fresh assembly at that `R`; the previous
/// ground state seeds the eigensolver.
pub fn find_minimum(omega: f64, policy: &MeshPolicy, bracket: (f64, f64), tol_r: f64, tol: f64) -> Result<Minimum> {
    let (lo, hi) = bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!("bad bracket [{lo}, {hi}]")));
    }
    let previous: RefCell<Vec<Vec<f64>>> = RefCell::new(Vec::new());
    let evaluations = RefCell::new(0usize);
    let energy = |r: f64| -> Result<f64> {
        let params = SystemParams::new(1.0, omega, r)?;
        let start = previous.borrow().clone();
        let (_, res) = solve_params(params, policy, 1, tol, &start)?;
        *previous.borrow_mut() = res.vectors;
        *evaluations.borrow_mut() += 1;
        Ok(res.values[0])
    };

    let steps = ((hi - lo) / COARSE_STEP).ceil().max(2.0) as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let mut values = Vec::with_capacity(grid.len());
    for &r in &grid {
        values.push(energy(r)?);
    }
    let best = (0..values.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    if best == 0 || best == values.len() - 1 {
        return Err(Error::NoMinimum { lo, hi });
    }
    let (r, e) = golden_section(energy, grid[best - 1], grid[best + 1], tol_r)?;
    let evaluations = *evaluations.borrow();
    Ok(Minimum { rest_length: r, energy: e, evaluations })
}

/// Maps `E[m, ω, R]` to the equivalent `(E', R')` at `(m', ω')`:
/// `E[m, ω, R] = (ω/ω') E[m', ω', R']` with `R' = √(mω/(m'ω')) R`.
pub fn scale_energy(energy: f64, from: &SystemParams, to_mass: f64, to_omega: f64) -> Result<(f64, f64)> {
    if !(to_mass > 0.0 && to_omega > 0.0) {
        return Err(Error::InvalidInput("target mass and frequency must be positive".into()));
    }
    let e = energy * to_omega / from.omega;
    let r = (from.mass * from.omega / (to_mass * to_omega)).sqrt() * from.rest_length;
    Ok((e, r))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub points_per_axis: usize,
    pub scale: f64,
    pub energies: Vec<f64>,
    pub max_residual: f64,
    /// Leading digits shared with the previous `M` at the same scale choice
    /// (worst state).
    pub stable_digits: Option<u32>,
}

/// Energies on a grid of mesh sizes and scales. With `scales = None` each
/// `M` uses `DEFAULT_STRETCH × default_scale`.
pub fn convergence_study(
    params: SystemParams,
    sizes: &[usize],
    scales: Option<&[f64]>,
    count: usize,
    tol: f64,
) -> Result<Vec<ConvergenceRow>> {
    let choices: Vec<ScaleChoice> = match scales {
        Some(hs) => hs.iter().map(|&h| ScaleChoice::Fixed(h)).collect(),
        None => vec![ScaleChoice::Auto { stretch: DEFAULT_STRETCH }],
    };
    let cells: Vec<(usize, usize)> = (0..choices.len()).flat_map(|c| sizes.iter().map(move |&m| (c, m))).collect();
    let solved: Vec<(usize, ConvergenceRow)> = cells
        .par_iter()
        .map(|&(c, m)| {
            let policy = MeshPolicy { points_per_axis: m, scale: choices[c] };
            let (mesh, res) = solve_params(params, &policy, count, tol, &[])?;
            let max_residual = res.residuals.iter().copied().fold(0.0, f64::max);
            Ok((
                c,
                ConvergenceRow {
                    points_per_axis: m,
                    scale: mesh.scale,
                    energies: res.values,
                    max_residual,
                    stable_digits: None,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(solved.len());
    let mut prev: Option<(usize, Vec<f64>)> = None;
    for (c, mut row) in solved {
        if let Some((pc, pe)) = &prev {
            if *pc == c {
                row.stable_digits = Some(shared_digits(pe, &row.energies));
            }
        }
        prev = Some((c, row.energies.clone()));
        rows.push(row);
    }
    Ok(rows)
}

fn shared_digits(a: &[f64], b: &[f64]) -> u32 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let rel = (x - y).abs() / y.abs().max(f64::MIN_POSITIVE);
            if rel == 0.0 {
                16
            } else {
                (-rel.log10()).floor().clamp(0.0, 16.0) as u32
            }
        })
        .min()
        .unwrap_or(0)
}
