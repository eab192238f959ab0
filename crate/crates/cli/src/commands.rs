//! One function per subcommand, each returning the rendered output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;

use serde_json::{json, Value};
use thiserror::Error;

use trimer::approx::{optimize_variational, pt_ground_energy, pt_stationary_point};
use trimer::eigen::EigenOptions;
use trimer::exact::{degeneracy, energy_level, enumerate_labels, split_count};
use trimer::report::{energy_field, levels_csv, levels_json};
use trimer::spectrum::{
    convergence_study, energy_scan, find_minimum, ground_energy, label_levels, solve_spectrum, LevelTable, MeshPolicy,
    DEFAULT_CLUSTER_TOL, DEFAULT_TOL,
};
use trimer::{assemble, gauss_laguerre_rule, GeneralizedParams, Interaction, SystemParams};

use crate::config::{Settings, UsageError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(#[from] UsageError),
    #[error("{0}")]
    Solver(#[from] trimer::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Solver(trimer::Error::InvalidInput(_) | trimer::Error::OutsideDomain { .. }) => 2,
            CliError::Solver(trimer::Error::NotConverged { .. }) => 3,
            CliError::Solver(trimer::Error::Envelope { .. }) => 4,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: Option<&str>) -> Result<Self, UsageError> {
        match s.unwrap_or("csv") {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(UsageError(format!("invalid value for 'format': '{other}' (expected csv or json)"))),
        }
    }
}

/// `# key=value` header lines carrying what is needed to rerun a result.
struct Meta(BTreeMap<&'static str, String>);

impl Meta {
    fn new(command: &str) -> Self {
        let mut m = BTreeMap::new();
        m.insert("command", command.to_string());
        m.insert("version", env!("CARGO_PKG_VERSION").to_string());
        Meta(m)
    }

    fn set(&mut self, key: &'static str, value: impl ToString) -> &mut Self {
        self.0.insert(key, value.to_string());
        self
    }

    fn policy(&mut self, policy: &MeshPolicy) -> &mut Self {
        self.set("M", policy.points_per_axis);
        match policy.scale {
            trimer::ScaleChoice::Fixed(h) => self.set("h", h),
            trimer::ScaleChoice::Auto { stretch } => self.set("h", "auto").set("stretch", stretch),
        }
    }

    fn csv(&self, body: &str) -> String {
        let mut out = String::new();
        for (k, v) in &self.0 {
            writeln!(out, "# {k}={v}").unwrap();
        }
        out.push_str(body);
        out
    }

    fn json(&self, mut body: Value) -> String {
        body["meta"] = json!(self.0);
        let mut s = serde_json::to_string_pretty(&body).expect("json output");
        s.push('\n');
        s
    }
}

fn render(meta: &Meta, format: Format, csv: impl FnOnce() -> String, json: impl FnOnce() -> Value) -> String {
    match format {
        Format::Csv => meta.csv(&csv()),
        Format::Json => meta.json(json()),
    }
}

fn symmetric_params(s: &Settings) -> Result<SystemParams, CliError> {
    let mass = s.positive_or("mass", 1.0)?;
    let omega = s.positive_or("omega", 0.5)?;
    let rest = s.non_negative_or("R", 0.0)?;
    Ok(SystemParams::new(mass, omega, rest)?)
}

fn tolerances(s: &Settings) -> Result<(f64, f64), CliError> {
    Ok((s.positive_or("tol", DEFAULT_TOL)?, s.positive_or("cluster-tol", DEFAULT_CLUSTER_TOL)?))
}

fn report_warnings(table: &LevelTable, rest: f64) {
    for w in &table.warnings {
        eprintln!("warning (R={rest}): {w}");
    }
}

pub fn exact(s: &Settings, format: Format) -> Result<String, CliError> {
    let n = s.require_u32("N")?;
    let omega = s.positive_or("omega", 1.0)?;
    let e = energy_level(n, omega);
    let labels = enumerate_labels(n);
    let mut meta = Meta::new("exact");
    meta.set("N", n).set("omega", omega);
    let csv = || {
        let mut out = String::from("N,omega,E,degeneracy,split_count,row,n1,n2,l,N1,N2,N3\n");
        for (row, (j, r)) in labels.iter().enumerate() {
            writeln!(
                out,
                "{n},{omega},{},{},{},{},{},{},{},{},{},{}",
                energy_field(e),
                degeneracy(n),
                split_count(n),
                row + 1,
                j.n1,
                j.n2,
                j.l,
                r.n1,
                r.n2,
                r.n3
            )
            .unwrap();
        }
        out
    };
    let json = || {
        json!({
            "N": n,
            "omega": omega,
            "E": e,
            "degeneracy": degeneracy(n),
            "split_count": split_count(n),
            "labels": labels.iter().map(|(j, r)| json!({"jacobi": j, "rho": r})).collect::<Vec<_>>(),
        })
    };
    Ok(render(&meta, format, csv, json))
}

fn generalized_params(s: &Settings) -> Result<Option<GeneralizedParams>, CliError> {
    match (s.f64_list("nu")?, s.f64_list("rest")?) {
        (None, None) => Ok(None),
        (Some(nu), Some(rest)) => {
            if nu.len() != 3 || rest.len() != 3 {
                return Err(UsageError("'nu' and 'rest' take three values each (pairs 12, 13, 23)".into()).into());
            }
            if s.has("R") || s.has("mass") {
                return Err(UsageError("'R' and 'mass' do not apply with 'nu'/'rest'".into()).into());
            }
            let omega = s.positive_or("omega", 0.5)?;
            Ok(Some(GeneralizedParams::new([nu[0], nu[1], nu[2]], [rest[0], rest[1], rest[2]], omega)?))
        }
        _ => Err(UsageError("'nu' and 'rest' must be given together".into()).into()),
    }
}

pub fn spectrum(s: &Settings, format: Format) -> Result<String, CliError> {
    let count = s.usize_or("states", 20)?;
    let (tol, cluster_tol) = tolerances(s)?;
    let policy = s.mesh_policy(20)?;
    let opts = EigenOptions {
        count,
        tol,
        max_iterations: s.usize_or("max-iterations", EigenOptions::default().max_iterations)?,
        ..EigenOptions::default()
    };
    let mut meta = Meta::new("spectrum");
    meta.policy(&policy).set("states", count).set("tol", format!("{tol:e}"));

    if let Some(g) = generalized_params(s)? {
        // the mesh heuristic needs a single length and frequency
        let longest = g.r12.max(g.r13).max(g.r23);
        let mesh = policy.resolve(&SystemParams::new(1.0, g.omega, longest)?)?;
        let op = assemble(mesh, Interaction::Generalized(g))?;
        let res = solve_spectrum(&op, &opts, &[])?;
        meta.set("omega", g.omega)
            .set("nu", format!("{} {} {}", g.nu12, g.nu13, g.nu23))
            .set("rest", format!("{} {} {}", g.r12, g.r13, g.r23))
            .set("h_resolved", mesh.scale);
        let csv = || {
            let mut out = String::from("state,E,residual\n");
            for (i, (e, r)) in res.values.iter().zip(&res.residuals).enumerate() {
                writeln!(out, "{i},{},{r:.3e}", energy_field(*e)).unwrap();
            }
            out
        };
        let json = || json!({"params": g, "mesh": mesh, "values": res.values, "residuals": res.residuals});
        return Ok(render(&meta, format, csv, json));
    }

    let params = symmetric_params(s)?;
    let mesh = policy.resolve(&params)?;
    let op = assemble(mesh, Interaction::Symmetric(params))?;
    let res = solve_spectrum(&op, &opts, &[])?;
    let table = label_levels(&res, cluster_tol);
    report_warnings(&table, params.rest_length);
    meta.set("omega", params.omega)
        .set("mass", params.mass)
        .set("R", params.rest_length)
        .set("h_resolved", mesh.scale)
        .set("cluster_tol", format!("{cluster_tol:e}"));
    let csv = || levels_csv([(params.rest_length, &table)]);
    let json = || {
        let mut v = levels_json(&params, &mesh, &table);
        v["complete_through"] = json!(table.complete_through);
        v["warnings"] = json!(table.warnings);
        v
    };
    Ok(render(&meta, format, csv, json))
}

pub fn scan(s: &Settings, format: Format) -> Result<String, CliError> {
    let rest = s.rest_lengths(None)?;
    let base = SystemParams::new(s.positive_or("mass", 1.0)?, s.positive_or("omega", 0.5)?, 0.0)?;
    let count = s.usize_or("states", 20)?;
    let (tol, cluster_tol) = tolerances(s)?;
    let policy = s.mesh_policy(20)?;
    let points = energy_scan(base, &rest, &policy, count, tol)?;
    let tables: Vec<(f64, LevelTable)> = points
        .iter()
        .map(|p| {
            let t = if cluster_tol == DEFAULT_CLUSTER_TOL {
                p.table.clone()
            } else {
                label_levels(&p.spectrum, cluster_tol)
            };
            report_warnings(&t, p.rest_length);
            (p.rest_length, t)
        })
        .collect();
    let mut meta = Meta::new("scan");
    meta.policy(&policy)
        .set("omega", base.omega)
        .set("mass", base.mass)
        .set("states", count)
        .set("tol", format!("{tol:e}"))
        .set("cluster_tol", format!("{cluster_tol:e}"));
    let csv = || levels_csv(tables.iter().map(|(r, t)| (*r, t)));
    let json = || {
        json!({
            "points": points.iter().zip(&tables).map(|(p, (_, t))| {
                let params = SystemParams { rest_length: p.rest_length, ..base };
                levels_json(&params, &p.mesh, t)
            }).collect::<Vec<_>>(),
        })
    };
    Ok(render(&meta, format, csv, json))
}

pub fn minimize(s: &Settings, format: Format) -> Result<String, CliError> {
    let omega = s.positive_or("omega", 0.5)?;
    let bracket = s.f64_list("bracket")?.ok_or_else(|| UsageError("missing required value 'bracket'".into()))?;
    let [lo, hi] = bracket[..] else {
        return Err(UsageError("invalid value for 'bracket': expected two numbers".into()).into());
    };
    let tol_r = s.positive_or("tol-R", 1e-6)?;
    let tol = s.positive_or("tol", DEFAULT_TOL)?;
    let policy = s.mesh_policy(20)?;
    let min = find_minimum(omega, &policy, (lo, hi), tol_r, tol)?;
    let mut meta = Meta::new("minimize");
    meta.policy(&policy)
        .set("omega", omega)
        .set("mass", 1)
        .set("bracket", format!("{lo} {hi}"))
        .set("tol_R", format!("{tol_r:e}"))
        .set("tol", format!("{tol:e}"));
    let csv = || {
        format!(
            "omega,R_min,E_min,evaluations\n{omega},{:.9},{},{}\n",
            min.rest_length,
            energy_field(min.energy),
            min.evaluations
        )
    };
    let json = || json!({"omega": omega, "minimum": min});
    Ok(render(&meta, format, csv, json))
}

const TABLE_II_RESTS: [f64; 4] = [0.5, 1.0, 2.0, 3.5];

pub fn variational(s: &Settings, format: Format) -> Result<String, CliError> {
    let omega = s.positive_or("omega", 1.0)?;
    let rest = s.rest_lengths(Some(&TABLE_II_RESTS))?;
    let policy = s.mesh_policy(16)?;
    let reference = MeshPolicy { points_per_axis: s.usize_or("mesh-M", 20)?, ..policy };
    let tol = s.positive_or("tol", DEFAULT_TOL)?;
    let mut rows = Vec::with_capacity(rest.len());
    for &r in &rest {
        let params = SystemParams::new(1.0, omega, r)?;
        let opt = optimize_variational(&params, policy.resolve(&params)?)?;
        let exact = ground_energy(params, &reference, tol)?;
        rows.push((r, opt, exact));
    }
    let mut meta = Meta::new("variational");
    meta.policy(&policy)
        .set("omega", omega)
        .set("mass", 1)
        .set("mesh_M", reference.points_per_axis)
        .set("tol", format!("{tol:e}"));
    let csv = || {
        let mut out = String::from("R,E,alpha,beta,E_mesh,RE\n");
        for (r, opt, exact) in &rows {
            writeln!(
                out,
                "{r},{},{:.6},{:.6},{},{:.6e}",
                energy_field(opt.energy),
                opt.params.alpha,
                opt.params.beta,
                energy_field(*exact),
                (opt.energy - exact) / exact
            )
            .unwrap();
        }
        out
    };
    let json = || {
        json!({"rows": rows.iter().map(|(r, opt, exact)| json!({
            "R": r, "E": opt.energy, "alpha": opt.params.alpha, "beta": opt.params.beta,
            "E_mesh": exact, "RE": (opt.energy - exact) / exact,
        })).collect::<Vec<_>>()})
    };
    Ok(render(&meta, format, csv, json))
}

pub fn pt(s: &Settings, format: Format) -> Result<String, CliError> {
    let omega = s.positive_or("omega", 1.0)?;
    let rest = s.rest_lengths(None)?;
    let policy = s.mesh_policy(18)?;
    let tol = s.positive_or("tol", DEFAULT_TOL)?;
    let rows: Vec<(f64, f64, f64)> = rest
        .iter()
        .map(|&r| Ok((r, pt_ground_energy(omega, r), ground_energy(SystemParams::new(1.0, omega, r)?, &policy, tol)?)))
        .collect::<Result<_, CliError>>()?;
    let mut meta = Meta::new("pt");
    meta.policy(&policy)
        .set("omega", omega)
        .set("mass", 1)
        .set("tol", format!("{tol:e}"))
        .set("stationary_R", format!("{:.12}", pt_stationary_point(omega)));
    let csv = || {
        let mut out = String::from("R,E,E_mesh,RE\n");
        for (r, e, mesh) in &rows {
            writeln!(out, "{r},{},{},{:.6e}", energy_field(*e), energy_field(*mesh), (e - mesh) / mesh).unwrap();
        }
        out
    };
    let json = || {
        json!({
            "stationary_R": pt_stationary_point(omega),
            "rows": rows.iter().map(|(r, e, mesh)| json!({"R": r, "E": e, "E_mesh": mesh, "RE": (e - mesh) / mesh})).collect::<Vec<_>>(),
        })
    };
    Ok(render(&meta, format, csv, json))
}

pub fn convergence(s: &Settings, format: Format) -> Result<String, CliError> {
    let params = symmetric_params(s)?;
    let sizes = s.usize_list("sizes")?.unwrap_or_else(|| vec![12, 14, 16, 18, 20]);
    let scales = s.f64_list("h-values")?;
    if let Some(h) = scales.as_ref().and_then(|hs| hs.iter().find(|h| **h <= 0.0)) {
        return Err(UsageError(format!("invalid value for 'h-values': {h} is not positive")).into());
    }
    let count = s.usize_or("states", 10)?;
    let tol = s.positive_or("tol", DEFAULT_TOL)?;
    let rows = convergence_study(params, &sizes, scales.as_deref(), count, tol)?;
    let mut meta = Meta::new("convergence");
    meta.set("omega", params.omega)
        .set("mass", params.mass)
        .set("R", params.rest_length)
        .set("states", count)
        .set("tol", format!("{tol:e}"))
        .set("sizes", sizes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" "));
    let csv = || {
        let mut out = String::from("M,h,state,E,max_residual,stable_digits\n");
        for row in &rows {
            let digits = row.stable_digits.map(|d| d.to_string()).unwrap_or_default();
            for (i, e) in row.energies.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{i},{},{:.3e},{digits}",
                    row.points_per_axis,
                    row.scale,
                    energy_field(*e),
                    row.max_residual
                )
                .unwrap();
            }
        }
        out
    };
    let json = || json!({"rows": rows});
    Ok(render(&meta, format, csv, json))
}

pub fn quadrature_dump(s: &Settings, format: Format) -> Result<String, CliError> {
    let m = s.usize_or("M", 0).and_then(|m| {
        if m == 0 {
            Err(UsageError("missing required value 'M'".into()))
        } else {
            Ok(m)
        }
    })?;
    let rule = gauss_laguerre_rule(m)?;
    let mut meta = Meta::new("quadrature-dump");
    meta.set("M", m);
    if let Some(path) = s.raw("operator") {
        let params = symmetric_params(s)?;
        let policy = s.mesh_policy(m)?;
        let mesh = policy.resolve(&params)?;
        let op = assemble(mesh, Interaction::Symmetric(params))?;
        op.write_dump(BufWriter::new(File::create(path)?))?;
        meta.policy(&policy)
            .set("operator", path)
            .set("mass", params.mass)
            .set("h_resolved", mesh.scale)
            .set("omega", params.omega)
            .set("R", params.rest_length);
    }
    let csv = || {
        let mut out = String::from("i,node,weight,mesh_weight\n");
        for i in 0..m {
            writeln!(out, "{i},{:e},{:e},{:e}", rule.nodes()[i], rule.weights()[i], rule.mesh_weights()[i]).unwrap();
        }
        out
    };
    let json = || json!({"nodes": rule.nodes(), "weights": rule.weights(), "mesh_weights": rule.mesh_weights()});
    Ok(render(&meta, format, csv, json))
}

const TABLE_III_RESTS: [f64; 9] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

/// Energy of `(N, n)` at one rest length; where a multiplet has not split
/// (e.g. `R = 0`) every `n` maps to its single cluster.
fn facsimile_energy(table: &LevelTable, big_n: u32, n: u32) -> Option<f64> {
    table.energy(big_n, n).or_else(|| {
        let level = table.level(big_n);
        (level.len() == 1).then(|| level[0].energy)
    })
}

pub fn table3(s: &Settings, format: Format) -> Result<String, CliError> {
    let omega = s.positive_or("omega", 0.5)?;
    let rest = s.rest_lengths(Some(&TABLE_III_RESTS))?;
    let count = s.usize_or("states", 20)?;
    let (tol, cluster_tol) = tolerances(s)?;
    let policy = s.mesh_policy(24)?;
    let base = SystemParams::new(1.0, omega, 0.0)?;
    let points = energy_scan(base, &rest, &policy, count, tol)?;
    let tables: Vec<LevelTable> = points.iter().map(|p| label_levels(&p.spectrum, cluster_tol)).collect();
    for (p, t) in points.iter().zip(&tables) {
        report_warnings(t, p.rest_length);
    }
    let mut meta = Meta::new("table3");
    meta.policy(&policy)
        .set("omega", omega)
        .set("mass", 1)
        .set("states", count)
        .set("tol", format!("{tol:e}"))
        .set("cluster_tol", format!("{cluster_tol:e}"));

    // row labels from the most finely split column
    let layout = tables.iter().max_by_key(|t| t.rows.len()).cloned().unwrap_or_default();
    let csv = || {
        let mut out = String::from("N,n");
        for r in &rest {
            write!(out, ",R={r}").unwrap();
        }
        out.push('\n');
        for row in &layout.rows {
            for _ in 0..row.multiplicity {
                write!(out, "{},{}", row.level, row.n).unwrap();
                for t in &tables {
                    match facsimile_energy(t, row.level, row.n) {
                        Some(e) => write!(out, ",{e:.12}").unwrap(),
                        None => out.push(','),
                    }
                }
                out.push('\n');
            }
        }
        out
    };
    let json = || {
        json!({"points": points.iter().zip(&tables).map(|(p, t)| {
            levels_json(&SystemParams { rest_length: p.rest_length, ..base }, &p.mesh, t)
        }).collect::<Vec<_>>()})
    };
    Ok(render(&meta, format, csv, json))
}
