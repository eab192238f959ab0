//! CSV and JSON output for level tables.
//!
//! CSV columns: `R,N,n,E,multiplicity,residual`, energies with 12
//! significant digits. JSON: `{"params": {...}, "mesh": {...}, "rows":
//! [{"N", "n", "E", "multiplicity", "residual"}, ...]}`.

use serde::Serialize;
use serde_json::Value;

use crate::geometry::SystemParams;
use crate::quadrature::MeshSpec;
use crate::spectrum::{LevelRow, LevelTable};

pub const LEVEL_HEADER: &str = "R,N,n,E,multiplicity,residual";

/// `x` with `digits` significant digits in positional notation.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn energy_field(x: f64) -> String {
    format_significant(x, 12)
}

fn level_line(rest_length: f64, row: &LevelRow) -> String {
    format!(
        "{},{},{},{},{},{:.3e}",
        rest_length,
        row.level,
        row.n,
        energy_field(row.energy),
        row.multiplicity,
        row.residual
    )
}

/// CSV for one or more labeled spectra, one line per sub-level.
pub fn levels_csv<'a, I>(tables: I) -> String
where
    I: IntoIterator<Item = (f64, &'a LevelTable)>,
{
    let mut out = String::from(LEVEL_HEADER);
    out.push('\n');
    for (r, table) in tables {
        for row in &table.rows {
            out.push_str(&level_line(r, row));
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize)]
struct LevelDocument<'a> {
    params: &'a SystemParams,
    mesh: &'a MeshSpec,
    rows: &'a [LevelRow],
}

pub fn levels_json(params: &SystemParams, mesh: &MeshSpec, table: &LevelTable) -> Value {
    serde_json::to_value(LevelDocument { params, mesh, rows: &table.rows }).expect("level table serializes")
}

/// Generic CSV with a header line; fields are written verbatim.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
