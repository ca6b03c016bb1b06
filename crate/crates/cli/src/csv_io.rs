//! CSV input and output. Numbers are written in shortest round-trip
//! scientific notation so that identical runs produce identical bytes.

use std::io::Write;
use std::path::Path;

use bgk_core::{CartesianGrid, DistributionField, PhaseGrid, RadialGrid};

use crate::error::CliError;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Distribution values as read from disk, before range validation.
pub struct RawDistribution {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
}

fn parse_field(s: &str, row: usize, col: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| CliError::Input(format!("row {row}, column `{col}`: {e}")))
}

/// Reads an `r,f` or `kx,ky,f` file and reconstructs its grid.
pub fn read_distribution(path: &Path) -> Result<RawDistribution, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Input(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(CliError::Input(format!(
                "row {}: expected {} fields",
                row + 1,
                headers.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            columns[col].push(parse_field(field, row + 1, &headers[col])?);
        }
    }
    let names: Vec<&str> = headers.iter().map(String::as_str).collect();
    let (grid, values) = match names.as_slice() {
        ["r", "f"] => {
            let values = columns.pop().unwrap();
            let grid = RadialGrid::from_nodes(&columns[0]).map_err(|e| CliError::Input(e.to_string()))?;
            (PhaseGrid::from(grid), values)
        }
        ["kx", "ky", "f"] => {
            let values = columns.pop().unwrap();
            let grid =
                CartesianGrid::from_nodes(&columns[0], &columns[1]).map_err(|e| CliError::Input(e.to_string()))?;
            (PhaseGrid::from(grid), values)
        }
        _ => {
            return Err(CliError::Input(format!(
                "header must be `r,f` or `kx,ky,f`, got `{}`",
                headers.join(",")
            )))
        }
    };
    Ok(RawDistribution { grid, values })
}

pub fn write_distribution<W: Write>(out: &mut W, grid: &PhaseGrid, f: &DistributionField) -> std::io::Result<()> {
    match grid {
        PhaseGrid::Radial(g) => {
            writeln!(out, "r,f")?;
            for (r, v) in g.r_nodes().iter().zip(f.values()) {
                writeln!(out, "{},{}", num(*r), num(*v))?;
            }
        }
        PhaseGrid::Cartesian(g) => {
            writeln!(out, "kx,ky,f")?;
            for (i, v) in f.values().iter().enumerate() {
                let k = g.node(i);
                writeln!(out, "{},{},{}", num(k[0]), num(k[1]), num(*v))?;
            }
        }
    }
    Ok(())
}
