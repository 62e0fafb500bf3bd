//! CSV field files: one header line `# nx=<n> ny=<n> lx=<f> ly=<f>` followed
//! by `ny` rows of `nx` comma-separated values, row `j` holding cells
//! `(0..nx, j)`. Values carry 17 significant digits so a dump/load round trip
//! is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

pub fn format_field(field: &ScalarField) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(g.len() * 25 + 64);
    let _ = writeln!(out, "# nx={} ny={} lx={:?} ly={:?}", g.nx, g.ny, g.lx, g.ly);
    for row in field.values().chunks(g.nx) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn dump_field(field: &ScalarField, path: &Path) -> Result<()> {
    fs::write(path, format_field(field))?;
    Ok(())
}

fn bad(path: &Path, reason: impl Into<String>) -> Error {
    Error::FieldFormat {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn parse_header(line: &str, path: &Path) -> Result<(usize, usize, f64, f64)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| bad(path, "missing '# nx=.. ny=.. lx=.. ly=..' header"))?;
    let (mut nx, mut ny, mut lx, mut ly) = (None, None, None, None);
    for tok in body.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| bad(path, format!("header token {tok:?} is not key=value")))?;
        let num = || bad(path, format!("header value {tok:?} is not a number"));
        match k {
            "nx" => nx = Some(v.parse::<usize>().map_err(|_| num())?),
            "ny" => ny = Some(v.parse::<usize>().map_err(|_| num())?),
            "lx" => lx = Some(v.parse::<f64>().map_err(|_| num())?),
            "ly" => ly = Some(v.parse::<f64>().map_err(|_| num())?),
            _ => return Err(bad(path, format!("unknown header key {k:?}"))),
        }
    }
    match (nx, ny, lx, ly) {
        (Some(nx), Some(ny), Some(lx), Some(ly)) => Ok((nx, ny, lx, ly)),
        _ => Err(bad(path, "header must name nx, ny, lx and ly")),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Parses CSV text for `grid`; `path` only labels errors.
pub fn parse_field(text: &str, grid: Grid, path: &Path) -> Result<ScalarField> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad(path, "empty file"))?;
    let (nx, ny, lx, ly) = parse_header(header.trim(), path)?;
    if nx != grid.nx || ny != grid.ny {
        return Err(bad(
            path,
            format!("file is {nx}x{ny}, grid is {}x{}", grid.nx, grid.ny),
        ));
    }
    if !close(lx, grid.lx) || !close(ly, grid.ly) {
        return Err(bad(
            path,
            format!("file domain {lx} x {ly}, grid domain {} x {}", grid.lx, grid.ly),
        ));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut rows = 0;
    for (j, line) in lines.enumerate() {
        let before = values.len();
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| bad(path, format!("row {j}: {:?} is not a number", tok.trim())))?;
            if !v.is_finite() {
                return Err(bad(path, format!("row {j}: non-finite value {v}")));
            }
            values.push(v);
        }
        if values.len() - before != nx {
            return Err(bad(
                path,
                format!("row {j} has {} values, expected {nx}", values.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != ny {
        return Err(bad(path, format!("{rows} rows, expected {ny}")));
    }
    ScalarField::from_values(grid, values)
}

pub fn load_field(path: &Path, grid: Grid) -> Result<ScalarField> {
    let text = fs::read_to_string(path)?;
    parse_field(&text, grid, path)
}
