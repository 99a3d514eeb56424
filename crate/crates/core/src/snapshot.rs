//! ASCII snapshot files.
//!
//! ```text
//! CHDBC1 <nx> <ny> <h> <time>
//! <nx values of phi for row j = 0>
//! ...
//! <nx values of phi for row j = ny - 1>
//! <mu_gamma in perimeter ring order, or "-">
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::State;

pub const MAGIC: &str = "CHDBC1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub time: f64,
    pub phi: Vec<f64>,
    pub mu_gamma: Option<Vec<f64>>,
}

/// Formats a float with 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render(grid: &Grid, state: &State, include_mu_gamma: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{MAGIC} {} {} {} {}",
        grid.nx,
        grid.ny,
        fmt_f64(grid.h),
        fmt_f64(state.time)
    );
    for row in state.phi.chunks(grid.nx) {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    if include_mu_gamma {
        let line: Vec<String> = state.mu_gamma.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(" "));
    } else {
        out.push('-');
    }
    out.push('\n');
    out
}

pub fn write(path: &Path, grid: &Grid, state: &State) -> Result<()> {
    write_atomic(path, render(grid, state, true).as_bytes())
}

pub fn parse(text: &str, path: &Path) -> Result<Snapshot> {
    let bad = |reason: String| Error::MalformedSnapshot {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != MAGIC {
        return Err(bad(format!("bad header {header:?}")));
    }
    let nx: usize = fields[1].parse().map_err(|_| bad("bad nx".into()))?;
    let ny: usize = fields[2].parse().map_err(|_| bad("bad ny".into()))?;
    let h: f64 = fields[3].parse().map_err(|_| bad("bad h".into()))?;
    let time: f64 = fields[4].parse().map_err(|_| bad("bad time".into()))?;
    if nx == 0 || ny == 0 || !(h > 0.0) || !time.is_finite() {
        return Err(bad(format!("bad header values {header:?}")));
    }

    let parse_row = |line: &str, expected: usize, what: &str| -> Result<Vec<f64>> {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(format!("{what}: {e}")))?;
        if row.len() != expected {
            return Err(bad(format!(
                "{what}: expected {expected} values, found {}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(bad(format!("{what}: non-finite value")));
        }
        Ok(row)
    };

    let mut phi = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("missing row {j} of {ny}")))?;
        phi.extend(parse_row(line, nx, &format!("row {j}"))?);
    }
    let last = lines.next().ok_or_else(|| bad("missing mu_gamma line".into()))?;
    let ring = 2 * (nx - 1) + 2 * (ny - 1);
    let mu_gamma = if last.trim() == "-" {
        None
    } else {
        Some(parse_row(last, ring, "mu_gamma")?)
    };
    if lines.next().is_some() {
        return Err(bad("trailing content".into()));
    }
    Ok(Snapshot {
        nx,
        ny,
        h,
        time,
        phi,
        mu_gamma,
    })
}

pub fn read(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::MalformedSnapshot {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    parse(&text, path)
}

/// Writes to a sibling temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    tmp.set_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
