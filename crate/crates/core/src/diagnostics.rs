//! Discrete energy and mass, dissipation reports and the diagnostics CSV.
//!
//! The bulk potential term sums interior nodes only, like the bulk mass. The
//! perimeter nodes carry the surface terms. With this split the energy is the
//! exact Lyapunov functional of the discrete step.

use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::{dirichlet_energy, surface_dirichlet_energy};
use crate::params::Params;
use crate::snapshot::{fmt_f64, write_atomic};
use crate::state::State;
use crate::stepper::StepStats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub bulk_potential: f64,
    pub bulk_gradient: f64,
    pub surf_potential: f64,
    pub surf_gradient: f64,
    pub e_bulk: f64,
    pub e_surf: f64,
    pub e_total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBreakdown {
    pub m_bulk: f64,
    pub m_surf: f64,
    pub m_total: f64,
}

pub fn energy(state: &State, params: &Params, grid: &Grid) -> Result<EnergyBreakdown> {
    state.check(grid)?;
    let h = grid.h;
    let f_sum: f64 = grid
        .interior()
        .iter()
        .map(|&p| params.bulk_potential.value(state.phi[p]))
        .sum();
    let psi = state.psi(grid);
    let g_sum: f64 = psi.iter().map(|&v| params.surf_potential.value(v)).sum();

    let bulk_potential = h * h * f_sum / params.epsilon;
    let bulk_gradient = 0.5 * params.epsilon * dirichlet_energy(&state.phi, grid)?;
    let surf_potential = h * g_sum / params.delta;
    let surf_gradient = 0.5 * params.delta * params.kappa * surface_dirichlet_energy(&psi, grid)?;
    let e_bulk = bulk_potential + bulk_gradient;
    let e_surf = surf_potential + surf_gradient;
    Ok(EnergyBreakdown {
        bulk_potential,
        bulk_gradient,
        surf_potential,
        surf_gradient,
        e_bulk,
        e_surf,
        e_total: e_bulk + e_surf,
    })
}

pub fn mass(state: &State, grid: &Grid) -> Result<MassBreakdown> {
    grid.check_len(&state.phi)?;
    let h = grid.h;
    let m_bulk = h * h * grid.interior().iter().map(|&p| state.phi[p]).sum::<f64>();
    let m_surf = h * grid.perimeter.iter().map(|&p| state.phi[p]).sum::<f64>();
    Ok(MassBreakdown {
        m_bulk,
        m_surf,
        m_total: m_bulk + m_surf,
    })
}

/// An energy increase beyond the allowed slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    /// Position in the series of the later of the two entries.
    pub index: usize,
    pub step: usize,
    pub increase: f64,
}

/// Reports every entry whose total energy exceeds its predecessor's by more
/// than `slack`.
pub fn dissipation_report(series: &[(usize, EnergyBreakdown)], slack: f64) -> Result<Vec<Violation>> {
    if series.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::InvalidConfig("energy series is not ordered by step".into()));
    }
    Ok(series
        .windows(2)
        .enumerate()
        .filter_map(|(i, w)| {
            let increase = w[1].1.e_total - w[0].1.e_total;
            (increase > slack || !increase.is_finite()).then_some(Violation {
                index: i + 1,
                step: w[1].0,
                increase,
            })
        })
        .collect())
}

pub const CSV_HEADER: &str =
    "step,time,e_bulk,e_surf,e_total,m_bulk,m_surf,m_total,solver_iters,solver_residual,wall_ms";

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Record {
    pub step: usize,
    pub time: f64,
    pub energy: EnergyBreakdown,
    pub mass: MassBreakdown,
    /// Zero for the initial row.
    pub stats: Option<StepStats>,
}

impl Record {
    pub fn new(state: &State, params: &Params, grid: &Grid, stats: Option<StepStats>) -> Result<Self> {
        Ok(Record {
            step: state.step,
            time: state.time,
            energy: energy(state, params, grid)?,
            mass: mass(state, grid)?,
            stats,
        })
    }

    /// CSV line without newline. `with_timing = false` writes `wall_ms` as 0
    /// so that repeated runs produce identical files.
    pub fn csv_line(&self, with_timing: bool) -> String {
        let (iters, resid, wall) = match self.stats {
            Some(s) => (s.iterations, s.residual, if with_timing { s.wall_ms } else { 0.0 }),
            None => (0, 0.0, 0.0),
        };
        let mut line = format!("{},", self.step);
        for v in [
            self.time,
            self.energy.e_bulk,
            self.energy.e_surf,
            self.energy.e_total,
            self.mass.m_bulk,
            self.mass.m_surf,
            self.mass.m_total,
        ] {
            let _ = write!(line, "{},", fmt_f64(v));
        }
        let _ = write!(line, "{iters},{},{}", fmt_f64(resid), fmt_f64(wall));
        line
    }
}

/// Collects records, optionally streaming each line to `<path>.partial`, and
/// writes the full CSV atomically on [`DiagnosticsWriter::finish`].
#[derive(Debug)]
pub struct DiagnosticsWriter {
    path: PathBuf,
    with_timing: bool,
    lines: Vec<String>,
    stream: Option<(PathBuf, File)>,
}

impl DiagnosticsWriter {
    pub fn new(path: &Path, with_timing: bool, streaming: bool) -> Result<Self> {
        let stream = if streaming {
            let mut partial = path.as_os_str().to_owned();
            partial.push(".partial");
            let partial = PathBuf::from(partial);
            let mut f = OpenOptions::new()
                .create(true)
                .write(true)
                .truncate(true)
                .open(&partial)
                .map_err(|e| Error::io(&partial, e))?;
            writeln!(f, "{CSV_HEADER}").map_err(|e| Error::io(&partial, e))?;
            Some((partial, f))
        } else {
            None
        };
        Ok(DiagnosticsWriter {
            path: path.to_path_buf(),
            with_timing,
            lines: Vec::new(),
            stream,
        })
    }

    pub fn push(&mut self, record: &Record) -> Result<()> {
        let line = record.csv_line(self.with_timing);
        if let Some((p, f)) = &mut self.stream {
            writeln!(f, "{line}").map_err(|e| Error::io(&*p, e))?;
        }
        self.lines.push(line);
        Ok(())
    }

    pub fn finish(self) -> Result<PathBuf> {
        let mut text = String::with_capacity(64 * (self.lines.len() + 1));
        text.push_str(CSV_HEADER);
        text.push('\n');
        for l in &self.lines {
            text.push_str(l);
            text.push('\n');
        }
        write_atomic(&self.path, text.as_bytes())?;
        if let Some((p, f)) = self.stream {
            drop(f);
            let _ = std::fs::remove_file(p);
        }
        Ok(self.path)
    }
}
