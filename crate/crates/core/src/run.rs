//! Run orchestration: stepping, diagnostics, snapshots and the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::config::RunConfig;
use crate::diagnostics::{DiagnosticsWriter, Record};
use crate::error::{Error, Result};
use crate::oracle::{self, ConvergenceTable};
use crate::snapshot::{self, write_atomic};
use crate::state::{apply_initial_condition, State, RNG_ALGORITHM};
use crate::stepper::{check_stability_constants, StabilityReport, Stepper};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILURE_FILE: &str = "FAILED";

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub diagnostics: PathBuf,
    pub manifest: PathBuf,
    pub snapshots: Vec<PathBuf>,
    pub records: Vec<Record>,
    pub final_state: State,
    pub stability: StabilityReport,
    pub warnings: Vec<String>,
}

/// Steps at which snapshots are written: every `every` steps, or `count`
/// log-spaced steps; the first and last step are always included.
pub fn snapshot_steps(total: usize, every: Option<usize>, count: usize) -> Vec<usize> {
    let mut steps = vec![0, total];
    match every {
        Some(k) => steps.extend((k..total).step_by(k.max(1))),
        None if total > 1 && count > 0 => {
            let ln = (total as f64).ln();
            steps.extend((0..count).map(|i| {
                let f = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
                (f * ln).exp().round() as usize
            }));
        }
        None => {}
    }
    steps.sort_unstable();
    steps.dedup();
    steps
}

fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("snapshot_{step:07}.txt"))
}

fn manifest(
    config: &RunConfig,
    resolved: &RunConfig,
    stability: &StabilityReport,
    warnings: &[String],
    steps_done: usize,
    status: &str,
    wall_s: f64,
) -> serde_json::Value {
    json!({
        "software": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config": resolved,
        "config_toml": resolved.to_toml(),
        "rng_algorithm": RNG_ALGORITHM,
        "stability": stability,
        "warnings": warnings,
        "steps_requested": config.step_count().ok(),
        "steps_completed": steps_done,
        "status": status,
        "wall_time_s": wall_s,
    })
}

/// Executes a configured run and writes its outputs under `config.output.dir`.
///
/// A solver failure mid-run still leaves the diagnostics so far, a snapshot of
/// the last good state, the manifest and a `FAILED` marker.
pub fn run(config: &RunConfig) -> Result<RunArtifacts> {
    let started = Instant::now();
    config.validate()?;
    let mut resolved = config.clone();
    resolved.initial = config.resolved_initial();
    resolved.run.seed = None;

    let grid = config.grid.build()?;
    let params = config.params;
    let stability = check_stability_constants(&params);
    if config.run.strict_stability {
        stability.enforce()?;
    }
    let warnings = stability.warnings();
    let total = config.step_count()?;
    let mut state = apply_initial_condition(&grid, &resolved.initial)?;

    let dir = config.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let _ = fs::remove_file(dir.join(FAILURE_FILE));
    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut writer = DiagnosticsWriter::new(&diag_path, config.output.timing, config.output.stream)?;
    let snap_at = snapshot_steps(total, config.run.snapshot_every, config.run.snapshot_count);
    let mut snapshots = Vec::new();
    let mut records = Vec::new();

    let first = Record::new(&state, &params, &grid, None)?;
    writer.push(&first)?;
    records.push(first);
    if snap_at.first() == Some(&0) {
        let p = snapshot_path(&dir, 0);
        snapshot::write(&p, &grid, &state)?;
        snapshots.push(p);
    }

    let outcome = (|| -> Result<()> {
        let stepper = Stepper::new(&grid, &params, &config.solver)?;
        for n in 1..=total {
            let (next, stats) = stepper.advance(&state)?;
            state = next;
            if n % config.run.diagnostics_every == 0 || n == total {
                let r = Record::new(&state, &params, &grid, Some(stats))?;
                writer.push(&r)?;
                records.push(r);
            }
            if snap_at.binary_search(&n).is_ok() {
                let p = snapshot_path(&dir, n);
                snapshot::write(&p, &grid, &state)?;
                snapshots.push(p);
            }
        }
        Ok(())
    })();

    let wall_s = started.elapsed().as_secs_f64();
    let status = if outcome.is_ok() { "completed" } else { "failed" };
    if let Err(err) = &outcome {
        let p = snapshot_path(&dir, state.step);
        if !snapshots.contains(&p) {
            snapshot::write(&p, &grid, &state)?;
            snapshots.push(p);
        }
        write_atomic(
            &dir.join(FAILURE_FILE),
            format!("step {}: {err}\n", state.step + 1).as_bytes(),
        )?;
    }
    writer.finish()?;
    let m = manifest(config, &resolved, &stability, &warnings, state.step, status, wall_s);
    write_atomic(
        &manifest_path,
        serde_json::to_string_pretty(&m).expect("manifest serializes").as_bytes(),
    )?;
    outcome?;

    Ok(RunArtifacts {
        dir,
        diagnostics: diag_path,
        manifest: manifest_path,
        snapshots,
        records,
        final_state: state,
        stability,
        warnings,
    })
}

pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const CHECKPOINTS_FILE: &str = "convergence_checkpoints.csv";

/// Convergence study from the configured initial condition to the configured
/// final time. The table (possibly partial) is written before any error is
/// returned.
pub fn study_convergence(config: &RunConfig, taus: &[f64], tau_star: f64) -> Result<ConvergenceTable> {
    config.validate()?;
    let grid = config.grid.build()?;
    let t_final = match config.run.t_final {
        Some(t) => t,
        None => config.step_count()? as f64 * config.params.tau,
    };
    let initial = apply_initial_condition(&grid, &config.resolved_initial())?;
    let study = oracle::study(&grid, &config.params, &initial, t_final, taus, tau_star, &config.solver)?;

    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join(CONVERGENCE_FILE), study.table.to_csv().as_bytes())?;
    write_atomic(&dir.join(CHECKPOINTS_FILE), study.table.checkpoints_csv().as_bytes())?;
    match study.failure {
        Some(e) => Err(e),
        None => Ok(study.table),
    }
}
