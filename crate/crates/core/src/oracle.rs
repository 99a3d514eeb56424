//! Independent correctness oracles: dense solves, an operator-level rebuild of
//! the scheme matrix, finite-difference checks of the chemical potentials and
//! temporal convergence studies.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::diagnostics::energy;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::{
    bulk_laplacian, bulk_laplacian_neumann, energy_normal_derivative, normal_derivative,
    surface_laplacian,
};
use crate::params::Params;
use crate::snapshot::fmt_f64;
use crate::state::State;
use crate::stepper::{Layout, LinearSystem, SolverConfig, SparseMatrix, Stepper};

pub const DENSE_LIMIT: usize = 2000;

/// Copies a sparse matrix into a dense one, row by row.
pub fn to_dense(matrix: &SparseMatrix) -> DMatrix<f64> {
    let n = matrix.nrows();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for (j, v) in matrix.row(i) {
            a[(i, j)] += v;
        }
    }
    a
}

pub fn dense_solve(a: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidGrid(format!(
            "{n} unknowns exceed the dense oracle limit of {DENSE_LIMIT}"
        )));
    }
    let scale = a.amax();
    let lu = a.lu();
    let u = lu.u();
    let min_pivot = u.diagonal().iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(Error::Singular);
    }
    let x = lu.solve(&DVector::from_column_slice(b)).ok_or(Error::Singular)?;
    Ok(x.iter().copied().collect())
}

pub fn dense_reference_solve(system: &LinearSystem) -> Result<Vec<f64>> {
    dense_solve(to_dense(&system.matrix), &system.rhs)
}

/// Applies the step operator to an unknown vector using only the operator
/// actions, without any stencil tables.
pub fn apply_scheme(grid: &Grid, params: &Params, x: &[f64]) -> Result<Vec<f64>> {
    let lay = Layout::new(grid);
    let mut st = State::zeros(grid);
    lay.unpack_into(grid, x, &mut st);
    let psi = st.psi(grid);
    let inv_tau = 1.0 / params.tau;

    let lap_mu = bulk_laplacian_neumann(&st.mu, grid)?;
    let lap_phi = bulk_laplacian(&st.phi, grid)?;
    let dn_mu = normal_derivative(&st.mu, grid)?;
    let lap_mg = surface_laplacian(&st.mu_gamma, grid)?;
    let lap_psi = surface_laplacian(&psi, grid)?;
    let flux = energy_normal_derivative(&st.phi, grid)?;

    let mut out = vec![0.0; lay.size()];
    for (r, &p) in grid.interior().iter().enumerate() {
        out[r] = st.phi[p] * inv_tau - lap_mu[p];
        out[lay.mu() + p] = st.mu[p] + params.epsilon * lap_phi[p] - params.s1 * st.phi[p];
    }
    for (k, &b) in grid.perimeter.iter().enumerate() {
        out[lay.psi() + k] = psi[k] * inv_tau - lap_mg[k];
        out[lay.mu() + b] = dn_mu[k];
        out[lay.mu_gamma() + k] = st.mu_gamma[k] + params.delta * params.kappa * lap_psi[k]
            - params.epsilon * flux[k]
            - params.s2 * psi[k];
    }
    Ok(out)
}

/// The step matrix rebuilt column by column from [`apply_scheme`].
pub fn dense_scheme_matrix(grid: &Grid, params: &Params) -> Result<DMatrix<f64>> {
    let n = Layout::new(grid).size();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidGrid(format!(
            "{n} unknowns exceed the dense oracle limit of {DENSE_LIMIT}"
        )));
    }
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for c in 0..n {
        e[c] = 1.0;
        let col = apply_scheme(grid, params, &e)?;
        for (r, v) in col.into_iter().enumerate() {
            a[(r, c)] = v;
        }
        e[c] = 0.0;
    }
    Ok(a)
}

/// The right-hand side written directly from the scheme.
pub fn scheme_rhs(state: &State, params: &Params, grid: &Grid) -> Vec<f64> {
    let lay = Layout::new(grid);
    let mut b = vec![0.0; lay.size()];
    for (r, &p) in grid.interior().iter().enumerate() {
        let u = state.phi[p];
        b[r] = u / params.tau;
        b[lay.mu() + p] = params.bulk_potential.derivative(u) / params.epsilon - params.s1 * u;
    }
    for (k, &p) in grid.perimeter.iter().enumerate() {
        let v = state.phi[p];
        b[lay.psi() + k] = v / params.tau;
        b[lay.mu_gamma() + k] = params.surf_potential.derivative(v) / params.delta - params.s2 * v;
    }
    b
}

/// One time step computed entirely by the dense oracle path.
pub fn dense_step(state: &State, params: &Params, grid: &Grid) -> Result<State> {
    let x = dense_solve(dense_scheme_matrix(grid, params)?, &scheme_rhs(state, params, grid))?;
    let mut next = state.clone();
    Layout::new(grid).unpack_into(grid, &x, &mut next);
    next.step += 1;
    next.time += params.tau;
    Ok(next)
}

/// Chemical potentials of a state, unstabilized: `-eps Lap phi + F'(phi)/eps`
/// at interior nodes and `-delta kappa Lap_ring psi + G'(psi)/delta + eps Dn phi`
/// on the ring.
pub fn chemical_potentials(state: &State, params: &Params, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
    let lap = bulk_laplacian(&state.phi, grid)?;
    let psi = state.psi(grid);
    let lap_psi = surface_laplacian(&psi, grid)?;
    let flux = energy_normal_derivative(&state.phi, grid)?;
    let mut mu = vec![0.0; grid.len()];
    for &p in grid.interior() {
        mu[p] = -params.epsilon * lap[p] + params.bulk_potential.derivative(state.phi[p]) / params.epsilon;
    }
    let mu_gamma = (0..grid.ring_len())
        .map(|k| {
            -params.delta * params.kappa * lap_psi[k]
                + params.surf_potential.derivative(psi[k]) / params.delta
                + params.epsilon * flux[k]
        })
        .collect();
    Ok((mu, mu_gamma))
}

/// Largest gap between the centered difference quotient of the discrete
/// energy, divided by the node's quadrature weight, and the chemical potential
/// at that node. Every node is sampled.
pub fn variational_gradient_check(state: &State, params: &Params, grid: &Grid, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::InvalidConfig(format!("fd step must be positive, got {eta}")));
    }
    let (mu, mu_gamma) = chemical_potentials(state, params, grid)?;
    let mut probe = state.clone();
    let mut worst: f64 = 0.0;
    for p in 0..grid.len() {
        let (weight, target) = match grid.ring_index(p) {
            Some(k) => (grid.h, mu_gamma[k]),
            None => (grid.h * grid.h, mu[p]),
        };
        let base = state.phi[p];
        probe.phi[p] = base + eta;
        let up = energy(&probe, params, grid)?.e_total;
        probe.phi[p] = base - eta;
        let down = energy(&probe, params, grid)?.e_total;
        probe.phi[p] = base;
        let fd = (up - down) / (2.0 * eta * weight);
        worst = worst.max((fd - target).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub tau: f64,
    /// Discrete L2 error over interior nodes at the final time.
    pub err_phi: f64,
    /// Discrete L2 error over the ring at the final time.
    pub err_psi: f64,
    /// Maximum of the bulk error over the final time and four checkpoints.
    pub max_err_phi: f64,
    pub max_err_psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub tau_star: f64,
    pub t_final: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Builds a table from `(tau, err_phi, err_psi)` triples, e.g. canned data.
    pub fn from_errors(tau_star: f64, t_final: f64, rows: &[(f64, f64, f64)]) -> Self {
        ConvergenceTable {
            tau_star,
            t_final,
            rows: rows
                .iter()
                .map(|&(tau, err_phi, err_psi)| ConvergenceRow {
                    tau,
                    err_phi,
                    err_psi,
                    max_err_phi: err_phi,
                    max_err_psi: err_psi,
                })
                .collect(),
        }
    }

    /// `tau,err_phi,err_psi` rows followed by `#` footer lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,err_phi,err_psi\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", fmt_f64(r.tau), fmt_f64(r.err_phi), fmt_f64(r.err_psi));
        }
        let _ = writeln!(out, "# tau_star = {}", fmt_f64(self.tau_star));
        let _ = writeln!(out, "# t_final = {}", fmt_f64(self.t_final));
        match convergence_rate(self) {
            Ok((sp, ss)) => {
                let _ = writeln!(out, "# slope_phi = {sp:.6}");
                let _ = writeln!(out, "# slope_psi = {ss:.6}");
            }
            Err(e) => {
                let _ = writeln!(out, "# slope_phi = undefined ({e})");
                let _ = writeln!(out, "# slope_psi = undefined ({e})");
            }
        }
        out
    }

    /// Errors maximized over the checkpoints, one line per tau.
    pub fn checkpoints_csv(&self) -> String {
        let mut out = String::from("tau,max_err_phi,max_err_psi\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_f64(r.tau),
                fmt_f64(r.max_err_phi),
                fmt_f64(r.max_err_psi)
            );
        }
        out
    }
}

/// Least-squares slope of `log(err)` against `log(tau)` for each field.
pub fn convergence_rate(table: &ConvergenceTable) -> Result<(f64, f64)> {
    if table.rows.len() < 2 {
        return Err(Error::Convergence(format!(
            "need at least two rows, got {}",
            table.rows.len()
        )));
    }
    let fit = |err: &dyn Fn(&ConvergenceRow) -> f64| -> Result<f64> {
        let mut pts = Vec::with_capacity(table.rows.len());
        for r in &table.rows {
            let e = err(r);
            if !(r.tau > 0.0 && e > 0.0) {
                return Err(Error::Convergence(format!(
                    "nonpositive tau or error in row tau = {}",
                    r.tau
                )));
            }
            pts.push((r.tau.ln(), e.ln()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx == 0.0 {
            return Err(Error::Convergence("all tau values coincide".into()));
        }
        Ok(sxy / sxx)
    };
    Ok((fit(&|r| r.err_phi)?, fit(&|r| r.err_psi)?))
}

/// Number of steps of size `tau` reaching `t_final`, if integral within 1e-9.
pub fn step_count(t_final: f64, tau: f64) -> Result<usize> {
    let n = t_final / tau;
    let rounded = n.round();
    if !(tau > 0.0) || !n.is_finite() || (n - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::Convergence(format!(
            "t_final = {t_final} is not an integer multiple of tau = {tau}"
        )));
    }
    Ok(rounded as usize)
}

/// States at the four checkpoints and at the final time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub tau: f64,
    pub steps: usize,
    /// `(step, state)` pairs, last one at the final time.
    pub samples: Vec<(usize, State)>,
}

/// Checkpoint step indices for a run of `n` steps: `floor(k n / 5)` for
/// `k = 1..=5`.
pub fn checkpoint_steps(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (1..=5).map(|k| k * n / 5).collect();
    v.dedup();
    v
}

/// Runs from `initial` to `t_final` with step `tau`, keeping checkpoint states.
pub fn reference_run(
    grid: &Grid,
    params: &Params,
    initial: &State,
    t_final: f64,
    tau: f64,
    solver: &SolverConfig,
) -> Result<Trajectory> {
    let steps = step_count(t_final, tau)?;
    let stepper = Stepper::new(grid, &params.with_tau(tau), solver)?;
    let marks = checkpoint_steps(steps);
    let mut samples = Vec::with_capacity(marks.len());
    let mut state = initial.clone();
    if marks.contains(&0) {
        samples.push((0, state.clone()));
    }
    for n in 1..=steps {
        state = stepper.advance(&state)?.0;
        if marks.contains(&n) {
            samples.push((n, state.clone()));
        }
    }
    Ok(Trajectory { tau, steps, samples })
}

/// Discrete L2 norms of the difference: bulk over interior nodes, surface
/// over the ring.
pub fn l2_errors(a: &State, b: &State, grid: &Grid) -> (f64, f64) {
    let h = grid.h;
    let bulk: f64 = grid.interior().iter().map(|&p| (a.phi[p] - b.phi[p]).powi(2)).sum();
    let surf: f64 = grid.perimeter.iter().map(|&p| (a.phi[p] - b.phi[p]).powi(2)).sum();
    ((h * h * bulk).sqrt(), (h * surf).sqrt())
}

fn compare(reference: &Trajectory, coarse: &Trajectory, grid: &Grid) -> Result<ConvergenceRow> {
    let ratio = step_count(coarse.tau, reference.tau)?;
    let mut max_phi: f64 = 0.0;
    let mut max_psi: f64 = 0.0;
    let mut last = (0.0, 0.0);
    for (n, s) in &coarse.samples {
        let target = n * ratio;
        let r = reference
            .samples
            .iter()
            .find(|(m, _)| *m == target)
            .map(|(_, st)| st);
        let r = match r {
            Some(r) => r,
            None => continue,
        };
        let e = l2_errors(s, r, grid);
        max_phi = max_phi.max(e.0);
        max_psi = max_psi.max(e.1);
        if *n == coarse.steps {
            last = e;
        }
    }
    Ok(ConvergenceRow {
        tau: coarse.tau,
        err_phi: last.0,
        err_psi: last.1,
        max_err_phi: max_phi,
        max_err_psi: max_psi,
    })
}

/// Result of a convergence study. When a sub-run fails, `table` holds the
/// rows finished before the failure.
#[derive(Debug)]
pub struct Study {
    pub table: ConvergenceTable,
    pub failure: Option<Error>,
}

/// Runs the reference at `tau_star`, then each coarse step, from the same
/// initial state. The reference keeps every state a coarse checkpoint needs.
pub fn study(
    grid: &Grid,
    params: &Params,
    initial: &State,
    t_final: f64,
    taus: &[f64],
    tau_star: f64,
    solver: &SolverConfig,
) -> Result<Study> {
    if taus.is_empty() || taus.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig("taus must be non-empty and strictly decreasing".into()));
    }
    let n_ref = step_count(t_final, tau_star)?;
    let mut wanted = Vec::new();
    for &tau in taus {
        let n = step_count(t_final, tau)?;
        let ratio = step_count(tau, tau_star)?;
        if n * ratio != n_ref {
            return Err(Error::Convergence(format!(
                "tau = {tau} is not an integer multiple of tau_star = {tau_star}"
            )));
        }
        wanted.extend(checkpoint_steps(n).into_iter().map(|m| m * ratio));
    }
    wanted.sort_unstable();
    wanted.dedup();

    let mut table = ConvergenceTable {
        tau_star,
        t_final,
        rows: Vec::new(),
    };

    let stepper = Stepper::new(grid, &params.with_tau(tau_star), solver)?;
    let mut reference = Trajectory {
        tau: tau_star,
        steps: n_ref,
        samples: Vec::new(),
    };
    let mut state = initial.clone();
    for n in 1..=n_ref {
        state = match stepper.advance(&state) {
            Ok((s, _)) => s,
            Err(e) => {
                return Ok(Study {
                    table,
                    failure: Some(e),
                })
            }
        };
        if wanted.binary_search(&n).is_ok() {
            reference.samples.push((n, state.clone()));
        }
    }

    for &tau in taus {
        let coarse = match reference_run(grid, params, initial, t_final, tau, solver) {
            Ok(t) => t,
            Err(e) => {
                return Ok(Study {
                    table,
                    failure: Some(e),
                })
            }
        };
        table.rows.push(compare(&reference, &coarse, grid)?);
    }
    Ok(Study {
        table,
        failure: None,
    })
}
