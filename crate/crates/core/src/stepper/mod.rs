//! The time step: assemble the right-hand side, solve, unpack.

pub mod assemble;
pub mod solver;
pub mod stability;

use serde::Serialize;

pub use assemble::{assemble, assemble_matrix, assemble_rhs, Layout, LinearSystem, SparseMatrix};
pub use solver::{solve, Method, Preconditioner, PreparedSolver, SolveInfo, SolverConfig};
pub use stability::{check_stability_constants, StabilityReport, Verdict};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::Params;
use crate::state::State;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub iterations: usize,
    pub residual: f64,
    pub wall_ms: f64,
}

/// Advances states on a fixed grid with fixed parameters. The system matrix
/// and its factorization are built once and reused for every step.
#[derive(Debug)]
pub struct Stepper {
    grid: Grid,
    params: Params,
    layout: Layout,
    matrix: SparseMatrix,
    solver: PreparedSolver,
}

impl Stepper {
    pub fn new(grid: &Grid, params: &Params, solver: &SolverConfig) -> Result<Self> {
        params.validate()?;
        let matrix = assemble_matrix(grid, params);
        let prepared = PreparedSolver::new(&matrix, solver)?;
        Ok(Stepper {
            grid: grid.clone(),
            params: *params,
            layout: Layout::new(grid),
            matrix,
            solver: prepared,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Returns the state one step later; `state` is left untouched.
    pub fn advance(&self, state: &State) -> Result<(State, StepStats)> {
        let start = clock::now();
        let rhs = assemble_rhs(state, &self.params, &self.grid)?;
        let (x, info) = self.solver.solve(&self.matrix, &rhs)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("solution"));
        }
        let mut next = state.clone();
        self.layout.unpack_into(&self.grid, &x, &mut next);
        next.step = state.step + 1;
        next.time = state.time + self.params.tau;
        Ok((
            next,
            StepStats {
                iterations: info.iterations,
                residual: info.residual,
                wall_ms: clock::elapsed_ms(start),
            },
        ))
    }
}

// std::time::Instant panics on wasm32-unknown-unknown, so timing is zero there.
#[cfg(not(target_arch = "wasm32"))]
mod clock {
    pub fn now() -> Option<std::time::Instant> {
        Some(std::time::Instant::now())
    }

    pub fn elapsed_ms(start: Option<std::time::Instant>) -> f64 {
        start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3)
    }
}

#[cfg(target_arch = "wasm32")]
mod clock {
    pub fn now() -> Option<()> {
        None
    }

    pub fn elapsed_ms(_: Option<()>) -> f64 {
        0.0
    }
}

/// One step without caching; convenient for single calls.
pub fn advance(
    state: &State,
    params: &Params,
    grid: &Grid,
    solver: &SolverConfig,
) -> Result<(State, StepStats)> {
    Stepper::new(grid, params, solver)?.advance(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::state::{apply_initial_condition, InitialCondition};

    fn params() -> Params {
        Params {
            epsilon: 0.1,
            delta: 0.1,
            kappa: 1.0,
            s1: 10.0,
            s2: 10.0,
            tau: 1e-4,
            bulk_potential: Potential::TruncatedDoubleWell,
            surf_potential: Potential::TruncatedDoubleWell,
        }
    }

    #[test]
    fn step_satisfies_the_system() {
        let g = Grid::unit_square(8).unwrap();
        let s0 = apply_initial_condition(&g, &InitialCondition::SinCos).unwrap();
        let p = params();
        let (s1, stats) = advance(&s0, &p, &g, &SolverConfig::direct()).unwrap();
        assert_eq!(s1.step, 1);
        assert_eq!(s1.time, 1e-4);
        assert!(stats.residual <= 1e-10);
        let sys = assemble(&s0, &p, &g).unwrap();
        let x = sys.layout.pack(&g, &s1);
        let r = sys.matrix.matvec(&x);
        let err = r.iter().zip(&sys.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = sys.rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(err <= 1e-10 * scale, "{err}");
    }

    #[test]
    fn constant_state_is_steady_without_forcing() {
        // phi = 1 is a critical point of both truncated wells
        let g = Grid::unit_square(6).unwrap();
        let mut s0 = State::zeros(&g);
        s0.phi.iter_mut().for_each(|v| *v = 1.0);
        let (s1, _) = advance(&s0, &params(), &g, &SolverConfig::direct()).unwrap();
        assert!(s1.phi.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(s1.mu.iter().chain(&s1.mu_gamma).all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn direct_and_gmres_agree() {
        let g = Grid::unit_square(7).unwrap();
        let s0 = apply_initial_condition(&g, &InitialCondition::Stripe).unwrap();
        let (a, _) = advance(&s0, &params(), &g, &SolverConfig::direct()).unwrap();
        let (b, stats) = advance(&s0, &params(), &g, &SolverConfig::gmres()).unwrap();
        assert!(stats.iterations > 0);
        let diff = a.phi.iter().zip(&b.phi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let g = Grid::unit_square(5).unwrap();
        let mut s0 = State::zeros(&g);
        s0.phi[7] = f64::NAN;
        assert!(matches!(
            advance(&s0, &params(), &g, &SolverConfig::direct()),
            Err(Error::NonFinite(_))
        ));
    }
}
