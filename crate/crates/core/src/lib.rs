//! Cahn–Hilliard dynamics with dynamic boundary conditions on a rectangle.
//!
//! The bulk order parameter `phi` lives on a uniform node-centered grid and its
//! trace `psi` is the ring of perimeter nodes, so the trace condition holds by
//! construction. Each time step of the stabilized, linearly implicit scheme is a
//! single coupled sparse solve for `(phi, psi, mu, mu_gamma)`; the system matrix
//! depends only on the grid and parameters and is factorized once.
//!
//! Module map:
//!
//! * [`grid`], [`state`], [`params`], [`snapshot`]: discretization, simulation
//!   state, initial conditions and the snapshot file format.
//! * [`potential`]: bulk and surface free-energy densities.
//! * [`operators`]: flux-form bulk Laplacian, ring Laplace–Beltrami operator,
//!   normal derivatives and discrete Dirichlet energies.
//! * [`stepper`]: assembly, linear solvers and the time step itself.
//! * [`diagnostics`]: discrete energy and mass, dissipation reports, CSV output.
//! * [`oracle`]: dense cross-checks, gradient checks and convergence studies.
//! * [`config`], [`run`]: run configuration, presets and run orchestration.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod operators;
pub mod oracle;
pub mod params;
pub mod potential;
pub mod run;
pub mod snapshot;
pub mod state;
pub mod stepper;

pub use config::{preset, preset_names, RunConfig};
pub use diagnostics::{energy, mass, EnergyBreakdown, MassBreakdown};
pub use error::{Error, Result};
pub use grid::{build_grid, Grid};
pub use params::Params;
pub use potential::Potential;
pub use state::{apply_initial_condition, InitialCondition, State};
pub use stepper::{advance, check_stability_constants, SolverConfig, StepStats, Stepper};
