//! Simulation state and initial conditions.

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::snapshot;

/// Identifier of the generator behind [`InitialCondition::RandomUniform`],
/// recorded in run manifests.
pub const RNG_ALGORITHM: &str =
    "ChaCha20 (rand_chacha 0.9, seed_from_u64); interior nodes ascending, then perimeter ring order";

/// Fields at one time level. The trace `psi` is not stored separately: it is
/// `phi` restricted to the perimeter nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    /// Surface chemical potential in perimeter ring order.
    pub mu_gamma: Vec<f64>,
    pub time: f64,
    pub step: usize,
}

impl State {
    pub fn zeros(grid: &Grid) -> State {
        State {
            phi: vec![0.0; grid.len()],
            mu: vec![0.0; grid.len()],
            mu_gamma: vec![0.0; grid.ring_len()],
            time: 0.0,
            step: 0,
        }
    }

    /// Trace of `phi` on the boundary, in ring order.
    pub fn psi(&self, grid: &Grid) -> Vec<f64> {
        grid.perimeter.iter().map(|&p| self.phi[p]).collect()
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        grid.check_len(&self.phi)?;
        grid.check_len(&self.mu)?;
        grid.check_ring_len(&self.mu_gamma)?;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.phi
            .iter()
            .chain(&self.mu)
            .chain(&self.mu_gamma)
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `+1` where `x > 1/2`, `-1` elsewhere.
    Stripe,
    /// `sin(4 pi x) cos(4 pi y)`.
    SinCos,
    ConstBulkBoundary {
        bulk_value: f64,
        boundary_value: f64,
    },
    RandomUniform {
        bulk_lo: f64,
        bulk_hi: f64,
        surf_lo: f64,
        surf_hi: f64,
        seed: u64,
    },
    /// Axis-aligned closed square.
    SquareDroplet {
        center: [f64; 2],
        side: f64,
        inside_value: f64,
        outside_value: f64,
    },
    /// Restart from a snapshot file.
    FromFile { path: PathBuf },
}

impl InitialCondition {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitialCondition::RandomUniform {
                bulk_lo,
                bulk_hi,
                surf_lo,
                surf_hi,
                ..
            } => {
                if !(bulk_lo < bulk_hi && surf_lo < surf_hi) {
                    return Err(Error::InvalidConfig(
                        "random_uniform needs lo < hi for bulk and surface ranges".into(),
                    ));
                }
            }
            InitialCondition::SquareDroplet { side, .. } if !(*side > 0.0) => {
                return Err(Error::InvalidConfig(format!(
                    "square_droplet side must be positive, got {side}"
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Evaluates `ic` at the grid nodes. Chemical potentials start at zero, as do
/// the clock and step counter.
pub fn apply_initial_condition(grid: &Grid, ic: &InitialCondition) -> Result<State> {
    ic.validate()?;
    let mut state = State::zeros(grid);
    match ic {
        InitialCondition::Stripe => fill(grid, &mut state.phi, |[x, _]| {
            if x > 0.5 {
                1.0
            } else {
                -1.0
            }
        }),
        InitialCondition::SinCos => fill(grid, &mut state.phi, |[x, y]| {
            (4.0 * PI * x).sin() * (4.0 * PI * y).cos()
        }),
        InitialCondition::ConstBulkBoundary {
            bulk_value,
            boundary_value,
        } => {
            for (p, v) in state.phi.iter_mut().enumerate() {
                *v = if grid.is_boundary(p) {
                    *boundary_value
                } else {
                    *bulk_value
                };
            }
        }
        InitialCondition::RandomUniform {
            bulk_lo,
            bulk_hi,
            surf_lo,
            surf_hi,
            seed,
        } => {
            let mut rng = ChaCha20Rng::seed_from_u64(*seed);
            for &p in grid.interior() {
                state.phi[p] = rng.random_range(*bulk_lo..*bulk_hi);
            }
            for &p in &grid.perimeter {
                state.phi[p] = rng.random_range(*surf_lo..*surf_hi);
            }
        }
        InitialCondition::SquareDroplet {
            center,
            side,
            inside_value,
            outside_value,
        } => {
            let half = 0.5 * side + 1e-9 * grid.h;
            fill(grid, &mut state.phi, |[x, y]| {
                if (x - center[0]).abs() <= half && (y - center[1]).abs() <= half {
                    *inside_value
                } else {
                    *outside_value
                }
            })
        }
        InitialCondition::FromFile { path } => {
            let snap = snapshot::read(path)?;
            if snap.nx != grid.nx || snap.ny != grid.ny {
                return Err(Error::MalformedSnapshot {
                    path: path.clone(),
                    reason: format!(
                        "grid {}x{} does not match configured {}x{}",
                        snap.nx, snap.ny, grid.nx, grid.ny
                    ),
                });
            }
            if (snap.h - grid.h).abs() > 1e-9 * grid.h {
                return Err(Error::MalformedSnapshot {
                    path: path.clone(),
                    reason: format!("spacing {} does not match configured {}", snap.h, grid.h),
                });
            }
            state.phi = snap.phi;
            if let Some(mg) = snap.mu_gamma {
                state.mu_gamma = mg;
            }
        }
    }
    if !state.is_finite() {
        return Err(Error::NonFinite("initial condition"));
    }
    Ok(state)
}

fn fill(grid: &Grid, phi: &mut [f64], f: impl Fn([f64; 2]) -> f64) {
    for (p, v) in phi.iter_mut().enumerate() {
        *v = f(grid.position(p));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stripe_values() {
        let g = Grid::unit_square(5).unwrap();
        let s = apply_initial_condition(&g, &InitialCondition::Stripe).unwrap();
        assert_eq!(s.phi[g.index(3, 2)], 1.0);
        // x = 1/2 is not strictly greater than 1/2
        assert_eq!(s.phi[g.index(2, 2)], -1.0);
        assert_eq!(s.time, 0.0);
        assert_eq!(s.step, 0);
        assert!(s.mu.iter().chain(&s.mu_gamma).all(|&v| v == 0.0));
    }

    #[test]
    fn stripe_is_constant_along_y() {
        let g = Grid::unit_square(21).unwrap();
        let s = apply_initial_condition(&g, &InitialCondition::Stripe).unwrap();
        for i in 0..g.nx {
            let v = s.phi[g.index(i, 0)];
            assert!((0..g.ny).all(|j| s.phi[g.index(i, j)] == v));
        }
    }

    #[test]
    fn sincos_zero_at_quarter() {
        let g = Grid::unit_square(5).unwrap();
        let s = apply_initial_condition(&g, &InitialCondition::SinCos).unwrap();
        assert!(s.phi[g.index(1, 0)].abs() < 1e-15);
    }

    #[test]
    fn const_bulk_boundary() {
        let g = Grid::unit_square(7).unwrap();
        let ic = InitialCondition::ConstBulkBoundary {
            bulk_value: 0.0,
            boundary_value: 1.0,
        };
        let s = apply_initial_condition(&g, &ic).unwrap();
        assert!(g.interior().iter().all(|&p| s.phi[p] == 0.0));
        assert!(s.psi(&g).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn random_is_seeded() {
        let g = Grid::unit_square(9).unwrap();
        let ic = |seed| InitialCondition::RandomUniform {
            bulk_lo: -0.1,
            bulk_hi: 0.1,
            surf_lo: 0.4,
            surf_hi: 0.6,
            seed,
        };
        let a = apply_initial_condition(&g, &ic(3)).unwrap();
        let b = apply_initial_condition(&g, &ic(3)).unwrap();
        let c = apply_initial_condition(&g, &ic(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.phi, c.phi);
        assert!(g.interior().iter().all(|&p| a.phi[p].abs() < 0.1));
        assert!(a.psi(&g).iter().all(|&v| (0.4..0.6).contains(&v)));
    }

    #[test]
    fn droplet_touches_bottom_wall() {
        let g = Grid::unit_square(21).unwrap();
        let ic = InitialCondition::SquareDroplet {
            center: [0.5, 0.25],
            side: 0.5,
            inside_value: 1.0,
            outside_value: -1.0,
        };
        let s = apply_initial_condition(&g, &ic).unwrap();
        assert_eq!(s.phi[g.index(5, 0)], 1.0);
        assert_eq!(s.phi[g.index(15, 10)], 1.0);
        assert_eq!(s.phi[g.index(4, 0)], -1.0);
        assert_eq!(s.phi[g.index(10, 11)], -1.0);
        let inside = s.phi.iter().filter(|&&v| v > 0.0).count();
        assert_eq!(inside, 11 * 11);
    }

    #[test]
    fn rejects_bad_random_range() {
        let g = Grid::unit_square(5).unwrap();
        let ic = InitialCondition::RandomUniform {
            bulk_lo: 0.1,
            bulk_hi: -0.1,
            surf_lo: 0.0,
            surf_hi: 1.0,
            seed: 0,
        };
        assert!(apply_initial_condition(&g, &ic).is_err());
    }
}
