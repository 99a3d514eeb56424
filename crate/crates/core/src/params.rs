use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;

/// Every scalar entering the time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Bulk interface width.
    pub epsilon: f64,
    /// Surface interface width.
    pub delta: f64,
    /// Surface diffusion coefficient; zero is allowed.
    pub kappa: f64,
    /// Bulk stabilization constant.
    pub s1: f64,
    /// Surface stabilization constant.
    pub s2: f64,
    /// Time step.
    pub tau: f64,
    pub bulk_potential: Potential,
    pub surf_potential: Potential,
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("epsilon", self.epsilon, self.epsilon > 0.0),
            ("delta", self.delta, self.delta > 0.0),
            ("kappa", self.kappa, self.kappa >= 0.0),
            ("s1", self.s1, self.s1 >= 0.0),
            ("s2", self.s2, self.s2 >= 0.0),
            ("tau", self.tau, self.tau > 0.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {value} out of range")));
            }
        }
        self.bulk_potential.validate().map_err(Error::InvalidParams)?;
        self.surf_potential.validate().map_err(Error::InvalidParams)?;
        Ok(())
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_potentials(mut self, bulk: Potential, surf: Potential) -> Self {
        self.bulk_potential = bulk;
        self.surf_potential = surf;
        self
    }
}
