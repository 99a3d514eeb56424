//! Bulk and surface free-energy densities `F`, `G`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

/// Surface-tension scale used for the contact-line potential when none is given.
pub fn default_gamma() -> f64 {
    2.0 * std::f64::consts::SQRT_2 / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `(x^2 - 1)^2 / 4`.
    #[serde(rename = "double_well")]
    ClassicalDoubleWell,
    /// Double well with quadratic tails outside `[-1, 1]`; `F''` is bounded by 2.
    TruncatedDoubleWell,
    /// `(gamma / 2) cos(theta_s) sin(pi x / 2)`, the moving contact-line wall energy.
    ContactLine {
        #[serde(default = "default_gamma")]
        gamma: f64,
        cos_theta_s: f64,
    },
}

impl Potential {
    pub fn contact_line(cos_theta_s: f64) -> Self {
        Potential::ContactLine {
            gamma: default_gamma(),
            cos_theta_s,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::ClassicalDoubleWell => "double_well",
            Potential::TruncatedDoubleWell => "truncated_double_well",
            Potential::ContactLine { .. } => "contact_line",
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Potential::ClassicalDoubleWell => quartic(x),
            Potential::TruncatedDoubleWell => {
                if x > 1.0 {
                    (x - 1.0) * (x - 1.0)
                } else if x <= -1.0 {
                    (x + 1.0) * (x + 1.0)
                } else {
                    quartic(x)
                }
            }
            Potential::ContactLine { gamma, cos_theta_s } => {
                0.5 * gamma * cos_theta_s * (FRAC_PI_2 * x).sin()
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Potential::ClassicalDoubleWell => x * x * x - x,
            Potential::TruncatedDoubleWell => {
                if x > 1.0 {
                    2.0 * (x - 1.0)
                } else if x <= -1.0 {
                    2.0 * (x + 1.0)
                } else {
                    x * x * x - x
                }
            }
            Potential::ContactLine { gamma, cos_theta_s } => {
                0.5 * gamma * cos_theta_s * FRAC_PI_2 * (FRAC_PI_2 * x).cos()
            }
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match *self {
            Potential::ClassicalDoubleWell => 3.0 * x * x - 1.0,
            Potential::TruncatedDoubleWell => {
                if x > 1.0 || x <= -1.0 {
                    2.0
                } else {
                    3.0 * x * x - 1.0
                }
            }
            Potential::ContactLine { gamma, cos_theta_s } => {
                -0.5 * gamma * cos_theta_s * FRAC_PI_2 * FRAC_PI_2 * (FRAC_PI_2 * x).sin()
            }
        }
    }

    /// Signed supremum of the second derivative over the real line, `None` when
    /// it is unbounded. The stability bound needs `sup F''`, not `sup |F''|`.
    pub fn curvature_bound(&self) -> Option<f64> {
        match *self {
            Potential::ClassicalDoubleWell => None,
            Potential::TruncatedDoubleWell => Some(2.0),
            Potential::ContactLine { gamma, cos_theta_s } => {
                Some(0.5 * gamma * FRAC_PI_2 * FRAC_PI_2 * cos_theta_s.abs())
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Potential::ContactLine { gamma, cos_theta_s } = *self {
            if !gamma.is_finite() {
                return Err(format!("contact_line gamma must be finite, got {gamma}"));
            }
            if !(-1.0..=1.0).contains(&cos_theta_s) {
                return Err(format!(
                    "contact_line cos_theta_s must lie in [-1, 1], got {cos_theta_s}"
                ));
            }
        }
        Ok(())
    }
}

#[inline]
fn quartic(x: f64) -> f64 {
    let q = x * x - 1.0;
    0.25 * q * q
}
