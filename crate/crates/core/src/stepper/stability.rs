//! Stabilization-constant check: the step is unconditionally energy stable
//! when `s1 >= sup F'' / (2 eps)` and `s2 >= sup G'' / (2 delta)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::Params;
use crate::potential::Potential;

/// Relative slack when comparing a constant against its threshold.
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Guaranteed,
    NotGuaranteed,
    /// `F''` is unbounded, so no finite constant suffices.
    UnboundedPotential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition {
    pub given: f64,
    /// `None` for an unbounded potential.
    pub required: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub bulk: Condition,
    pub surface: Condition,
}

fn condition(potential: &Potential, width: f64, given: f64) -> Condition {
    match potential.curvature_bound() {
        None => Condition {
            given,
            required: None,
            verdict: Verdict::UnboundedPotential,
        },
        Some(bound) => {
            let required = bound / (2.0 * width);
            let verdict = if given >= required * (1.0 - REL_TOL) {
                Verdict::Guaranteed
            } else {
                Verdict::NotGuaranteed
            };
            Condition {
                given,
                required: Some(required),
                verdict,
            }
        }
    }
}

pub fn check_stability_constants(params: &Params) -> StabilityReport {
    StabilityReport {
        bulk: condition(&params.bulk_potential, params.epsilon, params.s1),
        surface: condition(&params.surf_potential, params.delta, params.s2),
    }
}

impl StabilityReport {
    pub fn is_guaranteed(&self) -> bool {
        self.bulk.verdict == Verdict::Guaranteed && self.surface.verdict == Verdict::Guaranteed
    }

    /// Human-readable lines for every condition that is not guaranteed.
    pub fn warnings(&self) -> Vec<String> {
        [("bulk", "s1", &self.bulk), ("surface", "s2", &self.surface)]
            .into_iter()
            .filter_map(|(part, name, c)| match (c.verdict, c.required) {
                (Verdict::Guaranteed, _) => None,
                (Verdict::NotGuaranteed, Some(req)) => Some(format!(
                    "{part}: {name} = {} is below the stability threshold {req}",
                    c.given
                )),
                _ => Some(format!(
                    "{part}: potential has unbounded curvature; energy decay is not guaranteed for any {name}"
                )),
            })
            .collect()
    }

    /// Errors out unless both conditions hold.
    pub fn enforce(&self) -> Result<()> {
        if self.is_guaranteed() {
            Ok(())
        } else {
            Err(Error::StabilityRefused(self.warnings().join("; ")))
        }
    }
}
