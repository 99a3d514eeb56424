//! WebAssembly bindings behind `www/index.html`.
//!
//! Three things are exposed to the page: a [`Simulation`] that steps a desk
//! preset and accepts brush strokes on the field, [`potential_curve`] for
//! plotting the free-energy densities, and [`stability_report`] which applies
//! the stabilization-constant test to user-entered values.

use chdbc::config::preset;
use chdbc::diagnostics::{energy, mass};
use chdbc::stepper::{check_stability_constants, SolverConfig, Stepper};
use chdbc::{apply_initial_condition, Grid, Params, Potential, State};
use wasm_bindgen::prelude::*;

/// Largest grid the page will build; keeps a step well under a frame.
const MAX_NODES: usize = 61 * 61;

#[wasm_bindgen]
pub struct Simulation {
    stepper: Stepper,
    state: State,
}

impl Simulation {
    pub fn from_preset(name: &str) -> Result<Simulation, String> {
        let cfg = preset(name).map_err(|e| e.to_string())?;
        let grid = cfg.grid.build().map_err(|e| e.to_string())?;
        if grid.len() > MAX_NODES {
            return Err(format!("{name} is too large for the browser; pick a -desk preset"));
        }
        let state = apply_initial_condition(&grid, &cfg.resolved_initial()).map_err(|e| e.to_string())?;
        let stepper = Stepper::new(&grid, &cfg.params, &SolverConfig::direct()).map_err(|e| e.to_string())?;
        Ok(Simulation { stepper, state })
    }

    pub fn advance(&mut self, steps: u32) -> Result<f64, String> {
        for _ in 0..steps {
            self.state = self.stepper.advance(&self.state).map_err(|e| e.to_string())?.0;
        }
        Ok(self.energy())
    }

    fn grid(&self) -> &Grid {
        self.stepper.grid()
    }
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(preset_name: &str) -> Result<Simulation, JsError> {
        Simulation::from_preset(preset_name).map_err(|e| JsError::new(&e))
    }

    /// Advances `steps` time steps and returns the total energy.
    pub fn step(&mut self, steps: u32) -> Result<f64, JsError> {
        self.advance(steps).map_err(|e| JsError::new(&e))
    }

    /// Sets `phi` to `value` on every node within `radius` of `(x, y)`.
    /// Coordinates are fractions of the domain extent. Returns the number of
    /// nodes touched.
    pub fn paint(&mut self, x: f64, y: f64, radius: f64, value: f64) -> u32 {
        let grid = self.stepper.grid().clone();
        let cx = grid.origin[0] + x * grid.extent[0];
        let cy = grid.origin[1] + y * grid.extent[1];
        let r = radius * grid.extent[0].max(grid.extent[1]);
        let mut touched = 0;
        for p in 0..grid.len() {
            let [px, py] = grid.position(p);
            if (px - cx).hypot(py - cy) <= r {
                self.state.phi[p] = value;
                touched += 1;
            }
        }
        touched
    }

    /// `phi` in row-major order, `nx` values per row, bottom row first.
    pub fn phi(&self) -> Vec<f64> {
        self.state.phi.clone()
    }

    pub fn nx(&self) -> usize {
        self.grid().nx
    }

    pub fn ny(&self) -> usize {
        self.grid().ny
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn steps(&self) -> usize {
        self.state.step
    }

    pub fn energy(&self) -> f64 {
        energy(&self.state, self.stepper.params(), self.grid()).map_or(f64::NAN, |e| e.e_total)
    }

    pub fn mass_bulk(&self) -> f64 {
        mass(&self.state, self.grid()).map_or(f64::NAN, |m| m.m_bulk)
    }

    pub fn mass_surf(&self) -> f64 {
        mass(&self.state, self.grid()).map_or(f64::NAN, |m| m.m_surf)
    }
}

fn potential_from(kind: &str, cos_theta_s: f64) -> Result<Potential, String> {
    match kind {
        "double_well" => Ok(Potential::ClassicalDoubleWell),
        "truncated_double_well" => Ok(Potential::TruncatedDoubleWell),
        "contact_line" => Ok(Potential::contact_line(cos_theta_s)),
        other => Err(format!("unknown potential {other:?}")),
    }
}

pub fn sample_potential(kind: &str, cos_theta_s: f64, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
    let pot = potential_from(kind, cos_theta_s)?;
    if n < 2 || !(hi > lo) {
        return Err("need n >= 2 and hi > lo".into());
    }
    Ok((0..n)
        .map(|i| pot.value(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect())
}

/// `n` equally spaced samples of the named potential on `[lo, hi]`.
#[wasm_bindgen]
pub fn potential_curve(kind: &str, cos_theta_s: f64, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    sample_potential(kind, cos_theta_s, lo, hi, n).map_err(|e| JsError::new(&e))
}

#[allow(clippy::too_many_arguments)]
pub fn stability_json(
    epsilon: f64,
    delta: f64,
    s1: f64,
    s2: f64,
    bulk: &str,
    surf: &str,
    cos_theta_s: f64,
) -> Result<String, String> {
    let params = Params {
        epsilon,
        delta,
        kappa: 1.0,
        s1,
        s2,
        tau: 1.0,
        bulk_potential: potential_from(bulk, cos_theta_s)?,
        surf_potential: potential_from(surf, cos_theta_s)?,
    };
    params.validate().map_err(|e| e.to_string())?;
    let report = check_stability_constants(&params);
    let value = serde_json::json!({
        "report": report,
        "guaranteed": report.is_guaranteed(),
        "warnings": report.warnings(),
    });
    Ok(value.to_string())
}

/// Stability verdicts as a JSON string.
#[wasm_bindgen]
pub fn stability_report(
    epsilon: f64,
    delta: f64,
    s1: f64,
    s2: f64,
    bulk: &str,
    surf: &str,
    cos_theta_s: f64,
) -> Result<String, JsError> {
    stability_json(epsilon, delta, s1, s2, bulk, surf, cos_theta_s).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulation_steps_and_dissipates() {
        let mut sim = Simulation::from_preset("droplet-desk").unwrap();
        let e0 = sim.energy();
        let e1 = sim.advance(5).unwrap();
        assert_eq!(sim.steps(), 5);
        assert!(e1 <= e0);
        assert_eq!(sim.phi().len(), sim.nx() * sim.ny());
    }

    #[test]
    fn paint_changes_field() {
        let mut sim = Simulation::from_preset("sincos-B-desk").unwrap();
        let n = sim.paint(0.5, 0.5, 0.1, 1.0);
        assert!(n > 0);
        assert_eq!(sim.phi()[sim.nx() * (sim.ny() / 2) + sim.nx() / 2], 1.0);
    }

    #[test]
    fn full_size_presets_are_refused() {
        assert!(Simulation::from_preset("stripe-A").is_err());
        assert!(Simulation::from_preset("nope-desk").is_err());
    }

    #[test]
    fn potential_samples() {
        let v = sample_potential("double_well", 0.0, -1.0, 1.0, 3).unwrap();
        assert_eq!(v, vec![0.0, 0.25, 0.0]);
        assert!(sample_potential("quartic", 0.0, -1.0, 1.0, 3).is_err());
    }

    #[test]
    fn stability_json_shape() {
        let s = stability_json(0.02, 0.02, 50.0, 50.0, "truncated_double_well", "truncated_double_well", 0.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["guaranteed"], true);
        let s = stability_json(0.02, 0.02, 50.0, 50.0, "double_well", "contact_line", 0.5).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["report"]["bulk"]["verdict"], "unbounded_potential");
    }
}
