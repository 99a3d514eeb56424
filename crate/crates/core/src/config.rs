//! Run configuration and the built-in scenario presets.
//!
//! Config files are TOML: dotted section headers over flat `key = value`
//! lines. A complete example:
//!
//! ```toml
//! [grid]
//! nx = 21
//! ny = 21
//! origin = [0.0, 0.0]
//! extent = [1.0, 1.0]
//!
//! [params]
//! epsilon = 0.02
//! delta = 0.02
//! kappa = 1.0
//! s1 = 100.0
//! s2 = 100.0
//! tau = 2e-4
//! bulk_potential.kind = "double_well"
//! surf_potential.kind = "contact_line"
//! surf_potential.cos_theta_s = 0.5
//!
//! [initial]
//! kind = "square_droplet"
//! center = [0.5, 0.25]
//! side = 0.5
//! inside_value = 1.0
//! outside_value = -1.0
//!
//! [run]
//! t_final = 0.05        # or: steps = 250
//! snapshot_every = 50   # omit for log-spaced snapshots
//!
//! [solver]
//! method = "direct"
//!
//! [output]
//! dir = "out/droplet"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_grid, Grid};
use crate::params::Params;
use crate::potential::Potential;
use crate::state::InitialCondition;
use crate::stepper::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(default)]
    pub origin: [f64; 2],
    pub extent: [f64; 2],
}

impl GridSpec {
    pub fn unit_square(n: usize) -> Self {
        GridSpec {
            nx: n,
            ny: n,
            origin: [0.0, 0.0],
            extent: [1.0, 1.0],
        }
    }

    pub fn build(&self) -> Result<Grid> {
        build_grid(self.nx, self.ny, self.origin, self.extent)
    }
}

fn default_one() -> usize {
    1
}

fn default_snapshot_count() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Fixed snapshot cadence. When absent, `snapshot_count` log-spaced
    /// snapshots are written plus the first and last state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    #[serde(default = "default_snapshot_count")]
    pub snapshot_count: usize,
    #[serde(default = "default_one")]
    pub diagnostics_every: usize,
    #[serde(default)]
    pub strict_stability: bool,
    /// Replaces the seed of a random initial condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            steps: None,
            t_final: None,
            snapshot_every: None,
            snapshot_count: default_snapshot_count(),
            diagnostics_every: 1,
            strict_stability: false,
            seed: None,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Record wall-clock time per step. Disable for byte-identical CSVs.
    #[serde(default = "default_true")]
    pub timing: bool,
    /// Append each diagnostics row to `diagnostics.csv.partial` as it is made.
    #[serde(default)]
    pub stream: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out(),
            timing: true,
            stream: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: Params,
    pub initial: InitialCondition,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// The initial condition after applying `run.seed`.
    pub fn resolved_initial(&self) -> InitialCondition {
        match (&self.initial, self.run.seed) {
            (InitialCondition::RandomUniform { bulk_lo, bulk_hi, surf_lo, surf_hi, .. }, Some(seed)) => {
                InitialCondition::RandomUniform {
                    bulk_lo: *bulk_lo,
                    bulk_hi: *bulk_hi,
                    surf_lo: *surf_lo,
                    surf_hi: *surf_hi,
                    seed,
                }
            }
            (ic, _) => ic.clone(),
        }
    }

    /// Number of time steps, from `steps` or `t_final / tau`.
    pub fn step_count(&self) -> Result<usize> {
        match (self.run.steps, self.run.t_final) {
            (Some(n), None) => Ok(n),
            (None, Some(t)) => {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(Error::InvalidConfig(format!("t_final = {t} must be non-negative")));
                }
                let n = t / self.params.tau;
                let r = n.round();
                if (n - r).abs() > 1e-9 * r.max(1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "t_final = {t} is not an integer multiple of tau = {}",
                        self.params.tau
                    )));
                }
                Ok(r as usize)
            }
            (Some(_), Some(_)) => Err(Error::InvalidConfig(
                "set either run.steps or run.t_final, not both".into(),
            )),
            (None, None) => Err(Error::InvalidConfig("one of run.steps or run.t_final is required".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.params.validate()?;
        self.initial.validate()?;
        self.solver.validate()?;
        self.step_count()?;
        if self.run.diagnostics_every == 0 || self.run.snapshot_every == Some(0) {
            return Err(Error::InvalidConfig("cadences must be at least 1".into()));
        }
        Ok(())
    }
}

struct PresetSpec {
    name: &'static str,
    summary: &'static str,
    make: fn(bool) -> RunConfig,
}

fn classical() -> Potential {
    Potential::ClassicalDoubleWell
}

fn base(name: &str, n: usize, params: Params, initial: InitialCondition, steps: usize) -> RunConfig {
    RunConfig {
        grid: GridSpec::unit_square(n),
        params,
        initial,
        run: RunSection {
            steps: Some(steps),
            ..Default::default()
        },
        solver: SolverConfig::default(),
        output: OutputSection {
            dir: PathBuf::from("out").join(name),
            ..Default::default()
        },
    }
}

fn params(epsilon: f64, delta: f64, kappa: f64, s: (f64, f64), tau: f64, surf: Potential) -> Params {
    Params {
        epsilon,
        delta,
        kappa,
        s1: s.0,
        s2: s.1,
        tau,
        bulk_potential: classical(),
        surf_potential: surf,
    }
}

fn stripe_a(desk: bool) -> RunConfig {
    let p = params(1.0, 0.1, 1.0, (1.0, 10.0), 1e-5, classical());
    let n = if desk { 21 } else { 101 };
    base("stripe-A", n, p, InitialCondition::Stripe, 200)
}

fn sincos_b(desk: bool) -> RunConfig {
    let p = params(0.02, 0.02, 1.0, (50.0, 50.0), 1e-5, classical());
    let n = if desk { 21 } else { 101 };
    base("sincos-B", n, p, InitialCondition::SinCos, 100)
}

fn bulk0_bound1_c(desk: bool) -> RunConfig {
    let p = params(0.02, 0.02, 0.02, (100.0, 100.0), 8e-6, classical());
    let ic = InitialCondition::ConstBulkBoundary {
        bulk_value: 0.0,
        boundary_value: 1.0,
    };
    if desk {
        base("bulk0-bound1-C", 21, p, ic, 500)
    } else {
        base("bulk0-bound1-C", 101, p, ic, 2500)
    }
}

fn random_d(desk: bool) -> RunConfig {
    let p = params(0.02, 0.02, 0.075, (100.0, 100.0), 8e-6, classical());
    let ic = InitialCondition::RandomUniform {
        bulk_lo: -0.1,
        bulk_hi: 0.1,
        surf_lo: 0.4,
        surf_hi: 0.6,
        seed: 20200101,
    };
    let (n, steps) = if desk { (21, 300) } else { (101, 3000) };
    let mut c = base("random-D", n, p, ic, steps);
    c.grid.extent = [0.5, 0.5];
    c
}

fn droplet_ic() -> InitialCondition {
    InitialCondition::SquareDroplet {
        center: [0.5, 0.25],
        side: 0.5,
        inside_value: 1.0,
        outside_value: -1.0,
    }
}

fn droplet(desk: bool) -> RunConfig {
    let p = params(0.02, 0.02, 1.0, (100.0, 100.0), 2e-4, classical());
    let mut c = base("droplet", if desk { 21 } else { 101 }, p, droplet_ic(), 0);
    c.run.steps = None;
    c.run.t_final = Some(if desk { 0.05 } else { 0.5 });
    c
}

fn contact(cos_theta_s: f64, name: &str, desk: bool) -> RunConfig {
    let p = params(
        0.02,
        0.02,
        1.0,
        (100.0, 100.0),
        1e-5,
        Potential::contact_line(cos_theta_s),
    );
    let (n, steps) = if desk { (21, 200) } else { (101, 1000) };
    base(name, n, p, droplet_ic(), steps)
}

fn contact_60(desk: bool) -> RunConfig {
    contact(0.5, "contact-60", desk)
}

fn contact_120(desk: bool) -> RunConfig {
    contact(-0.5, "contact-120", desk)
}

const PRESETS: &[PresetSpec] = &[
    PresetSpec {
        name: "stripe-A",
        summary: "stripe, eps=1 delta=0.1 kappa=1 s1=1 s2=10 tau=1e-5 h=0.01, 200 steps",
        make: stripe_a,
    },
    PresetSpec {
        name: "sincos-B",
        summary: "sin(4 pi x)cos(4 pi y), eps=delta=0.02 kappa=1 s=50 tau=1e-5 h=0.01, 100 steps",
        make: sincos_b,
    },
    PresetSpec {
        name: "bulk0-bound1-C",
        summary: "0 in bulk, 1 on boundary, eps=delta=kappa=0.02 s=100 tau=8e-6 h=0.01, 2500 steps",
        make: bulk0_bound1_c,
    },
    PresetSpec {
        name: "random-D",
        summary: "random bulk [-0.1,0.1], boundary [0.4,0.6], eps=delta=0.02 kappa=0.075 s=100 tau=8e-6 on [0,0.5]^2 h=0.005, 3000 steps",
        make: random_d,
    },
    PresetSpec {
        name: "droplet",
        summary: "square droplet at (0.5,0.25) side 0.5, eps=delta=0.02 kappa=1 s=100 tau=2e-4 h=0.01, T=0.5",
        make: droplet,
    },
    PresetSpec {
        name: "contact-60",
        summary: "droplet with contact-line surface potential cos(theta_s)=1/2 gamma=2sqrt(2)/3 tau=1e-5, 1000 steps",
        make: contact_60,
    },
    PresetSpec {
        name: "contact-120",
        summary: "droplet with contact-line surface potential cos(theta_s)=-1/2 gamma=2sqrt(2)/3 tau=1e-5, 1000 steps",
        make: contact_120,
    },
];

/// All preset names, each full-size preset followed by its `-desk` variant.
pub fn preset_names() -> Vec<String> {
    PRESETS
        .iter()
        .flat_map(|p| [p.name.to_string(), format!("{}-desk", p.name)])
        .collect()
}

pub fn preset_summary(name: &str) -> Option<String> {
    let (base, desk) = split_desk(name);
    PRESETS.iter().find(|p| p.name == base).map(|p| {
        if desk {
            format!("{} (desk: 21x21 grid, shortened run)", p.summary)
        } else {
            p.summary.to_string()
        }
    })
}

fn split_desk(name: &str) -> (&str, bool) {
    match name.strip_suffix("-desk") {
        Some(b) => (b, true),
        None => (name, false),
    }
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let (base, desk) = split_desk(name);
    let entry = PRESETS
        .iter()
        .find(|p| p.name == base)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {name:?}")))?;
    let mut cfg = (entry.make)(desk);
    if desk {
        cfg.output.dir = PathBuf::from("out").join(name);
    }
    Ok(cfg)
}
