//! End-to-end checks of the `chdbc` binary and the run harness.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use chdbc::config::{preset, RunConfig};
use chdbc::run::{run, DIAGNOSTICS_FILE, FAILURE_FILE, MANIFEST_FILE};

fn chdbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chdbc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, cfg: &RunConfig) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    path.to_string_lossy().into_owned()
}

fn short(name: &str, steps: usize, out: &Path) -> RunConfig {
    let mut c = preset(name).unwrap();
    c.run.steps = Some(steps);
    c.run.t_final = None;
    c.output.dir = out.to_path_buf();
    c
}

#[test]
fn list_scenarios_shows_presets() {
    let o = chdbc(&["list-scenarios"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("random-D\n"));
    assert!(text.contains("kappa=0.075"));
    assert!(text.contains("contact-60\n"));
    assert!(text.contains("ContactLine"));
    assert!(text.contains("droplet-desk"));
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &short("droplet-desk", 5, &dir.path().join("unused")));
    let o = chdbc(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join(DIAGNOSTICS_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(out.join(MANIFEST_FILE).exists());
    assert!(out.join("snapshot_0000005.txt").exists());
    assert!(!dir.path().join("unused").exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[grid]\nnx = 4\n").unwrap();
    assert_eq!(chdbc(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));

    let mut c = short("stripe-A-desk", 2, &dir.path().join("o"));
    c.params.epsilon = -1.0;
    let cfg = write_config(dir.path(), &c);
    assert_eq!(chdbc(&["run", "--config", &cfg]).status.code(), Some(2));

    let cfg = write_config(dir.path(), &short("stripe-A-desk", 2, &dir.path().join("o")));
    let o = chdbc(&["run", "--config", &cfg, "--strict-stability"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unbounded"));

    assert_eq!(chdbc(&["run", "--preset", "nope"]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let mut c = short("sincos-B-desk", 4, &out);
    c.solver.method = chdbc::stepper::Method::Gmres;
    c.solver.max_iter = 1;
    c.solver.restart = 1;
    c.solver.preconditioner = chdbc::stepper::Preconditioner::None;
    let cfg = write_config(dir.path(), &c);
    let o = chdbc(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(out.join(FAILURE_FILE).exists());
    assert!(out.join(DIAGNOSTICS_FILE).exists());
}

#[test]
fn study_convergence_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let mut c = short("bulk0-bound1-C-desk", 0, &out);
    c.run.steps = None;
    c.run.t_final = Some(0.004);
    c.params.tau = 1e-3;
    let cfg = write_config(dir.path(), &c);
    let o = chdbc(&["study-convergence", "--config", &cfg, "--taus", "0.002,0.001", "--tau-star", "0.0005"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("tau,err_phi,err_psi\n"));
    assert!(csv.contains("# slope_phi = "));
    assert!(out.join("convergence_checkpoints.csv").exists());

    let o = chdbc(&["study-convergence", "--config", &cfg, "--taus", "0.001,0.002", "--tau-star", "0.0005"]);
    assert_eq!(o.status.code(), Some(2));
    let o = chdbc(&["study-convergence", "--config", &cfg, "--taus", "0.0015", "--tau-star", "0.0005"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn diagnostics_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for k in 0..2 {
        let mut c = short("random-D-desk", 20, &dir.path().join(format!("r{k}")));
        c.output.timing = false;
        let a = run(&c).unwrap();
        bytes.push(fs::read(a.diagnostics).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn manifest_tracks_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let base = short("random-D-desk", 0, &dir.path().join("m"));
    let manifest = |c: &RunConfig| -> serde_json::Value {
        let a = run(c).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.manifest).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    let m0 = manifest(&base);
    assert_eq!(m0, manifest(&base));
    let mut variants: Vec<RunConfig> = Vec::new();
    let mut push = |f: &dyn Fn(&mut RunConfig)| {
        let mut c = base.clone();
        f(&mut c);
        variants.push(c);
    };
    push(&|c| c.grid.nx = 23);
    push(&|c| c.grid.extent[1] = 0.5 * 22.0 / 20.0);
    push(&|c| c.grid.origin[0] = 0.1);
    push(&|c| c.params.epsilon *= 1.5);
    push(&|c| c.params.delta *= 1.5);
    push(&|c| c.params.kappa *= 1.5);
    push(&|c| c.params.s1 *= 1.5);
    push(&|c| c.params.s2 *= 1.5);
    push(&|c| c.params.tau *= 1.5);
    push(&|c| c.params.surf_potential = chdbc::Potential::TruncatedDoubleWell);
    push(&|c| c.run.seed = Some(3));
    push(&|c| c.run.steps = Some(1));
    push(&|c| c.run.diagnostics_every = 2);
    push(&|c| c.run.snapshot_every = Some(3));
    push(&|c| c.run.snapshot_count = 4);
    push(&|c| c.solver.rel_tol = 1e-9);
    push(&|c| c.solver.method = chdbc::stepper::Method::Gmres);
    push(&|c| c.output.timing = false);
    for (i, mut c) in variants.into_iter().enumerate() {
        if c.grid.nx == 23 {
            c.grid.ny = 23;
        }
        if c.grid.extent[1] != base.grid.extent[1] {
            c.grid.ny = 23;
        }
        assert_ne!(manifest(&c), m0, "variant {i}");
    }
}
