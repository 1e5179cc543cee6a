use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn netdelay(cfg: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netdelay"))
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("cfg.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_accepts_a_good_config() {
    let out = TempDir::new().unwrap();
    let res = netdelay(&config("single_loop.json"), out.path(), &["validate"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let v = json(out.path().join("validate.json"));
    assert_eq!(v["dim"], 16);
    assert_eq!(v["boundary_controls"], 1);
}

#[test]
fn grid_flag_overrides_the_config() {
    let out = TempDir::new().unwrap();
    let res = netdelay(&config("single_loop.json"), out.path(), &["--grid", "32", "validate"]);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(json(out.path().join("validate.json"))["dim"], 32);
}

#[test]
fn spectrum_of_a_single_loop_has_three_roots() {
    let out = TempDir::new().unwrap();
    let res = netdelay(&config("single_loop.json"), out.path(), &["spectrum"]);
    assert_eq!(res.status.code(), Some(0));
    let text = fs::read_to_string(out.path().join("spectrum.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im,family,multiplicity,residual"));
    let rows: Vec<Vec<f64>> =
        lines.map(|l| l.split(',').filter_map(|f| f.parse().ok()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let k = (r[1] / (2.0 * std::f64::consts::PI)).round();
        assert!(r[0].abs() <= 1e-10 && (r[1] - 2.0 * std::f64::consts::PI * k).abs() <= 1e-10);
    }
}

#[test]
fn disjoint_loops_exit_defective() {
    let out = TempDir::new().unwrap();
    let res = netdelay(&config("two_loops.json"), out.path(), &["controllability"]);
    assert_eq!(res.status.code(), Some(2));
    let v = json(out.path().join("controllability.json"));
    assert_eq!(v["defect"].as_f64(), Some(0.5));
    assert_eq!(v["verdict"], "defective");
    assert!(v["witness_pairing"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["trend"][1]["defect"].as_f64(), Some(0.5));
    assert!(out.path().join("singular_values.csv").exists());
}

#[test]
fn single_loop_is_controllable() {
    let out = TempDir::new().unwrap();
    let res = netdelay(&config("single_loop.json"), out.path(), &["controllability"]);
    assert_eq!(res.status.code(), Some(0));
    let v = json(out.path().join("controllability.json"));
    assert_eq!(v["defect"].as_f64(), Some(0.0));
    assert_eq!(v["samples"].as_array().unwrap().len(), 40);
    assert_eq!(v["rank_condition"][0]["pass"], true);
}

#[test]
fn resolvent_check_passes() {
    let out = TempDir::new().unwrap();
    let res = netdelay(&config("branching.json"), out.path(), &["resolvent-check"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let v = json(out.path().join("resolvent_check.json"));
    assert!(v["max_relative_error"].as_f64().unwrap() <= 1e-8);
    let sweep = fs::read_to_string(out.path().join("resolvent_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 202);
}

#[test]
fn simulate_writes_trajectory_and_manifest() {
    let out = TempDir::new().unwrap();
    let res = netdelay(&config("neutral_loop.json"), out.path(), &["simulate"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let traj = fs::read_to_string(out.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,edge,x,z,rho\n"));
    // 11 snapshots of 16 nodes
    assert_eq!(traj.lines().count(), 1 + 11 * 16);
    let m = json(out.path().join("manifest.json"));
    assert!(m["reconstruction_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(m["gramian"]["probes"], 8);
    assert!(m["mass_final"].as_f64().unwrap() < m["mass_initial"].as_f64().unwrap());
}

#[test]
fn errors_name_the_offending_field() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"network": {"vertices": 2, "edges": [{"tail": 0, "head": 1, "weight": 1.0}, {"tail": 1, "head": 0}]}}"#,
    );
    let res = netdelay(&cfg, dir.path(), &["validate"]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("network.edges[1].weight") && err.contains("vertex 1"), "{err}");

    let cfg = write_config(
        &dir,
        r#"{"network": {"vertices": 1, "edges": [{"tail": 0, "head": 0, "weight": 1.0}]},
            "delays": {"d": {"atoms": [{"theta": 0.0, "weight": [[0.5]]}]}}}"#,
    );
    let res = netdelay(&cfg, dir.path(), &["validate"]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("delays.d.atoms[0].theta") && err.contains("gap"), "{err}");

    let cfg = write_config(
        &dir,
        r#"{"network": {"vertices": 1, "edges": [{"tail": 0, "head": 0, "weight": 1.0}]}, "simulation": {"dt": 0.5}}"#,
    );
    let res = netdelay(&cfg, dir.path(), &["simulate"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("simulation.dt"));

    let res = netdelay(&dir.path().join("missing.json"), dir.path(), &["validate"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing.json"));
}

#[test]
fn reports_are_byte_identical() {
    for (cfg, cmd, file) in [
        ("two_loops.json", "controllability", "controllability.json"),
        ("neutral_loop.json", "spectrum", "spectrum.json"),
        ("single_loop.json", "simulate", "trajectory.csv"),
    ] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        netdelay(&config(cfg), a.path(), &[cmd]);
        netdelay(&config(cfg), b.path(), &["--threads", "1", cmd]);
        let (x, y) = (fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{cfg} {cmd}");
    }
}

#[test]
fn seed_selects_the_samples() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    netdelay(&config("single_loop.json"), a.path(), &["--seed", "1", "controllability"]);
    netdelay(&config("single_loop.json"), b.path(), &["--seed", "2", "controllability"]);
    let (x, y) = (json(a.path().join("controllability.json")), json(b.path().join("controllability.json")));
    assert_ne!(x["samples"], y["samples"]);
    assert_eq!(x["defect"], y["defect"]);
}
