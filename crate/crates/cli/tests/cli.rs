use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn gluey(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gluey"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(name)
        .display()
        .to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn out_dir(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_BOX: &str = r#"
scenario = "multibody"
planar = true
gravity = [0.0, -10.0, 0.0]

[time]
h = 1e-3
horizon = 0.2

[output]
every = 10

[glue]
gamma_min_policy = "uniform"
gamma_min = -1.0

[particles]
count = 12
seed = 3
region_lo = [-0.2, -0.2, 0.0]
region_hi = [0.2, 0.0, 0.0]
radius_min = 0.02
radius_max = 0.03
mass = 1.0

[[obstacles]]
kind = "half_space"
point = [0.0, -0.25, 0.0]
normal = [0.0, 1.0, 0.0]
"#;

const SMALL_VALIDATE: &str = r#"
[validate]
seed = 11
projection_instances = 30
nonexpansion_instances = 30
neighbor_configs = 3
neighbor_particles = 150
plane_runs = 10
"#;

#[test]
fn plane_run_writes_trajectory_and_manifest() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "plane");
    let o = gluey(&["run", "--config", &scenario("plane_pushpull.cfg"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,q,u,gamma,lambda\n"));
    assert!(csv.ends_with('\n'));
    assert_eq!(csv.lines().count(), 50_002);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "run");
    assert!(manifest["config_toml"].as_str().unwrap().contains("push_pull"));
    let hit = manifest["summary"]["hitting_time"].as_f64().unwrap();
    assert!((hit - 1.0).abs() <= 2e-4);
    assert!(manifest["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn multibody_run_is_reproducible_from_its_manifest() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "box.cfg", SMALL_BOX);
    let a = out_dir(&dir, "a");
    let o = gluey(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let snap = fs::read_to_string(a.join("snapshots.csv")).unwrap();
    assert!(snap.starts_with("step,t,id,x,y,z,vx,vy,vz,r\n"));
    assert!(snap.ends_with('\n'));
    // 21 frames of 12 particles
    assert_eq!(snap.lines().count(), 1 + 21 * 12);
    let net = fs::read_to_string(a.join("network.csv")).unwrap();
    assert!(net.starts_with("step,t,i,j,gamma,D\n"));
    // the floor is obstacle 0, reported as j = N
    assert!(net.lines().skip(1).any(|l| l.split(',').nth(3) == Some("12")), "{net}");

    let from_manifest = out_dir(&dir, "b");
    let o = gluey(&[
        "run",
        "--config",
        a.join("manifest.json").to_str().unwrap(),
        "--out",
        from_manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let from_effective = out_dir(&dir, "c");
    let o = gluey(&[
        "run",
        "--config",
        a.join("effective.cfg").to_str().unwrap(),
        "--out",
        from_effective.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for d in [&from_manifest, &from_effective] {
        for f in ["snapshots.csv", "network.csv", "effective.cfg"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(d.join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn seed_and_scale_change_the_sample() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "box.cfg", SMALL_BOX);
    let run = |name: &str, extra: &[&str]| {
        let out = out_dir(&dir, name);
        let mut args = vec!["run", "--config", cfg.as_str(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = gluey(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(out.join("snapshots.csv")).unwrap()
    };
    let base = run("s1", &["--seed", "1"]);
    assert_eq!(base, run("s1b", &["--seed", "1"]));
    assert_ne!(base, run("s2", &["--seed", "2"]));
    let half = run("half", &["--seed", "1", "--scale", "0.5"]);
    let frame0 = half.lines().skip(1).filter(|l| l.starts_with("0,")).count();
    assert_eq!(frame0, 6);
}

#[test]
fn invalid_config_lists_every_problem() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "bad.cfg",
        "scenario = \"multibody\"\nbogus = 1\n[time]\nh = -1.0\n[solver]\nuzawa_omega = 3.0\n",
    );
    let o = gluey(&["run", "--config", &cfg, "--out", out_dir(&dir, "x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("bogus"), "{err}");
    assert!(err.contains("time.h"), "{err}");
    assert!(err.contains("uzawa_omega"), "{err}");
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(gluey(&[]).status.code(), Some(1));
    assert_eq!(gluey(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gluey(&["run", "--out", "/tmp/never"]).status.code(), Some(1));
    assert_eq!(gluey(&["--help"]).status.code(), Some(0));
}

#[test]
fn placement_failure_is_a_runtime_error() {
    let dir = TempDir::new().unwrap();
    let crowded = SMALL_BOX.replace("count = 12", "count = 5000");
    let cfg = write(&dir, "crowded.cfg", &crowded);
    let o = gluey(&["run", "--config", &cfg, "--out", out_dir(&dir, "x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("could not place"));
}

#[test]
fn convergence_table_and_overrides() {
    let dir = TempDir::new().unwrap();
    let out = out_dir(&dir, "conv");
    let cfg = scenario("plane_pushpull.cfg");
    let o = gluey(&["convergence", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert_eq!(table, stdout(&o));
    assert!(table.starts_with("h,linf_q,hit_error,unstick_error,order\n"));
    assert_eq!(table.lines().count(), 6);
    for line in table.lines().skip(2) {
        let order: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(order >= 0.9, "{line}");
    }

    let o = gluey(&["convergence", "--config", &cfg, "--h", "1e-2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().next(), Some("h,linf_q,hit_error,unstick_error"));
    assert_eq!(stdout(&o).lines().count(), 2);

    let o = gluey(&["convergence", "--config", &cfg, "--h", "1e-2,1e-2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn convergence_needs_a_plane_scenario() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "box.cfg", SMALL_BOX);
    assert_eq!(gluey(&["convergence", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn validate_suites_pass_and_fault_is_caught() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "v.cfg", SMALL_VALIDATE);
    let o = gluey(&["validate", "--config", &cfg]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    for suite in ["projection", "kkt", "nonexpansion", "neighbors", "lemmas"] {
        assert!(text.lines().any(|l| l.starts_with(suite) && l.contains("PASS")), "{text}");
    }

    let o = gluey(&["validate", "--config", &cfg, "--suites", "projection", "--disable-dual-projection"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("projection   FAIL"));

    let o = gluey(&["validate", "--config", &cfg, "--suites", "neighbors,lemmas"]);
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("neighbors") && lines[1].starts_with("lemmas"));

    assert_eq!(gluey(&["validate", "--suites", "nope"]).status.code(), Some(1));
}
