use std::path::Path;

use gluey_core::multibody::run_simulation;
use gluey_core::output::FrameWriter;
use gluey_core::scenario::{parse_config, ScenarioConfig, ScenarioKind};

fn load(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    parse_config(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SHIPPED: [&str; 5] = [
    "plane_pushpull.cfg",
    "lotto.cfg",
    "lotto_smooth.cfg",
    "lotto_inelastic.cfg",
    "sedimentation.cfg",
];

#[test]
fn shipped_scenarios_parse_and_round_trip() {
    for name in SHIPPED {
        let cfg = load(name);
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again, "{name}");
        match cfg.scenario {
            ScenarioKind::Plane => {
                cfg.plane_scenario().unwrap();
            }
            ScenarioKind::Multibody => {
                cfg.multibody().unwrap();
            }
        }
    }
}

fn shortened(name: &str, horizon: f64) -> ScenarioConfig {
    let mut cfg = load(name);
    cfg.time.horizon = horizon;
    cfg
}

fn csv_of(cfg: &ScenarioConfig) -> (Vec<u8>, Vec<u8>) {
    let mb = cfg.multibody().unwrap();
    let mut w = FrameWriter::new(Vec::new(), Vec::new()).unwrap();
    run_simulation(&mb, |f| Ok(w.write_frame(f)?)).unwrap();
    w.finish().unwrap()
}

#[test]
fn lotto_variants_hold_invariants() {
    for (name, floor) in [("lotto.cfg", -1.0), ("lotto_smooth.cfg", f64::NEG_INFINITY)] {
        let cfg = shortened(name, 0.8);
        let mb = cfg.multibody().unwrap();
        let s = run_simulation(&mb, |_| Ok(())).unwrap();
        assert_eq!(s.gamma_floor, floor);
        for c in s.checks(cfg.max_radius()) {
            assert!(c.pass, "{name}: {} = {} vs {}", c.name, c.value, c.bound);
        }
        assert!(s.min_gamma < 0.0, "{name}: something should glue");
    }
}

#[test]
fn jacobi_runs_are_bitwise_deterministic() {
    let mut cfg = shortened("lotto.cfg", 0.15);
    cfg.solver.sweep_mode = Default::default();
    assert_eq!(csv_of(&cfg), csv_of(&cfg));
}

#[test]
fn scale_knob_changes_particle_count() {
    let mut cfg = shortened("lotto.cfg", 0.01);
    cfg.particles.scale = 0.5;
    let mb = cfg.multibody().unwrap();
    let s = run_simulation(&mb, |_| Ok(())).unwrap();
    assert_eq!(s.particles, 20);
}
