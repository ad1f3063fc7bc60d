//! Browser bindings for the interactive demo page in `www/`.
//!
//! The plain functions ([`plane_samples`], [`lubrication_samples`],
//! [`LottoDemo`]) are ordinary Rust and are tested natively; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use gluey_core::force::ForceLaw;
use gluey_core::lubrication::{integrate_lubrication_ode, LubricationOptions};
use gluey_core::multibody::Simulation;
use gluey_core::plane::{run_plane_scenario, PlaneScenario, RoughParams};
use gluey_core::projection::ContactKey;
use gluey_core::scenario::{parse_config, GlueConfig, PolicyName};
use wasm_bindgen::prelude::*;

const LOTTO_CFG: &str = include_str!("../../core/scenarios/lotto.cfg");

/// Wall half-width of the lotto box.
pub const LOTTO_HALF_WIDTH: f64 = 0.25;

/// Flattened `[t, q, gamma]` samples of the push-pull plane run.
/// `gamma_min = -inf` gives the smooth contact.
pub fn plane_samples(gamma_min: f64, magnitude: f64, switch: f64, h: f64, horizon: f64) -> Result<Vec<f64>, String> {
    let sc = PlaneScenario {
        force: ForceLaw::push_pull(magnitude, switch),
        horizon,
        rough: if gamma_min == f64::NEG_INFINITY {
            RoughParams::smooth()
        } else {
            RoughParams::with_floor(gamma_min)
        },
        ..PlaneScenario::push_pull(h)
    };
    let tr = run_plane_scenario(&sc).map_err(|e| e.to_string())?;
    Ok(tr.samples.iter().flat_map(|s| [s.t, s.q, s.gamma]).collect())
}

/// Flattened `[t, q]` samples of the lubrication ODE with the same forcing,
/// for a sphere whose drag coefficient `6 pi mu r^2` equals `2 mu`.
pub fn lubrication_samples(mu: f64, magnitude: f64, switch: f64, h: f64, horizon: f64) -> Result<Vec<f64>, String> {
    let r = 1.0 / (3.0 * std::f64::consts::PI).sqrt();
    let force = ForceLaw::push_pull(magnitude, switch);
    let tr = integrate_lubrication_ode(1.0, 0.0, mu, r, 1.0, &force, horizon, h, &LubricationOptions::default())
        .map_err(|e| e.to_string())?;
    Ok(tr.samples.iter().flat_map(|s| [s.t, s.q]).collect())
}

#[wasm_bindgen]
pub fn plane_trajectory(gamma_min: f64, magnitude: f64, switch: f64, h: f64, horizon: f64) -> Result<Vec<f64>, JsError> {
    plane_samples(gamma_min, magnitude, switch, h, horizon).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lubrication_trajectory(mu: f64, magnitude: f64, switch: f64, h: f64, horizon: f64) -> Result<Vec<f64>, JsError> {
    lubrication_samples(mu, magnitude, switch, h, horizon).map_err(|e| JsError::new(&e))
}

/// The rotating square mixer, stepped on demand.
#[wasm_bindgen]
pub struct LottoDemo {
    sim: Simulation,
    omega: f64,
}

impl LottoDemo {
    pub fn create(count: usize, seed: u64, gamma_min: f64) -> Result<LottoDemo, String> {
        let mut cfg = parse_config(LOTTO_CFG).map_err(|e| e.to_string())?;
        cfg.particles.count = count;
        cfg.particles.scale = 1.0;
        cfg.particles.seed = seed;
        cfg.glue = if gamma_min == f64::NEG_INFINITY {
            GlueConfig {
                gamma_min_policy: PolicyName::Smooth,
                gamma_min: None,
                ..cfg.glue
            }
        } else {
            GlueConfig {
                gamma_min_policy: PolicyName::Uniform,
                gamma_min: Some(gamma_min),
                ..cfg.glue
            }
        };
        let omega = cfg.obstacles.first().map_or(0.0, |o| o.motion.omega);
        let mb = cfg.multibody().map_err(|e| e.to_string())?;
        let sim = Simulation::new(&mb).map_err(|e| e.to_string())?;
        Ok(LottoDemo { sim, omega })
    }

    pub fn advance(&mut self, steps: usize) -> Result<(), String> {
        for _ in 0..steps {
            self.sim.advance().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// Center pairs `[x1, y1, x2, y2]` of glued particle pairs.
    pub fn bond_segments(&self) -> Vec<f64> {
        let p = &self.sim.state.positions;
        self.sim
            .contacts
            .glued()
            .filter_map(|(k, _)| match k {
                ContactKey::Pair(i, j) => Some([p[*i].x, p[*i].y, p[*j].x, p[*j].y]),
                _ => None,
            })
            .flatten()
            .collect()
    }
}

#[wasm_bindgen]
impl LottoDemo {
    /// `gamma_min = -Infinity` selects smooth contacts.
    #[wasm_bindgen(constructor)]
    pub fn new(count: usize, seed: u64, gamma_min: f64) -> Result<LottoDemo, JsError> {
        LottoDemo::create(count, seed, gamma_min).map_err(|e| JsError::new(&e))
    }

    pub fn step(&mut self, steps: usize) -> Result<(), JsError> {
        self.advance(steps).map_err(|e| JsError::new(&e))
    }

    pub fn time(&self) -> f64 {
        self.sim.t
    }

    /// Rotation of the walls, in radians.
    pub fn wall_angle(&self) -> f64 {
        self.omega * self.sim.t
    }

    pub fn half_width(&self) -> f64 {
        LOTTO_HALF_WIDTH
    }

    /// Flattened `[x, y, r]` per particle.
    pub fn particles(&self) -> Vec<f64> {
        let s = &self.sim.state;
        s.positions
            .iter()
            .zip(&s.radii)
            .flat_map(|(x, r)| [x.x, x.y, *r])
            .collect()
    }

    pub fn bonds(&self) -> Vec<f64> {
        self.bond_segments()
    }

    pub fn glued_contacts(&self) -> usize {
        self.sim.contacts.glued().count()
    }
}
