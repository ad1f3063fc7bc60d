//! Scenario files: a TOML document describing either a particle/plane run or
//! a multi-particle run, parsed with defaults, checked as a whole and turned
//! into solver inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::force::ForceLaw;
use crate::geometry::Vec3;
use crate::multibody::{
    GammaMinPolicy, GlueLaw, MultibodyConfig, ParticleInit, ParticleSpec, SampledRegion, StepSettings,
};
use crate::neighbors::GridParams;
use crate::obstacles::{Motion, Obstacle, Shape};
use crate::plane::{PlaneScenario, RoughParams};
use crate::projection::{SolverOptions, SweepMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Plane,
    #[default]
    Multibody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimeConfig {
    pub h: f64,
    pub horizon: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig { h: 1e-3, horizon: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    /// Frame cadence in steps.
    pub every: usize,
    pub snapshots: String,
    pub network: String,
    pub trajectory: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            every: 1,
            snapshots: "snapshots.csv".into(),
            network: "network.csv".into(),
            trajectory: "trajectory.csv".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    #[default]
    Smooth,
    Uniform,
    Roughness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlueConfig {
    pub mu: f64,
    pub radius_scaling: bool,
    pub gamma_min_policy: PolicyName,
    /// Used by the `uniform` policy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<f64>,
    pub takeoff_correction: bool,
}

impl Default for GlueConfig {
    fn default() -> Self {
        GlueConfig {
            mu: 1.0,
            radius_scaling: false,
            gamma_min_policy: PolicyName::Smooth,
            gamma_min: None,
            takeoff_correction: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepName {
    #[default]
    Jacobi,
    GaussSeidel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub uzawa_omega: f64,
    pub uzawa_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uzawa_max_iters: Option<usize>,
    pub sweep_mode: SweepName,
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverConfig {
            uzawa_omega: d.omega,
            uzawa_tol: d.tol,
            uzawa_max_iters: None,
            sweep_mode: SweepName::Jacobi,
            warm_start: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_neigh: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_size: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParticleEntry {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub radius: f64,
    pub mass: f64,
    pub roughness: f64,
}

impl Default for ParticleEntry {
    fn default() -> Self {
        ParticleEntry {
            position: [0.0; 3],
            velocity: [0.0; 3],
            radius: 0.0,
            mass: 1.0,
            roughness: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParticlesConfig {
    /// Sampled count before scaling; ignored when `list` is given.
    pub count: usize,
    /// Multiplies `count`.
    pub scale: f64,
    pub seed: u64,
    pub region_lo: [f64; 3],
    pub region_hi: [f64; 3],
    pub radius_min: f64,
    pub radius_max: f64,
    pub mass: f64,
    pub roughness: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub list: Vec<ParticleEntry>,
}

impl Default for ParticlesConfig {
    fn default() -> Self {
        ParticlesConfig {
            count: 0,
            scale: 1.0,
            seed: 0,
            region_lo: [0.0; 3],
            region_hi: [1.0, 1.0, 0.0],
            radius_min: 0.01,
            radius_max: 0.01,
            mass: 1.0,
            roughness: 0.0,
            list: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    #[default]
    Fixed,
    Rotation,
    Translation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionConfig {
    pub kind: MotionKind,
    pub center: [f64; 3],
    pub axis: [f64; 3],
    pub omega: f64,
    pub velocity: [f64; 3],
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            kind: MotionKind::Fixed,
            center: [0.0; 3],
            axis: [0.0, 0.0, 1.0],
            omega: 0.0,
            velocity: [0.0; 3],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    #[default]
    HalfSpace,
    Sphere,
    /// Equal spheres evenly spaced on the segment `from`..`to`.
    Chain,
    /// Equal spheres evenly spaced on a circle in the plane normal to `axis`.
    Ring,
}

/// One obstacle. Only the keys relevant to `kind` are read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstacleConfig {
    pub kind: ObstacleKind,
    pub point: [f64; 3],
    pub normal: [f64; 3],
    pub center: [f64; 3],
    pub radius: f64,
    pub from: [f64; 3],
    pub to: [f64; 3],
    pub count: usize,
    pub ring_radius: f64,
    pub axis: [f64; 3],
    pub roughness: f64,
    /// Whether particles can stick to this obstacle.
    pub gluey: bool,
    pub motion: MotionConfig,
}

impl Default for ObstacleConfig {
    fn default() -> Self {
        ObstacleConfig {
            kind: ObstacleKind::HalfSpace,
            point: [0.0; 3],
            normal: [0.0, 1.0, 0.0],
            center: [0.0; 3],
            radius: 0.0,
            from: [0.0; 3],
            to: [0.0; 3],
            count: 0,
            ring_radius: 0.0,
            axis: [0.0, 0.0, 1.0],
            roughness: 0.0,
            gluey: true,
            motion: MotionConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForceKind {
    #[default]
    PushPull,
    Constant,
    Piecewise,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForceConfig {
    pub kind: ForceKind,
    /// `push_pull`: `-magnitude` before `switch`, `+magnitude` after.
    pub magnitude: f64,
    pub switch: f64,
    /// `constant`.
    pub value: f64,
    /// `piecewise`: `values.len() == breaks.len() + 1`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub breaks: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
}

impl Default for ForceConfig {
    fn default() -> Self {
        ForceConfig {
            kind: ForceKind::PushPull,
            magnitude: 2.0,
            switch: 2.0,
            value: 0.0,
            breaks: Vec::new(),
            values: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlaneConfig {
    pub q0: f64,
    pub u0: f64,
    pub m: f64,
    pub r: f64,
    /// Roughness sizes used by the `roughness` floor policy.
    pub roughness: f64,
    pub wall_roughness: f64,
    pub force: ForceConfig,
}

impl Default for PlaneConfig {
    fn default() -> Self {
        PlaneConfig {
            q0: 1.0,
            u0: 0.0,
            m: 1.0,
            r: 1.0,
            roughness: 0.0,
            wall_roughness: 0.0,
            force: ForceConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceConfig {
    /// Strictly decreasing step sizes.
    pub h: Vec<f64>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            h: vec![1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidateConfig {
    pub seed: u64,
    pub projection_instances: usize,
    pub nonexpansion_instances: usize,
    pub neighbor_configs: usize,
    pub neighbor_particles: usize,
    pub plane_runs: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            seed: 20_240_901,
            projection_instances: 500,
            nonexpansion_instances: 200,
            neighbor_configs: 100,
            neighbor_particles: 1000,
            plane_runs: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub name: String,
    pub time: TimeConfig,
    pub output: OutputConfig,
    pub glue: GlueConfig,
    pub solver: SolverConfig,
    pub grid: GridConfig,
    pub gravity: [f64; 3],
    /// Restrict motion to the `z = 0` plane.
    pub planar: bool,
    pub particles: ParticlesConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleConfig>,
    pub plane: PlaneConfig,
    pub convergence: ConvergenceConfig,
    pub validate: ValidateConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: ScenarioKind::Multibody,
            name: String::new(),
            time: TimeConfig::default(),
            output: OutputConfig::default(),
            glue: GlueConfig::default(),
            solver: SolverConfig::default(),
            grid: GridConfig::default(),
            gravity: [0.0, -10.0, 0.0],
            planar: false,
            particles: ParticlesConfig::default(),
            obstacles: Vec::new(),
            plane: PlaneConfig::default(),
            convergence: ConvergenceConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn finite3(a: &[f64; 3]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Parse and validate a scenario document. Unknown keys and every invariant
/// violation are reported together.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
    let mut unknown = Vec::new();
    let cfg: ScenarioConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(|e| Error::Config(vec![e.to_string()]))?;
    let mut problems: Vec<String> = unknown.into_iter().map(|k| format!("unknown key `{k}`")).collect();
    problems.extend(cfg.violations());
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(problems))
    }
}

impl ScenarioConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes to TOML")
    }

    /// Every invariant violation, one message per offending key.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let t = &self.time;
        if !(t.h > 0.0 && t.h.is_finite()) {
            v.push(format!("time.h must be > 0, got {}", t.h));
        }
        if !(t.horizon > 0.0 && t.horizon.is_finite()) {
            v.push(format!("time.horizon must be > 0, got {}", t.horizon));
        }
        if self.output.every == 0 {
            v.push("output.every must be >= 1".into());
        }
        let g = &self.glue;
        if !(g.mu > 0.0 && g.mu.is_finite()) {
            v.push(format!("glue.mu must be > 0, got {}", g.mu));
        }
        match (g.gamma_min_policy, g.gamma_min) {
            (PolicyName::Uniform, None) => v.push("glue.gamma_min is required by the uniform policy".into()),
            (PolicyName::Uniform, Some(x)) if x.is_nan() || x > 0.0 => {
                v.push(format!("glue.gamma_min must be <= 0, got {x}"))
            }
            (PolicyName::Smooth | PolicyName::Roughness, Some(_)) => {
                v.push("glue.gamma_min is only used by the uniform policy".into())
            }
            _ => {}
        }
        let s = &self.solver;
        if !(s.uzawa_omega > 0.0 && s.uzawa_omega < 2.0) {
            v.push(format!("solver.uzawa_omega must lie in (0, 2), got {}", s.uzawa_omega));
        }
        if !(s.uzawa_tol > 0.0) {
            v.push(format!("solver.uzawa_tol must be > 0, got {}", s.uzawa_tol));
        }
        if s.uzawa_max_iters == Some(0) {
            v.push("solver.uzawa_max_iters must be >= 1".into());
        }
        match self.scenario {
            ScenarioKind::Plane => self.plane_violations(&mut v),
            ScenarioKind::Multibody => self.multibody_violations(&mut v),
        }
        let hs = &self.convergence.h;
        if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0)) {
            v.push("convergence.h must be a non-empty list of positive steps".into());
        } else if hs.windows(2).any(|w| w[1] >= w[0]) {
            v.push("convergence.h must be strictly decreasing".into());
        }
        v
    }

    fn plane_violations(&self, v: &mut Vec<String>) {
        let p = &self.plane;
        if !(p.q0 >= 0.0 && p.q0.is_finite()) {
            v.push(format!("plane.q0 must be >= 0, got {}", p.q0));
        }
        if !p.u0.is_finite() {
            v.push("plane.u0 must be finite".into());
        }
        if !(p.m > 0.0) {
            v.push(format!("plane.m must be > 0, got {}", p.m));
        }
        if !(p.r > 0.0) {
            v.push(format!("plane.r must be > 0, got {}", p.r));
        }
        if self.glue.gamma_min_policy == PolicyName::Roughness && !(p.roughness + p.wall_roughness <= 1.0) {
            v.push("plane.roughness + plane.wall_roughness must be <= 1 for the roughness policy".into());
        }
        let f = &p.force;
        match f.kind {
            ForceKind::PushPull => {
                if !(f.magnitude.is_finite() && f.switch.is_finite()) {
                    v.push("plane.force.magnitude and plane.force.switch must be finite".into());
                }
            }
            ForceKind::Constant => {
                if !f.value.is_finite() {
                    v.push("plane.force.value must be finite".into());
                }
            }
            ForceKind::Piecewise => {
                if f.values.len() != f.breaks.len() + 1 {
                    v.push("plane.force.values must have one more entry than plane.force.breaks".into());
                } else if !self.force_law().is_valid() {
                    v.push("plane.force.breaks must be increasing and all values finite".into());
                }
            }
        }
    }

    fn multibody_violations(&self, v: &mut Vec<String>) {
        if !finite3(&self.gravity) {
            v.push("gravity must be finite".into());
        }
        let p = &self.particles;
        if p.list.is_empty() {
            if !(p.scale >= 0.0 && p.scale.is_finite()) {
                v.push(format!("particles.scale must be >= 0, got {}", p.scale));
            }
            if !(p.radius_min > 0.0 && p.radius_max >= p.radius_min) {
                v.push(format!(
                    "particles.radius_min/radius_max must satisfy 0 < min <= max, got {} and {}",
                    p.radius_min, p.radius_max
                ));
            }
            if !(p.mass > 0.0) {
                v.push(format!("particles.mass must be > 0, got {}", p.mass));
            }
            if !(p.roughness >= 0.0) {
                v.push("particles.roughness must be >= 0".into());
            }
            let spans = (0..2).all(|c| p.region_hi[c] > p.region_lo[c]) && p.region_hi[2] >= p.region_lo[2];
            if !spans || !finite3(&p.region_lo) || !finite3(&p.region_hi) {
                v.push("particles.region_hi must exceed particles.region_lo in x and y (and not trail it in z)".into());
            }
        } else {
            for (k, e) in p.list.iter().enumerate() {
                if !(e.radius > 0.0) || !(e.mass > 0.0) || !(e.roughness >= 0.0) {
                    v.push(format!("particles.list[{k}] needs radius > 0, mass > 0, roughness >= 0"));
                }
                if !finite3(&e.position) || !finite3(&e.velocity) {
                    v.push(format!("particles.list[{k}] has a non-finite vector"));
                }
            }
        }
        for (k, o) in self.obstacles.iter().enumerate() {
            let pre = format!("obstacles[{k}]");
            match o.kind {
                ObstacleKind::HalfSpace => {
                    if !(v3(o.normal).norm() > 0.0) {
                        v.push(format!("{pre}.normal must be nonzero"));
                    }
                }
                ObstacleKind::Sphere => {
                    if !(o.radius > 0.0) {
                        v.push(format!("{pre}.radius must be > 0"));
                    }
                }
                ObstacleKind::Chain => {
                    if !(o.radius > 0.0) || o.count == 0 {
                        v.push(format!("{pre} chain needs radius > 0 and count >= 1"));
                    }
                }
                ObstacleKind::Ring => {
                    if !(o.radius > 0.0 && o.ring_radius > 0.0) || o.count == 0 {
                        v.push(format!("{pre} ring needs radius > 0, ring_radius > 0 and count >= 1"));
                    }
                    if !(v3(o.axis).norm() > 0.0) {
                        v.push(format!("{pre}.axis must be nonzero"));
                    }
                }
            }
            if !(o.roughness >= 0.0) {
                v.push(format!("{pre}.roughness must be >= 0"));
            }
            if o.motion.kind == MotionKind::Rotation && !(v3(o.motion.axis).norm() > 0.0) {
                v.push(format!("{pre}.motion.axis must be nonzero"));
            }
        }
        let g = &self.grid;
        let d = g.d_neigh.unwrap_or_else(|| self.default_d_neigh());
        let nu = g.cell_size.unwrap_or(d + 2.0 * self.max_radius());
        if !(d > 0.0) {
            v.push(format!("grid.d_neigh must be > 0, got {d}"));
        }
        if !(nu > d) {
            v.push(format!("grid.cell_size ({nu}) must exceed grid.d_neigh ({d})"));
        }
        if self.glue.gamma_min_policy == PolicyName::Roughness {
            if let Ok(mb) = self.multibody_unchecked() {
                if let Err(e) = mb.settings.law.check_roughness(mb.roughness_sums().1) {
                    v.push(format!("glue.gamma_min_policy: {e}"));
                }
            }
        }
    }

    pub fn max_radius(&self) -> f64 {
        let p = &self.particles;
        if p.list.is_empty() {
            p.radius_max
        } else {
            p.list.iter().map(|e| e.radius).fold(0.0, f64::max)
        }
    }

    fn max_roughness(&self) -> f64 {
        let p = &self.particles;
        let part = if p.list.is_empty() {
            p.roughness
        } else {
            p.list.iter().map(|e| e.roughness).fold(0.0, f64::max)
        };
        self.obstacles.iter().map(|o| o.roughness).fold(part, f64::max)
    }

    /// Twice the largest admissible displacement per step (two radii) plus
    /// the largest roughness size.
    pub fn default_d_neigh(&self) -> f64 {
        4.0 * self.max_radius() + self.max_roughness()
    }

    pub fn grid_params(&self) -> GridParams {
        let d = self.grid.d_neigh.unwrap_or_else(|| self.default_d_neigh());
        GridParams {
            d_neigh: d,
            cell_size: self.grid.cell_size.unwrap_or(d + 2.0 * self.max_radius()),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            omega: self.solver.uzawa_omega,
            tol: self.solver.uzawa_tol,
            max_iters: self.solver.uzawa_max_iters,
            sweep_mode: match self.solver.sweep_mode {
                SweepName::Jacobi => SweepMode::Jacobi,
                SweepName::GaussSeidel => SweepMode::GaussSeidel,
            },
            disable_dual_projection: false,
        }
    }

    pub fn glue_law(&self) -> GlueLaw {
        GlueLaw {
            mu: self.glue.mu,
            use_radius_scaling: self.glue.radius_scaling,
            gamma_min: match self.glue.gamma_min_policy {
                PolicyName::Smooth => GammaMinPolicy::Smooth,
                PolicyName::Uniform => GammaMinPolicy::Uniform(self.glue.gamma_min.unwrap_or(0.0)),
                PolicyName::Roughness => GammaMinPolicy::Roughness,
            },
        }
    }

    pub fn force_law(&self) -> ForceLaw {
        let f = &self.plane.force;
        match f.kind {
            ForceKind::PushPull => ForceLaw::push_pull(f.magnitude, f.switch),
            ForceKind::Constant => ForceLaw::constant(f.value),
            ForceKind::Piecewise => ForceLaw::Piecewise {
                breaks: f.breaks.clone(),
                values: f.values.clone(),
            },
        }
    }

    /// Particle count after applying `particles.scale`.
    pub fn scaled_count(&self) -> usize {
        (self.particles.count as f64 * self.particles.scale).round() as usize
    }

    pub fn plane_scenario(&self) -> Result<PlaneScenario> {
        self.require(ScenarioKind::Plane)?;
        let p = &self.plane;
        let law = self.glue_law();
        let rough = RoughParams {
            gamma_min: law.floor(p.roughness, p.wall_roughness),
            use_radius_scaling: self.glue.radius_scaling,
        };
        Ok(PlaneScenario {
            q0: p.q0,
            u0: p.u0,
            m: p.m,
            r: p.r,
            force: self.force_law(),
            horizon: self.time.horizon,
            h: self.time.h,
            rough,
        })
    }

    fn require(&self, kind: ScenarioKind) -> Result<()> {
        let problems = self.violations();
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        if self.scenario != kind {
            return Err(Error::Config(vec![format!(
                "scenario is {:?}, expected {:?}",
                self.scenario, kind
            )]));
        }
        Ok(())
    }

    pub fn multibody(&self) -> Result<MultibodyConfig> {
        self.require(ScenarioKind::Multibody)?;
        self.multibody_unchecked()
    }

    fn multibody_unchecked(&self) -> Result<MultibodyConfig> {
        let p = &self.particles;
        let particles = if p.list.is_empty() {
            ParticleSpec::Sampled(SampledRegion {
                lo: v3(p.region_lo),
                hi: v3(p.region_hi),
                radius_min: p.radius_min,
                radius_max: p.radius_max,
                mass: p.mass,
                roughness: p.roughness,
                count: self.scaled_count(),
            })
        } else {
            ParticleSpec::Explicit(
                p.list
                    .iter()
                    .map(|e| ParticleInit {
                        position: v3(e.position),
                        velocity: v3(e.velocity),
                        radius: e.radius,
                        mass: e.mass,
                        roughness: e.roughness,
                    })
                    .collect(),
            )
        };
        Ok(MultibodyConfig {
            horizon: self.time.horizon,
            gravity: v3(self.gravity),
            particles,
            obstacles: self.obstacles.iter().map(build_obstacle).collect(),
            settings: StepSettings {
                h: self.time.h,
                law: self.glue_law(),
                grid: self.grid_params(),
                solver: self.solver_options(),
                takeoff_correction: self.glue.takeoff_correction,
            },
            output_every: self.output.every,
            planar: self.planar,
            warm_start: self.solver.warm_start,
            seed: p.seed,
        })
    }
}

fn build_obstacle(o: &ObstacleConfig) -> Obstacle {
    let shape = match o.kind {
        ObstacleKind::HalfSpace => Shape::HalfSpace {
            point: v3(o.point),
            normal: v3(o.normal).normalize(),
        },
        ObstacleKind::Sphere => Shape::Sphere {
            center: v3(o.center),
            radius: o.radius,
        },
        ObstacleKind::Chain => {
            let (a, b) = (v3(o.from), v3(o.to));
            let spheres = (0..o.count)
                .map(|k| {
                    let s = if o.count == 1 {
                        0.5
                    } else {
                        k as f64 / (o.count - 1) as f64
                    };
                    (a + s * (b - a), o.radius)
                })
                .collect();
            Shape::Assembly { spheres }
        }
        ObstacleKind::Ring => {
            let axis = v3(o.axis).normalize();
            // any unit vector orthogonal to the axis
            let seed = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            let e1 = (seed - axis * axis.dot(&seed)).normalize();
            let e2 = axis.cross(&e1);
            let c = v3(o.center);
            let spheres = (0..o.count)
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / o.count as f64;
                    (c + o.ring_radius * (th.cos() * e1 + th.sin() * e2), o.radius)
                })
                .collect();
            Shape::Assembly { spheres }
        }
    };
    let m = &o.motion;
    let motion = match m.kind {
        MotionKind::Fixed => Motion::Fixed,
        MotionKind::Rotation => Motion::Rotation {
            center: v3(m.center),
            axis: v3(m.axis),
            omega: m.omega,
        },
        MotionKind::Translation => Motion::Translation {
            velocity: v3(m.velocity),
        },
    };
    Obstacle {
        shape,
        motion,
        roughness: o.roughness,
        gluey: o.gluey,
    }
}
