//! Time stepping for many gluey spheres among prescribed obstacles.
//!
//! A step builds the neighbor set at `x^n`, carries the adhesion potentials
//! over, assembles one row per contact (an equality when the contact is glued),
//! projects the a priori velocity, integrates `gamma` with the multipliers and
//! advances positions with the projected velocity.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{distance_gradient, signed_distance, ParticleState, Vec3};
use crate::neighbors::{carry_gammas, find_neighbors, GridParams, NeighborSet};
use crate::obstacles::{evaluate_obstacle_constraint, Obstacle};
use crate::projection::{project_velocities_warm, ConstraintRow, ContactKey, KktReport, RowKind, SolverOptions};

/// Attempts per particle when sampling a random initial configuration.
pub const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaMinPolicy {
    Smooth,
    Uniform(f64),
    /// `6 pi mu ln(r_s,i + r_s,j)` from the roughness sizes of the two bodies.
    Roughness,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlueLaw {
    pub mu: f64,
    pub use_radius_scaling: bool,
    pub gamma_min: GammaMinPolicy,
}

impl GlueLaw {
    pub fn smooth() -> Self {
        GlueLaw {
            mu: 1.0,
            use_radius_scaling: false,
            gamma_min: GammaMinPolicy::Smooth,
        }
    }

    pub fn uniform(gamma_min: f64) -> Self {
        GlueLaw {
            gamma_min: GammaMinPolicy::Uniform(gamma_min),
            ..Self::smooth()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidInput(format!("mu must be > 0, got {}", self.mu)));
        }
        if let GammaMinPolicy::Uniform(g) = self.gamma_min {
            if g.is_nan() || g > 0.0 {
                return Err(Error::InvalidInput(format!("gamma_min must be <= 0, got {g}")));
            }
        }
        Ok(())
    }

    /// Floor for a contact between bodies of roughness `si` and `sj`.
    pub fn floor(&self, si: f64, sj: f64) -> f64 {
        match self.gamma_min {
            GammaMinPolicy::Smooth => f64::NEG_INFINITY,
            GammaMinPolicy::Uniform(g) => g,
            GammaMinPolicy::Roughness => 6.0 * std::f64::consts::PI * self.mu * (si + sj).ln(),
        }
    }

    /// Rejects roughness sizes whose derived floor would be positive.
    pub fn check_roughness(&self, largest_sum: f64) -> Result<()> {
        if self.gamma_min == GammaMinPolicy::Roughness && !(largest_sum <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "roughness sizes summing to {largest_sum} give a positive gamma floor"
            )));
        }
        Ok(())
    }
}

/// Diagonal adhesion scaling `(ri + rj)^2 / (ri^2 rj^2)`; `rj = inf` for a plane.
pub fn r_coefficient(ri: f64, rj: f64) -> f64 {
    if rj.is_infinite() {
        1.0 / (ri * ri)
    } else {
        (ri + rj) * (ri + rj) / (ri * ri * rj * rj)
    }
}

/// Velocity each particle would have without contacts.
pub trait AprioriVelocityProvider {
    fn apriori(&self, state: &ParticleState, t: f64, h: f64) -> Vec<Vec3>;
}

/// Uniform acceleration field: `V + h g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gravity(pub Vec3);

impl AprioriVelocityProvider for Gravity {
    fn apriori(&self, state: &ParticleState, _t: f64, h: f64) -> Vec<Vec3> {
        state.velocities.iter().map(|v| v + h * self.0).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSettings {
    pub h: f64,
    pub law: GlueLaw,
    pub grid: GridParams,
    pub solver: SolverOptions,
    /// Turn the excess of a released contact into a separating impulse.
    pub takeoff_correction: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    pub equality_rows: usize,
    pub inequality_rows: usize,
    pub iterations: usize,
    pub kkt: KktReport,
    /// `|sum m (V' - V*) - obstacle impulses|_inf`.
    pub momentum_residual: f64,
    /// Smallest signed distance over the contacts after the step.
    pub min_distance: f64,
    pub min_gamma: f64,
    pub max_gamma: f64,
    pub takeoffs: usize,
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: ParticleState,
    pub contacts: NeighborSet,
    pub multipliers: BTreeMap<ContactKey, f64>,
    /// Signed distance of each contact after the step.
    pub distances: BTreeMap<ContactKey, f64>,
    pub diagnostics: StepDiagnostics,
}

fn contact_radius(state: &ParticleState, obstacles: &[Obstacle], key: &ContactKey) -> (f64, f64, f64, f64) {
    match *key {
        ContactKey::Pair(i, j) => (state.radii[i], state.radii[j], state.roughness[i], state.roughness[j]),
        ContactKey::Obstacle {
            particle,
            obstacle,
            member,
        } => {
            let ob = &obstacles[obstacle];
            (
                state.radii[particle],
                ob.member_radius(member),
                state.roughness[particle],
                ob.roughness,
            )
        }
    }
}

/// Particle pairs and particle/obstacle contacts within `d_neigh`, obstacles
/// placed at `t_pose`.
pub fn detect_contacts(
    state: &ParticleState,
    obstacles: &[Obstacle],
    grid: &GridParams,
    t_pose: f64,
    step: usize,
) -> Result<NeighborSet> {
    let mut set = find_neighbors(state, grid)?;
    set.built_at_step = step;
    for (k, ob) in obstacles.iter().enumerate() {
        let pose = ob.motion.pose(t_pose);
        let bound = ob.bounding_sphere().map(|(c, e)| (pose.point(&c), e));
        for p in 0..state.len() {
            let (x, r) = (&state.positions[p], state.radii[p]);
            if let Some((c, e)) = bound {
                if (x - c).norm() - e - r > grid.d_neigh {
                    continue;
                }
            }
            for member in 0..ob.member_count() {
                set.distance_evaluations += 1;
                let (d, _) = ob.distance(member, x, r, &pose)?;
                if d <= grid.d_neigh {
                    set.gammas.insert(
                        ContactKey::Obstacle {
                            particle: p,
                            obstacle: k,
                            member,
                        },
                        0.0,
                    );
                }
            }
        }
    }
    Ok(set)
}

/// One row per contact, an equality when the contact is glued. Particle
/// pairs use positions at `x^n`; obstacle rows use poses at `t_next`.
pub fn assemble_constraints(
    state: &ParticleState,
    contacts: &NeighborSet,
    obstacles: &[Obstacle],
    t_next: f64,
) -> Result<Vec<ConstraintRow>> {
    contacts
        .gammas
        .iter()
        .map(|(key, &gamma)| {
            let kind = if gamma < 0.0 {
                RowKind::Equality
            } else {
                RowKind::Inequality
            };
            let mut row = match *key {
                ContactKey::Pair(i, j) => ConstraintRow {
                    row: distance_gradient(state, i, j)?,
                    kind,
                    key: *key,
                },
                ContactKey::Obstacle {
                    particle,
                    obstacle,
                    member,
                } => evaluate_obstacle_constraint(
                    particle,
                    &state.positions[particle],
                    state.radii[particle],
                    obstacle,
                    &obstacles[obstacle],
                    member,
                    t_next,
                )?,
            };
            row.kind = kind;
            Ok(row)
        })
        .collect()
}

fn distance_of(state: &ParticleState, obstacles: &[Obstacle], key: &ContactKey, t: f64) -> Result<f64> {
    match *key {
        ContactKey::Pair(i, j) => signed_distance(
            &state.positions[i],
            state.radii[i],
            &state.positions[j],
            state.radii[j],
        ),
        ContactKey::Obstacle {
            particle,
            obstacle,
            member,
        } => {
            let ob = &obstacles[obstacle];
            let pose = ob.motion.pose(t);
            Ok(ob
                .distance(member, &state.positions[particle], state.radii[particle], &pose)?
                .0)
        }
    }
}

/// Advance one step from time `t`.
///
/// `previous` holds the contacts and potentials of the last step (empty at
/// the start); `warm` optionally seeds the solver with earlier multipliers.
pub fn step_multibody(
    state: &ParticleState,
    previous: &NeighborSet,
    obstacles: &[Obstacle],
    settings: &StepSettings,
    provider: &dyn AprioriVelocityProvider,
    t: f64,
    step: usize,
    warm: Option<&BTreeMap<ContactKey, f64>>,
) -> Result<StepOutcome> {
    let h = settings.h;
    if !(h > 0.0) {
        return Err(Error::NonPositiveStep(h));
    }
    let t_next = t + h;

    let mut v_star = provider.apriori(state, t, h);
    if v_star.len() != state.len() {
        return Err(Error::InvalidInput("a priori velocity has the wrong length".into()));
    }
    if state.planar {
        for v in &mut v_star {
            v.z = 0.0;
        }
    }
    let stacked_star: Vec<f64> = v_star.iter().flat_map(|v| v.iter().copied()).collect();

    let fresh = detect_contacts(state, obstacles, &settings.grid, t_next, step)?;
    let contacts = carry_gammas(previous, &fresh)?;
    let rows = assemble_constraints(state, &contacts, obstacles, t_next)?;
    let initial: Option<Vec<f64>> =
        warm.map(|w| rows.iter().map(|r| w.get(&r.key).copied().unwrap_or(0.0)).collect());
    let proj = project_velocities_warm(
        &stacked_star,
        &state.masses,
        &rows,
        h,
        &settings.solver,
        initial.as_deref(),
    )?;

    let mut velocities: Vec<Vec3> = proj
        .velocities
        .chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect();

    // Adhesion update with floor and release.
    let mut gammas = BTreeMap::new();
    let mut multipliers = BTreeMap::new();
    let mut obstacle_impulse = Vec3::zeros();
    let mut diag = StepDiagnostics {
        equality_rows: rows.iter().filter(|r| r.kind == RowKind::Equality).count(),
        iterations: proj.iterations,
        kkt: proj.residuals,
        min_distance: f64::INFINITY,
        min_gamma: 0.0,
        max_gamma: f64::NEG_INFINITY,
        ..Default::default()
    };
    diag.inequality_rows = rows.len() - diag.equality_rows;
    let mut takeoff_impulse = Vec3::zeros();
    for (row, &lambda) in rows.iter().zip(&proj.multipliers) {
        let key = row.key;
        let (ri, rj, si, sj) = contact_radius(state, obstacles, &key);
        let scale = if settings.law.use_radius_scaling {
            r_coefficient(ri, rj)
        } else {
            1.0
        };
        let mut gamma = contacts.gamma(&key) - h * scale * lambda;
        if gamma > 0.0 {
            diag.takeoffs += 1;
            if settings.takeoff_correction {
                let impulse = gamma / scale;
                for (p, n) in &row.row.entries {
                    velocities[*p] += impulse / state.masses[*p] * n;
                }
                if let ContactKey::Obstacle { .. } = key {
                    takeoff_impulse += impulse * row.row.entries[0].1;
                }
            }
            gamma = 0.0;
        }
        gamma = gamma.max(settings.law.floor(si, sj));
        if let ContactKey::Obstacle { obstacle, .. } = key {
            if !obstacles[obstacle].gluey {
                gamma = 0.0;
            }
        }
        if let ContactKey::Obstacle { .. } = key {
            obstacle_impulse += h * lambda * row.row.entries[0].1;
        }
        diag.min_gamma = diag.min_gamma.min(gamma);
        diag.max_gamma = diag.max_gamma.max(gamma);
        gammas.insert(key, gamma);
        multipliers.insert(key, lambda);
    }
    if rows.is_empty() {
        diag.max_gamma = 0.0;
    }

    let mut momentum = -(obstacle_impulse + takeoff_impulse);
    for p in 0..state.len() {
        momentum += state.masses[p] * (velocities[p] - v_star[p]);
    }
    diag.momentum_residual = momentum.amax();

    let mut next = state.clone();
    next.velocities = velocities;
    for p in 0..next.len() {
        next.positions[p] += h * next.velocities[p];
    }
    if next.planar {
        next.enforce_planar();
    }

    let mut distances = BTreeMap::new();
    for key in gammas.keys() {
        let d = distance_of(&next, obstacles, key, t_next)?;
        diag.min_distance = diag.min_distance.min(d);
        distances.insert(*key, d);
    }

    Ok(StepOutcome {
        state: next,
        contacts: NeighborSet {
            gammas,
            built_at_step: step,
            distance_evaluations: contacts.distance_evaluations,
        },
        multipliers,
        distances,
        diagnostics: diag,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleInit {
    pub position: Vec3,
    pub velocity: Vec3,
    pub radius: f64,
    pub mass: f64,
    pub roughness: f64,
}

/// Uniform random placement in an axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledRegion {
    pub lo: Vec3,
    pub hi: Vec3,
    pub radius_min: f64,
    pub radius_max: f64,
    pub mass: f64,
    pub roughness: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParticleSpec {
    Explicit(Vec<ParticleInit>),
    Sampled(SampledRegion),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultibodyConfig {
    pub horizon: f64,
    pub gravity: Vec3,
    pub particles: ParticleSpec,
    pub obstacles: Vec<Obstacle>,
    pub settings: StepSettings,
    /// Emit a frame every `output_every` steps (and at step 0).
    pub output_every: usize,
    pub planar: bool,
    pub warm_start: bool,
    pub seed: u64,
}

impl MultibodyConfig {
    fn particles_roughness(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match &self.particles {
            ParticleSpec::Explicit(list) => Box::new(list.iter().map(|p| p.roughness)),
            ParticleSpec::Sampled(s) => Box::new(std::iter::once(s.roughness)),
        }
    }

    /// Smallest and largest roughness sum over every possible contact.
    pub fn roughness_sums(&self) -> (f64, f64) {
        let (mut lo_p, mut hi_p) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in self.particles_roughness() {
            lo_p = lo_p.min(s);
            hi_p = hi_p.max(s);
        }
        if !lo_p.is_finite() {
            return (0.0, 0.0);
        }
        let (mut lo, mut hi) = (2.0 * lo_p, 2.0 * hi_p);
        for o in &self.obstacles {
            lo = lo.min(lo_p + o.roughness);
            hi = hi.max(hi_p + o.roughness);
        }
        (lo, hi)
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.settings.h).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.settings.h;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::NonPositiveStep(h));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidInput("horizon must be > 0".into()));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidInput("output cadence must be >= 1".into()));
        }
        self.settings.grid.validate()?;
        self.settings.law.validate()?;
        for ob in &self.obstacles {
            ob.validate()?;
        }
        if self.particles_roughness().any(|s| !(s >= 0.0)) {
            return Err(Error::InvalidInput("particle roughness must be >= 0".into()));
        }
        self.settings.law.check_roughness(self.roughness_sums().1)?;
        if let ParticleSpec::Sampled(s) = &self.particles {
            if !(s.radius_min > 0.0 && s.radius_max >= s.radius_min) {
                return Err(Error::InvalidInput("radius range must satisfy 0 < min <= max".into()));
            }
            if !(s.mass > 0.0) {
                return Err(Error::InvalidInput("mass must be > 0".into()));
            }
            let extent = s.hi - s.lo;
            if !(extent.x > 0.0 && extent.y > 0.0 && extent.z >= 0.0) {
                return Err(Error::InvalidInput("sampling region is empty".into()));
            }
        }
        Ok(())
    }
}

fn clear_of_obstacles(x: &Vec3, r: f64, obstacles: &[Obstacle]) -> Result<bool> {
    for ob in obstacles {
        let pose = ob.motion.pose(0.0);
        if let Some((c, e)) = ob.bounding_sphere() {
            if (x - pose.point(&c)).norm() - e - r > 0.0 {
                continue;
            }
        }
        for m in 0..ob.member_count() {
            if ob.distance(m, x, r, &pose)?.0 <= 0.0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Build the initial state, sampling positions with rejection when requested.
pub fn initial_state(cfg: &MultibodyConfig) -> Result<ParticleState> {
    let mut state = ParticleState::empty(cfg.planar);
    match &cfg.particles {
        ParticleSpec::Explicit(list) => {
            for p in list {
                state.push(p.position, p.velocity, p.radius, p.mass, p.roughness);
            }
        }
        ParticleSpec::Sampled(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for index in 0..s.count {
                let mut placed = false;
                for _ in 0..PLACEMENT_ATTEMPTS {
                    let r = if s.radius_max > s.radius_min {
                        rng.gen_range(s.radius_min..s.radius_max)
                    } else {
                        s.radius_min
                    };
                    let mut x = Vec3::zeros();
                    for c in 0..3 {
                        x[c] = if s.hi[c] > s.lo[c] {
                            rng.gen_range(s.lo[c]..s.hi[c])
                        } else {
                            s.lo[c]
                        };
                    }
                    if cfg.planar {
                        x.z = 0.0;
                    }
                    let overlaps = (0..state.len()).any(|j| {
                        (state.positions[j] - x).norm() <= state.radii[j] + r
                    });
                    if overlaps || !clear_of_obstacles(&x, r, &cfg.obstacles)? {
                        continue;
                    }
                    state.push(x, Vec3::zeros(), r, s.mass, s.roughness);
                    placed = true;
                    break;
                }
                if !placed {
                    return Err(Error::Placement {
                        index,
                        attempts: PLACEMENT_ATTEMPTS,
                    });
                }
            }
        }
    }
    if cfg.planar {
        state.enforce_planar();
    }
    state.validate()?;
    Ok(state)
}

/// One contact of an output frame. Obstacle contacts report `j = N + obstacle`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactRecord {
    pub key: ContactKey,
    pub i: usize,
    pub j: usize,
    pub gamma: f64,
    pub distance: f64,
}

/// Data handed to the frame observer.
pub struct Frame<'a> {
    pub step: usize,
    pub t: f64,
    pub state: &'a ParticleState,
    /// Glued or loaded contacts (`gamma < 0` or nonzero multiplier).
    pub network: &'a [ContactRecord],
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub particles: usize,
    pub steps: usize,
    pub min_distance: f64,
    pub min_gamma: f64,
    pub max_gamma: f64,
    pub max_momentum_residual: f64,
    pub max_kkt: f64,
    pub max_iterations: usize,
    pub equality_rows_total: usize,
    pub takeoffs_total: usize,
    /// Lowest floor any contact may reach under the glue law.
    pub gamma_floor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl RunSummary {
    /// Feasibility, sign and momentum checks recorded in run manifests.
    pub fn checks(&self, max_radius: f64) -> Vec<InvariantCheck> {
        let tol_lin = 1e-8 * (1.0 + max_radius);
        let min_d = if self.min_distance.is_finite() {
            self.min_distance
        } else {
            0.0
        };
        vec![
            InvariantCheck {
                name: "min_distance",
                value: min_d,
                bound: -tol_lin,
                pass: min_d >= -tol_lin,
            },
            InvariantCheck {
                name: "max_gamma",
                value: self.max_gamma,
                bound: 0.0,
                pass: self.max_gamma <= 0.0,
            },
            InvariantCheck {
                name: "min_gamma",
                value: self.min_gamma,
                bound: self.gamma_floor,
                pass: self.min_gamma >= self.gamma_floor,
            },
            InvariantCheck {
                name: "momentum_residual",
                value: self.max_momentum_residual,
                bound: 1e-8,
                pass: self.max_momentum_residual <= 1e-8,
            },
        ]
    }
}

/// Stepping loop with warm starts, shared by batch runs and interactive use.
pub struct Simulation {
    pub obstacles: Vec<Obstacle>,
    pub settings: StepSettings,
    pub provider: Gravity,
    pub state: ParticleState,
    pub contacts: NeighborSet,
    pub multipliers: BTreeMap<ContactKey, f64>,
    pub distances: BTreeMap<ContactKey, f64>,
    pub step: usize,
    pub t: f64,
    pub warm_start: bool,
    pub last: StepDiagnostics,
}

impl Simulation {
    pub fn new(cfg: &MultibodyConfig) -> Result<Self> {
        cfg.validate()?;
        let state = initial_state(cfg)?;
        Ok(Simulation {
            obstacles: cfg.obstacles.clone(),
            settings: cfg.settings,
            provider: Gravity(cfg.gravity),
            state,
            contacts: NeighborSet::default(),
            multipliers: BTreeMap::new(),
            distances: BTreeMap::new(),
            step: 0,
            t: 0.0,
            warm_start: cfg.warm_start,
            last: StepDiagnostics::default(),
        })
    }

    pub fn advance(&mut self) -> Result<&StepDiagnostics> {
        let warm = self.warm_start.then_some(&self.multipliers);
        let out = step_multibody(
            &self.state,
            &self.contacts,
            &self.obstacles,
            &self.settings,
            &self.provider,
            self.t,
            self.step,
            warm,
        )
        .map_err(|e| e.at_step(self.step))?;
        self.state = out.state;
        self.contacts = out.contacts;
        self.multipliers = out.multipliers;
        self.distances = out.distances;
        self.step += 1;
        self.t = self.step as f64 * self.settings.h;
        self.last = out.diagnostics;
        Ok(&self.last)
    }

    /// Glued or loaded contacts of the current state.
    pub fn network(&self) -> Vec<ContactRecord> {
        let n = self.state.len();
        self.contacts
            .gammas
            .iter()
            .filter(|(k, g)| **g < 0.0 || self.multipliers.get(k).is_some_and(|l| *l != 0.0))
            .map(|(key, &gamma)| {
                let (i, j) = match *key {
                    ContactKey::Pair(i, j) => (i, j),
                    ContactKey::Obstacle {
                        particle, obstacle, ..
                    } => (particle, n + obstacle),
                };
                ContactRecord {
                    key: *key,
                    i,
                    j,
                    gamma,
                    distance: self.distances.get(key).copied().unwrap_or(f64::NAN),
                }
            })
            .collect()
    }
}

/// Run a full scenario, calling `observer` on every output frame.
pub fn run_simulation(
    cfg: &MultibodyConfig,
    mut observer: impl FnMut(&Frame<'_>) -> Result<()>,
) -> Result<RunSummary> {
    let mut sim = Simulation::new(cfg)?;
    let steps = cfg.steps();
    let (lo, _) = cfg.roughness_sums();
    let floor = cfg.settings.law.floor(lo, 0.0);
    let mut summary = RunSummary {
        particles: sim.state.len(),
        steps,
        min_distance: f64::INFINITY,
        min_gamma: 0.0,
        max_gamma: 0.0,
        max_momentum_residual: 0.0,
        max_kkt: 0.0,
        max_iterations: 0,
        equality_rows_total: 0,
        takeoffs_total: 0,
        gamma_floor: floor,
    };
    observer(&Frame {
        step: 0,
        t: 0.0,
        state: &sim.state,
        network: &sim.network(),
    })?;
    if sim.state.is_empty() {
        return Ok(summary);
    }
    for _ in 0..steps {
        let d = *sim.advance()?;
        summary.min_distance = summary.min_distance.min(d.min_distance);
        summary.min_gamma = summary.min_gamma.min(d.min_gamma);
        summary.max_gamma = summary.max_gamma.max(d.max_gamma);
        summary.max_momentum_residual = summary.max_momentum_residual.max(d.momentum_residual);
        summary.max_kkt = summary.max_kkt.max(d.kkt.max());
        summary.max_iterations = summary.max_iterations.max(d.iterations);
        summary.equality_rows_total += d.equality_rows;
        summary.takeoffs_total += d.takeoffs;
        if sim.step % cfg.output_every == 0 {
            observer(&Frame {
                step: sim.step,
                t: sim.t,
                state: &sim.state,
                network: &sim.network(),
            })?;
        }
    }
    Ok(summary)
}
