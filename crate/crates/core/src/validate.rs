//! Randomized oracle suites: the Uzawa projection against exact enumeration,
//! KKT residuals, M-norm non-expansion, the cell grid against an all-pairs
//! scan, and the a priori bounds of the plane scheme.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::force::ForceLaw;
use crate::geometry::{distance_gradient, ParticleState, SparseGradientRow, Vec3};
use crate::neighbors::{brute_force_neighbors, find_neighbors, GridParams};
use crate::plane::{run_plane_scenario, PlaneScenario, RoughParams};
use crate::projection::{
    brute_force_project, m_norm, m_norm_distance, project_velocities, ConstraintRow, ContactKey, RowKind,
    SolverOptions, SweepMode,
};
use crate::scenario::ValidateConfig;

pub const SUITES: [&str; 5] = ["projection", "kkt", "nonexpansion", "neighbors", "lemmas"];

/// Agreement required between Uzawa and enumeration, in the M-norm.
pub const PROJECTION_TOL: f64 = 1e-8;
pub const KKT_TOL: f64 = 1e-8;
pub const NONEXPANSION_SLACK: f64 = 1e-12;
pub const ROUNDING_SLACK: f64 = 1e-12;

/// One projection problem `min |V - V*|_M` over the rows.
#[derive(Clone, Debug)]
pub struct ProjectionInstance {
    pub v_star: Vec<f64>,
    pub masses: Vec<f64>,
    pub rows: Vec<ConstraintRow>,
    pub h: f64,
}

/// Solver settings tight enough for the oracle tolerances.
pub fn oracle_solver(sweep_mode: SweepMode) -> SolverOptions {
    SolverOptions {
        omega: 1.0,
        tol: 1e-14,
        max_iters: Some(1_000_000),
        sweep_mode,
        disable_dual_projection: false,
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

/// Random feasible instance with up to 5 particles and 6 rows.
///
/// Rows are pair gradients of a random configuration plus wall-like single
/// particle rows. Offsets are chosen so that a hidden velocity satisfies every
/// row, with about a third of the inequalities active there. With `mixed`,
/// each row is an equality with probability 1/3; otherwise all rows are
/// inequalities with non-negative offsets.
///
/// Draws whose rows are nearly, but not exactly, dependent are discarded:
/// dual ascent needs a number of sweeps proportional to the condition
/// number, so such instances cannot reach the oracle tolerance.
pub fn random_projection_instance(rng: &mut ChaCha8Rng, mixed: bool) -> ProjectionInstance {
    loop {
        let inst = draw_instance(rng, mixed);
        if well_conditioned(&inst) {
            return inst;
        }
    }
}

/// Every principal submatrix of the row Gram matrix has its eigenvalues
/// either at rounding level (exact redundancy) or above `CONDITION_FLOOR`
/// relative to the largest one.
fn well_conditioned(inst: &ProjectionInstance) -> bool {
    let k = inst.rows.len();
    let gram = DMatrix::from_fn(k, k, |a, b| {
        let mut sum = 0.0;
        for (p, ga) in &inst.rows[a].row.entries {
            for (q, gb) in &inst.rows[b].row.entries {
                if p == q {
                    sum += ga.dot(gb) / inst.masses[*p];
                }
            }
        }
        sum
    });
    let scale = gram.symmetric_eigenvalues().amax();
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).collect();
        let sub = gram.select_rows(&idx).select_columns(&idx);
        for ev in sub.symmetric_eigenvalues().iter() {
            let rel = ev.abs() / scale;
            if rel > 1e-12 && rel < CONDITION_FLOOR {
                return false;
            }
        }
    }
    true
}

const CONDITION_FLOOR: f64 = 1e-4;

fn draw_instance(rng: &mut ChaCha8Rng, mixed: bool) -> ProjectionInstance {
    let n = rng.gen_range(1..=5usize);
    let h = [1e-3, 1e-2, 0.1][rng.gen_range(0..3)];
    let mut state = ParticleState::empty(false);
    while state.len() < n {
        let x = random_vec(rng, 1.0);
        let r = rng.gen_range(0.05..0.2);
        if state.positions.iter().all(|p| (p - x).norm() > 0.05) {
            state.push(x, Vec3::zeros(), r, rng.gen_range(0.5..4.0), 0.0);
        }
    }
    let v_hidden: Vec<f64> = (0..3 * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let row_count = rng.gen_range(1..=6usize);
    let mut rows = Vec::with_capacity(row_count);
    for k in 0..row_count {
        let (mut row, key) = if n >= 2 && rng.gen_bool(0.6) {
            let i = rng.gen_range(0..n - 1);
            let j = rng.gen_range(i + 1..n);
            (
                distance_gradient(&state, i, j).expect("distinct centers"),
                ContactKey::Pair(i, j),
            )
        } else {
            let p = rng.gen_range(0..n);
            (
                SparseGradientRow {
                    entries: vec![(p, random_unit(rng))],
                    offset: 0.0,
                },
                ContactKey::Obstacle {
                    particle: p,
                    obstacle: k,
                    member: 0,
                },
            )
        };
        let kind = if mixed && rng.gen_bool(1.0 / 3.0) {
            RowKind::Equality
        } else {
            RowKind::Inequality
        };
        let drive = h * row.dot(&v_hidden);
        let surplus = match kind {
            RowKind::Equality => 0.0,
            RowKind::Inequality if rng.gen_bool(1.0 / 3.0) => 0.0,
            RowKind::Inequality => rng.gen_range(0.0..0.2),
        };
        row.offset = surplus - drive;
        if !mixed {
            // non-expansion needs d >= 0; the hidden point stays feasible
            row.offset = row.offset.max(0.0);
        }
        rows.push(ConstraintRow { row, kind, key });
    }
    let v_star: Vec<f64> = v_hidden
        .iter()
        .map(|v| v + rng.gen_range(-3.0..3.0))
        .collect();
    ProjectionInstance {
        v_star,
        masses: state.masses,
        rows,
        h,
    }
}

/// Outcome of one suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed error measure (suite specific).
    pub worst: f64,
    pub bound: f64,
    /// First failure, if any.
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn new(name: &str, bound: f64) -> Self {
        SuiteReport {
            name: name.to_string(),
            cases: 0,
            failures: 0,
            worst: 0.0,
            bound,
            first_failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }

    fn record(&mut self, value: f64, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if value.is_nan() || value > self.bound {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(detail());
            }
        }
        if !(value <= self.worst) {
            self.worst = value;
        }
    }

    fn record_error(&mut self, case: usize, err: Error) {
        self.cases += 1;
        self.failures += 1;
        self.worst = f64::INFINITY;
        if self.first_failure.is_none() {
            self.first_failure = Some(format!("case {case}: {err}"));
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<12} {}  cases={} failures={} worst={:.3e} bound={:.1e}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.cases,
            self.failures,
            self.worst,
            self.bound
        )?;
        if let Some(d) = &self.first_failure {
            write!(f, "  first: {d}")?;
        }
        Ok(())
    }
}

/// Options for [`run_suite`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SuiteOptions {
    /// Fault injection: run Uzawa without projecting inequality multipliers.
    pub disable_dual_projection: bool,
}

fn suite_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let salt = SUITES.iter().position(|s| *s == name).unwrap_or(0) as u64;
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

pub fn run_suite(name: &str, cfg: &ValidateConfig, opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut rng = suite_rng(cfg.seed, name);
    match name {
        "projection" => Ok(projection_suite(&mut rng, cfg.projection_instances, opts)),
        "kkt" => Ok(kkt_suite(&mut rng, cfg.projection_instances, opts)),
        "nonexpansion" => Ok(nonexpansion_suite(&mut rng, cfg.nonexpansion_instances, opts)),
        "neighbors" => Ok(neighbor_suite(&mut rng, cfg.neighbor_configs, cfg.neighbor_particles)),
        "lemmas" => Ok(lemma_suite(&mut rng, cfg.plane_runs)),
        other => Err(Error::InvalidInput(format!(
            "unknown suite '{other}' (expected one of {})",
            SUITES.join(", ")
        ))),
    }
}

fn with_fault(mut s: SolverOptions, opts: &SuiteOptions) -> SolverOptions {
    s.disable_dual_projection = opts.disable_dual_projection;
    s
}

fn projection_suite(rng: &mut ChaCha8Rng, count: usize, opts: &SuiteOptions) -> SuiteReport {
    let mut rep = SuiteReport::new("projection", PROJECTION_TOL);
    let solver = with_fault(oracle_solver(SweepMode::Jacobi), opts);
    for case in 0..count {
        let inst = random_projection_instance(rng, true);
        let exact = match brute_force_project(&inst.v_star, &inst.masses, &inst.rows, inst.h) {
            Ok(r) => r,
            Err(e) => {
                rep.record_error(case, e);
                continue;
            }
        };
        match project_velocities(&inst.v_star, &inst.masses, &inst.rows, inst.h, &solver) {
            Ok(r) => {
                let d = m_norm_distance(&r.velocities, &exact.velocities, &inst.masses);
                let kkt = r.residuals.max();
                rep.record(d.max(kkt), || format!("case {case}: M-distance {d:e}, KKT {kkt:e}"));
            }
            Err(e) => rep.record_error(case, e),
        }
    }
    rep
}

fn kkt_suite(rng: &mut ChaCha8Rng, count: usize, opts: &SuiteOptions) -> SuiteReport {
    let mut rep = SuiteReport::new("kkt", KKT_TOL);
    for case in 0..count {
        let inst = random_projection_instance(rng, true);
        for mode in [SweepMode::Jacobi, SweepMode::GaussSeidel] {
            let solver = with_fault(oracle_solver(mode), opts);
            match project_velocities(&inst.v_star, &inst.masses, &inst.rows, inst.h, &solver) {
                Ok(r) => {
                    let k = r.residuals.max();
                    rep.record(k, || format!("case {case} ({mode:?}): {}", r.residuals));
                }
                Err(e) => rep.record_error(case, e),
            }
        }
    }
    rep
}

fn nonexpansion_suite(rng: &mut ChaCha8Rng, count: usize, opts: &SuiteOptions) -> SuiteReport {
    let mut rep = SuiteReport::new("nonexpansion", NONEXPANSION_SLACK);
    let solver = with_fault(oracle_solver(SweepMode::Jacobi), opts);
    for case in 0..count {
        let inst = random_projection_instance(rng, false);
        match project_velocities(&inst.v_star, &inst.masses, &inst.rows, inst.h, &solver) {
            Ok(r) => {
                let growth = m_norm(&r.velocities, &inst.masses) - m_norm(&inst.v_star, &inst.masses);
                rep.record(growth.max(0.0), || format!("case {case}: norm grew by {growth:e}"));
            }
            Err(e) => rep.record_error(case, e),
        }
    }
    rep
}

/// Random particle cloud in the unit box; every fourth one is planar.
pub fn random_cloud(rng: &mut ChaCha8Rng, count: usize, planar: bool) -> ParticleState {
    let mut state = ParticleState::empty(planar);
    let side = 0.12 * (count as f64).cbrt();
    while state.len() < count {
        let mut x = Vec3::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side), rng.gen_range(0.0..side));
        if planar {
            x.z = 0.0;
        }
        if state.positions.contains(&x) {
            continue;
        }
        state.push(x, Vec3::zeros(), rng.gen_range(0.005..0.02), 1.0, 0.0);
    }
    state
}

pub const CELL_FACTORS: [f64; 3] = [1.1, 2.0, 5.0];

fn neighbor_suite(rng: &mut ChaCha8Rng, configs: usize, particles: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("neighbors", 0.0);
    for case in 0..configs {
        let state = random_cloud(rng, particles, case % 4 == 3);
        let d_neigh = rng.gen_range(1.0..4.0) * state.max_radius();
        let reference = match brute_force_neighbors(&state, d_neigh) {
            Ok(r) => r,
            Err(e) => {
                rep.record_error(case, e);
                continue;
            }
        };
        let mut mismatches = 0usize;
        for nu in CELL_FACTORS {
            let params = GridParams {
                cell_size: nu * d_neigh,
                d_neigh,
            };
            match find_neighbors(&state, &params) {
                Ok(g) => {
                    let extra = g.gammas.keys().filter(|k| !reference.contains(k)).count();
                    let missing = reference.gammas.keys().filter(|k| !g.contains(k)).count();
                    mismatches += extra + missing;
                }
                Err(_) => mismatches += reference.len().max(1),
            }
        }
        rep.record(mismatches as f64, || {
            format!("case {case}: {mismatches} pairs differ from the all-pairs scan")
        });
    }
    rep
}

/// Random plane scenario: piecewise forcing, any smoothness policy.
pub fn random_plane_scenario(rng: &mut ChaCha8Rng) -> PlaneScenario {
    let pieces = rng.gen_range(1..=4usize);
    let horizon = rng.gen_range(2.0..6.0);
    let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.gen_range(0.0..horizon)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let values: Vec<f64> = (0..=breaks.len()).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let rough = match rng.gen_range(0..4) {
        0 => RoughParams::smooth(),
        1 => RoughParams::with_floor(0.0),
        _ => RoughParams::with_floor(-rng.gen_range(0.1..3.0)),
    };
    PlaneScenario {
        q0: rng.gen_range(0.0..2.0),
        u0: rng.gen_range(-3.0..3.0),
        m: rng.gen_range(0.2..3.0),
        r: rng.gen_range(0.05..1.0),
        force: ForceLaw::Piecewise { breaks, values },
        horizon,
        h: [1e-2, 5e-3, 1e-3][rng.gen_range(0..3)],
        rough: RoughParams {
            use_radius_scaling: rng.gen_bool(0.3),
            ..rough
        },
    }
}

fn lemma_suite(rng: &mut ChaCha8Rng, runs: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("lemmas", ROUNDING_SLACK);
    for case in 0..runs {
        let sc = random_plane_scenario(rng);
        match run_plane_scenario(&sc) {
            Ok(tr) => {
                let b = tr.bounds();
                let excess = b.worst_excess().max(b.max_complementarity).max(0.0);
                rep.record(excess, || format!("case {case}: {b:?}"));
            }
            Err(e) => rep.record_error(case, e),
        }
    }
    rep
}

/// Runs the named suites (all of them when `names` is empty), in order.
pub fn run_suites(names: &[String], cfg: &ValidateConfig, opts: &SuiteOptions) -> Result<Vec<SuiteReport>> {
    let chosen: Vec<&str> = if names.is_empty() {
        SUITES.to_vec()
    } else {
        names.iter().map(String::as_str).collect()
    };
    if let Some(bad) = chosen.iter().find(|n| !SUITES.contains(n)) {
        return Err(Error::InvalidInput(format!(
            "unknown suite '{bad}' (expected one of {})",
            SUITES.join(", ")
        )));
    }
    chosen.into_iter().map(|n| run_suite(n, cfg, opts)).collect()
}
