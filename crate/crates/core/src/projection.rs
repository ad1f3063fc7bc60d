//! Mass-weighted projection of an a priori velocity onto the linearised
//! admissible set, solved by Uzawa dual ascent, with an exact active-set
//! enumeration oracle and KKT diagnostics.
//!
//! The admissible set is `{V : d_k + h g_k . V >= 0}` for inequality rows and
//! `= 0` for equality rows. Multipliers follow the convention
//! `M (V - V*) = h sum_k lambda_k g_k`, so inequality multipliers are `>= 0`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::SparseGradientRow;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowKind {
    Inequality,
    Equality,
}

/// Identifies the contact a row belongs to; used to carry adhesion and warm starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContactKey {
    /// Particle pair with `i < j`.
    Pair(usize, usize),
    /// Particle against one sphere (or the plane, `member = 0`) of an obstacle.
    Obstacle {
        particle: usize,
        obstacle: usize,
        member: usize,
    },
}

impl fmt::Display for ContactKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContactKey::Pair(i, j) => write!(f, "({i}, {j})"),
            ContactKey::Obstacle {
                particle,
                obstacle,
                member,
            } => write!(f, "({particle}, obstacle {obstacle}.{member})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintRow {
    pub row: SparseGradientRow,
    pub kind: RowKind,
    pub key: ContactKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SweepMode {
    #[default]
    Jacobi,
    GaussSeidel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relaxation factor of the dual step, in `(0, 2)`.
    pub omega: f64,
    /// Primal tolerance, relative to `1 + max |offset|`.
    pub tol: f64,
    /// Defaults to `100 * rows` when `None`.
    pub max_iters: Option<usize>,
    pub sweep_mode: SweepMode,
    /// Test hook: skips the non-negativity projection of inequality multipliers.
    #[doc(hidden)]
    pub disable_dual_projection: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            omega: 1.0,
            tol: 1e-9,
            max_iters: None,
            sweep_mode: SweepMode::Jacobi,
            disable_dual_projection: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KktReport {
    pub max_primal_violation: f64,
    pub max_dual_violation: f64,
    pub max_complementarity: f64,
    pub stationarity_residual: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.max_primal_violation
            .max(self.max_dual_violation)
            .max(self.max_complementarity)
            .max(self.stationarity_residual)
    }
}

impl fmt::Display for KktReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "primal {:.3e}, dual {:.3e}, complementarity {:.3e}, stationarity {:.3e}",
            self.max_primal_violation,
            self.max_dual_violation,
            self.max_complementarity,
            self.stationarity_residual
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    pub velocities: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub residuals: KktReport,
}

fn check_inputs(v_star: &[f64], masses: &[f64], rows: &[ConstraintRow], h: f64) -> Result<()> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveStep(h));
    }
    if v_star.len() != 3 * masses.len() {
        return Err(Error::InvalidInput(format!(
            "velocity vector has {} entries for {} particles",
            v_star.len(),
            masses.len()
        )));
    }
    if masses.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidInput("masses must be positive".into()));
    }
    if v_star.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("a priori velocity"));
    }
    for (k, r) in rows.iter().enumerate() {
        if !r.row.offset.is_finite() {
            return Err(Error::NonFinite("constraint offset"));
        }
        if r.row.entries.iter().any(|(p, _)| *p >= masses.len()) {
            return Err(Error::InvalidInput(format!("row {k} references a missing particle")));
        }
    }
    Ok(())
}

/// `V = V* + h M^{-1} sum_k lambda_k g_k`.
fn velocities_from(v_star: &[f64], inv_mass: &[f64], rows: &[ConstraintRow], lambda: &[f64], h: f64) -> Vec<f64> {
    let mut v = v_star.to_vec();
    for (r, &l) in rows.iter().zip(lambda) {
        if l == 0.0 {
            continue;
        }
        for (p, c) in &r.row.entries {
            let s = h * l * inv_mass[*p];
            v[3 * p] += s * c.x;
            v[3 * p + 1] += s * c.y;
            v[3 * p + 2] += s * c.z;
        }
    }
    v
}

fn slack(row: &ConstraintRow, v: &[f64], h: f64) -> f64 {
    row.row.offset + h * row.row.dot(v)
}

fn primal_violation(rows: &[ConstraintRow], v: &[f64], h: f64) -> f64 {
    rows.iter()
        .map(|r| {
            let s = slack(r, v, h);
            match r.kind {
                RowKind::Inequality => (-s).max(0.0),
                RowKind::Equality => s.abs(),
            }
        })
        .fold(0.0, f64::max)
}

/// Primal feasibility within `tol`, and every loaded inequality row tight.
///
/// Stationarity holds by construction of `V` and dual feasibility by the
/// projection of the multipliers, so this completes the KKT conditions.
/// Multiplier changes are not used: with redundant rows the multipliers
/// are not unique and may keep drifting without moving `V`.
fn kkt_met(rows: &[ConstraintRow], slacks: &[f64], lambda: &[f64], tol: f64) -> bool {
    rows.iter().zip(slacks).zip(lambda).all(|((r, &s), &l)| match r.kind {
        RowKind::Equality => s.abs() <= tol,
        RowKind::Inequality => s >= -tol && (l == 0.0 || s <= tol),
    })
}

/// Row-sum bound on the largest eigenvalue of `h^2 A M^{-1} A^T`.
fn dual_curvature_bound(masses: &[f64], rows: &[ConstraintRow], h: f64) -> f64 {
    let mut rows_of: Vec<Vec<(usize, usize)>> = vec![Vec::new(); masses.len()];
    for (k, r) in rows.iter().enumerate() {
        for (e, (p, _)) in r.row.entries.iter().enumerate() {
            rows_of[*p].push((k, e));
        }
    }
    let mut bound: f64 = 0.0;
    for r in rows {
        let mut sum = 0.0;
        for (p, c) in &r.row.entries {
            for &(l, e) in &rows_of[*p] {
                sum += (c.dot(&rows[l].row.entries[e].1)).abs() / masses[*p];
            }
        }
        bound = bound.max(sum);
    }
    h * h * bound
}

pub fn project_velocities(
    v_star: &[f64],
    masses: &[f64],
    rows: &[ConstraintRow],
    h: f64,
    opts: &SolverOptions,
) -> Result<ProjectionResult> {
    project_velocities_warm(v_star, masses, rows, h, opts, None)
}

/// Uzawa projection started from `initial` multipliers (one per row) when given.
pub fn project_velocities_warm(
    v_star: &[f64],
    masses: &[f64],
    rows: &[ConstraintRow],
    h: f64,
    opts: &SolverOptions,
    initial: Option<&[f64]>,
) -> Result<ProjectionResult> {
    check_inputs(v_star, masses, rows, h)?;
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(Error::InvalidInput(format!("uzawa omega must lie in (0, 2), got {}", opts.omega)));
    }
    if rows.is_empty() {
        return Ok(ProjectionResult {
            velocities: v_star.to_vec(),
            multipliers: Vec::new(),
            iterations: 0,
            residuals: KktReport::default(),
        });
    }
    let inv_mass: Vec<f64> = masses.iter().map(|m| 1.0 / m).collect();
    let mut lambda: Vec<f64> = match initial {
        Some(l) if l.len() == rows.len() => l
            .iter()
            .zip(rows)
            .map(|(&l, r)| match r.kind {
                RowKind::Inequality if !opts.disable_dual_projection => l.max(0.0),
                _ => l,
            })
            .collect(),
        Some(_) => return Err(Error::InvalidInput("warm start length differs from row count".into())),
        None => vec![0.0; rows.len()],
    };
    let offsets_scale = 1.0 + rows.iter().map(|r| r.row.offset.abs()).fold(0.0, f64::max);
    let primal_tol = opts.tol * offsets_scale;
    let max_iters = opts.max_iters.unwrap_or(100 * rows.len()).max(1);
    let project = |kind: RowKind, l: f64| match kind {
        RowKind::Inequality if !opts.disable_dual_projection => l.max(0.0),
        _ => l,
    };

    let mut v = velocities_from(v_star, &inv_mass, rows, &lambda, h);
    let mut iterations = 0;
    let mut converged = false;
    match opts.sweep_mode {
        SweepMode::Jacobi => {
            let rho = opts.omega / dual_curvature_bound(masses, rows, h);
            let mut slacks = vec![0.0; rows.len()];
            loop {
                for (s, r) in slacks.iter_mut().zip(rows) {
                    *s = slack(r, &v, h);
                }
                if kkt_met(rows, &slacks, &lambda, primal_tol) {
                    converged = true;
                    break;
                }
                if iterations == max_iters {
                    break;
                }
                for ((l, r), s) in lambda.iter_mut().zip(rows).zip(&slacks) {
                    *l = project(r.kind, *l - rho * s);
                }
                v = velocities_from(v_star, &inv_mass, rows, &lambda, h);
                iterations += 1;
            }
        }
        SweepMode::GaussSeidel => {
            let diag: Vec<f64> = rows
                .iter()
                .map(|r| {
                    h * h
                        * r.row
                            .entries
                            .iter()
                            .map(|(p, c)| c.norm_squared() * inv_mass[*p])
                            .sum::<f64>()
                })
                .collect();
            let mut slacks = vec![0.0; rows.len()];
            loop {
                for (s, r) in slacks.iter_mut().zip(rows) {
                    *s = slack(r, &v, h);
                }
                if kkt_met(rows, &slacks, &lambda, primal_tol) {
                    converged = true;
                    break;
                }
                if iterations == max_iters {
                    break;
                }
                for (k, r) in rows.iter().enumerate() {
                    if diag[k] == 0.0 {
                        continue;
                    }
                    let s = slack(r, &v, h);
                    let next = project(r.kind, lambda[k] - opts.omega * s / diag[k]);
                    let delta = next - lambda[k];
                    if delta != 0.0 {
                        for (p, c) in &r.row.entries {
                            let w = h * delta * inv_mass[*p];
                            v[3 * p] += w * c.x;
                            v[3 * p + 1] += w * c.y;
                            v[3 * p + 2] += w * c.z;
                        }
                        lambda[k] = next;
                    }
                }
                iterations += 1;
                // Rebuild from the multipliers so rounding does not accumulate.
                v = velocities_from(v_star, &inv_mass, rows, &lambda, h);
            }
        }
    }

    let residuals = kkt_residuals_raw(&v, &lambda, v_star, masses, rows, h);
    if !converged {
        if rows.iter().any(|r| r.kind == RowKind::Equality) {
            if let Some(conflict) = inconsistent_equalities(v_star, masses, rows, h) {
                return Err(Error::InfeasibleEqualities { rows: conflict });
            }
        }
        return Err(Error::NotConverged {
            iterations,
            report: residuals,
        });
    }
    Ok(ProjectionResult {
        velocities: v,
        multipliers: lambda,
        iterations,
        residuals,
    })
}

/// Dense view of the rows restricted to `subset`: `(h^2 A M^-1 A^T, -(d + h A V*))`.
fn reduced_system(
    v_star: &[f64],
    inv_mass: &[f64],
    rows: &[ConstraintRow],
    subset: &[usize],
    h: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let k = subset.len();
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    for (a, &ra) in subset.iter().enumerate() {
        rhs[a] = -slack(&rows[ra], v_star, h);
        for (b, &rb) in subset.iter().enumerate().skip(a) {
            let mut g = 0.0;
            for (p, c) in &rows[ra].row.entries {
                for (q, d) in &rows[rb].row.entries {
                    if p == q {
                        g += c.dot(d) * inv_mass[*p];
                    }
                }
            }
            gram[(a, b)] = h * h * g;
            gram[(b, a)] = h * h * g;
        }
    }
    (gram, rhs)
}

/// Minimum-norm multipliers solving the reduced system, or `None` if it is inconsistent.
fn solve_reduced(gram: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if gram.nrows() == 0 {
        return Some(DVector::zeros(0));
    }
    let scale = gram.amax().max(1e-300);
    let svd = gram.clone().svd(true, true);
    let eps = scale * 1e-12 * gram.nrows() as f64;
    let sol = svd.solve(rhs, eps).ok()?;
    let resid = (gram * &sol - rhs).amax();
    if resid <= 1e-9 * (1.0 + rhs.amax()) {
        Some(sol)
    } else {
        None
    }
}

/// Rows of an inconsistent equality subsystem, if any.
fn inconsistent_equalities(v_star: &[f64], masses: &[f64], rows: &[ConstraintRow], h: f64) -> Option<Vec<usize>> {
    let inv_mass: Vec<f64> = masses.iter().map(|m| 1.0 / m).collect();
    let eq: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].kind == RowKind::Equality).collect();
    let (gram, rhs) = reduced_system(v_star, &inv_mass, rows, &eq, h);
    if solve_reduced(&gram, &rhs).is_some() {
        return None;
    }
    // The residual of the least-squares solve lives on the conflicting rows.
    let scale = gram.amax().max(1e-300);
    let svd = gram.clone().svd(true, true);
    let sol = svd.solve(&rhs, scale * 1e-12 * gram.nrows() as f64).ok()?;
    let resid = &gram * sol - &rhs;
    let tol = 1e-9 * (1.0 + rhs.amax());
    Some(
        eq.iter()
            .zip(resid.iter())
            .filter(|(_, r)| r.abs() > tol)
            .map(|(&k, _)| k)
            .collect(),
    )
}

pub const BRUTE_FORCE_MAX_ROWS: usize = 20;

/// Exact projection by enumerating every active subset of inequality rows.
pub fn brute_force_project(v_star: &[f64], masses: &[f64], rows: &[ConstraintRow], h: f64) -> Result<ProjectionResult> {
    check_inputs(v_star, masses, rows, h)?;
    if rows.len() > BRUTE_FORCE_MAX_ROWS {
        return Err(Error::TooManyRows {
            max: BRUTE_FORCE_MAX_ROWS,
            got: rows.len(),
        });
    }
    let inv_mass: Vec<f64> = masses.iter().map(|m| 1.0 / m).collect();
    let eq: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].kind == RowKind::Equality).collect();
    let ineq: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].kind == RowKind::Inequality).collect();
    let scale = 1.0 + rows.iter().map(|r| r.row.offset.abs()).fold(0.0, f64::max);
    let feas_tol = 1e-10 * scale;

    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for mask in 0u32..(1u32 << ineq.len()) {
        let mut subset = eq.clone();
        subset.extend(
            ineq.iter()
                .enumerate()
                .filter(|(b, _)| mask & (1 << b) != 0)
                .map(|(_, &k)| k),
        );
        let (gram, rhs) = reduced_system(v_star, &inv_mass, rows, &subset, h);
        let Some(sol) = solve_reduced(&gram, &rhs) else {
            continue;
        };
        let mut lambda = vec![0.0; rows.len()];
        for (a, &k) in subset.iter().enumerate() {
            lambda[k] = sol[a];
        }
        if ineq.iter().any(|&k| lambda[k] < -1e-10 * (1.0 + sol.amax())) {
            continue;
        }
        let v = velocities_from(v_star, &inv_mass, rows, &lambda, h);
        if primal_violation(rows, &v, h) > feas_tol {
            continue;
        }
        let obj: f64 = v
            .iter()
            .zip(v_star)
            .enumerate()
            .map(|(i, (a, b))| 0.5 * masses[i / 3] * (a - b) * (a - b))
            .sum();
        if best.as_ref().is_none_or(|(o, _, _)| obj < *o) {
            for &k in &ineq {
                lambda[k] = lambda[k].max(0.0);
            }
            best = Some((obj, v, lambda));
        }
    }
    match best {
        Some((_, v, lambda)) => {
            let residuals = kkt_residuals_raw(&v, &lambda, v_star, masses, rows, h);
            Ok(ProjectionResult {
                velocities: v,
                multipliers: lambda,
                iterations: 1 << ineq.len(),
                residuals,
            })
        }
        None => match inconsistent_equalities(v_star, masses, rows, h) {
            Some(conflict) => Err(Error::InfeasibleEqualities { rows: conflict }),
            None => Err(Error::InvalidInput("admissible set is empty".into())),
        },
    }
}

fn kkt_residuals_raw(
    v: &[f64],
    lambda: &[f64],
    v_star: &[f64],
    masses: &[f64],
    rows: &[ConstraintRow],
    h: f64,
) -> KktReport {
    let mut rep = KktReport::default();
    for (r, &l) in rows.iter().zip(lambda) {
        let s = slack(r, v, h);
        match r.kind {
            RowKind::Inequality => {
                rep.max_primal_violation = rep.max_primal_violation.max((-s).max(0.0));
                rep.max_dual_violation = rep.max_dual_violation.max((-l).max(0.0));
                rep.max_complementarity = rep.max_complementarity.max((l * s).abs());
            }
            RowKind::Equality => {
                rep.max_primal_violation = rep.max_primal_violation.max(s.abs());
            }
        }
    }
    let mut stat: Vec<f64> = v
        .iter()
        .zip(v_star)
        .enumerate()
        .map(|(i, (a, b))| masses[i / 3] * (a - b))
        .collect();
    for (r, &l) in rows.iter().zip(lambda) {
        for (p, c) in &r.row.entries {
            stat[3 * p] -= h * l * c.x;
            stat[3 * p + 1] -= h * l * c.y;
            stat[3 * p + 2] -= h * l * c.z;
        }
    }
    rep.stationarity_residual = stat.iter().map(|s| s.abs()).fold(0.0, f64::max);
    rep
}

/// KKT residuals of `result` for the projection problem `(v_star, masses, rows, h)`.
pub fn kkt_residuals(
    result: &ProjectionResult,
    v_star: &[f64],
    masses: &[f64],
    rows: &[ConstraintRow],
    h: f64,
) -> KktReport {
    kkt_residuals_raw(&result.velocities, &result.multipliers, v_star, masses, rows, h)
}

/// `sqrt(sum_i m_i |a_i - b_i|^2)` over stacked velocities.
pub fn m_norm_distance(a: &[f64], b: &[f64], masses: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| masses[i / 3] * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn m_norm(a: &[f64], masses: &[f64]) -> f64 {
    a.iter()
        .enumerate()
        .map(|(i, x)| masses[i / 3] * x * x)
        .sum::<f64>()
        .sqrt()
}
