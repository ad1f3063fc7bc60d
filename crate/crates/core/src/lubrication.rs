//! Reference models with a finite viscosity: the singular lubrication ODE and
//! the inertia-free force balance.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::force::ForceLaw;

/// Leading-order lubrication force on a sphere approaching a plane.
pub fn plane_lubrication_force(mu: f64, r: f64, q: f64, q_dot: f64) -> f64 {
    -6.0 * PI * mu * r * r * q_dot / q
}

/// Leading-order lubrication force between two spheres, along the line of centers.
pub fn sphere_lubrication_force(mu: f64, r1: f64, r2: f64, gap: f64, rel_speed: f64) -> f64 {
    let reduced = r1 * r1 * r2 * r2 / ((r1 + r2) * (r1 + r2));
    -6.0 * PI * mu * reduced * rel_speed / gap
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapSample {
    pub t: f64,
    pub q: f64,
    pub u: f64,
}

#[derive(Clone, Debug)]
pub struct GapTrajectory {
    pub samples: Vec<GapSample>,
    pub min_gap: f64,
    /// Internal substeps taken (equals the sample count minus one when no refinement occurred).
    pub substeps: usize,
}

impl GapTrajectory {
    /// First sampled time with `q <= threshold`.
    pub fn contact_time(&self, threshold: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.q <= threshold).map(|s| s.t)
    }

    /// First sampled time after the last `q <= threshold` sample.
    pub fn release_time(&self, threshold: f64) -> Option<f64> {
        let last = self.samples.iter().rposition(|s| s.q <= threshold)?;
        self.samples.get(last + 1).map(|s| s.t)
    }

    pub fn linf_distance(&self, other: impl Fn(f64) -> f64) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.q - other(s.t)).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LubricationOptions {
    /// Maximum relative gap change per substep.
    pub max_relative_change: f64,
    pub gap_floor: f64,
    pub max_halvings: u32,
}

impl Default for LubricationOptions {
    fn default() -> Self {
        LubricationOptions {
            max_relative_change: 0.1,
            gap_floor: 1e-14,
            max_halvings: 60,
        }
    }
}

/// Integrate `m q'' = -6 pi mu r^2 q'/q + m f(t)`, sampled every `h`.
///
/// Each substep advances the gap with the trapezoidal rule and the velocity
/// with the exact exponential solution of the drag term frozen at the
/// midpoint gap. The substep is halved until `|dt * q'/q|` stays below
/// `max_relative_change` at both ends, which keeps the gap positive.
pub fn integrate_lubrication_ode(
    q0: f64,
    u0: f64,
    mu: f64,
    r: f64,
    m: f64,
    force: &ForceLaw,
    horizon: f64,
    h: f64,
    opts: &LubricationOptions,
) -> Result<GapTrajectory> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveStep(h));
    }
    if !(q0 > 0.0 && mu > 0.0 && r > 0.0 && m > 0.0 && horizon > 0.0) || !u0.is_finite() {
        return Err(Error::InvalidInput("lubrication ODE needs q0, mu, r, m, T > 0".into()));
    }
    let drag = 6.0 * PI * mu * r * r / m;
    let n = (horizon / h).round() as usize;
    let (mut q, mut u, mut t) = (q0, u0, 0.0);
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(GapSample { t, q, u });
    let mut min_gap = q0;
    let mut substeps = 0usize;
    let mut dt_prev = h;

    for k in 0..n {
        let t_end = (k + 1) as f64 * h;
        while t < t_end {
            let remaining = t_end - t;
            // Try to grow back toward the sampling step after refinement.
            let mut dt = (2.0 * dt_prev).min(remaining);
            let mut halvings = 0;
            let (q_new, u_new) = loop {
                if (dt * u / q).abs() <= opts.max_relative_change {
                    let q_mid = q + 0.5 * dt * u;
                    let rate = drag / q_mid;
                    let f = force.interval_mean(t, t + dt);
                    let decay = (-rate * dt).exp();
                    let u_new = u * decay + f / rate * (1.0 - decay);
                    if (dt * u_new / q).abs() <= opts.max_relative_change {
                        break (q + 0.5 * dt * (u + u_new), u_new);
                    }
                }
                halvings += 1;
                if halvings > opts.max_halvings {
                    return Err(Error::GapUnderflow { time: t, floor: opts.gap_floor });
                }
                dt *= 0.5;
            };
            if !(q_new >= opts.gap_floor) {
                return Err(Error::GapUnderflow { time: t + dt, floor: opts.gap_floor });
            }
            q = q_new;
            u = u_new;
            t = if dt == remaining { t_end } else { t + dt };
            dt_prev = dt;
            substeps += 1;
            min_gap = min_gap.min(q);
        }
        samples.push(GapSample { t: t_end, q, u });
    }
    Ok(GapTrajectory {
        samples,
        min_gap,
        substeps,
    })
}

/// Inertia-free balance `F_lub(q) u + m f = 0` with the asymptotic force,
/// i.e. `u = m f q / (6 pi mu r^2)`, advanced with explicit Euler.
pub fn quasistatic_reference(
    q0: f64,
    mu: f64,
    r: f64,
    force: &ForceLaw,
    horizon: f64,
    h: f64,
) -> Result<GapTrajectory> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveStep(h));
    }
    if !(q0 > 0.0 && mu > 0.0 && r > 0.0 && horizon > 0.0) {
        return Err(Error::InvalidInput("quasi-static reference needs q0, mu, r, T > 0".into()));
    }
    let coeff = 6.0 * PI * mu * r * r;
    let n = (horizon / h).round() as usize;
    let mut q = q0;
    let mut samples = Vec::with_capacity(n + 1);
    let mut min_gap = q0;
    for k in 0..=n {
        let t = k as f64 * h;
        let u = q * force.value(t) / coeff;
        samples.push(GapSample { t, q, u });
        min_gap = min_gap.min(q);
        if k < n {
            q += h * q * force.interval_mean(t, t + h) / coeff;
        }
    }
    Ok(GapTrajectory {
        samples,
        min_gap,
        substeps: n,
    })
}
