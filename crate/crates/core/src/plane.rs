//! One gluey particle moving normally to a plane.
//!
//! The state is the gap `q >= 0`, the normal velocity `u` (positive away from
//! the plane) and the adhesion potential `gamma <= 0`. Each step computes an
//! a priori velocity, projects it onto the admissible set `K(q, gamma)`,
//! integrates `gamma` with the projection multiplier, releases the particle
//! when `gamma` turns positive and finally advances `q`. Every step keeps
//! `q >= 0`, `gamma <= 0` and `q * gamma == 0`.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::force::ForceLaw;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoughParams {
    /// Floor on `gamma`; `-inf` is the smooth model, `0` the inelastic one.
    pub gamma_min: f64,
    /// Integrate `gamma' = -lambda / r^2` instead of `gamma' = -lambda`.
    pub use_radius_scaling: bool,
}

impl RoughParams {
    pub fn smooth() -> Self {
        RoughParams {
            gamma_min: f64::NEG_INFINITY,
            use_radius_scaling: false,
        }
    }

    pub fn with_floor(gamma_min: f64) -> Self {
        RoughParams {
            gamma_min,
            use_radius_scaling: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_min.is_nan() || self.gamma_min > 0.0 {
            return Err(Error::InvalidInput(format!(
                "gamma_min must be <= 0, got {}",
                self.gamma_min
            )));
        }
        Ok(())
    }
}

impl Default for RoughParams {
    fn default() -> Self {
        Self::smooth()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneState {
    pub q: f64,
    pub u: f64,
    pub gamma: f64,
    /// Projection multiplier of the last step.
    pub lambda: f64,
    /// `-(gamma' - gamma) / h`, times `r^2` under radius scaling.
    pub lambda_eff: f64,
    pub m: f64,
    pub r: f64,
    /// The last step released the particle (`gamma` crossed zero).
    pub took_off: bool,
    /// The last step hit the `gamma_min` floor.
    pub clamped: bool,
}

impl PlaneState {
    pub fn new(q: f64, u: f64, m: f64, r: f64) -> Self {
        PlaneState {
            q,
            u,
            gamma: 0.0,
            lambda: 0.0,
            lambda_eff: 0.0,
            m,
            r,
            took_off: false,
            clamped: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(Error::InvalidInput(format!("gap must be >= 0, got {}", self.q)));
        }
        if !(self.gamma <= 0.0) {
            return Err(Error::InvalidInput(format!("gamma must be <= 0, got {}", self.gamma)));
        }
        if !self.u.is_finite() {
            return Err(Error::NonFinite("u"));
        }
        if !(self.m > 0.0 && self.r > 0.0) {
            return Err(Error::InvalidInput("mass and radius must be positive".into()));
        }
        Ok(())
    }
}

/// Project `u_star` onto `K(q, gamma)` in the mass-weighted norm.
///
/// Returns the projected velocity and the multiplier `lambda = m (u - u_star) / h`.
pub fn admissible_project_scalar(u_star: f64, q: f64, gamma: f64, h: f64, m: f64) -> Result<(f64, f64)> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveStep(h));
    }
    if !(q >= 0.0) || !(gamma <= 0.0) {
        return Err(Error::InvalidInput(format!(
            "projection needs q >= 0 and gamma <= 0 (q = {q}, gamma = {gamma})"
        )));
    }
    if !u_star.is_finite() {
        return Err(Error::NonFinite("u_star"));
    }
    let floor = -q / h;
    let u = if gamma < 0.0 { floor } else { u_star.max(floor) };
    Ok((u, m * (u - u_star) / h))
}

/// One step of the particle/plane scheme with mean force `f_avg` over the step.
pub fn step_plane(state: &PlaneState, f_avg: f64, h: f64, rough: &RoughParams) -> Result<PlaneState> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveStep(h));
    }
    state.validate()?;
    rough.validate()?;
    if !f_avg.is_finite() {
        return Err(Error::NonFinite("f_avg"));
    }
    let m = state.m;
    let u_half = state.u + h * f_avg;
    let (u_bar, lambda) = admissible_project_scalar(u_half, state.q, state.gamma, h, m)?;
    let pinned = u_bar == -state.q / h;

    let scale = if rough.use_radius_scaling {
        1.0 / (state.r * state.r)
    } else {
        1.0
    };
    let gamma_bar = state.gamma - h * scale * lambda;

    let (u_next, mut gamma_next, took_off) = if gamma_bar > 0.0 {
        (gamma_bar / m, 0.0, true)
    } else {
        (u_bar, gamma_bar, false)
    };
    let clamped = gamma_next < rough.gamma_min;
    if clamped {
        gamma_next = rough.gamma_min;
    }
    // A pinned step closes the gap exactly: q + h(-q/h) is zero up to rounding.
    let q_next = if pinned && !took_off {
        0.0
    } else {
        (state.q + h * u_next).max(0.0)
    };

    let lambda_eff = -(gamma_next - state.gamma) / h / scale;
    Ok(PlaneState {
        q: q_next,
        u: u_next,
        gamma: gamma_next,
        lambda,
        lambda_eff,
        m,
        r: state.r,
        took_off,
        clamped,
    })
}

#[derive(Clone, Debug)]
pub struct PlaneScenario {
    pub q0: f64,
    pub u0: f64,
    pub m: f64,
    pub r: f64,
    pub force: ForceLaw,
    pub horizon: f64,
    pub h: f64,
    pub rough: RoughParams,
}

impl PlaneScenario {
    /// Push with `f = -2` until `t = 2`, then pull with `f = +2`, from rest at `q = 1`.
    pub fn push_pull(h: f64) -> Self {
        PlaneScenario {
            q0: 1.0,
            u0: 0.0,
            m: 1.0,
            r: 1.0,
            force: ForceLaw::push_pull(2.0, 2.0),
            horizon: 6.0,
            h,
            rough: RoughParams::smooth(),
        }
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.h).round() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneSample {
    pub t: f64,
    pub q: f64,
    pub u: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub lambda_eff: f64,
    pub took_off: bool,
    pub clamped: bool,
    /// Mean force over the step that produced this sample (0 for the initial one).
    pub f_avg: f64,
}

#[derive(Clone, Debug)]
pub struct PlaneTrajectory {
    pub h: f64,
    pub m: f64,
    pub samples: Vec<PlaneSample>,
    /// `integral_0^T |f|`.
    pub force_l1: f64,
    pub radius_scaled: bool,
}

pub fn run_plane_scenario(sc: &PlaneScenario) -> Result<PlaneTrajectory> {
    if !(sc.h > 0.0) {
        return Err(Error::NonPositiveStep(sc.h));
    }
    if !(sc.q0 > 0.0) {
        return Err(Error::InvalidInput(format!("q0 must be > 0, got {}", sc.q0)));
    }
    if !(sc.horizon > 0.0) || !sc.force.is_valid() {
        return Err(Error::InvalidInput("invalid horizon or force law".into()));
    }
    let n = sc.steps();
    let mut state = PlaneState::new(sc.q0, sc.u0, sc.m, sc.r);
    let mut samples = Vec::with_capacity(n + 1);
    samples.push(PlaneSample {
        t: 0.0,
        q: state.q,
        u: state.u,
        gamma: 0.0,
        lambda: 0.0,
        lambda_eff: 0.0,
        took_off: false,
        clamped: false,
        f_avg: 0.0,
    });
    for k in 0..n {
        let (t0, t1) = (k as f64 * sc.h, (k + 1) as f64 * sc.h);
        let f_avg = sc.force.interval_mean(t0, t1);
        state = step_plane(&state, f_avg, sc.h, &sc.rough).map_err(|e| e.at_step(k))?;
        samples.push(PlaneSample {
            t: t1,
            q: state.q,
            u: state.u,
            gamma: state.gamma,
            lambda: state.lambda,
            lambda_eff: state.lambda_eff,
            took_off: state.took_off,
            clamped: state.clamped,
            f_avg,
        });
    }
    Ok(PlaneTrajectory {
        h: sc.h,
        m: sc.m,
        samples,
        force_l1: sc.force.abs_integral(0.0, n as f64 * sc.h, n),
        radius_scaled: sc.rough.use_radius_scaling,
    })
}

/// Quantities entering the a priori bounds of the scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub max_speed: f64,
    pub speed_bound: f64,
    pub variation: f64,
    pub variation_bound: f64,
    pub multiplier_l1: f64,
    pub multiplier_bound: f64,
    pub max_complementarity: f64,
    pub max_momentum_residual: f64,
}

impl BoundReport {
    /// Largest overshoot of the three bounds, relative to `max(1, bound)`;
    /// negative when all of them hold with room to spare.
    pub fn worst_excess(&self) -> f64 {
        [
            (self.max_speed, self.speed_bound),
            (self.variation, self.variation_bound),
            (self.multiplier_l1, self.multiplier_bound),
        ]
        .iter()
        .map(|(v, b)| (v - b) / b.abs().max(1.0))
        .fold(f64::NEG_INFINITY, f64::max)
    }

    /// All bounds hold up to a relative rounding slack.
    pub fn holds(&self, slack: f64) -> bool {
        self.worst_excess() <= slack
    }
}

impl PlaneTrajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Piecewise-affine interpolant of the gaps.
    pub fn q_h(&self, t: f64) -> f64 {
        self.affine(t, |s| s.q)
    }

    pub fn gamma_h(&self, t: f64) -> f64 {
        self.affine(t, |s| s.gamma)
    }

    /// Piecewise-constant velocity: `u^{n+1}` on `(t^n, t^{n+1})`.
    pub fn u_h(&self, t: f64) -> f64 {
        self.interval(t).map(|k| self.samples[k + 1].u).unwrap_or(f64::NAN)
    }

    /// Piecewise-constant `-d gamma_h / dt` (effective multiplier).
    pub fn lambda_h(&self, t: f64) -> f64 {
        self.interval(t).map(|k| self.samples[k + 1].lambda_eff).unwrap_or(f64::NAN)
    }

    fn interval(&self, t: f64) -> Option<usize> {
        let n = self.samples.len();
        if n < 2 || t < 0.0 {
            return None;
        }
        let k = ((t / self.h).floor() as usize).min(n - 2);
        Some(k)
    }

    fn affine(&self, t: f64, field: impl Fn(&PlaneSample) -> f64) -> f64 {
        match self.interval(t) {
            None => self.samples.first().map(&field).unwrap_or(f64::NAN),
            Some(k) => {
                let (a, b) = (&self.samples[k], &self.samples[k + 1]);
                let w = ((t - a.t) / self.h).clamp(0.0, 1.0);
                field(a) * (1.0 - w) + field(b) * w
            }
        }
    }

    /// First sample index with a closed gap.
    pub fn hit_index(&self) -> Option<usize> {
        self.samples.iter().position(|s| s.q == 0.0)
    }

    pub fn hitting_time(&self) -> Option<f64> {
        self.hit_index().map(|k| self.samples[k].t)
    }

    /// Adhesion potential once the impact has been fully absorbed, one step after the hit.
    pub fn gamma_after_hit(&self) -> Option<f64> {
        self.hit_index()
            .and_then(|k| self.samples.get(k + 1))
            .map(|s| s.gamma)
    }

    /// First time after the hit at which the gap reopens.
    pub fn unsticking_time(&self) -> Option<f64> {
        let k = self.hit_index()?;
        self.samples[k..].iter().find(|s| s.q > 0.0).map(|s| s.t)
    }

    pub fn bounds(&self) -> BoundReport {
        let u0 = self.samples[0].u;
        let max_speed = self.samples.iter().map(|s| s.u.abs()).fold(0.0, f64::max);
        let variation: f64 = self.samples.windows(2).map(|w| (w[1].u - w[0].u).abs()).sum();
        let multiplier_l1: f64 = self.samples[1..].iter().map(|s| self.h * s.lambda_eff.abs()).sum();
        let max_complementarity = self
            .samples
            .iter()
            .map(|s| (s.q * s.gamma).abs())
            .fold(0.0, f64::max);
        BoundReport {
            max_speed,
            speed_bound: u0.abs() + self.force_l1,
            variation,
            variation_bound: u0.abs() + 8.0 * self.force_l1,
            multiplier_l1,
            multiplier_bound: self.m * variation + self.m * self.force_l1,
            max_complementarity,
            max_momentum_residual: self.max_momentum_residual(),
        }
    }

    /// Max over steps of `|m (u' - u)/h - m f - lambda_eff|`, skipping clamped steps and,
    /// under radius scaling, take-off steps.
    pub fn max_momentum_residual(&self) -> f64 {
        self.samples
            .windows(2)
            .filter(|w| !w[1].clamped && !(self.radius_scaled && w[1].took_off))
            .map(|w| {
                let (a, b) = (&w[0], &w[1]);
                (self.m * (b.u - a.u) / self.h - self.m * b.f_avg - b.lambda_eff).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,q,u,gamma,lambda`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,q,u,gamma,lambda")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{},{}", s.t, s.q, s.u, s.gamma, s.lambda)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_inactive() {
        let (u, l) = admissible_project_scalar(-0.5, 1.0, 0.0, 0.1, 1.0).unwrap();
        assert_eq!(u, -0.5);
        assert_eq!(l, 0.0);
    }

    #[test]
    fn projection_inequality_active() {
        let (u, l) = admissible_project_scalar(-1.0, 0.02, 0.0, 0.1, 1.0).unwrap();
        assert!((u + 0.2).abs() < 1e-15);
        assert!((l - 8.0).abs() < 1e-12);
    }

    #[test]
    fn projection_equality() {
        let (u, l) = admissible_project_scalar(3.0, 0.0, -0.5, 0.1, 1.0).unwrap();
        assert_eq!(u, 0.0);
        assert!((l + 30.0).abs() < 1e-12);
    }

    #[test]
    fn projection_rejects_bad_step() {
        assert!(matches!(
            admissible_project_scalar(0.0, 1.0, 0.0, 0.0, 1.0),
            Err(Error::NonPositiveStep(_))
        ));
        assert!(admissible_project_scalar(0.0, 1.0, 0.0, -1.0, 1.0).is_err());
        assert!(step_plane(&PlaneState::new(1.0, 0.0, 1.0, 1.0), 0.0, 0.0, &RoughParams::smooth()).is_err());
    }

    #[test]
    fn free_flight_step() {
        let s = step_plane(&PlaneState::new(1.0, 0.0, 1.0, 1.0), -2.0, 0.01, &RoughParams::smooth()).unwrap();
        assert!((s.u + 0.02).abs() < 1e-15);
        assert!((s.q - 0.9998).abs() < 1e-15);
        assert_eq!(s.gamma, 0.0);
        assert_eq!(s.lambda, 0.0);
    }

    #[test]
    fn impact_step_then_glued() {
        let rough = RoughParams::smooth();
        let s0 = PlaneState::new(0.001, -2.0, 1.0, 1.0);
        let s1 = step_plane(&s0, -2.0, 0.01, &rough).unwrap();
        assert!((s1.u + 0.1).abs() < 1e-12);
        assert_eq!(s1.q, 0.0);
        assert!(s1.gamma < 0.0);
        assert!((s1.gamma + 0.01 * s1.lambda).abs() < 1e-15);
        let mut s = s1;
        for _ in 0..20 {
            s = step_plane(&s, -2.0, 0.01, &rough).unwrap();
            assert_eq!(s.q, 0.0);
            assert!(s.gamma < 0.0);
        }
    }

    #[test]
    fn takeoff_step() {
        // u_half = 2h gives lambda = -2, so gamma_bar = -0.5 + 2h = 2.5.
        let mut s0 = PlaneState::new(0.0, 0.0, 1.0, 1.0);
        s0.gamma = -0.5;
        let h = 1.5;
        let s1 = step_plane(&s0, 2.0, h, &RoughParams::smooth()).unwrap();
        assert!(s1.took_off);
        assert!((s1.u - 2.5).abs() < 1e-12);
        assert_eq!(s1.gamma, 0.0);
        assert!((s1.q - h * 2.5).abs() < 1e-12);
    }

    #[test]
    fn clamp_applies_after_unsticking() {
        let mut s0 = PlaneState::new(0.0, 0.0, 1.0, 1.0);
        s0.gamma = -0.9;
        let s1 = step_plane(&s0, -2.0, 0.1, &RoughParams::with_floor(-1.0)).unwrap();
        assert!(s1.clamped);
        assert_eq!(s1.gamma, -1.0);
        assert_eq!(s1.u, 0.0);
        assert!((s1.lambda_eff - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radius_scaling_divides_by_r_squared() {
        let rough = RoughParams {
            gamma_min: f64::NEG_INFINITY,
            use_radius_scaling: true,
        };
        let s0 = PlaneState::new(0.0, -1.0, 1.0, 0.5);
        let s1 = step_plane(&s0, 0.0, 0.1, &rough).unwrap();
        // lambda = 10, gamma = -0.1 * 10 / 0.25
        assert!((s1.lambda - 10.0).abs() < 1e-12);
        assert!((s1.gamma + 4.0).abs() < 1e-12);
        assert!((s1.lambda_eff - 10.0).abs() < 1e-12);
    }

    #[test]
    fn no_force_stays_glued_forever() {
        let sc = PlaneScenario {
            q0: 1.0,
            u0: -1.0,
            m: 1.0,
            r: 1.0,
            force: ForceLaw::constant(0.0),
            horizon: 3.0,
            h: 1e-3,
            rough: RoughParams::smooth(),
        };
        let tr = run_plane_scenario(&sc).unwrap();
        let t_hit = tr.hitting_time().unwrap();
        assert!((t_hit - 1.0).abs() <= 2e-3);
        let k = tr.hit_index().unwrap();
        for s in &tr.samples[k + 1..] {
            assert_eq!(s.q, 0.0);
            assert!((s.gamma + 1.0).abs() < 1e-9, "gamma {}", s.gamma);
        }
        assert!(tr.unsticking_time().is_none());
    }

    #[test]
    fn initial_gap_must_be_positive() {
        let mut sc = PlaneScenario::push_pull(0.01);
        sc.q0 = 0.0;
        assert!(run_plane_scenario(&sc).is_err());
    }

    #[test]
    fn interpolants() {
        let tr = run_plane_scenario(&PlaneScenario::push_pull(0.01)).unwrap();
        let s = &tr.samples;
        assert!((tr.q_h(0.005) - 0.5 * (s[0].q + s[1].q)).abs() < 1e-15);
        assert_eq!(tr.u_h(0.005), s[1].u);
        assert_eq!(tr.lambda_h(1.234), s[124].lambda_eff);
        assert!((tr.gamma_h(3.0) - s[300].gamma).abs() < 1e-12);
    }

    #[test]
    fn csv_header_and_rows() {
        let mut sc = PlaneScenario::push_pull(0.5);
        sc.horizon = 1.0;
        let tr = run_plane_scenario(&sc).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,q,u,gamma,lambda");
        assert_eq!(lines.len(), 4);
        assert!(text.ends_with('\n'));
    }
}
