//! Step-size study of the particle/plane scheme against the exact push-pull
//! trajectory.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::force::ForceLaw;
use crate::plane::{run_plane_scenario, PlaneScenario};

/// Exact motion from rest at height `q0` under `-a` until `switch`, then `+a`,
/// for a smooth gluey contact. Requires the impact to happen before `switch`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PushPullExact {
    pub q0: f64,
    pub a: f64,
    pub switch: f64,
    pub m: f64,
}

impl PushPullExact {
    pub fn new(q0: f64, a: f64, switch: f64, m: f64) -> Result<Self> {
        let e = PushPullExact { q0, a, switch, m };
        if !(q0 > 0.0 && a > 0.0 && m > 0.0) || !(e.hit_time() < switch) {
            return Err(Error::InvalidInput(
                "closed form needs q0, a, m > 0 and an impact before the switch".into(),
            ));
        }
        Ok(e)
    }

    pub fn standard() -> Self {
        PushPullExact {
            q0: 1.0,
            a: 2.0,
            switch: 2.0,
            m: 1.0,
        }
    }

    pub fn hit_time(&self) -> f64 {
        (2.0 * self.q0 / self.a).sqrt()
    }

    /// The potential stored during pushing is `m a switch`; pulling at the
    /// same rate returns it to zero after another `switch`.
    pub fn unstick_time(&self) -> f64 {
        2.0 * self.switch
    }

    pub fn q(&self, t: f64) -> f64 {
        let (t1, t2) = (self.hit_time(), self.unstick_time());
        if t <= t1 {
            self.q0 - 0.5 * self.a * t * t
        } else if t <= t2 {
            0.0
        } else {
            0.5 * self.a * (t - t2) * (t - t2)
        }
    }

    pub fn gamma(&self, t: f64) -> f64 {
        let (t1, t2) = (self.hit_time(), self.unstick_time());
        let ma = self.m * self.a;
        if t < t1 || t >= t2 {
            0.0
        } else if t <= self.switch {
            -ma * t
        } else {
            -ma * self.switch + ma * (t - self.switch)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub h: f64,
    pub linf_q: f64,
    pub hit_error: f64,
    pub unstick_error: f64,
    /// `log(e_prev / e) / log(h_prev / h)` for the `q` error; absent on the first row.
    pub order: Option<f64>,
}

/// Run the scheme for each step size in `hs` (strictly decreasing) and compare
/// with the exact trajectory. A missing event counts as an error of `horizon`.
pub fn convergence_table(base: &PlaneScenario, exact: &PushPullExact, hs: &[f64]) -> Result<Vec<ConvergenceRow>> {
    if hs.is_empty() {
        return Err(Error::InvalidInput("step list is empty".into()));
    }
    if hs.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidInput("steps must be positive".into()));
    }
    if hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("steps must be strictly decreasing".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(hs.len());
    for &h in hs {
        let sc = PlaneScenario { h, ..base.clone() };
        let tr = run_plane_scenario(&sc)?;
        let linf_q = tr
            .samples
            .iter()
            .map(|s| (s.q - exact.q(s.t)).abs())
            .fold(0.0, f64::max);
        let miss = sc.horizon;
        let hit_error = tr.hitting_time().map_or(miss, |t| (t - exact.hit_time()).abs());
        let unstick_error = tr.unsticking_time().map_or(miss, |t| (t - exact.unstick_time()).abs());
        let order = rows.last().map(|p| (p.linf_q / linf_q).ln() / (p.h / h).ln());
        rows.push(ConvergenceRow {
            h,
            linf_q,
            hit_error,
            unstick_error,
            order,
        });
    }
    Ok(rows)
}

/// Exact trajectory matching a push-pull scenario, if it has one.
pub fn exact_for(sc: &PlaneScenario) -> Result<PushPullExact> {
    match &sc.force {
        ForceLaw::Piecewise { breaks, values }
            if breaks.len() == 1 && values.len() == 2 && values[0] < 0.0 && values[1] == -values[0] =>
        {
            if sc.u0 != 0.0 || sc.rough.gamma_min != f64::NEG_INFINITY || sc.rough.use_radius_scaling {
                return Err(Error::InvalidInput(
                    "closed form covers a smooth contact released from rest".into(),
                ));
            }
            PushPullExact::new(sc.q0, values[1], breaks[0], sc.m)
        }
        _ => Err(Error::InvalidInput("closed form needs a push-pull force".into())),
    }
}

pub fn write_table<W: Write>(rows: &[ConvergenceRow], mut w: W) -> io::Result<()> {
    let with_order = rows.len() > 1;
    write!(w, "h,linf_q,hit_error,unstick_error")?;
    if with_order {
        write!(w, ",order")?;
    }
    writeln!(w)?;
    for r in rows {
        write!(w, "{:e},{:e},{:e},{:e}", r.h, r.linf_q, r.hit_error, r.unstick_error)?;
        if with_order {
            match r.order {
                Some(o) => write!(w, ",{o:.4}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}
