//! End-to-end acceptance gate. Every criterion is evaluated and reported on
//! its own line; the test fails at the end if any of them failed.

use std::path::Path;
use std::time::{Duration, Instant};

use gluey_core::convergence::{convergence_table, exact_for, PushPullExact};
use gluey_core::force::ForceLaw;
use gluey_core::lubrication::{integrate_lubrication_ode, LubricationOptions};
use gluey_core::multibody::run_simulation;
use gluey_core::plane::{run_plane_scenario, PlaneScenario, PlaneTrajectory, RoughParams};
use gluey_core::scenario::{parse_config, ScenarioConfig, ValidateConfig};
use gluey_core::validate::{random_plane_scenario, run_suite, SuiteOptions, ROUNDING_SLACK};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Gate {
    lines: Vec<(bool, String)>,
}

impl Gate {
    fn report(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        let line = format!("[{}] {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((pass, line));
    }
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn push_pull_with(h: f64, rough: RoughParams) -> PlaneScenario {
    PlaneScenario {
        rough,
        ..PlaneScenario::push_pull(h)
    }
}

/// First sample with `q <= delta`, and the first sample after the last one.
fn threshold_times(tr: &PlaneTrajectory, delta: f64) -> (Option<f64>, Option<f64>) {
    let hit = tr.samples.iter().find(|s| s.q <= delta).map(|s| s.t);
    let release = tr
        .samples
        .iter()
        .rposition(|s| s.q <= delta)
        .and_then(|k| tr.samples.get(k + 1))
        .map(|s| s.t);
    (hit, release)
}

#[test]
fn acceptance() {
    let mut gate = Gate { lines: Vec::new() };
    let mut plane_runs: Vec<(String, PlaneTrajectory)> = Vec::new();

    // 1: push-pull against the closed form
    {
        let h = 1e-4;
        let start = Instant::now();
        let sc = scenario("plane_pushpull.cfg").plane_scenario().unwrap();
        assert_eq!(sc.h, h);
        let tr = run_plane_scenario(&sc).unwrap();
        let elapsed = start.elapsed();
        let hit = tr.hitting_time().unwrap_or(f64::NAN);
        let g = tr.gamma_after_hit().unwrap_or(f64::NAN);
        let unstick = tr.unsticking_time().unwrap_or(f64::NAN);
        let q5 = tr.q_h(5.0);
        let pass = (hit - 1.0).abs() <= 2.0 * h
            && (g + 2.0).abs() <= 5.0 * h
            && (unstick - 4.0).abs() <= 2.0 * h
            && (q5 - 1.0).abs() <= 0.01
            && elapsed < Duration::from_secs(1);
        gate.report(
            1,
            "push-pull closed form",
            pass,
            format!(
                "t_hit={hit:.6} gamma+={g:.6} t_unstick={unstick:.6} q(5)={q5:.6} in {:.3}s",
                secs(elapsed)
            ),
        );
        plane_runs.push(("plane_pushpull".into(), tr));
    }

    // 2: observed order of convergence
    {
        let cfg = scenario("plane_pushpull.cfg");
        let base = cfg.plane_scenario().unwrap();
        let start = Instant::now();
        let rows = convergence_table(&base, &exact_for(&base).unwrap(), &cfg.convergence.h).unwrap();
        let elapsed = start.elapsed();
        let monotone = rows.windows(2).all(|w| w[1].linf_q < w[0].linf_q);
        let min_order = rows.iter().filter_map(|r| r.order).fold(f64::INFINITY, f64::min);
        let pass = rows.len() == 5 && monotone && min_order >= 0.9 && elapsed < Duration::from_secs(5);
        gate.report(
            2,
            "convergence order",
            pass,
            format!(
                "errors {:?} monotone={monotone} min order={min_order:.3} in {:.3}s",
                rows.iter().map(|r| format!("{:.2e}", r.linf_q)).collect::<Vec<_>>(),
                secs(elapsed)
            ),
        );
        for &h in &cfg.convergence.h {
            let sc = PlaneScenario { h, ..base.clone() };
            plane_runs.push((format!("convergence h={h}"), run_plane_scenario(&sc).unwrap()));
        }
    }

    // 9: rough contacts release earlier than smooth ones
    {
        let h = 1e-4;
        let smooth = run_plane_scenario(&push_pull_with(h, RoughParams::smooth())).unwrap();
        let rough = run_plane_scenario(&push_pull_with(h, RoughParams::with_floor(-1.0))).unwrap();
        let inelastic = run_plane_scenario(&push_pull_with(h, RoughParams::with_floor(0.0))).unwrap();
        let (ts, tr, ti) = (
            smooth.unsticking_time().unwrap_or(f64::INFINITY),
            rough.unsticking_time().unwrap_or(f64::INFINITY),
            inelastic.unsticking_time().unwrap_or(f64::INFINITY),
        );
        let pass = tr < ts && (ti - 2.0).abs() <= 5.0 * h;
        gate.report(
            9,
            "rough before smooth",
            pass,
            format!("unstick smooth={ts:.5} floor -1={tr:.5} floor 0={ti:.5}"),
        );
        plane_runs.push(("smooth".into(), smooth));
        plane_runs.push(("rough -1".into(), rough));
        plane_runs.push(("inelastic".into(), inelastic));
    }

    // 10: lubrication trajectories approach the gluey one as mu -> 0
    {
        let h = 1e-3;
        let horizon = 6.0;
        let delta = 0.1;
        // 6 pi mu r^2 = 2 mu
        let r = 1.0 / (3.0 * std::f64::consts::PI).sqrt();
        let gluey_sc = PlaneScenario {
            r,
            horizon,
            ..PlaneScenario::push_pull(h)
        };
        let gluey = run_plane_scenario(&gluey_sc).unwrap();
        let (g_hit, g_rel) = threshold_times(&gluey, delta);
        let (g_hit, g_rel) = (g_hit.unwrap(), g_rel.unwrap());
        let force = ForceLaw::push_pull(2.0, 2.0);
        let mut dist = Vec::new();
        let mut hit_err = Vec::new();
        let mut rel_err = Vec::new();
        let mut ok = true;
        for mu in [3.0, 1.0, 0.3, 0.1] {
            match integrate_lubrication_ode(1.0, 0.0, mu, r, 1.0, &force, horizon, h, &LubricationOptions::default()) {
                Ok(lub) => {
                    dist.push(lub.linf_distance(|t| gluey.q_h(t)));
                    hit_err.push(lub.contact_time(delta).map_or(horizon, |t| (t - g_hit).abs()));
                    rel_err.push(lub.release_time(delta).map_or(horizon, |t| (t - g_rel).abs()));
                }
                Err(e) => {
                    ok = false;
                    println!("lubrication run at mu={mu} failed: {e}");
                }
            }
        }
        let decreasing = |v: &[f64], slack: f64| v.windows(2).all(|w| w[1] <= w[0] + slack);
        let pass = ok && dist.windows(2).all(|w| w[1] < w[0]) && decreasing(&hit_err, h) && decreasing(&rel_err, h);
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
        gate.report(
            10,
            "vanishing viscosity",
            pass,
            format!(
                "Linf [{}] hit err [{}] release err [{}]",
                fmt(&dist),
                fmt(&hit_err),
                fmt(&rel_err)
            ),
        );
        plane_runs.push(("gluey viscosity reference".into(), gluey));
    }

    // 3 and 4: bounds and complementarity on every plane run above plus a random family
    {
        let mut rng = ChaCha8Rng::seed_from_u64(ValidateConfig::default().seed);
        for k in 0..ValidateConfig::default().plane_runs {
            let sc = random_plane_scenario(&mut rng);
            plane_runs.push((format!("random #{k}"), run_plane_scenario(&sc).unwrap()));
        }
        let exact = PushPullExact::standard();
        assert_eq!(exact.unstick_time(), 4.0);
        let mut worst_bound = f64::NEG_INFINITY;
        let mut worst_comp: f64 = 0.0;
        let mut first_bad: Option<String> = None;
        for (name, tr) in &plane_runs {
            let b = tr.bounds();
            worst_bound = worst_bound.max(b.worst_excess());
            worst_comp = worst_comp.max(b.max_complementarity);
            if !b.holds(ROUNDING_SLACK) && first_bad.is_none() {
                first_bad = Some(name.clone());
            }
        }
        gate.report(
            3,
            "a priori bounds",
            first_bad.is_none(),
            format!(
                "{} runs, worst relative excess over bound {worst_bound:.3e}{}",
                plane_runs.len(),
                first_bad.map(|n| format!(", first failure {n}")).unwrap_or_default()
            ),
        );
        gate.report(
            4,
            "complementarity q*gamma",
            worst_comp <= 1e-12,
            format!("{} runs, max |q gamma| = {worst_comp:.3e}", plane_runs.len()),
        );
    }

    // 5, 6, 7: randomized oracle suites
    {
        let cfg = ValidateConfig::default();
        for (id, suite, limit) in [
            (5, "projection", Some(10.0)),
            (6, "nonexpansion", None),
            (7, "neighbors", None),
        ] {
            let start = Instant::now();
            let rep = run_suite(suite, &cfg, &SuiteOptions::default()).unwrap();
            let elapsed = secs(start.elapsed());
            let in_time = limit.is_none_or(|l| elapsed < l);
            gate.report(id, suite, rep.passed() && in_time, format!("{rep} in {elapsed:.2}s"));
        }
    }

    // 8: sedimentation feasibility
    {
        let cfg = scenario("sedimentation.cfg");
        let mb = cfg.multibody().unwrap();
        let start = Instant::now();
        let result = run_simulation(&mb, |_| Ok(()));
        let elapsed = start.elapsed();
        match result {
            Ok(s) => {
                let pass = s.particles == 300
                    && s.min_distance >= -1e-6
                    && s.min_gamma >= -10.0
                    && s.max_gamma <= 0.0
                    && s.max_momentum_residual <= 1e-8
                    && elapsed < Duration::from_secs(300);
                gate.report(
                    8,
                    "sedimentation feasibility",
                    pass,
                    format!(
                        "N={} steps={} min D={:.3e} gamma in [{:.3}, {:.3}] momentum {:.2e} in {:.1}s",
                        s.particles,
                        s.steps,
                        s.min_distance,
                        s.min_gamma,
                        s.max_gamma,
                        s.max_momentum_residual,
                        secs(elapsed)
                    ),
                );
            }
            Err(e) => gate.report(8, "sedimentation feasibility", false, format!("run failed: {e}")),
        }
    }

    // 11: inelastic lotto never glues
    {
        let cfg = scenario("lotto_inelastic.cfg");
        let mb = cfg.multibody().unwrap();
        let mut frames_nonzero = 0usize;
        let result = run_simulation(&mb, |f| {
            frames_nonzero += f.network.iter().filter(|c| c.gamma != 0.0).count();
            Ok(())
        });
        match result {
            Ok(s) => {
                let pass = s.particles == 40
                    && s.min_gamma == 0.0
                    && s.max_gamma == 0.0
                    && s.equality_rows_total == 0
                    && frames_nonzero == 0;
                gate.report(
                    11,
                    "inelastic lotto",
                    pass,
                    format!(
                        "N={} steps={} gamma range [{}, {}] equality rows {}",
                        s.particles, s.steps, s.min_gamma, s.max_gamma, s.equality_rows_total
                    ),
                );
            }
            Err(e) => gate.report(11, "inelastic lotto", false, format!("run failed: {e}")),
        }
    }

    gate.lines.sort_by_key(|(_, l)| l[7..9].trim().parse::<u32>().unwrap_or(0));
    println!("---- summary ----");
    for (_, l) in &gate.lines {
        println!("{l}");
    }
    let failed: Vec<&String> = gate.lines.iter().filter(|(p, _)| !p).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "{} criteria failed", failed.len());
}
