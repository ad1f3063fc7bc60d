//! `gluey`: run scenarios, convergence studies and the randomized oracle suites.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use gluey_core::convergence::{convergence_table, exact_for, write_table};
use gluey_core::multibody::run_simulation;
use gluey_core::output::FrameWriter;
use gluey_core::plane::run_plane_scenario;
use gluey_core::scenario::{parse_config, ScenarioConfig, ScenarioKind};
use gluey_core::validate::{run_suites, SuiteOptions};
use gluey_core::Error;

#[derive(Parser, Debug)]
#[command(name = "gluey", version, about = "Gluey-contact particle simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a plane or multi-particle scenario and write CSV output.
    Run(RunArgs),
    /// Step-size study of the plane scheme against the closed form.
    Convergence(ConvergenceArgs),
    /// Run the randomized oracle suites.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (TOML), or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the particle seed (or the suite seed for `validate`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Multiplies the configured particle count.
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: Common,
    /// Also write the table to convergence.csv in this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Step sizes, strictly decreasing (comma separated); replaces the config list.
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated suite names; all suites when omitted.
    #[arg(long, value_delimiter = ',')]
    suites: Vec<String>,
    /// Test hook: run Uzawa without the dual non-negativity projection.
    #[arg(long, hide = true)]
    disable_dual_projection: bool,
}

/// Failure with its exit code: 1 for usage and validation, 2 at run time.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

/// Reads a scenario file; a JSON manifest contributes its embedded config.
fn load_config(path: &Path) -> std::result::Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let is_manifest = path.extension().is_some_and(|e| e == "json");
    let toml_text = if is_manifest {
        let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        v.get("config_toml")
            .and_then(Value::as_str)
            .ok_or_else(|| Failure::Usage(format!("{}: manifest has no config_toml", path.display())))?
            .to_string()
    } else {
        text
    };
    parse_config(&toml_text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn require_config(common: &Common) -> std::result::Result<ScenarioConfig, Failure> {
    match &common.config {
        Some(p) => load_config(p),
        None => Err(Failure::Usage("--config is required".into())),
    }
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn cmd_run(args: RunArgs) -> Outcome {
    let mut cfg = require_config(&args.common)?;
    if let Some(seed) = args.common.seed {
        cfg.particles.seed = seed;
    }
    if let Some(scale) = args.scale {
        cfg.particles.scale = scale;
    }
    let problems = cfg.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems).into());
    }
    fs::create_dir_all(&args.out)?;
    let effective = cfg.to_toml();
    fs::write(args.out.join("effective.cfg"), &effective)?;

    let (outputs, summary, checks) = match cfg.scenario {
        ScenarioKind::Plane => {
            let sc = cfg.plane_scenario()?;
            let tr = run_plane_scenario(&sc)?;
            let mut w = create(&args.out.join(&cfg.output.trajectory))?;
            tr.write_csv(&mut w)?;
            w.flush()?;
            let b = tr.bounds();
            let slack = |bound: f64| 1e-12 * bound.abs().max(1.0);
            let checks = vec![
                check("speed_bound", b.max_speed, b.speed_bound, b.max_speed <= b.speed_bound + slack(b.speed_bound)),
                check(
                    "variation_bound",
                    b.variation,
                    b.variation_bound,
                    b.variation <= b.variation_bound + slack(b.variation_bound),
                ),
                check(
                    "multiplier_bound",
                    b.multiplier_l1,
                    b.multiplier_bound,
                    b.multiplier_l1 <= b.multiplier_bound + slack(b.multiplier_bound),
                ),
                check("complementarity", b.max_complementarity, 1e-12, b.max_complementarity <= 1e-12),
            ];
            let summary = json!({
                "steps": sc.steps(),
                "hitting_time": tr.hitting_time(),
                "unsticking_time": tr.unsticking_time(),
                "gamma_after_hit": tr.gamma_after_hit(),
            });
            (vec![cfg.output.trajectory.clone()], summary, checks)
        }
        ScenarioKind::Multibody => {
            let mb = cfg.multibody()?;
            let mut writer = FrameWriter::new(
                create(&args.out.join(&cfg.output.snapshots))?,
                create(&args.out.join(&cfg.output.network))?,
            )?;
            let s = run_simulation(&mb, |frame| Ok(writer.write_frame(frame)?))?;
            writer.finish()?;
            let max_radius = cfg.max_radius();
            let checks = s
                .checks(max_radius)
                .into_iter()
                .map(|c| check(c.name, c.value, c.bound, c.pass))
                .collect();
            let summary = json!({
                "particles": s.particles,
                "steps": s.steps,
                "min_distance": finite_or_null(s.min_distance),
                "min_gamma": s.min_gamma,
                "max_gamma": s.max_gamma,
                "max_momentum_residual": s.max_momentum_residual,
                "max_kkt": s.max_kkt,
                "max_iterations": s.max_iterations,
                "equality_rows_total": s.equality_rows_total,
                "takeoffs_total": s.takeoffs_total,
            });
            (
                vec![cfg.output.snapshots.clone(), cfg.output.network.clone()],
                summary,
                checks,
            )
        }
    };

    let all_pass = checks.iter().all(|c| c["pass"] == Value::Bool(true));
    let manifest = json!({
        "tool": "gluey",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "run",
        "config_path": args.common.config.as_ref().map(|p| p.display().to_string()),
        "seed": cfg.particles.seed,
        "scale": cfg.particles.scale,
        "config_toml": effective,
        "outputs": outputs,
        "summary": summary,
        "checks": checks,
    });
    fs::write(
        args.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    for c in manifest["checks"].as_array().into_iter().flatten() {
        println!(
            "{:<20} {}  value={} bound={}",
            c["name"].as_str().unwrap_or(""),
            if c["pass"] == Value::Bool(true) { "PASS" } else { "FAIL" },
            c["value"],
            c["bound"]
        );
    }
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Runtime("one or more run invariants failed".into()))
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn check(name: &str, value: f64, bound: f64, pass: bool) -> Value {
    json!({ "name": name, "value": finite_or_null(value), "bound": finite_or_null(bound), "pass": pass })
}

fn cmd_convergence(args: ConvergenceArgs) -> Outcome {
    let cfg = require_config(&args.common)?;
    let base = cfg.plane_scenario()?;
    let hs = args.h.unwrap_or_else(|| cfg.convergence.h.clone());
    if hs.is_empty() || hs.windows(2).any(|w| w[1] >= w[0]) || hs.iter().any(|h| !(*h > 0.0)) {
        return Err(Failure::Usage(format!(
            "step sizes must be positive and strictly decreasing, got {hs:?}"
        )));
    }
    let exact = exact_for(&base).map_err(|e| Failure::Usage(e.to_string()))?;
    let rows = convergence_table(&base, &exact, &hs)?;
    let mut table = Vec::new();
    write_table(&rows, &mut table)?;
    std::io::stdout().write_all(&table)?;
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("convergence.csv"), &table)?;
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Outcome {
    let cfg = match &args.common.config {
        Some(p) => load_config(p)?,
        None => ScenarioConfig::default(),
    };
    let mut vcfg = cfg.validate.clone();
    if let Some(seed) = args.common.seed {
        vcfg.seed = seed;
    }
    let opts = SuiteOptions {
        disable_dual_projection: args.disable_dual_projection,
    };
    let reports = run_suites(&args.suites, &vcfg, &opts).map_err(|e| Failure::Usage(e.to_string()))?;
    for r in &reports {
        println!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{failed} suite(s) failed")))
    }
}
