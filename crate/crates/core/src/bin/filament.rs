use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use filament_core::commands::{self, prepare_output};
use filament_core::config::InitialCondition;
use filament_core::duhamel::PerturbationMode;
use filament_core::schrodinger::EquationKind;
use filament_core::verify::explicit_failures;
use filament_core::{Error, ModelParams, RunConfig};

const EXIT_ERROR: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_ABORTED: u8 = 3;

#[derive(Parser)]
#[command(name = "filament", version, about = "Almost-parallel vortex filament toolkit")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults are used for absent fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Pair,
    Polygonal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Pair,
    Polygonal,
    Bm,
    KmdPair,
    KmdPolygon,
}

#[derive(Clone, Copy, ValueEnum)]
enum Initial {
    Background,
    Bump,
    SelfSimilar,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the self-similar profile; writes profile.json.
    Profile {
        /// Sets ω directly (polygonal mode).
        #[arg(long, allow_negative_numbers = true)]
        omega: Option<f64>,
    },
    /// Integrate a point-vortex polygon or pair; writes pv.csv.
    Pv {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        pair_distance: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
    },
    /// Split-step evolution; writes frames, summary.csv and plot series.
    Simulate(SimulateArgs),
    /// Fixed point for the perturbation r; writes fixedpoint_report.json.
    Fixedpoint {
        #[arg(long)]
        t0: Option<f64>,
        /// Bisect t0 within the configured search interval.
        #[arg(long)]
        bisect: bool,
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Check the quantitative bounds; writes verify_report.json.
    Verify {
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Uniformity table across α, e.g. `alpha=10,20,40`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Profile solves over a parameter list, e.g. `--param alpha=5,10,20`.
    Sweep {
        #[arg(long)]
        param: String,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long, value_enum)]
    initial: Option<Initial>,
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    /// Filaments of a kmd-polygon run.
    #[arg(long)]
    n_filaments: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_start: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    profile: Option<PathBuf>,
}

fn parse_alpha_list(spec: &str) -> Result<Vec<f64>, Error> {
    let values = spec
        .strip_prefix("alpha=")
        .ok_or_else(|| Error::Params(format!("expected alpha=v1,v2,..., got {spec:?}")))?;
    values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Params(format!("bad α value {v:?}"))))
        .collect()
}

fn base_config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(a) = common.alpha {
        cfg.params.alpha = a;
    }
    if let Some(m) = common.mode {
        cfg.mode = match m {
            Mode::Pair => PerturbationMode::Pair,
            Mode::Polygonal => PerturbationMode::Polygonal,
        };
    }
    Ok(cfg)
}

fn set_omega(params: &mut ModelParams, omega: f64) {
    params.omega = omega;
    params.n_filaments = None;
    params.gamma0 = None;
}

fn apply_simulate(cfg: &mut RunConfig, a: &SimulateArgs) {
    let omega = a.omega.unwrap_or(cfg.params.omega);
    if let Some(k) = a.kind {
        cfg.scenario.kind = match k {
            Kind::Pair => EquationKind::Pair,
            Kind::Polygonal => EquationKind::Polygonal { omega },
            Kind::Bm => EquationKind::Bm { omega },
            Kind::KmdPair => EquationKind::kmd_pair(),
            Kind::KmdPolygon => {
                EquationKind::kmd_polygon(a.n_filaments.unwrap_or(3), cfg.params.gamma0)
            }
        };
    }
    if let Some(i) = a.initial {
        cfg.scenario.initial = match i {
            Initial::Background => InitialCondition::Background,
            Initial::Bump => InitialCondition::Bump {
                amplitude: a.amplitude.unwrap_or(0.1),
                width: a.width.unwrap_or(1.0),
            },
            Initial::SelfSimilar => InitialCondition::SelfSimilar,
        };
    }
    if let Some(v) = a.length {
        cfg.grid.length = v;
    }
    if let Some(v) = a.n {
        cfg.grid.n = v;
    }
    if let Some(v) = a.dt {
        cfg.time.dt = v;
    }
    if let Some(v) = a.t_start {
        cfg.time.t_start = v;
    }
    if let Some(v) = a.t_end {
        cfg.time.t_end = v;
    }
    if let Some(v) = a.stride {
        cfg.time.stride = v;
    }
    if let Some(p) = &a.profile {
        cfg.profile_path = Some(p.clone());
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let mut cfg = base_config(&cli.common)?;
    match cli.command {
        Command::Profile { omega } => {
            if let Some(w) = omega {
                set_omega(&mut cfg.params, w);
            }
            let _lock = prepare_output(&cfg)?;
            let (_, s) = commands::run_profile(&cfg)?;
            println!(
                "profile: {} iterations, final update {:.3e}, max ratio {:.3e}, residual {:.3e}, u(0) = {}",
                s.iterations, s.final_update, s.max_ratio, s.residual, s.u0
            );
        }
        Command::Pv { n, pair_distance, t_final } => {
            if let Some(n) = n {
                cfg.pv.n = n;
            }
            if pair_distance.is_some() {
                cfg.pv.pair_distance = pair_distance;
            }
            if let Some(t) = t_final {
                cfg.pv.t_final = t;
            }
            let _lock = prepare_output(&cfg)?;
            let s = commands::run_pv(&cfg)?;
            println!(
                "pv: {} frames, invariant drift {:.3e}, min separation {:.6}",
                s.frames, s.invariant_drift, s.min_separation
            );
            if let Some(e) = s.exact_error {
                println!("pv: distance to rigid rotation {e:.3e}");
            }
        }
        Command::Simulate(args) => {
            apply_simulate(&mut cfg, &args);
            let _lock = prepare_output(&cfg)?;
            let s = commands::run_simulate(&cfg)?;
            println!("simulate: {} frames, min separation {:.6e}", s.frames, s.min_separation);
            if let Some((slope, pre)) = s.scaling_fit {
                println!("simulate: scaling fit slope {slope:.4}, prefactor {pre:.4}");
            }
            if let Some(abort) = &s.abort {
                eprintln!("simulate: aborted: {}", abort.reason);
                return Ok(EXIT_ABORTED);
            }
        }
        Command::Fixedpoint { t0, bisect, profile } => {
            if let Some(t0) = t0 {
                cfg.params.t0 = t0;
            }
            if bisect {
                cfg.t0_search.enabled = true;
            }
            if profile.is_some() {
                cfg.profile_path = profile;
            }
            let _lock = prepare_output(&cfg)?;
            let r = commands::run_fixedpoint(&cfg)?;
            let x = r.xnorm_components;
            println!(
                "fixedpoint: t0 = {:.4e}, {} iterations, ratios {:?}",
                r.t0, r.iterations, r.ratios
            );
            println!(
                "fixedpoint: ‖r‖_X = {:.4e} (L² {:.3e}, gradient {:.3e}, local {:.3e})",
                x.total, x.l2_component, x.grad_component, x.local_component
            );
        }
        Command::Verify { profile, trajectory, sweep } => {
            if profile.is_some() {
                cfg.profile_path = profile;
            }
            if trajectory.is_some() {
                cfg.trajectory_dir = trajectory;
            }
            let _lock = prepare_output(&cfg)?;
            let checks = match sweep {
                Some(spec) => commands::run_verify_sweep(&cfg, &parse_alpha_list(&spec)?)?,
                None => commands::run_verify(&cfg)?,
            };
            for c in &checks {
                let verdict = if c.is_explicit_failure() {
                    "FAIL"
                } else if c.passed {
                    "ok"
                } else {
                    "note"
                };
                println!("{verdict:>4}  {:<40} lhs {:.4e}  rhs {:.4e}", c.id, c.lhs_max, c.rhs_min_or_budget);
            }
            let failures = explicit_failures(&checks);
            if failures > 0 {
                let ids: Vec<&str> =
                    checks.iter().filter(|c| c.is_explicit_failure()).map(|c| c.id.as_str()).collect();
                eprintln!("verify: {failures} explicit-constant failures: {}", ids.join(", "));
                return Ok(EXIT_CHECK_FAILED);
            }
        }
        Command::Sweep { param } => {
            let alphas = parse_alpha_list(&param)?;
            let _lock = prepare_output(&cfg)?;
            for r in commands::run_sweep(&cfg, &alphas)? {
                match &r.error {
                    None => println!(
                        "alpha {:>8}: {} iterations, max ratio {:.3e}, residual {:.3e}, in E: {}",
                        r.alpha, r.iterations, r.max_ratio, r.residual, r.in_e
                    ),
                    Some(e) => println!("alpha {:>8}: {e}", r.alpha),
                }
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // keep 2 for failed checks
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
