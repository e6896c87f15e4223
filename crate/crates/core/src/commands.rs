//! The pipeline stages behind the `filament` subcommands. Each stage reads a
//! [`RunConfig`] and writes its artifacts into `config.output_dir`.

use std::collections::BTreeSet;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{InitialCondition, RunConfig};
use crate::duhamel::{
    bisect_t0, check_ball, solve_r, Background, FieldFrame, FixedPointReport, PerturbationTrajectory,
};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpatialGrid};
use crate::io::{read_frames, read_json, write_frames, write_json, DirLock};
use crate::params::ModelParams;
use crate::pointvortex::{integrate_pv, invariant_drift, polygon_exact, write_pv_csv, PointVortexState};
use crate::profile::{iterate_profile, profile_residual, solve_profile, ProfileSolution};
use crate::schrodinger::{
    background, collision_scaling_fit, energy_bm, min_separation, split_step_evolve_partial, EquationKind,
    EvolutionRun,
};
use crate::verify::{
    check_denominator_bounds, check_h_bounds, check_point_vortex_regressions, check_profile_bounds,
    check_source_bounds, contraction_record, write_report, BoundCheck, CheckKind, UNIFORMITY_FACTOR,
};

pub const CONFIG_FILE: &str = "config.json";
pub const PROFILE_FILE: &str = "profile.json";
pub const FIXEDPOINT_REPORT: &str = "fixedpoint_report.json";
pub const VERIFY_REPORT: &str = "verify_report.json";

/// Locks the output directory and records the config that produced it.
pub fn prepare_output(cfg: &RunConfig) -> Result<DirLock> {
    cfg.validate()?;
    let lock = DirLock::acquire(&cfg.output_dir)?;
    cfg.save(&cfg.output_dir.join(CONFIG_FILE))?;
    Ok(lock)
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub iterations: usize,
    pub final_update: f64,
    pub max_ratio: f64,
    pub residual: f64,
    pub u0: Complex64,
}

/// Solves the profile of `config.mode` and writes profile.json with its
/// per-iteration log convergence.csv.
pub fn run_profile(cfg: &RunConfig) -> Result<(ProfileSolution, ProfileSummary)> {
    let sol = solve_profile(
        &cfg.params,
        cfg.profile_mode(),
        cfg.radial_grid()?,
        cfg.tolerances.profile_tol,
        cfg.tolerances.profile_max_iter,
    )?;
    sol.write_json(&cfg.output_dir.join(PROFILE_FILE))?;
    let mut w = csv::Writer::from_path(cfg.output_dir.join("convergence.csv"))?;
    w.write_record(["iteration", "ratio"])?;
    for (k, r) in sol.contraction_ratios.iter().enumerate() {
        w.write_record([(k + 2).to_string(), f(*r)])?;
    }
    w.flush()?;
    let summary = ProfileSummary {
        iterations: sol.iterations,
        final_update: sol.final_update,
        max_ratio: sol.max_ratio(),
        residual: profile_residual(&sol)?,
        u0: sol.u[0],
    };
    Ok((sol, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvSummary {
    pub frames: usize,
    pub invariant_drift: f64,
    pub min_separation: f64,
    /// Distance to the rigid rotation, for polygons.
    pub exact_error: Option<f64>,
}

/// Integrates the point-vortex configuration and writes pv.csv.
pub fn run_pv(cfg: &RunConfig) -> Result<PvSummary> {
    let s0 = match cfg.pv.pair_distance {
        Some(d) => PointVortexState::antiparallel_pair(d)?,
        None => PointVortexState::polygon(cfg.pv.n, cfg.params.rho, cfg.params.gamma0)?,
    };
    let traj = integrate_pv(&s0, cfg.pv.t_final, cfg.pv.dt)?;
    write_pv_csv(&cfg.output_dir.join("pv.csv"), &traj)?;
    let last = traj.last().expect("trajectory has frames");
    let exact_error = match cfg.pv.pair_distance {
        Some(_) => None,
        None if cfg.params.rho == 1.0 => {
            let exact = polygon_exact(&s0, cfg.pv.n, cfg.params.gamma0.unwrap_or(0.0), last.t);
            Some(last.z.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        }
        None => None,
    };
    let summary = PvSummary {
        frames: traj.len(),
        invariant_drift: invariant_drift(&traj),
        min_separation: traj.iter().map(|s| s.min_separation()).fold(f64::INFINITY, f64::min),
        exact_error,
    };
    write_json(&cfg.output_dir.join("pv_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    pub reason: String,
    pub t: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub completed: bool,
    pub abort: Option<Abort>,
    pub frames: usize,
    pub dt: f64,
    pub min_separation: f64,
    /// min over frames and σ of |Ψ₁| (|Φ| for bm).
    pub min_modulus: f64,
    pub energy_drift: Option<f64>,
    pub symmetry_deviation: Option<f64>,
    /// (slope, prefactor) of log 2Re Ψ₁(t,0) against log t.
    pub scaling_fit: Option<(f64, f64)>,
}

/// max_j |Ψ_j − R_jΨ₁| with R the symmetry of the configuration: Ψ₂ = −conj Ψ₁
/// for an anti-parallel pair, rotation by 2πj/N for a polygon.
fn symmetry_deviation(kind: &EquationKind, fields: &[ComplexField]) -> Option<f64> {
    let EquationKind::FullKmd { gamma, .. } = kind else { return None };
    let n = gamma.len();
    if n < 2 {
        return None;
    }
    let antiparallel = n == 2 && gamma[0] == -gamma[1];
    if !antiparallel && gamma.iter().any(|&g| g != gamma[0]) {
        return None;
    }
    let mut dev = 0.0f64;
    for j in 1..n {
        let rot = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
        for (a, b) in fields[j].values().iter().zip(fields[0].values()) {
            let image = if antiparallel { -b.conj() } else { b * rot };
            dev = dev.max((a - image).norm());
        }
    }
    Some(dev)
}

fn abort_record(e: &Error) -> Abort {
    let (t, sigma) = match e {
        Error::NearCollision { t, sigma, .. } => (Some(*t), Some(*sigma)),
        Error::BoxTooSmall { t, .. } => (Some(*t), None),
        _ => (None, None),
    };
    Abort { reason: e.to_string(), t, sigma }
}

/// Evolves the scenario and writes frames.bin, index.json, summary.csv,
/// run_summary.json and the plot series. A near-collision abort still
/// writes everything computed so far and is recorded in the summary.
pub fn run_simulate(cfg: &RunConfig) -> Result<SimulationSummary> {
    let profile = match cfg.scenario.initial {
        InitialCondition::SelfSimilar => Some(ProfileSolution::read_json(&cfg.profile_file())?),
        _ => None,
    };
    let init = cfg.initial_fields(profile.as_ref())?;
    let opts = cfg.solver_options();
    let kind = &cfg.scenario.kind;
    let (run, abort) =
        split_step_evolve_partial(init, kind, cfg.time.t_start, cfg.time.t_end, cfg.time.dt, &opts)?;
    let frames: Vec<(f64, Vec<&_>)> =
        run.frames.iter().map(|fr| (fr.t, fr.fields.iter().collect())).collect();
    write_frames(&cfg.output_dir, &frames)?;
    let summary = summarize(cfg, &run, abort.as_ref())?;
    write_json(&cfg.output_dir.join("run_summary.json"), &summary)?;
    Ok(summary)
}

fn summarize(cfg: &RunConfig, run: &EvolutionRun, abort: Option<&Error>) -> Result<SimulationSummary> {
    let kind = &run.kind;
    let opts = cfg.solver_options();
    let n_fields = kind.n_fields();
    let omega = match kind {
        EquationKind::Bm { omega } => Some(*omega),
        _ => None,
    };
    let mut w = csv::Writer::from_path(cfg.output_dir.join("summary.csv"))?;
    let mut header = vec!["t".to_string(), "min_separation".to_string()];
    header.extend((0..n_fields).map(|j| format!("l2_{j}")));
    header.push("energy".into());
    header.push("symmetry_deviation".into());
    w.write_record(&header)?;
    let mut plot = csv::Writer::from_path(cfg.output_dir.join("min_separation.csv"))?;
    plot.write_record(["t", "min_separation"])?;
    let mut energies = Vec::new();
    let mut min_sep = f64::INFINITY;
    let mut min_mod = f64::INFINITY;
    let mut sym_max: Option<f64> = None;
    for fr in &run.frames {
        let sep = min_separation(kind, &fr.fields);
        min_sep = min_sep.min(sep);
        min_mod = min_mod.min(fr.fields[0].values().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min));
        let mut rec = vec![f(fr.t), f(sep)];
        let bgv = background(kind, &opts, fr.t);
        for field in &fr.fields {
            // decaying part for the single equations
            let l2 = match bgv {
                Some(b) => field.map(|_, z| z - b).l2_norm(),
                None => field.l2_norm(),
            };
            rec.push(f(l2));
        }
        match omega {
            Some(om) => {
                let e = energy_bm(&fr.fields[0], om)?;
                energies.push(e);
                rec.push(f(e));
            }
            None => rec.push(String::new()),
        }
        match symmetry_deviation(kind, &fr.fields) {
            Some(d) => {
                sym_max = Some(sym_max.map_or(d, |m| m.max(d)));
                rec.push(f(d));
            }
            None => rec.push(String::new()),
        }
        w.write_record(&rec)?;
        plot.write_record([f(fr.t), f(sep)])?;
    }
    w.flush()?;
    plot.flush()?;
    write_snapshots(&cfg.output_dir.join("snapshots.csv"), run)?;
    let energy_drift = energies.first().map(|&e0| {
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / scale
    });
    let scaling_fit = if *kind == EquationKind::Pair && run.frames.len() >= 2 && run.frames[0].t > 0.0 {
        collision_scaling_fit(run).ok()
    } else {
        None
    };
    Ok(SimulationSummary {
        completed: abort.is_none(),
        abort: abort.map(abort_record),
        frames: run.frames.len(),
        dt: run.dt,
        min_separation: min_sep,
        min_modulus: min_mod,
        energy_drift,
        symmetry_deviation: sym_max,
        scaling_fit,
    })
}

/// σ against Re and Im of the first field at up to five evenly spaced frames.
fn write_snapshots(path: &Path, run: &EvolutionRun) -> Result<()> {
    let n = run.frames.len();
    let mut picks: Vec<usize> = (0..5).map(|k| k * (n - 1) / 4).collect();
    picks.dedup();
    let grid = *run.frames[0].fields[0].grid();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sigma".to_string()];
    for &p in &picks {
        header.push(format!("re_t{:?}", run.frames[p].t));
        header.push(format!("im_t{:?}", run.frames[p].t));
    }
    w.write_record(&header)?;
    for k in 0..grid.n() {
        let mut rec = vec![f(grid.node(k))];
        for &p in &picks {
            let z = run.frames[p].fields[0].values()[k];
            rec.push(f(z.re));
            rec.push(f(z.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Solves for r (bisecting t0 when configured), writes the trajectory of r
/// as frames.bin/index.json and fixedpoint_report.json.
pub fn run_fixedpoint(cfg: &RunConfig) -> Result<FixedPointReport> {
    let profile = ProfileSolution::read_json(&cfg.profile_file())?;
    let target = cfg.tolerances.ratio_target;
    let sol = if cfg.t0_search.enabled {
        let s = &cfg.t0_search;
        bisect_t0(&profile, &cfg.params, cfg.mode, &cfg.duhamel, s.lo, s.hi, s.steps, target)?
    } else {
        solve_r(&profile, &cfg.params, cfg.mode, &cfg.duhamel)?
    };
    let report = sol.report(cfg.params.alpha, cfg.params.gamma);
    write_json(&cfg.output_dir.join(FIXEDPOINT_REPORT), &report)?;
    let frames: Vec<(f64, Vec<&_>)> =
        sol.trajectory.frames.iter().map(|fr| (fr.t, vec![&fr.field])).collect();
    write_frames(&cfg.output_dir, &frames)?;
    if sol.max_ratio() > target {
        return Err(Error::NoContraction { ratio: sol.max_ratio(), alpha: cfg.params.alpha, t0: sol.t0 });
    }
    check_ball(&sol.trajectory)?;
    Ok(report)
}

fn h_samples(cfg: &RunConfig) -> (Vec<f64>, Vec<f64>) {
    let v = &cfg.verify;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (v.t_min.ln(), v.t_max.ln());
    let ts = (0..v.t_samples).map(|_| rng.gen_range(lo..=hi).exp()).collect();
    let mut sigmas: Vec<f64> = (0..v.sigma_samples).map(|_| rng.gen_range(-v.sigma_max..=v.sigma_max)).collect();
    sigmas.push(0.0);
    (ts, sigmas)
}

fn load_trajectory(dir: &Path, params: &ModelParams) -> Result<(SpatialGrid, PerturbationTrajectory)> {
    let (index, frames) = read_frames(dir)?;
    let frames = frames
        .into_iter()
        .map(|(t, mut fields)| FieldFrame { t, field: fields.swap_remove(0) })
        .collect();
    Ok((index.grid, PerturbationTrajectory::new(frames, params.alpha, params.gamma)?))
}

/// Runs every check applicable to the available artifacts and writes
/// verify_report.json.
pub fn run_verify(cfg: &RunConfig) -> Result<Vec<BoundCheck>> {
    let profile_path = cfg.profile_file();
    let traj_dir = cfg.trajectory_dir.clone();
    if !profile_path.exists() && traj_dir.is_none() {
        return Err(Error::Empty(format!("no artifacts to verify ({} missing)", profile_path.display())));
    }
    let profile = ProfileSolution::read_json(&profile_path)?;
    let mut checks = check_profile_bounds(&profile);
    let (ts, sigmas) = h_samples(cfg);
    checks.extend(check_h_bounds(&profile, &ts, &sigmas)?);
    if let Some(dir) = traj_dir {
        let (grid, traj) = load_trajectory(&dir, &cfg.params)?;
        let bg = Background::new(&profile, &cfg.params, grid);
        checks.extend(check_denominator_bounds(&traj, &bg));
        checks.extend(check_source_bounds(&traj, &bg, cfg.mode)?);
        let report: FixedPointReport = read_json(&dir.join(FIXEDPOINT_REPORT))?;
        checks.push(contraction_record(report.ratios.iter().copied().fold(0.0, f64::max)));
    }
    checks.extend(check_point_vortex_regressions()?);
    write_report(&cfg.output_dir.join(VERIFY_REPORT), &checks)?;
    Ok(checks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConstant {
    pub id: String,
    pub alpha: f64,
    pub measured: f64,
    /// The profile at this α converged but lies outside E.
    pub outside_e: bool,
}

/// Measured constants of the symbolic bounds at each α, evaluated on the
/// profile and on the r ≡ 0 trajectory over the dyadic ladder. Writes
/// sweep_constants.csv and a verify_report.json holding the explicit checks
/// per α and one uniformity record per constant across α.
pub fn run_verify_sweep(cfg: &RunConfig, alphas: &[f64]) -> Result<Vec<BoundCheck>> {
    if alphas.is_empty() {
        return Err(Error::Empty("empty α sweep".into()));
    }
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let (ts, sigmas) = h_samples(cfg);
    let grid = cfg.duhamel.grid()?;
    for &alpha in alphas {
        let params = ModelParams { alpha, ..cfg.params.clone() };
        let mode = match cfg.mode {
            crate::duhamel::PerturbationMode::Pair => crate::profile::ProfileMode::Pair,
            crate::duhamel::PerturbationMode::Polygonal => {
                crate::profile::ProfileMode::Polygonal { omega: params.omega }
            }
        };
        let sol = iterate_profile(
            &params,
            mode,
            cfg.radial_grid()?,
            cfg.tolerances.profile_tol,
            cfg.tolerances.profile_max_iter,
        )?;
        let outside_e = !sol.membership().member;
        let mut local = check_profile_bounds(&sol);
        local.extend(check_h_bounds(&sol, &ts, &sigmas)?);
        let frames = cfg
            .duhamel
            .ladder(params.t0)
            .into_iter()
            .map(|t| FieldFrame { t, field: ComplexField::zeros(grid) })
            .collect();
        let traj = PerturbationTrajectory::new(frames, alpha, params.gamma)?;
        let bg = Background::new(&sol, &params, grid);
        local.extend(check_denominator_bounds(&traj, &bg));
        local.extend(check_source_bounds(&traj, &bg, cfg.mode)?);
        for mut c in local {
            if c.kind == CheckKind::Symbolic {
                rows.push(SweepConstant { id: c.id.clone(), alpha, measured: c.lhs_max, outside_e });
            }
            c.id = format!("{}@alpha={alpha:?}", c.id);
            if outside_e {
                c.note = format!("profile outside E at this α. {}", c.note);
            }
            checks.push(c);
        }
    }
    let ids: BTreeSet<String> = rows.iter().map(|r| r.id.clone()).collect();
    for id in ids {
        let cs: Vec<f64> = rows.iter().filter(|r| r.id == id && r.measured > 0.0).map(|r| r.measured).collect();
        let max = cs.iter().copied().fold(0.0, f64::max);
        let min = cs.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = if cs.is_empty() { 1.0 } else { max / min };
        checks.push(BoundCheck {
            id: format!("{id}-sweep-uniformity"),
            kind: CheckKind::Uniformity,
            lhs_max: ratio,
            rhs_min_or_budget: UNIFORMITY_FACTOR,
            margin: UNIFORMITY_FACTOR - ratio,
            passed: ratio <= UNIFORMITY_FACTOR,
            nodes_checked: cs.len(),
            premise_violated: false,
            worst_at: Vec::new(),
            note: format!("max/min of the measured constant across α ∈ {alphas:?}"),
        });
    }
    let mut w = csv::Writer::from_path(cfg.output_dir.join("sweep_constants.csv"))?;
    w.write_record(["id", "alpha", "measured", "outside_e"])?;
    for r in &rows {
        w.write_record([r.id.clone(), f(r.alpha), f(r.measured), r.outside_e.to_string()])?;
    }
    w.flush()?;
    write_report(&cfg.output_dir.join(VERIFY_REPORT), &checks)?;
    Ok(checks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub converged: bool,
    pub in_e: bool,
    pub iterations: usize,
    pub max_ratio: f64,
    pub residual: f64,
    pub error: Option<String>,
}

/// Profile solves over a list of α, written to sweep.csv. Failures are rows,
/// not errors.
pub fn run_sweep(cfg: &RunConfig, alphas: &[f64]) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::Empty("empty α sweep".into()));
    }
    let mut rows = Vec::new();
    for &alpha in alphas {
        let params = ModelParams { alpha, ..cfg.params.clone() };
        let mut sub = cfg.clone();
        sub.params = params.clone();
        let row = match iterate_profile(
            &params,
            sub.profile_mode(),
            cfg.radial_grid()?,
            cfg.tolerances.profile_tol,
            cfg.tolerances.profile_max_iter,
        ) {
            Ok(sol) => SweepRow {
                alpha,
                converged: true,
                in_e: sol.membership().member,
                iterations: sol.iterations,
                max_ratio: sol.max_ratio(),
                residual: profile_residual(&sol)?,
                error: None,
            },
            Err(e) => SweepRow {
                alpha,
                converged: false,
                in_e: false,
                iterations: 0,
                max_ratio: f64::NAN,
                residual: f64::NAN,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    let mut w = csv::Writer::from_path(cfg.output_dir.join("sweep.csv"))?;
    w.write_record(["alpha", "converged", "in_e", "iterations", "max_ratio", "residual", "error"])?;
    for r in &rows {
        w.write_record([
            f(r.alpha),
            r.converged.to_string(),
            r.in_e.to_string(),
            r.iterations.to_string(),
            f(r.max_ratio),
            f(r.residual),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    write_json(&cfg.output_dir.join("sweep.json"), &rows)?;
    Ok(rows)
}
