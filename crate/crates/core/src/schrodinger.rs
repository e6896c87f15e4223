//! Split-step solvers for the filament system
//! i∂_tΨ_j + Γ_j∂_σ²Ψ_j + κ Σ_{k≠j} Γ_k (Ψ_j−Ψ_k)/|Ψ_j−Ψ_k|² = 0
//! and its single-equation reductions.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpatialGrid};
use crate::spectral::Spectral;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquationKind {
    /// i∂_tΨ + ∂²Ψ − 1/Re(Ψ) = 0
    Pair,
    /// i∂_tΨ + ∂²Ψ + ωΨ/|Ψ|² = 0
    Polygonal { omega: f64 },
    /// i∂_tΦ + ∂²Φ + ωΦ(1−|Φ|²)/|Φ|² = 0
    Bm { omega: f64 },
    /// The coupled system. `center` is a filament of the given circulation
    /// held at σ-independent position 0, as imposed by the polygonal symmetry.
    FullKmd {
        gamma: Vec<f64>,
        coupling: f64,
        #[serde(default)]
        center: Option<f64>,
    },
}

impl EquationKind {
    /// The rescaled anti-parallel pair system: Γ = (1, −1), κ = 2.
    pub fn kmd_pair() -> Self {
        EquationKind::FullKmd { gamma: vec![1.0, -1.0], coupling: 2.0, center: None }
    }

    /// N unit filaments around an optional pinned center.
    pub fn kmd_polygon(n: usize, gamma0: Option<f64>) -> Self {
        EquationKind::FullKmd { gamma: vec![1.0; n], coupling: 1.0, center: gamma0 }
    }

    pub fn n_fields(&self) -> usize {
        match self {
            EquationKind::FullKmd { gamma, .. } => gamma.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EquationKind::FullKmd { gamma, coupling, center } => {
                if gamma.is_empty() {
                    return Err(Error::Params("full system needs at least one filament".into()));
                }
                if gamma.iter().chain(center.iter()).any(|&g| g == 0.0 || !g.is_finite()) {
                    return Err(Error::Params("circulations must be finite and nonzero".into()));
                }
                if !coupling.is_finite() {
                    return Err(Error::Params("coupling must be finite".into()));
                }
                Ok(())
            }
            EquationKind::Polygonal { omega } | EquationKind::Bm { omega } if !omega.is_finite() => {
                Err(Error::Params("ω must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    fn dispersion(&self, j: usize) -> f64 {
        match self {
            EquationKind::FullKmd { gamma, .. } => gamma[j],
            _ => 1.0,
        }
    }
}

/// Solver knobs shared by all kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Denominators below this abort the run as a near-collision.
    pub floor_eps: f64,
    /// Largest admissible |field − background| at the periodic seam.
    pub edge_tol: f64,
    /// Store every `stride`-th step (the last step is always stored).
    pub stride: usize,
    /// Polygonal background ρe^{iθ+iωt}.
    pub rho: f64,
    pub theta: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { floor_eps: 1e-6, edge_tol: 1e-8, stride: 1, rho: 1.0, theta: 0.0 }
    }
}

/// One stored time slice; one field per filament.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionFrame {
    pub t: f64,
    pub fields: Vec<ComplexField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionRun {
    pub kind: EquationKind,
    pub frames: Vec<EvolutionFrame>,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub background: String,
}

/// Far-field value of filament 0 at time t, if the kind has one.
pub fn background(kind: &EquationKind, opts: &SolverOptions, t: f64) -> Option<Complex64> {
    match kind {
        EquationKind::Pair => Some(Complex64::new(1.0, -t)),
        EquationKind::Polygonal { omega } => {
            Some(Complex64::from_polar(opts.rho, opts.theta + omega * t))
        }
        EquationKind::Bm { .. } => Some(Complex64::new(1.0, 0.0)),
        EquationKind::FullKmd { .. } => None,
    }
}

fn background_label(kind: &EquationKind) -> String {
    match kind {
        EquationKind::Pair => "1 - i t".into(),
        EquationKind::Polygonal { .. } => "rho exp(i theta + i omega t)".into(),
        EquationKind::Bm { .. } => "1".into(),
        EquationKind::FullKmd { .. } => "none".into(),
    }
}

fn near_collision(t: f64, grid: &SpatialGrid, k: usize, value: f64) -> Error {
    Error::NearCollision { t, sigma: grid.node(k), value }
}

/// Pointwise exact (or RK4 for the coupled system) nonlinear flow over `dt`.
pub fn nonlinear_substep(
    fields: &mut [ComplexField],
    kind: &EquationKind,
    dt: f64,
    t: f64,
    floor_eps: f64,
) -> Result<()> {
    let grid = *fields[0].grid();
    match kind {
        EquationKind::Pair => {
            let f = fields[0].values_mut();
            if let Some(k) = f.iter().position(|z| !(z.re >= floor_eps)) {
                return Err(near_collision(t, &grid, k, f[k].re));
            }
            f.iter_mut().for_each(|z| z.im -= dt / z.re);
        }
        EquationKind::Polygonal { omega } => {
            let f = fields[0].values_mut();
            if let Some(k) = f.iter().position(|z| !(z.norm() >= floor_eps)) {
                return Err(near_collision(t, &grid, k, f[k].norm()));
            }
            f.iter_mut()
                .for_each(|z| *z *= Complex64::from_polar(1.0, omega * dt / z.norm_sqr()));
        }
        EquationKind::Bm { omega } => {
            let f = fields[0].values_mut();
            if let Some(k) = f.iter().position(|z| !(z.norm() >= floor_eps)) {
                return Err(near_collision(t, &grid, k, f[k].norm()));
            }
            f.iter_mut().for_each(|z| {
                let m = z.norm_sqr();
                *z *= Complex64::from_polar(1.0, omega * (1.0 - m) * dt / m);
            });
        }
        EquationKind::FullKmd { gamma, coupling, center } => {
            kmd_substep(fields, gamma, *coupling, *center, dt, t, floor_eps)?;
        }
    }
    Ok(())
}

fn kmd_velocity(
    psi: &[Complex64],
    gamma: &[f64],
    coupling: f64,
    center: Option<f64>,
    out: &mut [Complex64],
) -> f64 {
    let n = psi.len();
    let mut min_d = f64::INFINITY;
    out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    for j in 0..n {
        for k in j + 1..n {
            let d = psi[j] - psi[k];
            let r2 = d.norm_sqr();
            min_d = min_d.min(r2.sqrt());
            let e = d / r2;
            out[j] += gamma[k] * e;
            out[k] -= gamma[j] * e;
        }
        if let Some(g0) = center {
            let r2 = psi[j].norm_sqr();
            min_d = min_d.min(r2.sqrt());
            out[j] += g0 * psi[j] / r2;
        }
    }
    let scale = Complex64::new(0.0, coupling);
    out.iter_mut().for_each(|v| *v *= scale);
    min_d
}

fn kmd_substep(
    fields: &mut [ComplexField],
    gamma: &[f64],
    coupling: f64,
    center: Option<f64>,
    dt: f64,
    t: f64,
    floor_eps: f64,
) -> Result<()> {
    let n = fields.len();
    let grid = *fields[0].grid();
    let mut columns: Vec<Vec<Complex64>> =
        (0..grid.n()).map(|k| fields.iter().map(|f| f.values()[k]).collect()).collect();
    let failures: Vec<(usize, f64)> = columns
        .par_iter_mut()
        .enumerate()
        .filter_map(|(k, psi)| {
            let mut k1 = vec![Complex64::new(0.0, 0.0); n];
            let mut k2 = k1.clone();
            let mut k3 = k1.clone();
            let mut k4 = k1.clone();
            let mut tmp = k1.clone();
            let mut min_d = kmd_velocity(psi, gamma, coupling, center, &mut k1);
            for j in 0..n {
                tmp[j] = psi[j] + k1[j] * (0.5 * dt);
            }
            min_d = min_d.min(kmd_velocity(&tmp, gamma, coupling, center, &mut k2));
            for j in 0..n {
                tmp[j] = psi[j] + k2[j] * (0.5 * dt);
            }
            min_d = min_d.min(kmd_velocity(&tmp, gamma, coupling, center, &mut k3));
            for j in 0..n {
                tmp[j] = psi[j] + k3[j] * dt;
            }
            min_d = min_d.min(kmd_velocity(&tmp, gamma, coupling, center, &mut k4));
            if !(min_d >= floor_eps) {
                return Some((k, min_d));
            }
            for j in 0..n {
                psi[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0);
            }
            None
        })
        .collect();
    if let Some(&(k, d)) = failures.iter().min_by_key(|f| f.0) {
        return Err(near_collision(t, &grid, k, d));
    }
    for (j, f) in fields.iter_mut().enumerate() {
        for (k, z) in f.values_mut().iter_mut().enumerate() {
            *z = columns[k][j];
        }
    }
    Ok(())
}

/// One Strang step: half nonlinear, full free, half nonlinear. `dt` may be
/// negative.
pub fn strang_step(
    spectral: &Spectral,
    fields: &mut [ComplexField],
    kind: &EquationKind,
    t: f64,
    dt: f64,
    floor_eps: f64,
) -> Result<()> {
    nonlinear_substep(fields, kind, 0.5 * dt, t, floor_eps)?;
    for (j, f) in fields.iter_mut().enumerate() {
        spectral.propagate_in_place(f.values_mut(), dt, kind.dispersion(j));
    }
    nonlinear_substep(fields, kind, 0.5 * dt, t + 0.5 * dt, floor_eps)?;
    Ok(())
}

fn edge_deviation(kind: &EquationKind, opts: &SolverOptions, t: f64, field: &ComplexField) -> f64 {
    match background(kind, opts, t) {
        Some(b) => {
            let v = field.values();
            (v[0] - b).norm().max((v[v.len() - 1] - b).norm())
        }
        None => 0.0,
    }
}

/// Strang evolution from `t_start` to `t_end`. The step count is
/// ⌈(t_end−t_start)/dt⌉ and the step is shrunk to fit exactly.
pub fn split_step_evolve(
    init: Vec<ComplexField>,
    kind: &EquationKind,
    t_start: f64,
    t_end: f64,
    dt: f64,
    opts: &SolverOptions,
) -> Result<EvolutionRun> {
    match split_step_evolve_partial(init, kind, t_start, t_end, dt, opts)? {
        (run, None) => Ok(run),
        (_, Some(e)) => Err(e),
    }
}

/// As [`split_step_evolve`], but a run that aborts (near-collision, edge
/// guard, non-finite values) returns the frames stored so far together
/// with the abort reason. Invalid inputs are still errors.
pub fn split_step_evolve_partial(
    init: Vec<ComplexField>,
    kind: &EquationKind,
    t_start: f64,
    t_end: f64,
    dt: f64,
    opts: &SolverOptions,
) -> Result<(EvolutionRun, Option<Error>)> {
    kind.validate()?;
    if init.len() != kind.n_fields() {
        return Err(Error::Domain(format!(
            "{} initial fields for a system of {}",
            init.len(),
            kind.n_fields()
        )));
    }
    if !(t_end > t_start) {
        return Err(Error::Params(format!("t_end = {t_end} must exceed t_start = {t_start}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Params(format!("dt must be positive, got {dt}")));
    }
    if opts.stride == 0 {
        return Err(Error::Params("stride must be at least 1".into()));
    }
    let grid = *init[0].grid();
    if init.iter().any(|f| *f.grid() != grid || !f.is_finite()) {
        return Err(Error::Domain("initial fields must be finite and share one grid".into()));
    }
    let spectral = Spectral::new(grid);
    let span = t_end - t_start;
    let steps = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = span / steps as f64;

    let check_edge = |t: f64, fields: &[ComplexField]| -> Result<()> {
        let e = edge_deviation(kind, opts, t, &fields[0]);
        if e > opts.edge_tol {
            return Err(Error::BoxTooSmall { t, value: e, tol: opts.edge_tol });
        }
        Ok(())
    };

    let mut fields = init;
    check_edge(t_start, &fields)?;
    let mut frames = vec![EvolutionFrame { t: t_start, fields: fields.clone() }];
    let mut abort = None;
    for s in 0..steps {
        let t = t_start + s as f64 * h;
        let t_next = if s + 1 == steps { t_end } else { t_start + (s + 1) as f64 * h };
        let step = strang_step(&spectral, &mut fields, kind, t, h, opts.floor_eps).and_then(|_| {
            if fields.iter().any(|f| !f.is_finite()) {
                return Err(Error::Domain(format!("non-finite field at t = {t_next}")));
            }
            check_edge(t_next, &fields)
        });
        if let Err(e) = step {
            abort = Some(e);
            break;
        }
        if (s + 1) % opts.stride == 0 || s + 1 == steps {
            frames.push(EvolutionFrame { t: t_next, fields: fields.clone() });
        }
    }
    let run = EvolutionRun {
        kind: kind.clone(),
        frames,
        dt: h,
        t_start,
        t_end,
        background: background_label(kind),
    };
    Ok((run, abort))
}

/// E(Φ) = ∫|∂_σΦ|² + ω∫(−ln|Φ|² + |Φ|² − 1), spectral gradient, periodic
/// trapezoid sums.
pub fn energy_bm(phi: &ComplexField, omega: f64) -> Result<f64> {
    let grid = *phi.grid();
    if let Some(k) = phi.values().iter().position(|z| z.norm() == 0.0) {
        return Err(Error::Domain(format!("|Φ| = 0 at σ = {}", grid.node(k))));
    }
    let grad = Spectral::new(grid).derivative(phi).l2_norm().powi(2);
    let pot: f64 = phi
        .values()
        .iter()
        .map(|z| {
            let m = z.norm_sqr();
            -m.ln() + m - 1.0
        })
        .sum::<f64>()
        * grid.h();
    Ok(grad + omega * pot)
}

/// Collision distance of a frame: 2Re(Ψ₁) for the pair, |Ψ| for the
/// polygonal and perturbation kinds, min pairwise |Ψ_j−Ψ_k| for the system.
pub fn min_separation(kind: &EquationKind, fields: &[ComplexField]) -> f64 {
    match kind {
        EquationKind::Pair => {
            fields[0].values().iter().map(|z| 2.0 * z.re).fold(f64::INFINITY, f64::min)
        }
        EquationKind::Polygonal { .. } | EquationKind::Bm { .. } => {
            fields[0].values().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
        }
        EquationKind::FullKmd { center, .. } => {
            let n = fields.len();
            let m = fields[0].values().len();
            let mut d = f64::INFINITY;
            for k in 0..m {
                for a in 0..n {
                    if center.is_some() {
                        d = d.min(fields[a].values()[k].norm());
                    }
                    for b in a + 1..n {
                        d = d.min((fields[a].values()[k] - fields[b].values()[k]).norm());
                    }
                }
            }
            d
        }
    }
}

/// Evolve the coupled polygon and the reduced single equation side by side
/// and return max_{t,σ,j} |Ψ_j − e^{i(j−1)2π/N}Ψ₁^{reduced}|.
pub fn full_kmd_symmetry_check(
    psi1: &ComplexField,
    n: usize,
    gamma0: Option<f64>,
    t_end: f64,
    dt: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::Params("need at least one filament".into()));
    }
    let omega = (n as f64 - 1.0) / 2.0 + gamma0.unwrap_or(0.0);
    let rot = |j: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64);
    let init: Vec<ComplexField> = (0..n)
        .map(|j| psi1.map(|_, z| z * rot(j)))
        .collect();
    let full_kind = EquationKind::kmd_polygon(n, gamma0);
    let reduced_kind = EquationKind::Polygonal { omega };
    let mut reduced_opts = opts.clone();
    reduced_opts.edge_tol = f64::INFINITY;
    let full = split_step_evolve(init, &full_kind, 0.0, t_end, dt, opts)?;
    let reduced = split_step_evolve(vec![psi1.clone()], &reduced_kind, 0.0, t_end, dt, &reduced_opts)?;
    let mut dev = 0.0f64;
    for (a, b) in full.frames.iter().zip(&reduced.frames) {
        for j in 0..n {
            for (x, y) in a.fields[j].values().iter().zip(b.fields[0].values()) {
                dev = dev.max((x - y * rot(j)).norm());
            }
        }
    }
    Ok(dev)
}

/// Least-squares fit of log(separation) against log t; returns
/// (slope, prefactor) with prefactor = e^{intercept}.
pub fn scaling_fit(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::Empty("scaling fit needs at least two samples".into()));
    }
    if let Some(&(t, s)) = samples.iter().find(|(t, s)| !(*t > 0.0 && *s > 0.0)) {
        return Err(Error::Domain(format!("non-positive sample (t = {t}, separation = {s})")));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("scaling fit needs distinct times".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, (my - slope * mx).exp()))
}

/// Fit of 2Re(Ψ₁(t,0)) over the frames of a pair run.
pub fn collision_scaling_fit(run: &EvolutionRun) -> Result<(f64, f64)> {
    if run.kind != EquationKind::Pair {
        return Err(Error::Domain("collision scaling fit needs a pair run".into()));
    }
    let samples: Vec<(f64, f64)> = run
        .frames
        .iter()
        .map(|f| {
            let g = f.fields[0].grid();
            (f.t, 2.0 * f.fields[0].values()[g.origin_index()].re)
        })
        .collect();
    scaling_fit(&samples)
}
