//! The perturbation r around the renormalized self-similar solution,
//! i∂_t r + ∂_σ² r = a(r) + b (pair) or ω ã(r) + b (polygonal), solved as a
//! fixed point of the Duhamel operator A(r) = −i∫_0^t e^{i(t−s)∂²}(…)(s) ds.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutoff::{renormalizer, Renormalizer};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpatialGrid};
use crate::params::ModelParams;
use crate::profile::{HEval, ProfileSolution};
use crate::spectral::Spectral;
pub use crate::xnorm::{x_norm, FieldFrame, PerturbationTrajectory, XNormReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    APair,
    ATildePolygonal,
    B,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceField {
    pub kind: SourceKind,
    pub t: f64,
    pub values: ComplexField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationMode {
    Pair,
    Polygonal,
}

/// Discretization of the fixed-point problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DuhamelOptions {
    pub length: f64,
    pub n: usize,
    /// Intervals of the graded mesh s_k = t(k/M)².
    pub mesh: usize,
    /// Ladder t_j = t0·2^{−j}, j = 0..=levels.
    pub levels: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DuhamelOptions {
    fn default() -> Self {
        Self { length: 80.0, n: 1 << 14, mesh: 256, levels: 8, tol: 1e-10, max_iter: 50 }
    }
}

impl DuhamelOptions {
    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.length, self.n)
    }

    pub fn ladder(&self, t0: f64) -> Vec<f64> {
        (0..=self.levels).rev().map(|j| t0 * 0.5f64.powi(j as i32)).collect()
    }
}

/// σ-only data reused by every source evaluation.
#[derive(Debug, Clone)]
pub struct Background<'a> {
    pub profile: &'a ProfileSolution,
    pub alpha: f64,
    pub omega: f64,
    pub grid: SpatialGrid,
    renorm: Vec<Renormalizer>,
}

impl<'a> Background<'a> {
    pub fn new(profile: &'a ProfileSolution, params: &ModelParams, grid: SpatialGrid) -> Self {
        let alpha = params.alpha;
        let renorm = grid.nodes().iter().map(|&s| renormalizer(alpha, s)).collect();
        Self { profile, alpha, omega: params.omega, grid, renorm }
    }

    fn h(&self, t: f64, k: usize) -> HEval {
        self.profile.eval_h_unchecked(t, self.grid.node(k))
    }

    fn in_i(&self, k: usize) -> bool {
        self.alpha * self.grid.node(k).abs() < 0.5
    }

    /// H/(1+ψ(α|σ|)) at time t.
    pub fn renormalized_h(&self, t: f64) -> ComplexField {
        let v = (0..self.grid.n())
            .into_par_iter()
            .map(|k| self.h(t, k).h * self.renorm[k].value)
            .collect();
        ComplexField::from_raw(self.grid, v)
    }

    fn check_floor(&self, t: f64, k: usize, den: f64, what: &str) -> Result<()> {
        let sigma = self.grid.node(k);
        let floor = if self.in_i(k) { 1e-3 * (t.sqrt() + self.alpha * sigma.abs()) } else { 0.0 };
        if !(den > floor) {
            return Err(Error::BallViolation {
                t,
                sigma,
                what: format!("{what} denominator {den:.3e} ≤ {floor:.3e}"),
            });
        }
        Ok(())
    }

    /// Pointwise value of a(r) at node k.
    fn a_at(&self, t: f64, k: usize, r: Complex64) -> Result<Complex64> {
        let h = self.h(t, k).h;
        let g = self.renorm[k].value;
        let den = r.re + h.re * g;
        self.check_floor(t, k, den, "Re(r) + Re(H)/(1+ψ)")?;
        Ok(Complex64::new((1.0 / den - g / h.re) - 1.0, 0.0))
    }

    /// Pointwise value of ã(r) at node k.
    fn a_tilde_at(&self, t: f64, k: usize, r: Complex64) -> Result<Complex64> {
        let h = self.h(t, k).h;
        let g = self.renorm[k].value;
        let z = r + h * g;
        self.check_floor(t, k, z.norm(), "|r + H/(1+ψ)|")?;
        Ok((g / h.conj() - 1.0 / z.conj()) + z)
    }

    fn b_at(&self, t: f64, k: usize) -> Complex64 {
        let rn = self.renorm[k];
        if rn.d1 == 0.0 && rn.d2 == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let h = self.h(t, k);
        -2.0 * h.dh * rn.d1 - h.h * rn.d2
    }

    fn source_field(
        &self,
        r: &ComplexField,
        f: impl Fn(usize, Complex64) -> Result<Complex64> + Sync,
    ) -> Result<ComplexField> {
        let v: Result<Vec<Complex64>> =
            r.values().par_iter().enumerate().map(|(k, &z)| f(k, z)).collect();
        Ok(ComplexField::from_raw(self.grid, v?))
    }

    pub fn source_a(&self, r: &ComplexField, t: f64) -> Result<SourceField> {
        let values = self.source_field(r, |k, z| self.a_at(t, k, z))?;
        Ok(SourceField { kind: SourceKind::APair, t, values })
    }

    pub fn source_a_tilde(&self, r: &ComplexField, t: f64) -> Result<SourceField> {
        let values = self.source_field(r, |k, z| self.a_tilde_at(t, k, z))?;
        Ok(SourceField { kind: SourceKind::ATildePolygonal, t, values })
    }

    pub fn source_b(&self, t: f64) -> SourceField {
        let v = (0..self.grid.n()).into_par_iter().map(|k| self.b_at(t, k)).collect();
        SourceField { kind: SourceKind::B, t, values: ComplexField::from_raw(self.grid, v) }
    }

    /// Full right-hand side a(r)+b or ωã(r)+b.
    fn total_source(&self, mode: PerturbationMode, r: &ComplexField, t: f64) -> Result<ComplexField> {
        match mode {
            PerturbationMode::Pair => {
                self.source_field(r, |k, z| Ok(self.a_at(t, k, z)? + self.b_at(t, k)))
            }
            PerturbationMode::Polygonal => self.source_field(r, |k, z| {
                Ok(self.omega * self.a_tilde_at(t, k, z)? + self.b_at(t, k))
            }),
        }
    }

    /// a(r1) − a(r2) (or ω(ã(r1) − ã(r2))); b cancels.
    fn difference_source(
        &self,
        mode: PerturbationMode,
        r1: &ComplexField,
        r2: &ComplexField,
        t: f64,
    ) -> Result<ComplexField> {
        let v: Result<Vec<Complex64>> = r1
            .values()
            .par_iter()
            .zip(r2.values().par_iter())
            .enumerate()
            .map(|(k, (&z1, &z2))| match mode {
                PerturbationMode::Pair => Ok(self.a_at(t, k, z1)? - self.a_at(t, k, z2)?),
                PerturbationMode::Polygonal => {
                    Ok(self.omega * (self.a_tilde_at(t, k, z1)? - self.a_tilde_at(t, k, z2)?))
                }
            })
            .collect();
        Ok(ComplexField::from_raw(self.grid, v?))
    }
}

/// ∫_0^1 e^{iθv} v^m dv for m = 0, 1, 2.
fn phase_moments(theta: f64) -> [Complex64; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    if theta.abs() < 2.0 {
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..40 {
            for (m, o) in out.iter_mut().enumerate() {
                *o += term / (n + m + 1) as f64;
            }
            term *= Complex64::new(0.0, theta) / (n + 1) as f64;
            if term.norm() < 1e-18 {
                break;
            }
        }
        return out;
    }
    let e = Complex64::from_polar(1.0, theta);
    let it = Complex64::new(0.0, theta);
    out[0] = Complex64::new(-2.0 * (0.5 * theta).sin().powi(2), theta.sin()) / it;
    for m in 1..3 {
        out[m] = (e - m as f64 * out[m - 1]) / it;
    }
    out
}

/// An integration interval [a, a+d] with the Lagrange basis of its (up to
/// three) interpolation nodes, as monomial coefficients in u = s − a.
struct Panel {
    a: f64,
    d: f64,
    nodes: Vec<usize>,
    basis: Vec<[f64; 3]>,
}

impl Panel {
    fn new(s: &[f64], start: usize, end: usize, nodes: Vec<usize>) -> Self {
        let a = s[start];
        let x: Vec<f64> = nodes.iter().map(|&i| s[i] - a).collect();
        let basis = (0..x.len())
            .map(|i| {
                let others: Vec<f64> = (0..x.len()).filter(|&j| j != i).map(|j| x[j]).collect();
                let den: f64 = others.iter().map(|o| x[i] - o).product();
                match others[..] {
                    [] => [1.0, 0.0, 0.0],
                    [p] => [-p / den, 1.0 / den, 0.0],
                    [p, q] => [p * q / den, -(p + q) / den, 1.0 / den],
                    _ => unreachable!(),
                }
            })
            .collect();
        Self { a, d: s[end] - a, nodes, basis }
    }

    /// ∫_a^{a+d} e^{iλ(s−a)} p(s) ds as Σ_i w_i f(node_i).
    fn weights(&self, lambda: f64) -> [Complex64; 3] {
        let mo = phase_moments(lambda * self.d);
        let d = self.d;
        let mu = [mo[0] * d, mo[1] * (d * d), mo[2] * (d * d * d)];
        let mut w = [Complex64::new(0.0, 0.0); 3];
        for (wi, c) in w.iter_mut().zip(&self.basis) {
            *wi = mu[0] * c[0] + mu[1] * c[1] + mu[2] * c[2];
        }
        w
    }
}

/// −i∫_0^t e^{i(t−s)∂²} f(s) ds on the graded mesh s_k = t(k/M)². The source
/// is interpolated by piecewise quadratics in s (panels [s_{2i−1}, s_{2i+1}],
/// linear extrapolation from s_1, s_2 on [0, s_1], so s = 0 is never
/// evaluated) and the propagator phase is integrated exactly per mode.
pub fn apply_duhamel<F>(spectral: &Spectral, source: F, t: f64, mesh: usize) -> Result<ComplexField>
where
    F: Fn(f64) -> Result<ComplexField> + Sync,
{
    if mesh < 2 {
        return Err(Error::Params("Duhamel mesh needs at least two intervals".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("Duhamel time must be non-negative, got {t}")));
    }
    let grid = *spectral.grid();
    if t == 0.0 {
        return Ok(ComplexField::zeros(grid));
    }
    let s: Vec<f64> = (0..=mesh).map(|k| t * (k as f64 / mesh as f64).powi(2)).collect();
    let mut panels = vec![Panel::new(&s, 0, 1, vec![1, 2])];
    let mut k = 1;
    while k + 2 <= mesh {
        panels.push(Panel::new(&s, k, k + 2, vec![k, k + 1, k + 2]));
        k += 2;
    }
    if k < mesh {
        panels.push(Panel::new(&s, k, mesh, vec![mesh - 2, mesh - 1, mesh]));
    }
    let sources: Result<Vec<Vec<Complex64>>> = (1..=mesh)
        .into_par_iter()
        .map(|j| {
            let f = source(s[j])?;
            if *f.grid() != grid {
                return Err(Error::Grid("source grid differs from the propagator grid".into()));
            }
            let mut data = f.into_values();
            spectral.forward(&mut data);
            Ok(data)
        })
        .collect();
    let sources = sources?;
    let k2: Vec<f64> = spectral.wavenumbers().iter().map(|k| k * k).collect();
    let mut acc: Vec<Complex64> = k2
        .par_iter()
        .enumerate()
        .map(|(m, &lambda)| {
            let mut total = Complex64::new(0.0, 0.0);
            for p in &panels {
                let w = p.weights(lambda);
                let sum: Complex64 = p.nodes.iter().zip(&w).map(|(&i, wi)| wi * sources[i - 1][m]).sum();
                total += Complex64::from_polar(1.0, -(t - p.a) * lambda) * sum;
            }
            total
        })
        .collect();
    spectral.inverse(&mut acc);
    acc.iter_mut().for_each(|z| *z *= -Complex64::i());
    ComplexField::new(grid, acc)
}

/// r(s) by linear interpolation between ladder frames, and linearly to
/// r(0) = 0 below the first one.
fn interpolate(frames: &[FieldFrame], s: f64) -> ComplexField {
    let first = &frames[0];
    if s <= first.t {
        return first.field.scale(s / first.t);
    }
    let j = frames.partition_point(|f| f.t < s).min(frames.len() - 1).max(1);
    let (a, b) = (&frames[j - 1], &frames[j]);
    let w = ((s - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
    a.field.scale(1.0 - w).add(&b.field.scale(w))
}

/// One application of A on the ladder.
pub fn apply_a(
    bg: &Background,
    spectral: &Spectral,
    mode: PerturbationMode,
    r: &[FieldFrame],
    mesh: usize,
) -> Result<Vec<FieldFrame>> {
    r.iter()
        .map(|frame| {
            let field = apply_duhamel(
                spectral,
                |s| bg.total_source(mode, &interpolate(r, s), s),
                frame.t,
                mesh,
            )?;
            Ok(FieldFrame { t: frame.t, field })
        })
        .collect()
}

/// Result of the Picard iteration for r.
#[derive(Debug, Clone)]
pub struct RSolution {
    pub mode: PerturbationMode,
    pub t0: f64,
    pub trajectory: PerturbationTrajectory,
    pub iterations: usize,
    /// ‖r_{k+1}−r_k‖_X / ‖r_k−r_{k−1}‖_X
    pub ratios: Vec<f64>,
    pub increments: Vec<f64>,
}

impl RSolution {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    pub fn report(&self, alpha: f64, gamma: f64) -> FixedPointReport {
        FixedPointReport {
            alpha,
            t0: self.t0,
            gamma,
            iterations: self.iterations,
            ratios: self.ratios.clone(),
            xnorm_components: self.trajectory.report,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub alpha: f64,
    pub t0: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub ratios: Vec<f64>,
    pub xnorm_components: XNormReport,
}

/// Ball membership: ‖r‖_X ≤ 1 and ‖r(t)‖_{L∞(I)} < √t/4 on every frame.
pub fn check_ball(traj: &PerturbationTrajectory) -> Result<()> {
    if !(traj.report.total <= 1.0) {
        return Err(Error::BallViolation {
            t: traj.frames.last().map(|f| f.t).unwrap_or(0.0),
            sigma: f64::NAN,
            what: format!("‖r‖_X = {:.4e} > 1", traj.report.total),
        });
    }
    let radius = 0.5 / traj.alpha;
    for f in &traj.frames {
        let v = f.field.linf_norm_within(radius);
        if !(v < f.t.sqrt() / 4.0) {
            return Err(Error::BallViolation {
                t: f.t,
                sigma: f64::NAN,
                what: format!("‖r(t)‖_L∞(I) = {v:.3e} ≥ √t/4 = {:.3e}", f.t.sqrt() / 4.0),
            });
        }
    }
    Ok(())
}

/// Picard iteration r_{k+1} = A(r_k) from r_0 = 0 on the dyadic ladder.
pub fn solve_r(
    profile: &ProfileSolution,
    params: &ModelParams,
    mode: PerturbationMode,
    opts: &DuhamelOptions,
) -> Result<RSolution> {
    params.validate(mode == PerturbationMode::Polygonal)?;
    if profile.alpha != params.alpha {
        return Err(Error::Params(format!(
            "profile α = {} differs from parameter α = {}",
            profile.alpha, params.alpha
        )));
    }
    let grid = opts.grid()?;
    let spectral = Spectral::new(grid);
    let bg = Background::new(profile, params, grid);
    let (alpha, gamma, t0) = (params.alpha, params.gamma, params.t0);
    let mut r: Vec<FieldFrame> = opts
        .ladder(t0)
        .into_iter()
        .map(|t| FieldFrame { t, field: ComplexField::zeros(grid) })
        .collect();
    let mut ratios = Vec::new();
    let mut increments = Vec::new();
    let mut iterations = 0;
    loop {
        let next = apply_a(&bg, &spectral, mode, &r, opts.mesh)?;
        iterations += 1;
        let diff: Vec<FieldFrame> = next
            .iter()
            .zip(&r)
            .map(|(a, b)| FieldFrame { t: a.t, field: a.field.sub(&b.field) })
            .collect();
        let inc = x_norm(&diff, alpha, gamma)?.total;
        if let Some(&prev) = increments.last() {
            let ratio: f64 = if prev > 0.0 { inc / prev } else { 0.0 };
            ratios.push(ratio);
            if ratio >= 1.0 {
                return Err(Error::NoContraction { ratio, alpha, t0 });
            }
        }
        increments.push(inc);
        r = next;
        if inc < opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                last_update: inc,
                last_ratio: ratios.last().copied().unwrap_or(f64::NAN),
            });
        }
    }
    let trajectory = PerturbationTrajectory::new(r, alpha, gamma)?;
    check_ball(&trajectory)?;
    Ok(RSolution { mode, t0, trajectory, iterations, ratios, increments })
}

/// ‖A(r1)−A(r2)‖_X / ‖r1−r2‖_X with b cancelled exactly.
pub fn contraction_probe(
    r1: &PerturbationTrajectory,
    r2: &PerturbationTrajectory,
    profile: &ProfileSolution,
    params: &ModelParams,
    mode: PerturbationMode,
    opts: &DuhamelOptions,
) -> Result<f64> {
    let denom = r1.difference(r2)?.report.total;
    if denom == 0.0 {
        return Err(Error::Domain("contraction probe needs r1 ≠ r2".into()));
    }
    let grid = *r1.frames[0].field.grid();
    let spectral = Spectral::new(grid);
    let bg = Background::new(profile, params, grid);
    let frames: Result<Vec<FieldFrame>> = r1
        .frames
        .iter()
        .map(|f| {
            let field = apply_duhamel(
                &spectral,
                |s| {
                    bg.difference_source(mode, &interpolate(&r1.frames, s), &interpolate(&r2.frames, s), s)
                },
                f.t,
                opts.mesh,
            )?;
            Ok(FieldFrame { t: f.t, field })
        })
        .collect();
    Ok(x_norm(&frames?, params.alpha, params.gamma)?.total / denom)
}

/// Largest t0 (geometric bisection in [t_lo, t_hi]) for which `solve_r`
/// converges with every ratio ≤ `target` and stays in the ball.
pub fn bisect_t0(
    profile: &ProfileSolution,
    params: &ModelParams,
    mode: PerturbationMode,
    opts: &DuhamelOptions,
    t_lo: f64,
    t_hi: f64,
    steps: usize,
    target: f64,
) -> Result<RSolution> {
    let attempt = |t0: f64| -> Result<RSolution> {
        let p = ModelParams { t0, ..params.clone() };
        let sol = solve_r(profile, &p, mode, opts)?;
        if sol.max_ratio() > target {
            return Err(Error::NoContraction { ratio: sol.max_ratio(), alpha: p.alpha, t0 });
        }
        Ok(sol)
    };
    let mut best = attempt(t_lo)?;
    if let Ok(sol) = attempt(t_hi) {
        return Ok(sol);
    }
    let (mut lo, mut hi) = (t_lo.ln(), t_hi.ln());
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        match attempt(mid.exp()) {
            Ok(sol) => {
                best = sol;
                lo = mid;
            }
            Err(_) => hi = mid,
        }
    }
    Ok(best)
}

/// Ψ₁ = −it + r + H/(1+ψ) (pair) or ρe^{iθ+iωt}(r + H/(1+ψ)) (polygonal).
pub fn assemble_psi(
    bg: &Background,
    params: &ModelParams,
    mode: PerturbationMode,
    frame: &FieldFrame,
) -> ComplexField {
    let base = bg.renormalized_h(frame.t).add(&frame.field);
    match mode {
        PerturbationMode::Pair => base.map(|_, z| z - Complex64::new(0.0, frame.t)),
        PerturbationMode::Polygonal => {
            let rot = Complex64::from_polar(params.rho, params.theta + params.omega * frame.t);
            base.map(|_, z| z * rot)
        }
    }
}
