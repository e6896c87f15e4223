//! Self-similar collision profiles.
//!
//! A profile u solves i(u − xu′) + 2u″ + 2N(u) = 0 with u(0) = 1 and
//! u(x) ~ α|x| at infinity, where N(u) = −1/Re(u) for the anti-parallel pair
//! and N(u) = ω u/|u|² for the rotating polygon. Writing v = u − xu′ and
//! w = v − 1, the profile is the fixed point of
//!
//! ```text
//! P(w)(x) = e^{ix²/4} − 1 + e^{ix²/4} ∫_0^x y e^{−iy²/4} N(u(w))(y) dy
//! u(w)(x) = 1 + |x| (α + ∫_{|x|}^∞ w(z)/z² dz)
//! ```
//!
//! on the radial half-line; evenness is structural.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::params::ModelParams;
use crate::quadrature::{cumulative_from_left, cumulative_from_right, trapezoid_complex};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileMode {
    Pair,
    Polygonal { omega: f64 },
}

impl ProfileMode {
    pub fn omega(&self) -> Option<f64> {
        match self {
            ProfileMode::Pair => None,
            ProfileMode::Polygonal { omega } => Some(*omega),
        }
    }

    /// Nonlinearity N(u) of the profile equation: v′ = (ix/2)v + x N(u).
    fn nonlinearity(&self, u: Complex64) -> Complex64 {
        match self {
            ProfileMode::Pair => Complex64::new(-1.0 / u.re, 0.0),
            ProfileMode::Polygonal { omega } => *omega / u.conj(),
        }
    }

    /// dN/dx given u and u′.
    fn nonlinearity_derivative(&self, u: Complex64, du: Complex64) -> Complex64 {
        match self {
            ProfileMode::Pair => Complex64::new(du.re / (u.re * u.re), 0.0),
            ProfileMode::Polygonal { omega } => -*omega * du.conj() / (u.conj() * u.conj()),
        }
    }

    fn check_denominator(&self, x: f64, u: Complex64) -> Result<()> {
        match self {
            ProfileMode::Pair if !(u.re > 0.0) => Err(Error::SingularDenominator {
                x,
                what: format!("Re(u) = {:.3e} ≤ 0", u.re),
            }),
            ProfileMode::Polygonal { .. } if u.norm() == 0.0 || !u.norm().is_finite() => {
                Err(Error::SingularDenominator { x, what: "|u| = 0".into() })
            }
            _ => Ok(()),
        }
    }
}

/// Membership test for the contraction space E.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EMembership {
    pub sup_w: f64,
    pub sup_ratio: f64,
    pub bound: f64,
    pub member: bool,
}

/// A converged (or in-progress) profile on a radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSolution {
    pub mode: ProfileMode,
    pub alpha: f64,
    pub grid: RadialGrid,
    pub w: Vec<Complex64>,
    pub u: Vec<Complex64>,
    pub iterations: usize,
    pub final_update: f64,
    pub tail_bound: f64,
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    du: Vec<Complex64>,
    d2u: Vec<Complex64>,
    d3u: Vec<Complex64>,
}

/// Serialized profile document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub mode: String,
    pub alpha: f64,
    pub omega: Option<f64>,
    pub nodes: Vec<f64>,
    pub w_re: Vec<f64>,
    pub w_im: Vec<f64>,
    pub u_re: Vec<f64>,
    pub u_im: Vec<f64>,
    pub iterations: usize,
    pub final_update: f64,
    pub tail_bound: f64,
    #[serde(default)]
    pub contraction_ratios: Vec<f64>,
}

/// Samples of ∫_x^∞ w(z)/z² dz with the tail on [X_max, ∞) taken as w(X_max)/X_max.
fn tail_integral(grid: &RadialGrid, w: &[Complex64]) -> Result<Vec<Complex64>> {
    let x = grid.nodes();
    let m = x.len();
    let mut f: Vec<Complex64> = x
        .iter()
        .zip(w)
        .skip(1)
        .map(|(&z, &wz)| wz / (z * z))
        .collect();
    // w = O(z²) at 0 but not even in z, so extrapolate w/z² with a cubic
    let f0 = if f.len() >= 4 {
        f[0] * 4.0 - f[1] * 6.0 + f[2] * 4.0 - f[3]
    } else {
        f[0]
    };
    f.insert(0, f0);
    let inner = if grid.is_uniform() {
        cumulative_from_right(grid.h(), &f)?
    } else {
        let mut out = vec![Complex64::new(0.0, 0.0); m];
        for j in (0..m - 1).rev() {
            out[j] = out[j + 1] + trapezoid_complex(&x[j..j + 2], &f[j..j + 2])?;
        }
        out
    };
    let tail = w[m - 1] / x[m - 1];
    Ok(inner.into_iter().map(|v| v + tail).collect())
}

/// Coupling u(x) = 1 + x(α + ∫_x^∞ w/z²) on the radial grid.
pub fn couple_u(grid: &RadialGrid, w: &[Complex64], alpha: f64) -> Result<Vec<Complex64>> {
    if w.len() != grid.len() {
        return Err(Error::Domain("w and radial grid differ in length".into()));
    }
    if w[0] != Complex64::new(0.0, 0.0) {
        return Err(Error::Domain(format!("w(0) must vanish, got {}", w[0])));
    }
    let t = tail_integral(grid, w)?;
    let mut u: Vec<Complex64> = grid
        .nodes()
        .iter()
        .zip(&t)
        .map(|(&x, &tx)| 1.0 + x * (alpha + tx))
        .collect();
    u[0] = Complex64::new(1.0, 0.0);
    Ok(u)
}

/// One application of the contraction operator.
pub fn apply_p(
    grid: &RadialGrid,
    w: &[Complex64],
    alpha: f64,
    mode: ProfileMode,
) -> Result<Vec<Complex64>> {
    let u = couple_u(grid, w, alpha)?;
    apply_p_with_u(grid, &u, mode)
}

fn apply_p_with_u(grid: &RadialGrid, u: &[Complex64], mode: ProfileMode) -> Result<Vec<Complex64>> {
    let x = grid.nodes();
    let mut integrand = Vec::with_capacity(x.len());
    for (&y, &uy) in x.iter().zip(u) {
        mode.check_denominator(y, uy)?;
        integrand.push(y * Complex64::from_polar(1.0, -y * y / 4.0) * mode.nonlinearity(uy));
    }
    let cumulative = if grid.is_uniform() {
        cumulative_from_left(grid.h(), &integrand)?
    } else {
        let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
        for j in 1..x.len() {
            out[j] = out[j - 1] + trapezoid_complex(&x[j - 1..j + 1], &integrand[j - 1..j + 1])?;
        }
        out
    };
    let mut out: Vec<Complex64> = x
        .iter()
        .zip(&cumulative)
        .map(|(&xx, &c)| Complex64::from_polar(1.0, xx * xx / 4.0) * (1.0 + c) - 1.0)
        .collect();
    out[0] = Complex64::new(0.0, 0.0);
    Ok(out)
}

/// Fourth-order finite-difference first derivative on a uniform grid
/// (one-sided near the ends).
fn fd_first(h: f64, f: &[Complex64]) -> Vec<Complex64> {
    let m = f.len();
    let mut d = vec![Complex64::new(0.0, 0.0); m];
    if m < 5 {
        for j in 0..m {
            let (a, b) = if j == 0 { (0, 1) } else if j == m - 1 { (m - 2, m - 1) } else { (j - 1, j + 1) };
            d[j] = (f[b] - f[a]) / (h * (b - a) as f64);
        }
        return d;
    }
    for j in 0..m {
        d[j] = if j >= 2 && j + 2 < m {
            (f[j - 2] - f[j - 1] * 8.0 + f[j + 1] * 8.0 - f[j + 2]) / (12.0 * h)
        } else if j < 2 {
            (f[j] * -25.0 + f[j + 1] * 48.0 - f[j + 2] * 36.0 + f[j + 3] * 16.0 - f[j + 4] * 3.0)
                / (12.0 * h)
        } else {
            (f[j] * 25.0 - f[j - 1] * 48.0 + f[j - 2] * 36.0 - f[j - 3] * 16.0 + f[j - 4] * 3.0)
                / (12.0 * h)
        };
    }
    d
}

/// Fourth-order centered second derivative; `None` within two nodes of an end.
fn fd_second_centered(h: f64, f: &[Complex64], j: usize) -> Option<Complex64> {
    if j < 2 || j + 2 >= f.len() {
        return None;
    }
    Some(
        (-f[j - 2] + f[j - 1] * 16.0 - f[j] * 30.0 + f[j + 1] * 16.0 - f[j + 2]) / (12.0 * h * h),
    )
}

fn fd_first_centered(h: f64, f: &[Complex64], j: usize) -> Option<Complex64> {
    if j < 2 || j + 2 >= f.len() {
        return None;
    }
    Some((f[j - 2] - f[j - 1] * 8.0 + f[j + 1] * 8.0 - f[j + 2]) / (12.0 * h))
}

/// Membership of w in E = {‖w‖∞ + ‖w′/x‖∞ ≤ α/4}, w′ by finite differences.
pub fn e_membership(grid: &RadialGrid, w: &[Complex64], alpha: f64) -> EMembership {
    let sup_w = w.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let x = grid.nodes();
    let dw = if grid.is_uniform() {
        fd_first(grid.h(), w)
    } else {
        let mut d = vec![Complex64::new(0.0, 0.0); w.len()];
        for j in 1..w.len() - 1 {
            d[j] = (w[j + 1] - w[j - 1]) / (x[j + 1] - x[j - 1]);
        }
        d
    };
    let sup_ratio = x
        .iter()
        .zip(&dw)
        .skip(1)
        .map(|(&xx, d)| d.norm() / xx)
        .fold(0.0, f64::max);
    let bound = alpha / 4.0;
    EMembership { sup_w, sup_ratio, bound, member: sup_w + sup_ratio <= bound }
}

/// Picard iteration w_{k+1} = P(w_k) from w_0 = 0; the limit must lie in E.
pub fn solve_profile(
    params: &ModelParams,
    mode: ProfileMode,
    grid: RadialGrid,
    tol: f64,
    max_iter: usize,
) -> Result<ProfileSolution> {
    let sol = iterate_profile(params, mode, grid, tol, max_iter)?;
    let membership = sol.membership();
    if !membership.member {
        return Err(Error::NotInE {
            lhs: membership.sup_w + membership.sup_ratio,
            bound: membership.bound,
        });
    }
    Ok(sol)
}

/// As [`solve_profile`] without the E-membership requirement on the limit.
pub fn iterate_profile(
    params: &ModelParams,
    mode: ProfileMode,
    grid: RadialGrid,
    tol: f64,
    max_iter: usize,
) -> Result<ProfileSolution> {
    if !(params.alpha > 0.0) {
        return Err(Error::Params(format!("α must be positive, got {}", params.alpha)));
    }
    if matches!(mode, ProfileMode::Polygonal { .. }) && params.alpha < 1.0 {
        return Err(Error::Params(format!(
            "polygonal profiles need |α| ≤ Re(α)², got α = {}",
            params.alpha
        )));
    }
    let alpha = params.alpha;
    let m = grid.len();
    let mut w = vec![Complex64::new(0.0, 0.0); m];
    let mut ratios = Vec::new();
    let mut updates = Vec::new();
    let mut prev_update = f64::NAN;
    let mut last_update = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let next = apply_p(&grid, &w, alpha, mode).map_err(|e| Error::Breakdown {
            iteration: iterations + 1,
            updates: updates.clone(),
            ratios: ratios.clone(),
            cause: Box::new(e),
        })?;
        let update = sup_diff(&next, &w);
        updates.push(update);
        iterations += 1;
        if prev_update.is_finite() && prev_update > 0.0 {
            ratios.push(update / prev_update);
        }
        w = next;
        last_update = update;
        if update < tol {
            converged = true;
            break;
        }
        if !update.is_finite() || update > 1e6 {
            break;
        }
        prev_update = update;
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            last_update,
            last_ratio: ratios.last().copied().unwrap_or(f64::NAN),
        });
    }
    // fixed-point certificate: one more application
    let u = couple_u(&grid, &w, alpha)?;
    let certificate = sup_diff(&apply_p_with_u(&grid, &u, mode)?, &w);
    ProfileSolution::assemble(mode, alpha, grid, w, u, iterations, certificate, ratios, true)
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Flags attached to an evaluation of H.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HEval {
    pub h: Complex64,
    pub dh: Complex64,
    pub d2h: Complex64,
    /// σ = 0: ∂_σH is the one-sided limit from σ > 0.
    pub corner: bool,
    /// |σ|/√t beyond X_max: asymptotic u(x) = 1 + αx + w(X_max).
    pub asymptotic: bool,
}

/// (u, u′, u″) at radial coordinate x ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEval {
    pub u: Complex64,
    pub du: Complex64,
    pub d2u: Complex64,
    pub asymptotic: bool,
}

impl ProfileSolution {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        mode: ProfileMode,
        alpha: f64,
        grid: RadialGrid,
        w: Vec<Complex64>,
        u: Vec<Complex64>,
        iterations: usize,
        final_update: f64,
        contraction_ratios: Vec<f64>,
        converged: bool,
    ) -> Result<Self> {
        let x = grid.nodes();
        let t = tail_integral(&grid, &w)?;
        let mut du = Vec::with_capacity(x.len());
        let mut d2u = Vec::with_capacity(x.len());
        let mut d3u = Vec::with_capacity(x.len());
        for j in 0..x.len() {
            let xx = x[j];
            let wx_over_x = if j == 0 { Complex64::new(0.0, 0.0) } else { w[j] / xx };
            let d1 = alpha + t[j] - wx_over_x;
            let n = mode.nonlinearity(u[j]);
            // u″ = −w′/x with w′ = x((i/2)v + N)
            let v = 1.0 + w[j];
            let d2 = -(I * 0.5) * v - n;
            let dw = xx * ((I * 0.5) * v + n);
            let d3 = -(I * 0.5) * dw - mode.nonlinearity_derivative(u[j], d1);
            du.push(d1);
            d2u.push(d2);
            d3u.push(d3);
        }
        let tail_bound = w.iter().map(|z| z.norm()).fold(0.0, f64::max) / grid.x_max();
        Ok(Self {
            mode,
            alpha,
            grid,
            w,
            u,
            iterations,
            final_update,
            tail_bound,
            contraction_ratios,
            converged,
            du,
            d2u,
            d3u,
        })
    }

    /// Build a solution from explicit samples, e.g. a surrogate or a
    /// fault-injected profile. Derivatives come from the profile ODE.
    pub fn from_samples(
        mode: ProfileMode,
        alpha: f64,
        grid: RadialGrid,
        w: Vec<Complex64>,
        u: Vec<Complex64>,
    ) -> Result<Self> {
        if w.len() != grid.len() || u.len() != grid.len() {
            return Err(Error::Domain("sample length differs from the radial grid".into()));
        }
        Self::assemble(mode, alpha, grid, w, u, 0, f64::NAN, Vec::new(), true)
    }

    pub fn membership(&self) -> EMembership {
        e_membership(&self.grid, &self.w, self.alpha)
    }

    pub fn max_ratio(&self) -> f64 {
        self.contraction_ratios.iter().copied().fold(0.0, f64::max)
    }

    /// Cubic-Hermite evaluation of (u, u′, u″) at x ≥ 0.
    pub fn eval(&self, x: f64) -> ProfileEval {
        let x = x.abs();
        let nodes = self.grid.nodes();
        let m = nodes.len();
        let x_max = self.grid.x_max();
        if x >= x_max {
            let w_end = self.w[m - 1];
            return ProfileEval {
                u: 1.0 + self.alpha * x + w_end,
                du: Complex64::new(self.alpha, 0.0),
                d2u: Complex64::new(0.0, 0.0),
                asymptotic: x > x_max,
            };
        }
        let j = if self.grid.is_uniform() {
            ((x / self.grid.h()) as usize).min(m - 2)
        } else {
            nodes.partition_point(|&n| n <= x).saturating_sub(1).min(m - 2)
        };
        let (x0, x1) = (nodes[j], nodes[j + 1]);
        let h = x1 - x0;
        let s = (x - x0) / h;
        let herm = |f0: Complex64, f1: Complex64, d0: Complex64, d1: Complex64| {
            let s2 = s * s;
            let s3 = s2 * s;
            f0 * (2.0 * s3 - 3.0 * s2 + 1.0)
                + d0 * (h * (s3 - 2.0 * s2 + s))
                + f1 * (-2.0 * s3 + 3.0 * s2)
                + d1 * (h * (s3 - s2))
        };
        ProfileEval {
            u: herm(self.u[j], self.u[j + 1], self.du[j], self.du[j + 1]),
            du: herm(self.du[j], self.du[j + 1], self.d2u[j], self.d2u[j + 1]),
            d2u: herm(self.d2u[j], self.d2u[j + 1], self.d3u[j], self.d3u[j + 1]),
            asymptotic: false,
        }
    }

    /// H(t,σ) = √t u(σ/√t) with ∂_σH and ∂²_σH.
    pub fn eval_h(&self, t: f64, sigma: f64) -> Result<HEval> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("H needs t > 0, got {t}")));
        }
        Ok(self.eval_h_unchecked(t, sigma))
    }

    pub(crate) fn eval_h_unchecked(&self, t: f64, sigma: f64) -> HEval {
        let st = t.sqrt();
        let p = self.eval(sigma.abs() / st);
        let sign = if sigma < 0.0 { -1.0 } else { 1.0 };
        HEval {
            h: st * p.u,
            dh: sign * p.du,
            d2h: p.d2u / st,
            corner: sigma == 0.0,
            asymptotic: p.asymptotic,
        }
    }

    pub fn to_document(&self) -> ProfileDocument {
        ProfileDocument {
            mode: match self.mode {
                ProfileMode::Pair => "pair".into(),
                ProfileMode::Polygonal { .. } => "polygonal".into(),
            },
            alpha: self.alpha,
            omega: self.mode.omega(),
            nodes: self.grid.nodes().to_vec(),
            w_re: self.w.iter().map(|z| z.re).collect(),
            w_im: self.w.iter().map(|z| z.im).collect(),
            u_re: self.u.iter().map(|z| z.re).collect(),
            u_im: self.u.iter().map(|z| z.im).collect(),
            iterations: self.iterations,
            final_update: self.final_update,
            tail_bound: self.tail_bound,
            contraction_ratios: self.contraction_ratios.clone(),
        }
    }

    pub fn from_document(doc: &ProfileDocument) -> Result<Self> {
        let mode = match doc.mode.as_str() {
            "pair" => ProfileMode::Pair,
            "polygonal" => ProfileMode::Polygonal {
                omega: doc
                    .omega
                    .ok_or_else(|| Error::Domain("polygonal profile without ω".into()))?,
            },
            other => return Err(Error::Domain(format!("unknown profile mode '{other}'"))),
        };
        let m = doc.nodes.len();
        if [doc.w_re.len(), doc.w_im.len(), doc.u_re.len(), doc.u_im.len()]
            .iter()
            .any(|&l| l != m)
        {
            return Err(Error::Domain("profile document arrays differ in length".into()));
        }
        let grid = RadialGrid::from_nodes(doc.nodes.clone())?;
        let zip = |re: &[f64], im: &[f64]| -> Vec<Complex64> {
            re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()
        };
        Self::assemble(
            mode,
            doc.alpha,
            grid,
            zip(&doc.w_re, &doc.w_im),
            zip(&doc.u_re, &doc.u_im),
            doc.iterations,
            doc.final_update,
            doc.contraction_ratios.clone(),
            true,
        )
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, &self.to_document())?;
        Ok(())
    }

    pub fn read_json(path: &std::path::Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let doc: ProfileDocument = serde_json::from_reader(file)?;
        Self::from_document(&doc)
    }
}

/// Sup-norm residual of the profile ODE on interior nodes, using
/// fourth-order centered differences of p = u − 1 − αx. The two nodes next
/// to the corner at 0 (and the stencil-less last two) are excluded.
pub fn profile_residual(sol: &ProfileSolution) -> Result<f64> {
    Ok(profile_residual_nodes(sol)?.into_iter().map(|(_, r)| r).fold(0.0, f64::max))
}

/// Per-node residual (x, |residual|).
pub fn profile_residual_nodes(sol: &ProfileSolution) -> Result<Vec<(f64, f64)>> {
    if !sol.converged {
        return Err(Error::Domain("residual requested for a non-converged profile".into()));
    }
    if !sol.grid.is_uniform() {
        return Err(Error::Grid("profile residual needs a uniform radial grid".into()));
    }
    let h = sol.grid.h();
    let x = sol.grid.nodes();
    let p: Vec<Complex64> = x.iter().zip(&sol.u).map(|(&xx, &u)| u - 1.0 - sol.alpha * xx).collect();
    let mut out = Vec::new();
    for j in 3..x.len().saturating_sub(2) {
        let (Some(dp), Some(d2p)) = (fd_first_centered(h, &p, j), fd_second_centered(h, &p, j))
        else {
            continue;
        };
        let u = sol.u[j];
        let v = 1.0 + p[j] - x[j] * dp;
        let res = I * v + 2.0 * d2p + 2.0 * sol.mode.nonlinearity(u);
        out.push((x[j], res.norm()));
    }
    Ok(out)
}

/// Finite-difference (u′, u″) on nodes 2..m−3 (None elsewhere), used by the
/// bound checks.
pub fn fd_derivatives(sol: &ProfileSolution) -> Vec<Option<(Complex64, Complex64)>> {
    let h = sol.grid.h();
    (0..sol.u.len())
        .map(|j| {
            Some((fd_first_centered(h, &sol.u, j)?, fd_second_centered(h, &sol.u, j)?))
        })
        .collect()
}
