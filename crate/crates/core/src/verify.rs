//! Node-by-node evaluation of the quantitative bounds on the profile, on H,
//! on the denominators of the sources, and on the sources themselves.
//!
//! Explicit-constant inequalities pass or fail with an absolute slack
//! [`TOL_REPORT`]. Inequalities with an unspecified constant C report the
//! measured C instead, and a separate uniformity record checks that C does
//! not drift by more than a factor [`UNIFORMITY_FACTOR`] across samples.

use serde::{Deserialize, Serialize};

use crate::duhamel::{Background, PerturbationMode};
use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::profile::{fd_derivatives, ProfileSolution};
use crate::xnorm::PerturbationTrajectory;

pub const TOL_REPORT: f64 = 1e-9;
pub const UNIFORMITY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Explicit constant; failures set the exit status.
    Explicit,
    /// Unspecified constant; `lhs_max` is the measured C.
    Symbolic,
    /// max/min of a measured C across samples.
    Uniformity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub id: String,
    pub kind: CheckKind,
    pub lhs_max: f64,
    pub rhs_min_or_budget: f64,
    pub margin: f64,
    pub passed: bool,
    pub nodes_checked: usize,
    /// The hypothesis of the bound failed, so the verdict is not a failure
    /// of the bound itself.
    #[serde(default)]
    pub premise_violated: bool,
    /// Location (t, σ or x) of the worst node.
    #[serde(default)]
    pub worst_at: Vec<f64>,
    #[serde(default)]
    pub note: String,
}

impl BoundCheck {
    pub fn is_explicit_failure(&self) -> bool {
        self.kind == CheckKind::Explicit && !self.passed && !self.premise_violated
    }
}

/// Accumulates lhs ≤ rhs over nodes, keeping the smallest margin.
struct Explicit {
    id: &'static str,
    worst: Option<(f64, f64, Vec<f64>)>,
    nodes: usize,
}

impl Explicit {
    fn new(id: &'static str) -> Self {
        Self { id, worst: None, nodes: 0 }
    }

    fn push(&mut self, lhs: f64, rhs: f64, at: &[f64]) {
        self.nodes += 1;
        let margin = rhs - lhs;
        let replace = match &self.worst {
            None => true,
            Some((l, r, _)) => !(margin >= r - l),
        };
        if replace {
            self.worst = Some((lhs, rhs, at.to_vec()));
        }
    }

    fn finish(self) -> BoundCheck {
        let (lhs, rhs, at) = self.worst.unwrap_or((0.0, 0.0, Vec::new()));
        let margin = rhs - lhs;
        BoundCheck {
            id: self.id.into(),
            kind: CheckKind::Explicit,
            lhs_max: lhs,
            rhs_min_or_budget: rhs,
            margin,
            passed: margin >= -TOL_REPORT,
            nodes_checked: self.nodes,
            premise_violated: false,
            worst_at: at,
            note: String::new(),
        }
    }
}

/// Largest measured C = lhs/shape over nodes.
struct Symbolic {
    id: &'static str,
    c: f64,
    at: Vec<f64>,
    nodes: usize,
}

impl Symbolic {
    fn new(id: &'static str) -> Self {
        Self { id, c: 0.0, at: Vec::new(), nodes: 0 }
    }

    fn push(&mut self, c: f64, at: &[f64]) {
        self.nodes += 1;
        if c > self.c || self.at.is_empty() {
            self.c = self.c.max(c);
            self.at = at.to_vec();
        }
    }

    fn finish(self, note: &str) -> BoundCheck {
        BoundCheck {
            id: self.id.into(),
            kind: CheckKind::Symbolic,
            lhs_max: self.c,
            rhs_min_or_budget: f64::NAN,
            margin: self.c,
            passed: true,
            nodes_checked: self.nodes,
            premise_violated: false,
            worst_at: self.at,
            note: note.into(),
        }
    }
}

fn uniformity(id: &str, samples: &[f64]) -> BoundCheck {
    let pos: Vec<f64> = samples.iter().copied().filter(|c| *c > 0.0).collect();
    let max = pos.iter().copied().fold(0.0, f64::max);
    let min = pos.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if pos.is_empty() { 1.0 } else { max / min };
    BoundCheck {
        id: format!("{id}-uniformity"),
        kind: CheckKind::Uniformity,
        lhs_max: ratio,
        rhs_min_or_budget: UNIFORMITY_FACTOR,
        margin: UNIFORMITY_FACTOR - ratio,
        passed: ratio <= UNIFORMITY_FACTOR,
        nodes_checked: samples.len(),
        premise_violated: false,
        worst_at: Vec::new(),
        note: "max/min of the measured constant across samples".into(),
    }
}

/// |u−1−αx| ≤ min(1,x)α/4, |u| ≤ 1+5αx/4, Re u ≥ 1+3αx/4 at every node;
/// |u′| ≤ 2α and |u″| ≤ α/4 by centered differences away from 0.
pub fn check_profile_bounds(sol: &ProfileSolution) -> Vec<BoundCheck> {
    let a = sol.alpha;
    let mut dev = Explicit::new("lemma4.1-dev");
    let mut upper = Explicit::new("lemma4.1-upper");
    let mut lower = Explicit::new("lemma4.1-lower");
    let mut du = Explicit::new("lemma4.1-du");
    let mut d2u = Explicit::new("lemma4.1-d2u");
    let fd = if sol.grid.is_uniform() { fd_derivatives(sol) } else { vec![None; sol.u.len()] };
    for (j, (&x, &u)) in sol.grid.nodes().iter().zip(&sol.u).enumerate() {
        dev.push((u - 1.0 - a * x).norm(), x.min(1.0) * a / 4.0, &[x]);
        upper.push(u.norm(), 1.0 + 5.0 * a * x / 4.0, &[x]);
        lower.push(1.0 + 3.0 * a * x / 4.0, u.re, &[x]);
        if j >= 3 {
            if let Some((d1, d2)) = fd[j] {
                du.push(d1.norm(), 2.0 * a, &[x]);
                d2u.push(d2.norm(), a / 4.0, &[x]);
            }
        }
    }
    vec![dev.finish(), upper.finish(), lower.finish(), du.finish(), d2u.finish()]
}

/// dev:H, Re H ≥ ½(√s+α|σ|), |∂_σH| ≤ 2α and |∂²_σH| ≤ (α/4)s^{−1/2} on the
/// product of the samples (derivative bounds skip σ = 0).
pub fn check_h_bounds(sol: &ProfileSolution, t_samples: &[f64], sigma_samples: &[f64]) -> Result<Vec<BoundCheck>> {
    if t_samples.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::Domain("H bounds need sample times in (0,1)".into()));
    }
    let a = sol.alpha;
    let mut dev = Explicit::new("dev:H");
    let mut lower = Explicit::new("Hinffar");
    let mut dh = Explicit::new("lemma4.2-dH");
    let mut d2h = Explicit::new("lemma4.2-d2H");
    for &t in t_samples {
        let st = t.sqrt();
        for &s in sigma_samples {
            let h = sol.eval_h(t, s)?;
            dev.push((h.h - st - a * s.abs()).norm(), 0.25 * a * st.min(s.abs()), &[t, s]);
            lower.push(0.5 * (st + a * s.abs()), h.h.re, &[t, s]);
            if s != 0.0 {
                dh.push(h.dh.norm(), 2.0 * a, &[t, s]);
                d2h.push(h.d2h.norm(), 0.25 * a / st, &[t, s]);
            }
        }
    }
    Ok(vec![dev.finish(), lower.finish(), dh.finish(), d2h.finish()])
}

/// Lower bounds of the source denominators, with r ≡ 0 (near-1, far-1) and
/// with the given trajectory (near-2, far-2). The latter two presuppose that
/// r lies in the ball; a separate explicit record checks that premise.
pub fn check_denominator_bounds(
    traj: &PerturbationTrajectory,
    bg: &Background,
) -> Vec<BoundCheck> {
    let a = bg.alpha;
    let grid = bg.grid;
    let mut near1 = Explicit::new("ineq:near-1");
    let mut far1 = Explicit::new("ineq:far-1");
    let mut near2 = Explicit::new("ineq:near-2");
    let mut far2 = Explicit::new("ineq:far-2");
    let mut premise = Explicit::new("premise:ball");
    premise.push(traj.report.total, 1.0, &[]);
    for f in &traj.frames {
        if f.t == 0.0 {
            continue;
        }
        let st = f.t.sqrt();
        let hg = bg.renormalized_h(f.t);
        let mut sup_i: f64 = 0.0;
        for (k, (&h, &r)) in hg.values().iter().zip(f.field.values()).enumerate() {
            let s = grid.node(k);
            let in_i = a * s.abs() < 0.5;
            if in_i {
                sup_i = sup_i.max(r.norm());
                near1.push(0.5 * (st + a * s.abs()), h.re, &[f.t, s]);
                near2.push(0.25 * (st + a * s.abs()), r.re + h.re, &[f.t, s]);
            } else {
                far1.push(1.0 / 3.0, h.re, &[f.t, s]);
                far2.push(1.0 / 32.0, r.re + h.re, &[f.t, s]);
            }
        }
        // strict in the source; the slack only absorbs round-off
        premise.push(sup_i, 0.25 * st, &[f.t]);
    }
    let premise = premise.finish();
    let mut near2 = near2.finish();
    let mut far2 = far2.finish();
    if !premise.passed {
        for c in [&mut near2, &mut far2] {
            c.premise_violated = true;
            c.note = "r is outside the ball; verdict not attributable to the bound".into();
        }
    }
    vec![near1.finish(), far1.finish(), premise, near2, far2]
}

/// Support identities of b (exact) and measured constants of the pointwise
/// and norm estimates of a(r), ã(r) and b along a trajectory.
pub fn check_source_bounds(
    traj: &PerturbationTrajectory,
    bg: &Background,
    mode: PerturbationMode,
) -> Result<Vec<BoundCheck>> {
    let a = bg.alpha;
    let grid = bg.grid;
    let mut b_frames = Vec::new();
    let (id_p1, id_p2, id_l2) = match mode {
        PerturbationMode::Pair => ("ineq:a-1", "ineq:a-2", "aL2"),
        PerturbationMode::Polygonal => ("ineq:a-1-pol", "ineq:a-2-pol", "aL2-pol"),
    };
    let mut p1 = Symbolic::new(id_p1);
    let mut p2 = Symbolic::new(id_p2);
    let mut cl2 = Vec::new();
    let mut cl1 = Vec::new();
    let mut cb = Vec::new();
    let (mut l2, mut l1, mut bl2) = (Symbolic::new(id_l2), Symbolic::new("aL1"), Symbolic::new("bL2"));
    for f in &traj.frames {
        if f.t == 0.0 {
            continue;
        }
        let s = f.t;
        let st = s.sqrt();
        let src = match mode {
            PerturbationMode::Pair => bg.source_a(&f.field, s)?.values,
            PerturbationMode::Polygonal => bg.source_a_tilde(&f.field, s)?.values,
        };
        let b = bg.source_b(s).values;
        for k in 0..grid.n() {
            let sigma = grid.node(k);
            let r = f.field.values()[k].norm();
            let v = src.values()[k].norm();
            if a * sigma.abs() < 0.5 {
                // the constant term of the bound is 1 (pair) or C (polygonal)
                let c = match mode {
                    PerturbationMode::Pair if r > 0.0 => (v - 1.0).max(0.0) * (st + a * sigma.abs()).powi(2) / r,
                    PerturbationMode::Pair => 0.0,
                    PerturbationMode::Polygonal => v / (1.0 + r / (st + a * sigma.abs()).powi(2)),
                };
                p1.push(c, &[s, sigma]);
            } else {
                let psi = crate::cutoff::cutoff_psi(a * sigma.abs()).unwrap_or(0.0);
                let shape = match mode {
                    PerturbationMode::Pair => a / (1.0 + psi) + r,
                    PerturbationMode::Polygonal => (a / (1.0 + psi)).powi(2) + a / (1.0 + psi) + r,
                };
                p2.push(v / shape, &[s, sigma]);
            }
        }
        let shape_l2 = match mode {
            PerturbationMode::Pair => a.sqrt() + s.powf(-0.25) / a.sqrt(),
            PerturbationMode::Polygonal => a.powf(1.5) + s.powf(-0.25) / a.sqrt(),
        };
        let c = src.l2_norm() / shape_l2;
        l2.push(c, &[s]);
        cl2.push(c);
        let c = src.l1_norm_within(1.0 / a) * a.sqrt();
        l1.push(c, &[s]);
        cl1.push(c);
        let c = b.l2_norm() / a.powf(1.5);
        bl2.push(c, &[s]);
        cb.push(c);
        b_frames.push((s, b));
    }
    let mut out = check_b_support(&b_frames, a);
    out.extend([
        p1.finish("measured C of |a| ≤ 1 + C|r|/(√s+α|σ|)² on I"),
        p2.finish("measured C of the off-I pointwise bound"),
        l2.finish("measured C of the L² bound"),
        uniformity(id_l2, &cl2),
        l1.finish("measured C of the L¹(−1/α,1/α) bound"),
        uniformity("aL1", &cl1),
        bl2.finish("measured C of ‖b‖_L² ≤ Cα^{3/2}"),
        uniformity("bL2", &cb),
    ]);
    Ok(out)
}

/// b ≡ 0 on α|σ| ≤ 1 and ∂_σb ≡ 0 on I, both exact. The derivative is the
/// fourth-order centered difference, whose stencil stays inside the region
/// where b vanishes; a spectral derivative would pick up the unresolved
/// √t-scale structure of b outside it.
pub fn check_b_support(frames: &[(f64, ComplexField)], alpha: f64) -> Vec<BoundCheck> {
    let mut zero = Explicit::new("bL1");
    let mut grad = Explicit::new("gradbL2I");
    for (t, b) in frames {
        let grid = *b.grid();
        let (h, n) = (grid.h(), grid.n());
        let v = b.values();
        for k in 0..n {
            let sigma = grid.node(k);
            if alpha * sigma.abs() <= 1.0 {
                zero.push(v[k].norm(), 0.0, &[*t, sigma]);
            }
            if alpha * sigma.abs() < 0.5 && k >= 2 && k + 2 < n {
                let d = (v[k - 2] - v[k - 1] * 8.0 + v[k + 1] * 8.0 - v[k + 2]) / (12.0 * h);
                grad.push(d.norm(), 0.0, &[*t, sigma]);
            }
        }
    }
    let mut grad = grad.finish();
    grad.note = "fourth-order centered differences".into();
    vec![zero.finish(), grad]
}

/// Measured contraction ratio, which is what the difference estimates on
/// a(r₁)−a(r₂) bound.
pub fn contraction_record(ratio: f64) -> BoundCheck {
    BoundCheck {
        id: "contraction".into(),
        kind: CheckKind::Explicit,
        lhs_max: ratio,
        rhs_min_or_budget: 0.5,
        margin: 0.5 - ratio,
        passed: ratio <= 0.5 + TOL_REPORT,
        nodes_checked: 1,
        premise_violated: false,
        worst_at: Vec::new(),
        note: "stands in for the difference estimates on a(r1) − a(r2)".into(),
    }
}

/// Closed-form point-vortex regressions: unit polygons N = 3, 4, 5 and the
/// stationary polygon with center.
pub fn check_point_vortex_regressions() -> Result<Vec<BoundCheck>> {
    use crate::pointvortex::{integrate_pv, polygon_exact, PointVortexState};
    let mut rot = Explicit::new("pv:polygon-rotation");
    let mut stat = Explicit::new("pv:polygon-stationary");
    for n in 3..=5 {
        let s0 = PointVortexState::polygon(n, 1.0, None)?;
        let traj = integrate_pv(&s0, 1.0, 1e-3)?;
        let last = traj.last().expect("trajectory has frames");
        let exact = polygon_exact(&s0, n, 0.0, last.t);
        let err = last.z.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        rot.push(err, 1e-8, &[n as f64]);
        let g0 = -(n as f64 - 1.0) / 2.0;
        let s0 = PointVortexState::polygon(n, 1.0, Some(g0))?;
        let traj = integrate_pv(&s0, 1.0, 1e-3)?;
        let last = traj.last().expect("trajectory has frames");
        let err = last.z.iter().zip(&s0.z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        stat.push(err, 1e-10, &[n as f64]);
    }
    Ok(vec![rot.finish(), stat.finish()])
}

/// Number of explicit-constant failures in a report.
pub fn explicit_failures(checks: &[BoundCheck]) -> usize {
    checks.iter().filter(|c| c.is_explicit_failure()).count()
}

pub fn write_report(path: &std::path::Path, checks: &[BoundCheck]) -> Result<()> {
    if checks.is_empty() {
        return Err(Error::Empty("no checks to report".into()));
    }
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, checks)?;
    Ok(())
}

/// A field equal to `value` on I and zero elsewhere, for fault injection.
pub fn constant_on_i(grid: crate::grid::SpatialGrid, alpha: f64, value: num_complex::Complex64) -> ComplexField {
    ComplexField::from_fn(grid, |s| if alpha * s.abs() < 0.5 { value } else { num_complex::Complex64::new(0.0, 0.0) })
}
