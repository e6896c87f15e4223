//! The 2-D point-vortex system i ż_j + Σ_{k≠j} Γ_k (z_j−z_k)/|z_j−z_k|² = 0,
//! which governs exactly parallel filaments.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const COLLISION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointVortexState {
    pub t: f64,
    pub z: Vec<Complex64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PVInvariants {
    pub hamiltonian: f64,
    pub momentum: Complex64,
    pub angular: f64,
}

impl PointVortexState {
    pub fn new(t: f64, z: Vec<Complex64>, gamma: Vec<f64>) -> Result<Self> {
        if z.len() != gamma.len() {
            return Err(Error::Domain("positions and circulations differ in length".into()));
        }
        if z.is_empty() {
            return Err(Error::Empty("no vortices".into()));
        }
        if gamma.iter().any(|&g| g == 0.0 || !g.is_finite()) {
            return Err(Error::Domain("circulations must be finite and nonzero".into()));
        }
        if z.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::Domain("non-finite vortex position".into()));
        }
        Ok(Self { t, z, gamma })
    }

    /// Regular N-gon of radius ρ with unit circulations, first vertex at ρ,
    /// plus a central vortex of circulation Γ₀ when given.
    pub fn polygon(n: usize, rho: f64, gamma0: Option<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Params(format!("polygon needs N ≥ 2, got {n}")));
        }
        let mut z: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(rho, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect();
        let mut gamma = vec![1.0; n];
        if let Some(g0) = gamma0 {
            z.push(Complex64::new(0.0, 0.0));
            gamma.push(g0);
        }
        Self::new(0.0, z, gamma)
    }

    /// Anti-parallel pair at ±d/2 on the real axis with Γ = (1, −1).
    pub fn antiparallel_pair(d: f64) -> Result<Self> {
        Self::new(
            0.0,
            vec![Complex64::new(0.5 * d, 0.0), Complex64::new(-0.5 * d, 0.0)],
            vec![1.0, -1.0],
        )
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn invariants(&self) -> PVInvariants {
        let n = self.len();
        let mut h = 0.0;
        for j in 0..n {
            for k in j + 1..n {
                h -= self.gamma[j] * self.gamma[k] * (self.z[j] - self.z[k]).norm().ln();
            }
        }
        PVInvariants {
            hamiltonian: h,
            momentum: self.z.iter().zip(&self.gamma).map(|(z, g)| z * g).sum(),
            angular: self.z.iter().zip(&self.gamma).map(|(z, g)| g * z.norm_sqr()).sum(),
        }
    }

    pub fn min_separation(&self) -> f64 {
        let mut d = f64::INFINITY;
        for j in 0..self.len() {
            for k in j + 1..self.len() {
                d = d.min((self.z[j] - self.z[k]).norm());
            }
        }
        d
    }
}

fn velocities(t: f64, z: &[Complex64], gamma: &[f64]) -> Result<Vec<Complex64>> {
    let n = z.len();
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for k in j + 1..n {
            let d = z[j] - z[k];
            let r2 = d.norm_sqr();
            if r2.sqrt() < COLLISION_EPS {
                return Err(Error::Collision { j, k, t, distance: r2.sqrt() });
            }
            let e = d / r2;
            v[j] += gamma[k] * e;
            v[k] -= gamma[j] * e;
        }
    }
    for vj in &mut v {
        *vj *= Complex64::i();
    }
    Ok(v)
}

/// ż_j = i Σ_{k≠j} Γ_k (z_j−z_k)/|z_j−z_k|².
pub fn pv_rhs(state: &PointVortexState) -> Result<Vec<Complex64>> {
    velocities(state.t, &state.z, &state.gamma)
}

/// Fixed-step RK4; returns every frame including the initial one.
pub fn integrate_pv(state0: &PointVortexState, t_final: f64, dt: f64) -> Result<Vec<PointVortexState>> {
    if !(dt > 0.0) {
        return Err(Error::Params(format!("dt must be positive, got {dt}")));
    }
    if !(t_final >= dt) {
        return Err(Error::Params(format!("T = {t_final} must be at least dt = {dt}")));
    }
    let steps = (t_final / dt).round() as usize;
    let g = &state0.gamma;
    let mut z = state0.z.clone();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state0.clone());
    let axpy = |z: &[Complex64], k: &[Complex64], a: f64| -> Vec<Complex64> {
        z.iter().zip(k).map(|(z, k)| z + k * a).collect()
    };
    for s in 0..steps {
        let t = state0.t + s as f64 * dt;
        let k1 = velocities(t, &z, g)?;
        let k2 = velocities(t, &axpy(&z, &k1, 0.5 * dt), g)?;
        let k3 = velocities(t, &axpy(&z, &k2, 0.5 * dt), g)?;
        let k4 = velocities(t, &axpy(&z, &k3, dt), g)?;
        for j in 0..z.len() {
            z[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0);
        }
        let t_next = state0.t + (s + 1) as f64 * dt;
        // guard the stored frame too
        velocities(t_next, &z, g)?;
        out.push(PointVortexState { t: t_next, z: z.clone(), gamma: g.clone() });
    }
    Ok(out)
}

/// z_j(t) = e^{iωt} z_j(0) with ω = (N−1)/2 + Γ₀, exact for the unit polygon.
pub fn polygon_exact(state0: &PointVortexState, n: usize, gamma0: f64, t: f64) -> Vec<Complex64> {
    let omega = (n as f64 - 1.0) / 2.0 + gamma0;
    let rot = Complex64::from_polar(1.0, omega * t);
    state0.z.iter().map(|z| z * rot).collect()
}

/// Relative drift of the invariants from the first frame, maximized over frames.
pub fn invariant_drift(traj: &[PointVortexState]) -> f64 {
    let Some(first) = traj.first() else { return 0.0 };
    let i0 = first.invariants();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    traj.iter()
        .map(|s| {
            let i = s.invariants();
            rel(i.hamiltonian, i0.hamiltonian)
                .max((i.momentum - i0.momentum).norm() / i0.momentum.norm().max(1.0))
                .max(rel(i.angular, i0.angular))
        })
        .fold(0.0, f64::max)
}

/// CSV with a commented header carrying Γ, then columns t, re(z_j), im(z_j).
pub fn write_pv_csv(path: &Path, traj: &[PointVortexState]) -> Result<()> {
    let first = traj.first().ok_or_else(|| Error::Empty("empty trajectory".into()))?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let gammas: Vec<String> = first.gamma.iter().map(|g| format!("{g:?}")).collect();
    writeln!(file, "# gamma={}", gammas.join(";"))?;
    writeln!(file, "# n={} frames={}", first.len(), traj.len())?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["t".to_string()];
    for j in 0..first.len() {
        header.push(format!("re_z{j}"));
        header.push(format!("im_z{j}"));
    }
    w.write_record(&header)?;
    for s in traj {
        let mut rec = vec![format!("{:?}", s.t)];
        for z in &s.z {
            rec.push(format!("{:?}", z.re));
            rec.push(format!("{:?}", z.im));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
