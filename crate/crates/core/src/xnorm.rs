//! The weighted norm of the perturbation space:
//!
//! ‖r‖_X = sup_t ( ‖r‖_{L∞((0,t),L²)} / t^{3/4} + ‖∂_σ r‖_{L∞((0,t),L²)} / t^γ
//!               + 8 ‖r‖_{L∞((0,t)×I)} / t^{1/2} ),   I = (−1/(2α), 1/(2α)).
//!
//! Sup over continuous time is replaced by the stored frame times; the inner
//! L∞-in-time is a running max over frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::spectral::Spectral;

/// A field sampled at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFrame {
    pub t: f64,
    pub field: ComplexField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XNormReport {
    pub l2_component: f64,
    pub grad_component: f64,
    pub local_component: f64,
    pub total: f64,
    pub gamma: f64,
}

/// Time-indexed frames of r on (0, t0].
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTrajectory {
    pub frames: Vec<FieldFrame>,
    pub alpha: f64,
    pub gamma: f64,
    pub report: XNormReport,
}

impl PerturbationTrajectory {
    pub fn new(mut frames: Vec<FieldFrame>, alpha: f64, gamma: f64) -> Result<Self> {
        frames.sort_by(|a, b| a.t.total_cmp(&b.t));
        let report = x_norm(&frames, alpha, gamma)?;
        Ok(Self { frames, alpha, gamma, report })
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// Framewise difference (same time ladder).
    pub fn difference(&self, other: &PerturbationTrajectory) -> Result<PerturbationTrajectory> {
        if self.frames.len() != other.frames.len()
            || self.frames.iter().zip(&other.frames).any(|(a, b)| a.t != b.t)
        {
            return Err(Error::Domain("trajectories live on different time ladders".into()));
        }
        let frames = self
            .frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| FieldFrame { t: a.t, field: a.field.sub(&b.field) })
            .collect();
        PerturbationTrajectory::new(frames, self.alpha, self.gamma)
    }

    pub fn scaled(&self, lambda: f64) -> Result<PerturbationTrajectory> {
        let frames = self
            .frames
            .iter()
            .map(|f| FieldFrame { t: f.t, field: f.field.scale(lambda) })
            .collect();
        PerturbationTrajectory::new(frames, self.alpha, self.gamma)
    }
}

/// Discrete X-norm of a set of frames.
pub fn x_norm(frames: &[FieldFrame], alpha: f64, gamma: f64) -> Result<XNormReport> {
    if frames.is_empty() {
        return Err(Error::Empty("trajectory has no frames".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::Params(format!("α must be positive, got {alpha}")));
    }
    if !(gamma > 0.0 && gamma < 0.25) {
        return Err(Error::Params(format!("γ must lie in (0, 1/4), got {gamma}")));
    }
    let mut order: Vec<&FieldFrame> = frames.iter().collect();
    order.sort_by(|a, b| a.t.total_cmp(&b.t));

    let spectral = Spectral::new(*order[0].field.grid());
    let radius = 0.5 / alpha;
    let (mut run_l2, mut run_grad, mut run_loc) = (0.0f64, 0.0f64, 0.0f64);
    let (mut c_l2, mut c_grad, mut c_loc) = (0.0f64, 0.0f64, 0.0f64);
    for frame in order {
        if frame.t < 0.0 {
            return Err(Error::Domain(format!("negative frame time {}", frame.t)));
        }
        let l2 = frame.field.l2_norm();
        if frame.t == 0.0 {
            if l2 != 0.0 {
                return Err(Error::Domain("nonzero frame at t = 0 makes the X-norm diverge".into()));
            }
            continue;
        }
        run_l2 = run_l2.max(l2);
        run_grad = run_grad.max(spectral.derivative(&frame.field).l2_norm());
        run_loc = run_loc.max(frame.field.linf_norm_within(radius));
        c_l2 = c_l2.max(run_l2 / frame.t.powf(0.75));
        c_grad = c_grad.max(run_grad / frame.t.powf(gamma));
        c_loc = c_loc.max(8.0 * run_loc / frame.t.sqrt());
    }
    Ok(XNormReport {
        l2_component: c_l2,
        grad_component: c_grad,
        local_component: c_loc,
        total: c_l2 + c_grad + c_loc,
        gamma,
    })
}
