use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and scenario parameters shared by the pipeline stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Slope of the self-similar profile at infinity.
    pub alpha: f64,
    /// Angular velocity of the rotating polygon.
    pub omega: f64,
    /// Number of polygon filaments, when the polygonal scenario is used.
    pub n_filaments: Option<usize>,
    /// Circulation of the central filament.
    pub gamma0: Option<f64>,
    pub rho: f64,
    pub theta: f64,
    pub t0: f64,
    /// Exponent of the gradient weight in the X-norm.
    pub gamma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 20.0,
            omega: 0.0,
            n_filaments: None,
            gamma0: None,
            rho: 1.0,
            theta: 0.0,
            t0: 1e-3,
            gamma: 0.125,
        }
    }
}

impl ModelParams {
    /// ω = (N−1)/2 + Γ₀.
    pub fn polygon_omega(n: usize, gamma0: f64) -> f64 {
        (n as f64 - 1.0) / 2.0 + gamma0
    }

    pub fn with_polygon(mut self, n: usize, gamma0: f64) -> Self {
        self.n_filaments = Some(n);
        self.gamma0 = Some(gamma0);
        self.omega = Self::polygon_omega(n, gamma0);
        self
    }

    pub fn validate(&self, polygonal: bool) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Params(format!("α must be positive, got {}", self.alpha)));
        }
        if !(self.t0 > 0.0 && self.t0 < 1.0) {
            return Err(Error::Params(format!("t0 must lie in (0,1), got {}", self.t0)));
        }
        if !(self.gamma > 0.0 && self.gamma < 0.25) {
            return Err(Error::Params(format!("γ must lie in (0,1/4), got {}", self.gamma)));
        }
        if !(self.rho > 0.0) {
            return Err(Error::Params(format!("ρ must be positive, got {}", self.rho)));
        }
        if let (Some(n), Some(g0)) = (self.n_filaments, self.gamma0) {
            let expected = Self::polygon_omega(n, g0);
            if (self.omega - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
                return Err(Error::Params(format!(
                    "ω = {} inconsistent with (N−1)/2 + Γ₀ = {expected}",
                    self.omega
                )));
            }
        }
        // real-α form of |α| ≤ Re(α)²
        if polygonal && self.alpha > self.alpha * self.alpha {
            return Err(Error::Params(format!(
                "polygonal profiles need |α| ≤ Re(α)², i.e. α ≥ 1 (got {})",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_from_polygon() {
        let p = ModelParams::default().with_polygon(3, 0.0);
        assert_eq!(p.omega, 1.0);
        assert!(p.validate(true).is_ok());
        let mut q = p.clone();
        q.omega = 2.0;
        assert!(q.validate(true).is_err());
    }

    #[test]
    fn rejects_out_of_range() {
        let mut p = ModelParams::default();
        p.gamma = 0.25;
        assert!(p.validate(false).is_err());
        let mut p = ModelParams::default();
        p.alpha = 0.5;
        assert!(p.validate(false).is_ok());
        assert!(p.validate(true).is_err());
        let mut p = ModelParams::default();
        p.t0 = 1.0;
        assert!(p.validate(false).is_err());
    }
}
