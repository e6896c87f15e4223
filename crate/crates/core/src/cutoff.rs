//! The smooth cutoff φ, the renormalizer ψ(τ) = τφ(τ), and the σ-derivatives
//! of 1/(1+ψ(α|σ|)) used by the perturbation sources.

use crate::error::{Error, Result};

fn q(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn dq(x: f64) -> f64 {
    if x > 0.0 {
        q(x) / (x * x)
    } else {
        0.0
    }
}

fn d2q(x: f64) -> f64 {
    if x > 0.0 {
        let x2 = x * x;
        q(x) * (1.0 / (x2 * x2) - 2.0 / (x2 * x))
    } else {
        0.0
    }
}

fn check(tau: f64) -> Result<()> {
    if tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("cutoff argument must be ≥ 0, got {tau}")))
    }
}

/// φ(τ) = q(τ−1)/(q(τ−1)+q(2−τ)), q(x) = exp(−1/x) for x > 0.
pub fn cutoff_phi(tau: f64) -> Result<f64> {
    check(tau)?;
    Ok(phi_unchecked(tau))
}

/// ψ(τ) = τ φ(τ).
pub fn cutoff_psi(tau: f64) -> Result<f64> {
    check(tau)?;
    Ok(tau * phi_unchecked(tau))
}

pub(crate) fn phi_unchecked(tau: f64) -> f64 {
    if tau <= 1.0 {
        0.0
    } else if tau >= 2.0 {
        1.0
    } else {
        let a = q(tau - 1.0);
        let b = q(2.0 - tau);
        a / (a + b)
    }
}

/// (φ, φ′, φ″) at τ ≥ 0.
pub fn phi_derivatives(tau: f64) -> (f64, f64, f64) {
    if tau <= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    if tau >= 2.0 {
        return (1.0, 0.0, 0.0);
    }
    let (x, y) = (tau - 1.0, 2.0 - tau);
    let (a, b) = (q(x), q(y));
    let (da, db) = (dq(x), -dq(y));
    let (d2a, d2b) = (d2q(x), d2q(y));
    let s = a + b;
    let ds = da + db;
    let num = da * b - a * db;
    let dnum = d2a * b - a * d2b;
    let phi = a / s;
    let dphi = num / (s * s);
    let d2phi = dnum / (s * s) - 2.0 * num * ds / (s * s * s);
    (phi, dphi, d2phi)
}

/// (ψ, ψ′, ψ″) at τ ≥ 0.
pub fn psi_derivatives(tau: f64) -> (f64, f64, f64) {
    let (p, dp, d2p) = phi_derivatives(tau);
    (tau * p, p + tau * dp, 2.0 * dp + tau * d2p)
}

/// g(σ) = 1/(1+ψ(α|σ|)) with its first and second σ-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Renormalizer {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

pub fn renormalizer(alpha: f64, sigma: f64) -> Renormalizer {
    let tau = alpha * sigma.abs();
    let (psi, dpsi, d2psi) = psi_derivatives(tau);
    let den = 1.0 + psi;
    let sign = if sigma > 0.0 {
        1.0
    } else if sigma < 0.0 {
        -1.0
    } else {
        0.0
    };
    Renormalizer {
        value: 1.0 / den,
        d1: -alpha * sign * dpsi / (den * den),
        d2: alpha * alpha * (2.0 * dpsi * dpsi / (den * den * den) - d2psi / (den * den)),
    }
}
