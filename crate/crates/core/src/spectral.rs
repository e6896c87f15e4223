//! FFT-based free Schrödinger propagator e^{it∂²} and spectral derivatives on
//! a periodic grid.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, SpatialGrid};

/// Cached FFT plans and wavenumbers for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: SpatialGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
            k: grid.wavenumbers(),
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Inverse transform including the 1/n normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    /// In-place e^{i·coeff·t∂²}: mode k picks up e^{−i·coeff·t·k²}.
    pub fn propagate_in_place(&self, data: &mut [Complex64], t: f64, coeff: f64) {
        if t == 0.0 || coeff == 0.0 {
            return;
        }
        self.forward(data);
        for (z, &k) in data.iter_mut().zip(&self.k) {
            *z *= Complex64::from_polar(1.0, -coeff * t * k * k);
        }
        self.inverse(data);
    }

    /// Spectral ∂_σ of a periodic field.
    pub fn derivative(&self, f: &ComplexField) -> ComplexField {
        let mut data = f.values().to_vec();
        self.forward(&mut data);
        let n = data.len();
        for (j, (z, &k)) in data.iter_mut().zip(&self.k).enumerate() {
            // the Nyquist mode has no well-defined sign
            if j == n / 2 {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, k);
            }
        }
        self.inverse(&mut data);
        ComplexField::from_raw(*f.grid(), data)
    }
}

/// e^{it∂²} f on the field's grid.
pub fn free_propagate(spectral: &Spectral, f: &ComplexField, t: f64) -> Result<ComplexField> {
    if !f.is_finite() {
        return Err(Error::Domain("non-finite input to free_propagate".into()));
    }
    if f.grid() != spectral.grid() {
        return Err(Error::Grid("field and propagator grids differ".into()));
    }
    let mut data = f.values().to_vec();
    spectral.propagate_in_place(&mut data, t, 1.0);
    ComplexField::new(*f.grid(), data)
}

/// Report from [`dispersion_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionReport {
    /// max over samples of √t‖e^{it∂²}f‖∞/‖f‖_{L¹}
    pub constant: f64,
    pub per_sample: Vec<(f64, f64)>,
    /// samples where √t exceeds a tenth of the box, so wrap-around may pollute
    pub wraparound_warnings: Vec<f64>,
}

/// Empirical constant of the dispersive decay ‖e^{it∂²}f‖∞ ≤ C t^{−1/2}‖f‖_{L¹}.
pub fn dispersion_check(
    spectral: &Spectral,
    f: &ComplexField,
    t_samples: &[f64],
) -> Result<DispersionReport> {
    let l1 = f.l1_norm();
    if l1 == 0.0 {
        return Err(Error::Domain("dispersion check needs a nonzero field".into()));
    }
    if t_samples.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("dispersion samples must be positive".into()));
    }
    let box_len = f.grid().length();
    let mut per_sample = Vec::with_capacity(t_samples.len());
    let mut warnings = Vec::new();
    for &t in t_samples {
        if t.sqrt() > 0.1 * box_len {
            warnings.push(t);
        }
        let g = free_propagate(spectral, f, t)?;
        per_sample.push((t, t.sqrt() * g.linf_norm() / l1));
    }
    let constant = per_sample.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(DispersionReport { constant, per_sample, wraparound_warnings: warnings })
}
