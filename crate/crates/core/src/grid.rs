//! Spatial and radial grids, and complex fields sampled on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on σ ∈ [−L/2, L/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    length: f64,
    n: usize,
}

impl SpatialGrid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Grid(format!("length must be positive, got {length}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Grid(format!("n must be a power of two ≥ 8, got {n}")));
        }
        Ok(Self { length, n })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -0.5 * self.length + k as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    /// Index of the node σ = 0.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * std::f64::consts::PI / self.length;
        let n = self.n as isize;
        (0..n)
            .map(|j| if j < n / 2 { j as f64 * dk } else { (j - n) as f64 * dk })
            .collect()
    }
}

/// A complex-valued field on a [`SpatialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpatialGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Grid(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.n()
            )));
        }
        if let Some(k) = values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Domain(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Length-checked only; used where values come from finite arithmetic.
    pub(crate) fn from_raw(grid: SpatialGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.n()] }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.n()).map(|k| f(grid.node(k))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &z)| f(self.grid.node(k), z))
            .collect();
        Self { grid: self.grid, values }
    }

    pub fn scale(&self, lambda: f64) -> Self {
        self.map(|_, z| z * lambda)
    }

    pub fn sub(&self, other: &ComplexField) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self { grid: self.grid, values }
    }

    pub fn add(&self, other: &ComplexField) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Self { grid: self.grid, values }
    }

    /// Discrete L² norm (periodic trapezoid rule).
    pub fn l2_norm(&self) -> f64 {
        (self.grid.h() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.grid.h() * self.values.iter().map(|z| z.norm()).sum::<f64>()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max modulus over nodes with |σ| < radius.
    pub fn linf_norm_within(&self, radius: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(k, _)| self.grid.node(*k).abs() < radius)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max)
    }

    /// L¹ norm over nodes with |σ| < radius.
    pub fn l1_norm_within(&self, radius: f64) -> f64 {
        self.grid.h()
            * self
                .values
                .iter()
                .enumerate()
                .filter(|(k, _)| self.grid.node(*k).abs() < radius)
                .map(|(_, z)| z.norm())
                .sum::<f64>()
    }

    /// L² norm over nodes selected by `keep`.
    pub fn l2_norm_where(&self, keep: impl Fn(f64) -> bool) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(k, _)| keep(self.grid.node(*k)))
            .map(|(_, z)| z.norm_sqr())
            .sum();
        (self.grid.h() * s).sqrt()
    }

    /// Max modulus of the two nodes at the periodic seam.
    pub fn edge_magnitude(&self) -> f64 {
        self.values[0].norm().max(self.values[self.grid.n() - 1].norm())
    }
}

/// Strictly increasing samples of [0, X_max] starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(x_max: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::TooFewNodes(m));
        }
        if !(x_max.is_finite() && x_max > 0.0) {
            return Err(Error::Grid(format!("X_max must be positive, got {x_max}")));
        }
        let h = x_max / (m - 1) as f64;
        let mut nodes: Vec<f64> = (0..m).map(|j| j as f64 * h).collect();
        nodes[m - 1] = x_max;
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::TooFewNodes(nodes.len()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Grid("radial grid must start at 0".into()));
        }
        if nodes.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::Grid("radial nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Spacing, assuming a uniform grid.
    pub fn h(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    pub fn is_uniform(&self) -> bool {
        let h = self.h();
        self.nodes.windows(2).all(|p| ((p[1] - p[0]) - h).abs() <= 1e-9 * h.max(1.0))
    }
}
