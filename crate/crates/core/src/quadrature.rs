//! Quadrature primitives on sampled complex functions.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Composite trapezoid rule over arbitrary (increasing) nodes.
pub fn trapezoid_complex(nodes: &[f64], f: &[Complex64]) -> Result<Complex64> {
    if nodes.len() != f.len() {
        return Err(Error::Domain(format!(
            "{} nodes but {} samples",
            nodes.len(),
            f.len()
        )));
    }
    if nodes.len() < 2 {
        return Err(Error::TooFewNodes(nodes.len()));
    }
    Ok(nodes
        .windows(2)
        .zip(f.windows(2))
        .map(|(x, y)| (y[0] + y[1]) * (0.5 * (x[1] - x[0])))
        .sum())
}

/// Integral of f over [x_j, x_{j+1}] on a uniform grid from the local cubic
/// through four neighbouring samples (fourth order).
fn cubic_panel(f: &[Complex64], j: usize, h: f64) -> Complex64 {
    let m = f.len();
    if m < 4 {
        return (f[j] + f[j + 1]) * (0.5 * h);
    }
    if j == 0 {
        (f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]) * (h / 24.0)
    } else if j + 2 == m {
        (f[m - 1] * 9.0 + f[m - 2] * 19.0 - f[m - 3] * 5.0 + f[m - 4]) * (h / 24.0)
    } else {
        (-f[j - 1] + f[j] * 13.0 + f[j + 1] * 13.0 - f[j + 2]) * (h / 24.0)
    }
}

/// Running integral F(x_j) = ∫_{x_0}^{x_j} f on a uniform grid.
pub fn cumulative_from_left(h: f64, f: &[Complex64]) -> Result<Vec<Complex64>> {
    if f.len() < 2 {
        return Err(Error::TooFewNodes(f.len()));
    }
    let mut out = Vec::with_capacity(f.len());
    let mut acc = Complex64::new(0.0, 0.0);
    out.push(acc);
    for j in 0..f.len() - 1 {
        acc += cubic_panel(f, j, h);
        out.push(acc);
    }
    Ok(out)
}

/// Running integral F(x_j) = ∫_{x_j}^{x_last} f on a uniform grid.
pub fn cumulative_from_right(h: f64, f: &[Complex64]) -> Result<Vec<Complex64>> {
    if f.len() < 2 {
        return Err(Error::TooFewNodes(f.len()));
    }
    let m = f.len();
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let mut acc = Complex64::new(0.0, 0.0);
    for j in (0..m - 1).rev() {
        acc += cubic_panel(f, j, h);
        out[j] = acc;
    }
    Ok(out)
}
