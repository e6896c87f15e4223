use filament_core::cutoff::{cutoff_phi, cutoff_psi};
use filament_core::quadrature::trapezoid_complex;
use filament_core::xnorm::{x_norm, FieldFrame};
use filament_core::{ComplexField, SpatialGrid};
use num_complex::Complex64;

#[test]
fn cutoff_values() {
    assert_eq!(cutoff_phi(0.5).unwrap(), 0.0);
    assert_eq!(cutoff_phi(3.0).unwrap(), 1.0);
    assert!((cutoff_phi(1.5).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(cutoff_psi(0.8).unwrap(), 0.0);
    assert_eq!(cutoff_psi(5.0).unwrap(), 5.0);
    assert!((cutoff_psi(1.5).unwrap() - 0.75).abs() < 1e-15);
    assert!(cutoff_phi(-1.0).is_err());
}

#[test]
fn trapezoid_values() {
    let one = |n: usize| vec![Complex64::new(1.0, 0.0); n];
    let nodes = [0.0, 0.3, 1.1, 2.0];
    assert!((trapezoid_complex(&nodes, &one(4)).unwrap() - 2.0).norm() < 1e-15);
    let x: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let f: Vec<Complex64> = x.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    assert_eq!(trapezoid_complex(&x, &f).unwrap(), Complex64::new(0.5, 0.0));
    let x: Vec<f64> = (0..1001).map(|k| k as f64 / 1000.0).collect();
    let f: Vec<Complex64> = x.iter().map(|&x| Complex64::new(x * x, 0.0)).collect();
    assert!((trapezoid_complex(&x, &f).unwrap().re - 1.0 / 3.0).abs() < 1e-6);
}

#[test]
fn x_norm_of_zero() {
    let g = SpatialGrid::new(80.0, 1024).unwrap();
    let frames = vec![
        FieldFrame { t: 0.5, field: ComplexField::zeros(g) },
        FieldFrame { t: 1.0, field: ComplexField::zeros(g) },
    ];
    assert_eq!(x_norm(&frames, 10.0, 0.125).unwrap().total, 0.0);
}

#[test]
fn x_norm_of_unit_gaussian_off_i() {
    // ‖g‖² = A²√π s and ‖g′‖² = A²√π/(2s) are both 1 for s = 1/√2
    let s = 0.5f64.sqrt();
    let amp = (1.0 / (std::f64::consts::PI.sqrt() * s)).sqrt();
    let g = SpatialGrid::new(80.0, 8192).unwrap();
    let field = ComplexField::from_fn(g, |x| Complex64::new(amp * (-(x - 10.0).powi(2) / (2.0 * s * s)).exp(), 0.0));
    let r = x_norm(&[FieldFrame { t: 1.0, field }], 10.0, 0.125).unwrap();
    assert!((r.l2_component - 1.0).abs() < 1e-12);
    assert!((r.grad_component - 1.0).abs() < 1e-12);
    assert!(r.local_component < 1e-30);
    assert!((r.total - 2.0).abs() < 1e-12);
}

#[test]
fn x_norm_local_component_of_constant() {
    let g = SpatialGrid::new(80.0, 1024).unwrap();
    let field = ComplexField::from_fn(g, |_| Complex64::new(0.05, 0.0));
    let r = x_norm(&[FieldFrame { t: 0.25, field }], 10.0, 0.125).unwrap();
    assert!((r.local_component - 0.8).abs() < 1e-15);
}
