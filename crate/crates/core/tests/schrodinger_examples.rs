use filament_core::schrodinger::{
    energy_bm, full_kmd_symmetry_check, nonlinear_substep, split_step_evolve, strang_step, EquationKind,
    SolverOptions,
};
use filament_core::spectral::{dispersion_check, free_propagate, Spectral};
use filament_core::{ComplexField, SpatialGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn gaussian(g: SpatialGrid) -> ComplexField {
    ComplexField::from_fn(g, |s| Complex64::new((-s * s).exp(), 0.0))
}

fn max_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn gaussian_dispersion_constant() {
    let g = SpatialGrid::new(400.0, 16384).unwrap();
    let sp = Spectral::new(g);
    let ts: Vec<f64> = (0..10).map(|k| 0.01 * 2f64.powi(k)).collect();
    let rep = dispersion_check(&sp, &gaussian(g), &ts).unwrap();
    let bound = (4.0 * std::f64::consts::PI).powf(-0.5);
    assert!(rep.constant <= bound * 1.01, "constant = {}", rep.constant);
    assert!(rep.constant >= bound * 0.99);
    assert!(rep.wraparound_warnings.is_empty());
}

#[test]
fn doubling_t_scales_sup_by_inverse_root_two() {
    let g = SpatialGrid::new(400.0, 16384).unwrap();
    let sp = Spectral::new(g);
    let f = gaussian(g);
    let a = free_propagate(&sp, &f, 5.0).unwrap().linf_norm();
    let b = free_propagate(&sp, &f, 10.0).unwrap().linf_norm();
    assert!((b / a - 0.5f64.sqrt()).abs() < 1e-3, "ratio = {}", b / a);
}

#[test]
fn spike_gives_finite_constant() {
    let g = SpatialGrid::new(80.0, 1024).unwrap();
    let sp = Spectral::new(g);
    let mut v = vec![Complex64::new(0.0, 0.0); 1024];
    v[g.origin_index()] = Complex64::new(1.0, 0.0);
    let f = ComplexField::new(g, v).unwrap();
    let rep = dispersion_check(&sp, &f, &[0.01, 0.1, 1.0]).unwrap();
    assert!(rep.constant.is_finite() && rep.constant > 0.0);
    assert!(dispersion_check(&sp, &ComplexField::zeros(g), &[0.1]).is_err());
}

#[test]
fn bm_small_energy_never_vanishes() {
    let g = SpatialGrid::new(80.0, 4096).unwrap();
    let phi = ComplexField::from_fn(g, |s| Complex64::new(1.0 + 0.01 * (-s * s).exp(), 0.0));
    let kind = EquationKind::Bm { omega: 1.0 };
    let opts = SolverOptions { stride: 10, ..SolverOptions::default() };
    let run = split_step_evolve(vec![phi.clone()], &kind, 0.0, 1.0, 1e-3, &opts).unwrap();
    let e0 = energy_bm(&phi, 1.0).unwrap();
    for f in &run.frames {
        let m = f.fields[0].values().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        assert!(m >= 0.5);
        let e = energy_bm(&f.fields[0], 1.0).unwrap();
        assert!(((e - e0) / e0).abs() < 1e-2);
    }
}

#[test]
fn strang_is_second_order() {
    let g = SpatialGrid::new(40.0, 512).unwrap();
    let phi = ComplexField::from_fn(g, |s| Complex64::new(1.0 + 0.3 * (-s * s).exp(), 0.2 * (-s * s).exp()));
    let kind = EquationKind::Bm { omega: 1.0 };
    let opts = SolverOptions { edge_tol: 1e-6, ..SolverOptions::default() };
    let end = |dt: f64| {
        let run = split_step_evolve(vec![phi.clone()], &kind, 0.0, 0.5, dt, &opts).unwrap();
        run.frames.last().unwrap().fields[0].clone()
    };
    let dt = 0.02;
    let reference = end(dt / 8.0);
    let e1 = max_diff(&end(dt), &reference);
    let e2 = max_diff(&end(dt / 2.0), &reference);
    let order = (e1 / e2).log2();
    assert!(order >= 1.9, "order = {order} (errors {e1:e}, {e2:e})");
}

#[test]
fn pair_substep_keeps_real_part() {
    let g = SpatialGrid::new(20.0, 256).unwrap();
    let f = ComplexField::from_fn(g, |s| Complex64::new(1.0 + 0.5 * (-s * s).exp(), s.sin()));
    let mut fs = vec![f.clone()];
    nonlinear_substep(&mut fs, &EquationKind::Pair, 0.3, 0.0, 1e-6).unwrap();
    for (a, b) in fs[0].values().iter().zip(f.values()) {
        assert_eq!(a.re, b.re);
        assert!((a.im - (b.im - 0.3 / b.re)).abs() < 1e-15);
    }
}

#[test]
fn symmetric_triangle_matches_reduced_equation() {
    let g = SpatialGrid::new(40.0, 512).unwrap();
    let psi = ComplexField::from_fn(g, |s| Complex64::new(1.0 + 0.01 * (-s * s).exp(), 0.0));
    let opts = SolverOptions { edge_tol: f64::INFINITY, ..SolverOptions::default() };
    let dev = full_kmd_symmetry_check(&psi, 3, None, 0.5, 1e-3, &opts).unwrap();
    assert!(dev < 1e-6, "deviation = {dev}");
}

#[test]
fn single_filament_with_center_is_trivial() {
    let g = SpatialGrid::new(40.0, 256).unwrap();
    let psi = ComplexField::from_fn(g, |s| Complex64::new(1.0 + 0.05 * (-s * s).exp(), 0.0));
    let opts = SolverOptions { edge_tol: f64::INFINITY, ..SolverOptions::default() };
    let dev = full_kmd_symmetry_check(&psi, 1, Some(0.7), 0.2, 1e-3, &opts).unwrap();
    assert!(dev < 1e-8, "deviation = {dev}");
}

#[test]
fn pair_mirror_symmetry_preserved() {
    let g = SpatialGrid::new(40.0, 256).unwrap();
    let psi1 = ComplexField::from_fn(g, |s| Complex64::new(1.0 + 0.1 * (-s * s).exp(), 0.05 * (-s * s).exp()));
    let psi2 = psi1.map(|_, z| -z.conj());
    let opts = SolverOptions { edge_tol: f64::INFINITY, stride: 20, ..SolverOptions::default() };
    let run = split_step_evolve(vec![psi1, psi2], &EquationKind::kmd_pair(), 0.0, 0.2, 1e-3, &opts).unwrap();
    for f in &run.frames {
        let mirrored = f.fields[0].map(|_, z| -z.conj());
        assert!(max_diff(&mirrored, &f.fields[1]) < 1e-10);
    }
}

#[test]
fn energy_matches_fine_quadrature() {
    let g = SpatialGrid::new(80.0, 4096).unwrap();
    let phi = ComplexField::from_fn(g, |s| Complex64::new(1.0 + 0.1 * (-s * s).exp(), 0.0));
    let e = energy_bm(&phi, 1.0).unwrap();
    // ∫|∂Φ|² = 0.04∫σ²e^{−2σ²} = 0.01√(π/2); the potential by Simpson on a fine grid
    let grad = 0.01 * (std::f64::consts::PI / 2.0).sqrt();
    let n = 400_000;
    let (a, b) = (-20.0, 20.0);
    let h = (b - a) / n as f64;
    let pot = |s: f64| {
        let m = (1.0 + 0.1 * (-s * s).exp()).powi(2);
        -f64::ln(m) + m - 1.0
    };
    let simpson: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * pot(a + k as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert!((e - (grad + simpson)).abs() < 1e-8, "{e} vs {}", grad + simpson);
}

fn bump_strategy() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-0.4f64..0.4, -0.4f64..0.4, 0.3f64..3.0, -3.0f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_propagation_conserves_mass((a, b, w, shift) in bump_strategy(), t in -5.0f64..5.0) {
        let g = SpatialGrid::new(40.0, 512).unwrap();
        let f = ComplexField::from_fn(g, |s| {
            let e = (-(s - shift).powi(2) / w).exp();
            Complex64::new(a * e, b * e * (2.0 * s).cos())
        });
        prop_assume!(f.l2_norm() > 1e-6);
        let out = free_propagate(&Spectral::new(g), &f, t).unwrap();
        prop_assert!(((out.l2_norm() - f.l2_norm()) / f.l2_norm()).abs() <= 1e-13);
    }

    #[test]
    fn phase_substeps_keep_modulus((a, b, w, shift) in bump_strategy(), omega in -3.0f64..3.0, dt in -0.5f64..0.5) {
        let g = SpatialGrid::new(40.0, 256).unwrap();
        let f = ComplexField::from_fn(g, |s| {
            let e = (-(s - shift).powi(2) / w).exp();
            Complex64::new(1.0 + a * e, b * e)
        });
        for kind in [EquationKind::Polygonal { omega }, EquationKind::Bm { omega }] {
            let mut fs = vec![f.clone()];
            nonlinear_substep(&mut fs, &kind, dt, 0.0, 1e-6).unwrap();
            for (x, y) in fs[0].values().iter().zip(f.values()) {
                prop_assert!((x.norm() - y.norm()).abs() <= 1e-15 * y.norm().max(1.0));
            }
        }
    }

    #[test]
    fn strang_step_is_reversible((a, b, w, shift) in bump_strategy(), omega in -3.0f64..3.0, dt in 1e-3f64..0.1) {
        let g = SpatialGrid::new(40.0, 256).unwrap();
        let sp = Spectral::new(g);
        let f = ComplexField::from_fn(g, |s| {
            let e = (-(s - shift).powi(2) / w).exp();
            Complex64::new(1.0 + a * e, b * e)
        });
        for kind in [EquationKind::Pair, EquationKind::Polygonal { omega }, EquationKind::Bm { omega }] {
            let mut fs = vec![f.clone()];
            strang_step(&sp, &mut fs, &kind, 0.3, dt, 1e-6).unwrap();
            strang_step(&sp, &mut fs, &kind, 0.3 + dt, -dt, 1e-6).unwrap();
            prop_assert!(max_diff(&fs[0], &f) <= 1e-10);
        }
    }
}
