mod common;

use filament_core::profile::{
    apply_p, couple_u, e_membership, iterate_profile, profile_residual, profile_residual_nodes, solve_profile,
    ProfileMode, ProfileSolution,
};
use filament_core::{Error, ModelParams, RadialGrid};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn zero_w_gives_linear_u() {
    let g = RadialGrid::uniform(40.0, 4001).unwrap();
    let w = vec![c(0.0, 0.0); g.len()];
    let u = couple_u(&g, &w, 10.0).unwrap();
    for (x, u) in g.nodes().iter().zip(&u) {
        assert!((u - c(1.0 + 10.0 * x, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn u_at_origin_is_one_for_any_w() {
    let g = RadialGrid::uniform(40.0, 4001).unwrap();
    let w: Vec<Complex64> = g.nodes().iter().map(|&x| c((x * 0.3).sin() * 0.01, (x * x).sin() * 0.02)).collect();
    assert_eq!(couple_u(&g, &w, 20.0).unwrap()[0], c(1.0, 0.0));
}

#[test]
fn u_with_truncated_quadratic_w() {
    // u(1) = 1 + 10 + ∫_1^∞ z^{−2} dz = 12
    let g = RadialGrid::uniform(40.0, 16001).unwrap();
    let w: Vec<Complex64> = g.nodes().iter().map(|&z| c((z * z).min(1.0), 0.0)).collect();
    let u = couple_u(&g, &w, 10.0).unwrap();
    let j = g.nodes().iter().position(|&x| x == 1.0).unwrap();
    assert!((u[j] - c(12.0, 0.0)).norm() < 1e-6, "u(1) = {}", u[j]);
}

#[test]
fn polygonal_omega_zero_map_is_explicit() {
    let g = RadialGrid::uniform(40.0, 16001).unwrap();
    let w: Vec<Complex64> = g.nodes().iter().map(|&x| c(x.sin(), 0.1 * x)).collect();
    let out = apply_p(&g, &w, 20.0, ProfileMode::Polygonal { omega: 0.0 }).unwrap();
    for (x, v) in g.nodes().iter().zip(&out) {
        let exact = Complex64::from_polar(1.0, x * x / 4.0) - 1.0;
        assert!((v - exact).norm() < 1e-13);
    }
}

#[test]
fn polygonal_omega_zero_membership_threshold() {
    let g = RadialGrid::uniform(40.0, 16001).unwrap();
    let w: Vec<Complex64> = g.nodes().iter().map(|&x| Complex64::from_polar(1.0, x * x / 4.0) - 1.0).collect();
    let m = e_membership(&g, &w, 20.0);
    assert!((m.sup_w - 2.0).abs() < 1e-4, "sup |w| = {}", m.sup_w);
    assert!((m.sup_ratio - 0.5).abs() < 1e-3, "sup |w′/x| = {}", m.sup_ratio);
    assert!(m.member);
    assert!(e_membership(&g, &w, 10.5).member);
    assert!(!e_membership(&g, &w, 9.5).member);
}

#[test]
fn pair_first_iterate_against_refined_grid() {
    let coarse = RadialGrid::uniform(40.0, 4001).unwrap();
    let fine = RadialGrid::uniform(40.0, 32001).unwrap();
    let zero = |g: &RadialGrid| vec![c(0.0, 0.0); g.len()];
    let a = apply_p(&coarse, &zero(&coarse), 20.0, ProfileMode::Pair).unwrap();
    let b = apply_p(&fine, &zero(&fine), 20.0, ProfileMode::Pair).unwrap();
    let err = (0..coarse.len()).map(|j| (a[j] - b[8 * j]).norm()).fold(0.0, f64::max);
    assert!(err < 1e-6, "first iterate differs by {err:.3e}");
}

#[test]
fn polygonal_omega_zero_converges_in_two_iterations() {
    let sol = common::polygonal_profile(0.0);
    assert!(sol.iterations <= 2);
    for (x, w) in sol.grid.nodes().iter().zip(&sol.w) {
        assert!((w - (Complex64::from_polar(1.0, x * x / 4.0) - 1.0)).norm() < 1e-13);
    }
}

#[test]
fn pair_profile_lower_bound() {
    let p = ModelParams::default();
    let tol = 1e-10;
    let sol = solve_profile(&p, ProfileMode::Pair, RadialGrid::uniform(40.0, 16001).unwrap(), tol, 200).unwrap();
    assert!(sol.converged);
    for (x, u) in sol.grid.nodes().iter().zip(&sol.u) {
        assert!(u.re >= 1.0 + 15.0 * x - tol, "Re u({x}) = {}", u.re);
    }
}

#[test]
fn small_alpha_is_rejected() {
    let p = ModelParams { alpha: 0.1, ..ModelParams::default() };
    let g = RadialGrid::uniform(40.0, 4001).unwrap();
    let err = solve_profile(&p, ProfileMode::Pair, g, 1e-12, 200).unwrap_err();
    assert!(
        matches!(err, Error::Breakdown { .. } | Error::NonConvergence { .. } | Error::NotInE { .. }),
        "{err}"
    );
}

#[test]
fn residual_decreases_under_refinement() {
    let r1 = profile_residual(&common::solve(ProfileMode::Pair, 20.0, 40.0, 4001)).unwrap();
    let r2 = profile_residual(&common::solve(ProfileMode::Pair, 20.0, 40.0, 8001)).unwrap();
    let order = (r1 / r2).log2();
    assert!(order >= 1.0, "residuals {r1:.3e} → {r2:.3e}, order {order:.2}");
}

#[test]
fn residual_of_linear_surrogate() {
    let a = 19.0;
    let g = RadialGrid::uniform(4.0, 401).unwrap();
    let w = vec![c(0.0, 0.0); g.len()];
    let u: Vec<Complex64> = g.nodes().iter().map(|&x| c(1.0 + a * x, 0.0)).collect();
    let sol = ProfileSolution::from_samples(ProfileMode::Pair, a, g, w, u).unwrap();
    let nodes = profile_residual_nodes(&sol).unwrap();
    let (_, r) = nodes.iter().find(|(x, _)| (*x - 1.0).abs() < 1e-12).copied().unwrap();
    assert!((r - (1.0f64 + 0.01).sqrt()).abs() < 1e-9, "residual at 1: {r}");
}

#[test]
fn polygonal_omega_zero_residual() {
    let r = profile_residual(&common::polygonal_profile(0.0)).unwrap();
    assert!(r < 1e-6, "residual {r:.3e}");
}

#[test]
fn h_at_the_origin() {
    let sol = common::pair_profile();
    assert_eq!(sol.eval_h(1.0, 0.0).unwrap().h, c(1.0, 0.0));
    for t in [1e-8, 1e-3, 0.3] {
        let h = sol.eval_h(t, 0.0).unwrap().h;
        assert!((h - c(t.sqrt(), 0.0)).norm() < 1e-15);
    }
}

#[test]
fn h_deviation_bound_at_large_sigma() {
    let sol = common::pair_profile();
    let t: f64 = 0.25;
    for sigma in [0.5, 2.0, 5.0, 19.0, 30.0] {
        let h = sol.eval_h(t, sigma).unwrap().h;
        let dev = (h - c(t.sqrt() + 20.0 * sigma, 0.0)).norm();
        assert!(dev <= 5.0 * t.sqrt().min(sigma) + 1e-9, "σ = {sigma}: {dev}");
    }
}

#[test]
fn iterate_profile_keeps_limits_outside_e() {
    let p = ModelParams { alpha: 10.0, ..ModelParams::default() };
    let g = RadialGrid::uniform(40.0, 16001).unwrap();
    let sol = iterate_profile(&p, ProfileMode::Pair, g.clone(), 1e-12, 200).unwrap();
    assert_eq!(sol.membership().member, solve_profile(&p, ProfileMode::Pair, g, 1e-12, 200).is_ok());
}
