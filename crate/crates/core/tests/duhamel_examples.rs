mod common;

use filament_core::cutoff::cutoff_psi;
use filament_core::duhamel::{
    apply_duhamel, contraction_probe, solve_r, Background, DuhamelOptions, FieldFrame, PerturbationMode,
    PerturbationTrajectory,
};
use filament_core::spectral::Spectral;
use filament_core::{ComplexField, ModelParams, SpatialGrid};
use num_complex::Complex64;

fn grid() -> SpatialGrid {
    SpatialGrid::new(80.0, 4096).unwrap()
}

#[test]
fn duhamel_of_zero_and_constant() {
    let g = grid();
    let sp = Spectral::new(g);
    let zero = apply_duhamel(&sp, |_| Ok(ComplexField::zeros(g)), 0.7, 32).unwrap();
    assert_eq!(zero.linf_norm(), 0.0);
    let one = ComplexField::from_fn(g, |_| Complex64::new(1.0, 0.0));
    let out = apply_duhamel(&sp, |_| Ok(one.clone()), 0.7, 32).unwrap();
    assert!(out.values().iter().all(|z| (z - Complex64::new(0.0, -0.7)).norm() < 1e-14));
    // the same constant with a = −1 gives i t
    let minus = one.scale(-1.0);
    let out = apply_duhamel(&sp, |_| Ok(minus.clone()), 0.01, 32).unwrap();
    assert!(out.values().iter().all(|z| (z - Complex64::new(0.0, 0.01)).norm() < 1e-15));
}

#[test]
fn a_tilde_of_zero_is_h_on_i() {
    let prof = common::pair_profile();
    let params = common::params();
    let g = grid();
    let bg = Background::new(prof, &params, g);
    let zero = ComplexField::zeros(g);
    for &t in &[1e-8, 1e-3, 1.0] {
        let at = bg.source_a_tilde(&zero, t).unwrap();
        for k in 0..g.n() {
            let s = g.node(k);
            if params.alpha * s.abs() < 0.5 {
                let h = prof.eval_h(t, s).unwrap().h;
                assert!((at.values.values()[k] - h).norm() <= 1e-14 * h.norm().max(1.0));
            }
        }
    }
    let at = bg.source_a_tilde(&zero, 1.0).unwrap();
    assert!((at.values.values()[g.origin_index()] - 1.0).norm() < 1e-14);
}

#[test]
fn a_off_i_decays_like_cutoff() {
    let prof = common::pair_profile();
    let params = common::params();
    let g = grid();
    let bg = Background::new(prof, &params, g);
    let a = bg.source_a(&ComplexField::zeros(g), 0.01).unwrap();
    let alpha = params.alpha;
    let c = (0..g.n())
        .filter(|&k| alpha * g.node(k).abs() >= 2.0)
        .map(|k| {
            let psi = cutoff_psi(alpha * g.node(k).abs()).unwrap();
            a.values.values()[k].norm() * (1.0 + psi) / alpha
        })
        .fold(0.0, f64::max);
    eprintln!("a(0) off I: measured C = {c:.4e}");
    assert!(c.is_finite() && c < 1.0);
}

#[test]
fn a_difference_bounded_on_i() {
    let prof = common::pair_profile();
    let params = common::params();
    let g = SpatialGrid::new(80.0, 16384).unwrap();
    let bg = Background::new(prof, &params, g);
    let t = 0.04;
    let r = ComplexField::from_fn(g, |s| Complex64::new(0.01 * (-s * s).exp(), 0.0));
    let a0 = bg.source_a(&ComplexField::zeros(g), t).unwrap();
    let ar = bg.source_a(&r, t).unwrap();
    let mut c = 0.0f64;
    for k in 0..g.n() {
        let s = g.node(k);
        if params.alpha * s.abs() < 0.5 {
            let scale = (t.sqrt() + params.alpha * s.abs()).powi(2);
            let d = (ar.values.values()[k] - a0.values.values()[k]).norm();
            c = c.max(d * scale / r.values()[k].norm());
        }
    }
    eprintln!("|a(r) − a(0)| on I: measured C = {c:.4e}");
    assert!(c <= 32.0);
}

#[test]
fn duhamel_matches_exact_single_mode() {
    let g = SpatialGrid::new(80.0, 1 << 12).unwrap();
    let sp = Spectral::new(g);
    let t = 0.01;
    for &(mode, mu) in &[(0usize, 3.0f64), (37, 50.0), (300, 1000.0)] {
        let k = 2.0 * std::f64::consts::PI * mode as f64 / g.length();
        let lam = k * k;
        // −i∫_0^t e^{−i(t−s)λ} √s e^{iμs} ds by a fine midpoint rule in τ = √(s/t)
        let nref = 400_000;
        let exact = -Complex64::i()
            * (0..nref)
                .map(|j| {
                    let tau = (j as f64 + 0.5) / nref as f64;
                    let s = t * tau * tau;
                    Complex64::from_polar(s.sqrt() * 2.0 * t * tau / nref as f64, -(t - s) * lam + mu * s)
                })
                .sum::<Complex64>();
        let out = apply_duhamel(
            &sp,
            |s| Ok(ComplexField::from_fn(g, |x| Complex64::from_polar(s.sqrt(), mu * s + k * x))),
            t,
            256,
        )
        .unwrap();
        let err = (out.values()[g.origin_index()] - exact).norm();
        assert!(err < 1e-9, "mode {mode}: err = {err:e}");
    }
}

#[test]
fn b_duhamel_mesh_doubling() {
    let prof = common::pair_profile();
    let params = common::params();
    let g = SpatialGrid::new(80.0, 1 << 14).unwrap();
    let sp = Spectral::new(g);
    let bg = Background::new(prof, &params, g);
    let run = |m: usize| apply_duhamel(&sp, |s| Ok(bg.source_b(s).values), 0.01, m).unwrap();
    let coarse = run(256);
    let d = coarse.sub(&run(512)).l2_norm();
    eprintln!("b Duhamel at t = 0.01: mesh doubling changes L² by {d:.3e} (norm {:.4e})", coarse.l2_norm());
    // floor set by the e^{iσ²/4s} tail of the profile, unresolved in σ for s ≲ 5e-5
    assert!(d < 2e-5, "mesh doubling changed the result by {d:e}");
}

#[test]
fn probe_rejects_identical_inputs() {
    let prof = common::pair_profile();
    let params = ModelParams { t0: 1e-13, ..common::params() };
    let opts = DuhamelOptions { n: 4096, levels: 2, ..DuhamelOptions::default() };
    let g = opts.grid().unwrap();
    let frames: Vec<FieldFrame> =
        opts.ladder(params.t0).into_iter().map(|t| FieldFrame { t, field: ComplexField::zeros(g) }).collect();
    let r = PerturbationTrajectory::new(frames, params.alpha, params.gamma).unwrap();
    assert!(contraction_probe(&r, &r, prof, &params, PerturbationMode::Pair, &opts).is_err());
}

#[test]
fn contraction_ratio_is_scale_robust() {
    let prof = common::pair_profile();
    let params = ModelParams { t0: 1e-13, ..common::params() };
    let opts = DuhamelOptions::default();
    let sol = solve_r(prof, &params, PerturbationMode::Pair, &opts).unwrap();
    assert!(sol.max_ratio() <= 0.5);
    let r = &sol.trajectory;
    let zero = r.scaled(0.0).unwrap();
    let full = contraction_probe(&zero, r, prof, &params, PerturbationMode::Pair, &opts).unwrap();
    let half = contraction_probe(&zero, &r.scaled(0.5).unwrap(), prof, &params, PerturbationMode::Pair, &opts)
        .unwrap();
    eprintln!("contraction probe: full {full:.4e}, midpoint {half:.4e}");
    assert!(full <= 0.5);
    assert!(((half - full) / full).abs() < 0.25);
}
