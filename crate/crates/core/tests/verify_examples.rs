mod common;

use filament_core::commands::{run_verify, VERIFY_REPORT};
use filament_core::duhamel::{Background, DuhamelOptions, FieldFrame, PerturbationMode, PerturbationTrajectory};
use filament_core::profile::{ProfileMode, ProfileSolution};
use filament_core::verify::{
    check_denominator_bounds, check_h_bounds, check_profile_bounds, check_source_bounds, constant_on_i,
    explicit_failures, BoundCheck, CheckKind,
};
use filament_core::{ComplexField, RunConfig, SpatialGrid};
use num_complex::Complex64;

fn find<'a>(checks: &'a [BoundCheck], id: &str) -> &'a BoundCheck {
    checks.iter().find(|c| c.id == id).unwrap_or_else(|| panic!("no check {id}"))
}

/// The converged pair profile with `f` applied to (w, u) at node `j`.
fn corrupted(j: usize, f: impl Fn(&mut Complex64, &mut Complex64)) -> ProfileSolution {
    let p = common::pair_profile();
    let (mut w, mut u) = (p.w.clone(), p.u.clone());
    f(&mut w[j], &mut u[j]);
    ProfileSolution::from_samples(ProfileMode::Pair, p.alpha, p.grid.clone(), w, u).unwrap()
}

fn node_near(x: f64) -> usize {
    let p = common::pair_profile();
    (x / p.grid.h()).round() as usize
}

#[test]
fn converged_profile_passes_lemma_bounds() {
    let checks = check_profile_bounds(common::pair_profile());
    assert_eq!(checks.len(), 5);
    for c in &checks {
        assert!(c.passed, "{} failed: lhs {} rhs {}", c.id, c.lhs_max, c.rhs_min_or_budget);
        assert_eq!(c.kind, CheckKind::Explicit);
    }
}

#[test]
fn profile_fault_injection_flips_each_check() {
    let j = node_near(2.0);
    let cases: [(&str, Box<dyn Fn(&mut Complex64, &mut Complex64)>); 5] = [
        ("lemma4.1-dev", Box::new(|_, u| *u += Complex64::new(0.0, 10.0))),
        ("lemma4.1-upper", Box::new(|_, u| *u *= 3.0)),
        ("lemma4.1-lower", Box::new(|_, u| *u -= 20.0)),
        ("lemma4.1-du", Box::new(|_, u| *u += 1.0)),
        ("lemma4.1-d2u", Box::new(|_, u| *u += 1e-3)),
    ];
    let clean = check_profile_bounds(common::pair_profile());
    for (id, f) in cases {
        assert!(find(&clean, id).passed);
        let bad = check_profile_bounds(&corrupted(j, f));
        let c = find(&bad, id);
        assert!(!c.passed, "{id} did not flip");
        assert!(c.is_explicit_failure());
    }
}

#[test]
fn h_bounds_on_ten_thousand_pairs() {
    let ts: Vec<f64> = (0..100).map(|k| 1e-8 * (0.9f64 / 1e-8).powf(k as f64 / 99.0)).collect();
    let sigmas: Vec<f64> = (0..100).map(|k| -10.0 + 20.0 * k as f64 / 99.0).collect();
    let checks = check_h_bounds(common::pair_profile(), &ts, &sigmas).unwrap();
    for c in &checks {
        assert!(c.passed, "{} failed at {:?}", c.id, c.worst_at);
        assert!(c.nodes_checked >= 9_900);
    }
    let at_zero = check_h_bounds(common::pair_profile(), &ts, &[0.0]).unwrap();
    assert!(find(&at_zero, "dev:H").lhs_max < 1e-15);
}

#[test]
fn h_fault_injection_flips_each_check() {
    let t: f64 = 0.25;
    let j = node_near(0.5);
    let x = common::pair_profile().grid.nodes()[j];
    let sigmas = [x * t.sqrt()];
    let cases: [(&str, Box<dyn Fn(&mut Complex64, &mut Complex64)>); 4] = [
        ("dev:H", Box::new(|_, u| *u += 10.0)),
        ("Hinffar", Box::new(|_, u| *u -= 8.0)),
        ("lemma4.2-dH", Box::new(move |w, _| *w -= 30.0)),
        ("lemma4.2-d2H", Box::new(move |w, _| *w -= 30.0)),
    ];
    let clean = check_h_bounds(common::pair_profile(), &[t], &sigmas).unwrap();
    for (id, f) in cases {
        assert!(find(&clean, id).passed);
        let bad = check_h_bounds(&corrupted(j, f), &[t], &sigmas).unwrap();
        assert!(!find(&bad, id).passed, "{id} did not flip");
    }
}

#[test]
fn far_field_h_and_profile_lower_bounds_agree() {
    // at t = 1 the lower bound on H is read at the profile nodes
    let p = common::pair_profile();
    let nodes: Vec<f64> = p.grid.nodes().iter().copied().filter(|&x| x >= 1.0).step_by(97).collect();
    let verdicts = |sol: &ProfileSolution| {
        let h = check_h_bounds(sol, &[1.0 - 1e-15], &nodes).unwrap();
        (find(&h, "Hinffar").passed, find(&check_profile_bounds(sol), "lemma4.1-lower").passed)
    };
    assert_eq!(verdicts(p), (true, true));
    let j = p.grid.nodes().iter().position(|&x| x == nodes[3]).unwrap();
    assert_eq!(verdicts(&corrupted(j, |_, u| *u = Complex64::new(1.0, u.im))), (false, false));
}

fn ladder_trajectory(field: impl Fn(f64, SpatialGrid) -> ComplexField) -> (PerturbationTrajectory, SpatialGrid) {
    let params = common::params();
    let opts = DuhamelOptions { levels: 3, ..DuhamelOptions::default() };
    let g = opts.grid().unwrap();
    let frames = opts.ladder(1e-6).into_iter().map(|t| FieldFrame { t, field: field(t, g) }).collect();
    (PerturbationTrajectory::new(frames, params.alpha, params.gamma).unwrap(), g)
}

#[test]
fn denominators_with_zero_perturbation() {
    let (traj, g) = ladder_trajectory(|_, g| ComplexField::zeros(g));
    let bg = Background::new(common::pair_profile(), &common::params(), g);
    let checks = check_denominator_bounds(&traj, &bg);
    assert_eq!(explicit_failures(&checks), 0);
    for id in ["ineq:near-1", "ineq:far-1", "premise:ball", "ineq:near-2", "ineq:far-2"] {
        assert!(find(&checks, id).passed, "{id}");
    }
}

#[test]
fn injected_perturbation_is_a_premise_violation() {
    let alpha = common::ALPHA;
    let (traj, g) =
        ladder_trajectory(|t, g| constant_on_i(g, alpha, Complex64::new(-t.sqrt() / 3.0, 0.0)));
    let bg = Background::new(common::pair_profile(), &common::params(), g);
    let checks = check_denominator_bounds(&traj, &bg);
    let premise = find(&checks, "premise:ball");
    assert!(!premise.passed && premise.is_explicit_failure());
    let near2 = find(&checks, "ineq:near-2");
    assert!(near2.premise_violated);
    assert!(!near2.is_explicit_failure());
    assert!(find(&checks, "ineq:near-1").passed);
}

#[test]
fn source_identities_along_zero_trajectory() {
    let (traj, g) = ladder_trajectory(|_, g| ComplexField::zeros(g));
    let bg = Background::new(common::pair_profile(), &common::params(), g);
    let checks = check_source_bounds(&traj, &bg, PerturbationMode::Pair).unwrap();
    for id in ["bL1", "gradbL2I"] {
        let c = find(&checks, id);
        assert!(c.passed && c.lhs_max == 0.0, "{id}: {}", c.lhs_max);
    }
    // with r = 0 the constant term of the bound on I is saturated and C reads 0
    assert_eq!(find(&checks, "ineq:a-1").lhs_max, 0.0);
    let a = bg.source_a(&ComplexField::zeros(g), 1e-6).unwrap();
    for k in 0..g.n() {
        if common::ALPHA * g.node(k).abs() < 0.5 {
            assert_eq!(a.values.values()[k].norm(), 1.0);
        }
    }
}

#[test]
fn suite_needs_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { output_dir: dir.path().to_path_buf(), ..RunConfig::default() };
    assert!(run_verify(&cfg).is_err());
    assert!(!dir.path().join(VERIFY_REPORT).exists());
}

#[test]
fn suite_on_profile_includes_point_vortex_regressions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { output_dir: dir.path().to_path_buf(), ..RunConfig::default() };
    common::pair_profile().write_json(&cfg.profile_file()).unwrap();
    let checks = run_verify(&cfg).unwrap();
    assert_eq!(explicit_failures(&checks), 0);
    assert!(find(&checks, "pv:polygon-rotation").passed);
    assert!(find(&checks, "pv:polygon-stationary").passed);
    assert!(dir.path().join(VERIFY_REPORT).exists());
}
