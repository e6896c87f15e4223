#![allow(dead_code)]

use std::sync::OnceLock;

use filament_core::profile::{solve_profile, ProfileMode, ProfileSolution};
use filament_core::{ModelParams, RadialGrid};

pub const ALPHA: f64 = 20.0;

pub fn params() -> ModelParams {
    ModelParams { alpha: ALPHA, ..ModelParams::default() }
}

pub fn solve(mode: ProfileMode, alpha: f64, x_max: f64, m: usize) -> ProfileSolution {
    let p = ModelParams { alpha, ..ModelParams::default() };
    solve_profile(&p, mode, RadialGrid::uniform(x_max, m).unwrap(), 1e-12, 200).unwrap()
}

/// Pair profile at α = 20 on [0, 40] with 16001 nodes, solved once.
pub fn pair_profile() -> &'static ProfileSolution {
    static CELL: OnceLock<ProfileSolution> = OnceLock::new();
    CELL.get_or_init(|| solve(ProfileMode::Pair, ALPHA, 40.0, 16001))
}

pub fn polygonal_profile(omega: f64) -> ProfileSolution {
    solve(ProfileMode::Polygonal { omega }, ALPHA, 40.0, 16001)
}
