//! Versioned run configuration. Every knob of every pipeline stage lives
//! here, so a run can be reproduced from its `config.json` alone.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::duhamel::{assemble_psi, Background, DuhamelOptions, FieldFrame, PerturbationMode};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, RadialGrid, SpatialGrid};
use crate::params::ModelParams;
use crate::profile::{ProfileMode, ProfileSolution};
use crate::schrodinger::{background, EquationKind, SolverOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { length: 80.0, n: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialConfig {
    pub x_max: f64,
    pub m: usize,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self { x_max: 40.0, m: 16001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { dt: 1e-4, t_start: 0.0, t_end: 1.0, stride: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub profile_tol: f64,
    pub profile_max_iter: usize,
    pub floor_eps: f64,
    pub edge_tol: f64,
    /// Largest admissible contraction ratio of the r fixed point.
    pub ratio_target: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { profile_tol: 1e-12, profile_max_iter: 200, floor_eps: 1e-6, edge_tol: 1e-8, ratio_target: 0.5 }
    }
}

/// Initial data of a `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialCondition {
    /// The spatially constant background of the kind at `t_start`.
    Background,
    /// Background plus amplitude·e^{−σ²/width²} on every field.
    Bump { amplitude: f64, width: f64 },
    /// −it + H/(1+ψ(α|σ|)) from the profile file (rotated for polygons).
    SelfSimilar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub kind: EquationKind,
    pub initial: InitialCondition,
}

impl Default for Scenario {
    fn default() -> Self {
        Self { kind: EquationKind::Pair, initial: InitialCondition::Background }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PvConfig {
    pub n: usize,
    /// Anti-parallel pair at this distance instead of a polygon.
    pub pair_distance: Option<f64>,
    pub t_final: f64,
    pub dt: f64,
}

impl Default for PvConfig {
    fn default() -> Self {
        Self { n: 3, pair_distance: None, t_final: 1.0, dt: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct T0Search {
    pub enabled: bool,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Default for T0Search {
    fn default() -> Self {
        Self { enabled: true, lo: 1e-14, hi: 1e-10, steps: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Random times and σ values for the H bounds (checked on their
    /// product), drawn from `seed`.
    pub t_samples: usize,
    pub sigma_samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub sigma_max: f64,
    pub sweep_alphas: Vec<f64>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { t_samples: 32, sigma_samples: 400, t_min: 1e-8, t_max: 0.9, sigma_max: 10.0, sweep_alphas: vec![10.0, 20.0, 40.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub params: ModelParams,
    pub mode: PerturbationMode,
    pub grid: GridConfig,
    pub radial: RadialConfig,
    pub time: TimeConfig,
    pub duhamel: DuhamelOptions,
    pub tolerances: Tolerances,
    pub scenario: Scenario,
    pub pv: PvConfig,
    pub t0_search: T0Search,
    pub verify: VerifyConfig,
    /// Profile consumed by simulate/fixedpoint/verify; defaults to
    /// `<output_dir>/profile.json`.
    pub profile_path: Option<PathBuf>,
    /// Trajectory directory consumed by verify.
    pub trajectory_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            params: ModelParams::default(),
            mode: PerturbationMode::Pair,
            grid: GridConfig::default(),
            radial: RadialConfig::default(),
            time: TimeConfig::default(),
            duhamel: DuhamelOptions::default(),
            tolerances: Tolerances::default(),
            scenario: Scenario::default(),
            pv: PvConfig::default(),
            t0_search: T0Search::default(),
            verify: VerifyConfig::default(),
            profile_path: None,
            trajectory_dir: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Params(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: Self = crate::io::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Params(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.params.validate(self.mode == PerturbationMode::Polygonal)?;
        self.spatial_grid()?;
        self.radial_grid()?;
        positive("dt", self.time.dt)?;
        if !(self.time.t_start >= 0.0 && self.time.t_end > self.time.t_start) {
            return Err(Error::Params(format!(
                "need 0 ≤ t_start < t_end, got [{}, {}]",
                self.time.t_start, self.time.t_end
            )));
        }
        if self.time.stride == 0 {
            return Err(Error::Params("stride must be at least 1".into()));
        }
        self.duhamel.grid()?;
        if self.duhamel.mesh < 2 || self.duhamel.max_iter == 0 {
            return Err(Error::Params("duhamel mesh needs at least 2 intervals and max_iter at least 1".into()));
        }
        positive("duhamel.tol", self.duhamel.tol)?;
        positive("profile_tol", self.tolerances.profile_tol)?;
        positive("floor_eps", self.tolerances.floor_eps)?;
        positive("edge_tol", self.tolerances.edge_tol)?;
        if !(self.tolerances.ratio_target > 0.0 && self.tolerances.ratio_target < 1.0) {
            return Err(Error::Params("ratio_target must lie in (0,1)".into()));
        }
        self.scenario.kind.validate()?;
        if let InitialCondition::Bump { amplitude, width } = self.scenario.initial {
            positive("bump width", width)?;
            if !amplitude.is_finite() {
                return Err(Error::Params("bump amplitude must be finite".into()));
            }
        }
        if self.scenario.initial == InitialCondition::SelfSimilar
            && matches!(self.scenario.kind, EquationKind::Bm { .. })
        {
            return Err(Error::Params("self-similar data is defined for pair, polygonal and full kinds".into()));
        }
        positive("pv.t_final", self.pv.t_final)?;
        positive("pv.dt", self.pv.dt)?;
        if let Some(d) = self.pv.pair_distance {
            positive("pv.pair_distance", d)?;
        } else if self.pv.n == 0 {
            return Err(Error::Params("pv.n must be at least 1".into()));
        }
        if self.t0_search.enabled && !(self.t0_search.lo > 0.0 && self.t0_search.hi > self.t0_search.lo) {
            return Err(Error::Params("t0_search needs 0 < lo < hi".into()));
        }
        let v = &self.verify;
        if !(v.t_min > 0.0 && v.t_max >= v.t_min && v.t_max < 1.0) || !(v.sigma_max > 0.0) {
            return Err(Error::Params("verify sampling ranges are empty".into()));
        }
        if v.sweep_alphas.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::Params("sweep α values must be positive".into()));
        }
        Ok(())
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid.length, self.grid.n)
    }

    pub fn radial_grid(&self) -> Result<RadialGrid> {
        RadialGrid::uniform(self.radial.x_max, self.radial.m)
    }

    pub fn profile_mode(&self) -> ProfileMode {
        match self.mode {
            PerturbationMode::Pair => ProfileMode::Pair,
            PerturbationMode::Polygonal => ProfileMode::Polygonal { omega: self.params.omega },
        }
    }

    pub fn profile_file(&self) -> PathBuf {
        self.profile_path.clone().unwrap_or_else(|| self.output_dir.join("profile.json"))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            floor_eps: self.tolerances.floor_eps,
            edge_tol: self.tolerances.edge_tol,
            stride: self.time.stride,
            rho: self.params.rho,
            theta: self.params.theta,
        }
    }

    /// Initial fields of the scenario at `t_start`.
    pub fn initial_fields(&self, profile: Option<&ProfileSolution>) -> Result<Vec<ComplexField>> {
        let grid = self.spatial_grid()?;
        let t = self.time.t_start;
        let kind = &self.scenario.kind;
        let base: Vec<Complex64> = match kind {
            EquationKind::FullKmd { gamma, .. } => full_background(gamma, self.params.rho, self.params.theta),
            _ => vec![background(kind, &self.solver_options(), t).expect("single-equation kinds have a background")],
        };
        let fields = match &self.scenario.initial {
            InitialCondition::Background => {
                base.iter().map(|&b| ComplexField::from_fn(grid, |_| b)).collect()
            }
            InitialCondition::Bump { amplitude, width } => {
                let bump = |b: Complex64| {
                    ComplexField::from_fn(grid, |s| b + amplitude * (-(s / width).powi(2)).exp())
                };
                match kind {
                    // keep the configuration's symmetry
                    EquationKind::FullKmd { gamma, .. } if is_symmetric(gamma) => {
                        symmetric_images(gamma, &bump(base[0]))
                    }
                    _ => base.iter().map(|&b| bump(b)).collect(),
                }
            }
            InitialCondition::SelfSimilar => {
                let profile = profile.ok_or_else(|| {
                    Error::Params("self-similar initial data needs a profile file".into())
                })?;
                if !(t > 0.0) {
                    return Err(Error::Params("self-similar initial data needs t_start > 0".into()));
                }
                let bg = Background::new(profile, &self.params, grid);
                let zero = FieldFrame { t, field: ComplexField::zeros(grid) };
                match kind {
                    EquationKind::Pair => vec![assemble_psi(&bg, &self.params, PerturbationMode::Pair, &zero)],
                    EquationKind::Polygonal { .. } => {
                        vec![assemble_psi(&bg, &self.params, PerturbationMode::Polygonal, &zero)]
                    }
                    EquationKind::FullKmd { gamma, .. } => {
                        if !is_symmetric(gamma) {
                            return Err(Error::Params(
                                "self-similar data needs an anti-parallel pair or equal circulations".into(),
                            ));
                        }
                        symmetric_images(gamma, &assemble_psi(&bg, &self.params, self.mode, &zero))
                    }
                    EquationKind::Bm { .. } => unreachable!("rejected by validate"),
                }
            }
        };
        Ok(fields)
    }
}

fn is_antiparallel(gamma: &[f64]) -> bool {
    gamma.len() == 2 && gamma[0] == -gamma[1]
}

fn is_symmetric(gamma: &[f64]) -> bool {
    is_antiparallel(gamma) || gamma.iter().all(|&g| g == gamma[0])
}

/// Ψ₂ = −conj Ψ₁ for an anti-parallel pair, Ψ_j = e^{2πij/N}Ψ₁ otherwise.
fn symmetric_images(gamma: &[f64], psi: &ComplexField) -> Vec<ComplexField> {
    if is_antiparallel(gamma) {
        return vec![psi.clone(), psi.map(|_, z| -z.conj())];
    }
    let n = gamma.len() as f64;
    (0..gamma.len())
        .map(|j| {
            let rot = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n);
            psi.map(|_, z| z * rot)
        })
        .collect()
}

/// Pair (±1) for Γ = (g, −g), otherwise a polygon of radius ρ.
fn full_background(gamma: &[f64], rho: f64, theta: f64) -> Vec<Complex64> {
    if is_antiparallel(gamma) {
        return vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
    }
    let n = gamma.len() as f64;
    (0..gamma.len())
        .map(|j| Complex64::from_polar(rho, theta + std::f64::consts::TAU * j as f64 / n))
        .collect()
}
