//! Almost-parallel vortex filaments near collision: self-similar profiles,
//! point-vortex dynamics, filament Schrödinger systems and the perturbative
//! fixed point around the profile.

pub mod commands;
pub mod config;
pub mod cutoff;
pub mod duhamel;
pub mod error;
pub mod grid;
pub mod io;
pub mod params;
pub mod pointvortex;
pub mod profile;
pub mod quadrature;
pub mod schrodinger;
pub mod spectral;
pub mod verify;
pub mod xnorm;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use grid::{ComplexField, RadialGrid, SpatialGrid};
pub use params::ModelParams;
pub use profile::{solve_profile, ProfileMode, ProfileSolution};
