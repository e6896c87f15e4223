use thiserror::Error;

/// Errors raised across the filament toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("quadrature needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("singular denominator at x = {x}: {what}")]
    SingularDenominator { x: f64, what: String },

    #[error("Picard iteration broke down at iteration {iteration} (updates so far {updates:?}, ratios {ratios:?}): {cause}")]
    Breakdown {
        iteration: usize,
        updates: Vec<f64>,
        ratios: Vec<f64>,
        #[source]
        cause: Box<Error>,
    },

    #[error("Picard iteration did not converge after {iterations} iterations (last update {last_update:.3e}, last ratio {last_ratio:.3e})")]
    NonConvergence {
        iterations: usize,
        last_update: f64,
        last_ratio: f64,
    },

    #[error("profile not in E: ‖w‖∞ + ‖w'/x‖∞ = {lhs:.6} > α/4 = {bound:.6}")]
    NotInE { lhs: f64, bound: f64 },

    #[error("vortices {j} and {k} collided at t = {t} (distance {distance:.3e})")]
    Collision {
        j: usize,
        k: usize,
        t: f64,
        distance: f64,
    },

    #[error("near-collision at t = {t}, σ = {sigma}: denominator {value:.3e} below floor")]
    NearCollision { t: f64, sigma: f64, value: f64 },

    #[error("field does not decay at the box edge: |ξ| = {value:.3e} > {tol:.1e} at t = {t}")]
    BoxTooSmall { t: f64, value: f64, tol: f64 },

    #[error("ball violation at t = {t}, σ = {sigma}: {what}")]
    BallViolation { t: f64, sigma: f64, what: String },

    #[error("no contraction: observed ratio {ratio:.4} (α = {alpha}, t0 = {t0:.3e})")]
    NoContraction { ratio: f64, alpha: f64, t0: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
