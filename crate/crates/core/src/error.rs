use thiserror::Error;

/// Errors surfaced by the laboratory modules.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("group closure exceeded the cap of {cap} elements")]
    GroupTooLarge { cap: usize },
    #[error("point lies on a reflection wall (wall distance {dist:.3e} <= tolerance {tol:.3e})")]
    OnWall { dist: f64, tol: f64 },
    #[error("probe too close to a wall for the finite-difference oracle (wall distance {dist:.3e}, required {required:.3e})")]
    TooCloseToWall { dist: f64, required: f64 },
    #[error("quadrature error indicator {indicator:.3e} exceeds tolerance {tol:.3e}")]
    QuadratureFailure { indicator: f64, tol: f64 },
    #[error("unknown builtin symbol `{0}`")]
    UnknownSymbol(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("points lie on (or too close to) an orbit diagonal: d = {0:.3e}")]
    OrbitDiagonal(f64),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("grid of {nodes} nodes exceeds the cap of {cap}")]
    GridTooLarge { nodes: usize, cap: usize },
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("trial supports are not orbit-separated (gap {0:.3e})")]
    SupportsNotSeparated(f64),
    #[error("grid is not closed under the group action")]
    GridNotSymmetric,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no reports found in `{0}`")]
    MissingReports(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
