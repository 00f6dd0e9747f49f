use thiserror::Error;

use crate::linalg::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("source evaluates to a non-finite value {value} at ({}, {})", point[0], point[1])]
    InvalidSource { point: Point, value: f64 },

    #[error("invalid affine data: {0}")]
    InvalidAffine(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate source: spherical average {value} <= 0 at r = {r}")]
    DegenerateSource { r: f64, value: f64 },

    #[error("coefficient field is not elliptic: min eigenvalue {lambda_min} at node ({i}, {j})")]
    CoefficientDegeneracy { lambda_min: f64, i: usize, j: usize },

    #[error("singular factorization in mode {mode}")]
    IllPosedMode { mode: usize },

    #[error("defect correction diverges (update ratios {ratios:?}); coefficients are not perturbative")]
    NonPerturbativeCoefficients { ratios: Vec<f64> },

    #[error("convexity lost at level {level}: min Hessian eigenvalue {lambda_min} at r = {r}, theta = {theta}")]
    IterationBreakdown {
        level: usize,
        lambda_min: f64,
        r: f64,
        theta: f64,
    },

    #[error("no convergence after {levels} levels (last weighted sup {last})")]
    NonConvergence { levels: usize, last: f64, history: Vec<crate::global::HistoryEntry> },

    #[error("fit window error: {0}")]
    FitWindow(String),

    #[error("source extension infeasible: {0}")]
    ExtensionInfeasible(String),

    #[error("boundary consistency error: sup |u - phi| = {error} on the inner circle")]
    BoundaryConsistency { error: f64 },

    #[error("hypotheses not satisfied: {0}")]
    ValidationFailed(String),

    #[error("oracle solver failed: {0}")]
    Oracle(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
