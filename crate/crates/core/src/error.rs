//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum Error {
    /// The curvature vector left the Garding cone required by the quotient.
    #[error("cone violation: curvature vector is not in Γ_{k}⁺ (loss of {k}-convexity)")]
    ConeViolation { k: usize },

    /// Pointwise k-convexity failure during field assembly.
    #[error("k-convexity lost at node {node}: κ = {kappa:?} left Γ_{k}⁺")]
    KConvexityLost {
        k: usize,
        node: usize,
        kappa: Vec<f64>,
    },

    /// Spacelike condition |Dr|² < λ² violated.
    #[error("null degeneration at node {node}: |Dr|² ≥ λ², induced metric degenerates")]
    NullDegeneration { node: usize },

    /// Gradient function fell below the configured floor.
    #[error(
        "near-null hypersurface at node {node}: υ = {upsilon:.6e} ≤ υ_min = {upsilon_min:.6e}"
    )]
    NearNull {
        node: usize,
        upsilon: f64,
        upsilon_min: f64,
    },

    /// Per-node eigenvalue extraction failed.
    #[error("eigenvalue solver failure at node {node}: {message}")]
    Eigen { node: usize, message: String },

    /// Stable time step shrank below the configured floor.
    #[error("stiffness collapse: proposed dt = {dt:.6e} < dt_min = {dt_min:.6e} at t = {t:.6}")]
    StiffnessCollapse { dt: f64, dt_min: f64, t: f64 },

    /// A monotone monitor moved the wrong way beyond the configured slack.
    #[error("monitor violation at t = {t:.6}: {monitor} changed by {magnitude:.3e} beyond slack")]
    MonitorViolation {
        monitor: String,
        t: f64,
        magnitude: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient states: need at least {needed}, got {got}")]
    InsufficientStates { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code contract: 2 = monitor violation, 3 = construction or
    /// validation failure, 4 = numerical abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MonitorViolation { .. } => 2,
            Error::ConeViolation { .. }
            | Error::KConvexityLost { .. }
            | Error::NullDegeneration { .. }
            | Error::NearNull { .. }
            | Error::InvalidParameter(_)
            | Error::Domain(_)
            | Error::InsufficientStates { .. } => 3,
            Error::Eigen { .. } | Error::StiffnessCollapse { .. } => 4,
        }
    }
}
