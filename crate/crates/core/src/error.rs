use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the requested formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("ground state did not converge after {steps} steps (last energy change {last_change:.3e})")]
    Convergence { steps: usize, last_change: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// No compensation phase keeps the spin-down lattice in place.
    #[error("infeasible compensation: need |sin(φ_R − θ)|·I_R ≤ 7·I_L, best reachable offset is {achievable:.6} rad")]
    InfeasibleCompensation { achievable: f64 },

    #[error("duration {tau:.6} is shorter than the classical brachistochrone time {tau_cb:.6}")]
    BelowClassicalLimit { tau: f64, tau_cb: f64 },

    /// Adjacent states along a path are too far apart for the geodesic increments.
    #[error("state sampling too coarse: adjacent overlap {overlap:.6} < {min:.2}")]
    Resolution { overlap: f64, min: f64 },

    #[error("iterative compensation diverged: residual history {history:?}")]
    Instability { history: Vec<f64> },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
