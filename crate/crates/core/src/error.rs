use thiserror::Error;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("linear solver did not converge: residual {residual:.3e} after {iters} iterations")]
    SolverNonConvergence { residual: f64, iters: usize },

    #[error("time step {tau:.3e} exceeds the stability cap {cap:.3e} for the stabilized scheme")]
    StabilityCap { tau: f64, cap: f64 },

    #[error("interface error: {0}")]
    Interface(String),

    #[error("velocity correspondence failed: displacement {displacement:.3e} exceeds {limit:.3e} (undersampled)")]
    Undersampled { displacement: f64, limit: f64 },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("non-wetting configuration: jump {jump:.6} >= c0 {c0:.6}")]
    NonWetting { jump: f64, c0: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}
