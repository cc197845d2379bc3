use thiserror::Error;

/// Errors raised by the toolkit. Variants follow the failure classes of the
/// individual operations rather than the modules that raise them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular data at node {node}: {reason}")]
    SingularData { node: usize, reason: String },

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("genericity failure: {0}")]
    Genericity(String),

    #[error("construction failure: {message} (best defect {best_defect:.3e})")]
    Construction {
        message: String,
        best_defect: f64,
        /// (theta, defect) samples of the sweep that failed.
        defect_curve: Vec<(f64, f64)>,
    },

    #[error("continuation failure at step {step}: {reason}")]
    Continuation { step: usize, reason: String },

    #[error("singular denominator at node {node}: |phi|^2 = {value:.3e}")]
    SingularDenominator { node: usize, value: f64 },

    #[error("basis error: {0}")]
    Basis(String),

    #[error("numerical failure: {message}")]
    Numerical { message: String, diagnostics: Vec<String> },

    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// (iteration, damping, residual) per Newton step.
        trace: Vec<(usize, f64, f64)>,
    },

    #[error("monodromy error: {0}")]
    Monodromy(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
