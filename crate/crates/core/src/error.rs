use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by graph ingestion, protocol design, and simulation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on node {node} is not allowed")]
    SelfLoop { line: usize, node: usize },

    #[error("line {line}: edge weight {weight} must be strictly positive")]
    NonPositiveWeight { line: usize, weight: f64 },

    #[error("line {line}: duplicate edge {from} -> {to}")]
    DuplicateEdge { line: usize, from: usize, to: usize },

    #[error("line {line}: node index {node} out of range for {count} nodes")]
    NodeOutOfRange {
        line: usize,
        node: usize,
        count: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("(A, B) is not stabilizable: PBH rank drops at eigenvalue {re:.6}{im:+.6}i")]
    NotStabilizable { re: f64, im: f64 },

    #[error("matrix is not Hurwitz: eigenvalue {re:.6}{im:+.6}i has nonnegative real part")]
    NotHurwitz { re: f64, im: f64 },

    #[error("{what} failed to converge: residual {residual:.3e} after {iterations} iterations")]
    Convergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("internal inconsistency: {0}")]
    Singular(String),

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("numerical kernel of the Lyapunov form has dimension {dim}, expected 1")]
    KernelViolation { dim: usize },

    #[error("{what} must be strictly positive")]
    NonPositiveInput { what: &'static str },

    #[error("step size underflow at t = {t:.6e}")]
    StepSizeUnderflow { t: f64 },

    #[error("non-finite state at t = {t:.6e}, component {component}")]
    NonFiniteState { t: f64, component: usize },

    #[error("integration exceeded {max_steps} steps at t = {t:.6e}")]
    MaxStepsExceeded { t: f64, max_steps: usize },

    #[error("prerequisite not met: {0}")]
    PrerequisiteFailed(String),

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
