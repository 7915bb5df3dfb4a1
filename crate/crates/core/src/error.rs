use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The CLI maps [`Error::is_solver_failure`] to exit status 2 and every
/// other variant to exit status 1.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },
    #[error("invalid bracket [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")]
    InvalidBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("quadrature did not converge (max depth {max_depth}), best estimate {estimate}")]
    QuadratureDepth { max_depth: u32, estimate: f64 },
    #[error("non-finite state at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
    #[error("infeasible race: {0}")]
    Infeasible(String),
    #[error("solver stopped after {iterations} iterations with KKT residual {kkt_residual:e}")]
    SolverFailure {
        iterations: usize,
        kkt_residual: f64,
        /// Best iterate reached, in the NLP's decision-vector layout.
        best: Vec<f64>,
    },
    #[error("unidentifiable: {0}")]
    Unidentifiable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::SolverFailure { .. })
    }

    /// Short machine-readable tag used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Domain { .. } => "domain",
            Error::InvalidBracket { .. } => "invalid_bracket",
            Error::QuadratureDepth { .. } => "quadrature_depth",
            Error::NonFinite { .. } => "non_finite",
            Error::Infeasible(_) => "infeasible",
            Error::SolverFailure { .. } => "solver_failure",
            Error::Unidentifiable(_) => "unidentifiable",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
