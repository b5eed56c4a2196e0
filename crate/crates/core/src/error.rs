use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field is empty")]
    EmptyField,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("coefficient not elliptic: xi.A xi = {value:.3e} at t={t}, x={x:?}, y={y}, xi={xi:?}")]
    NotElliptic {
        value: f64,
        t: f64,
        x: [f64; 2],
        y: f64,
        xi: [f64; 2],
    },

    #[error("state value {value} at t={t} left the admissible interval ({lo}, {hi})")]
    RangeEscape { value: f64, t: f64, lo: f64, hi: f64 },

    #[error("range [{lo}, {hi}] is not strictly inside ({o_lo}, {o_hi})")]
    RangeNotInside { lo: f64, hi: f64, o_lo: f64, o_hi: f64 },

    #[error("linear solve failed at step {step}: relative residual {residual:.3e} after {iterations} iterations")]
    LinearSolve {
        step: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("maximum principle violated: sup |u| exceeds sup |u0| by {excess:.3e}")]
    MaxPrincipleViolation { excess: f64 },

    #[error("contraction failure at iteration {iteration}: {reason}")]
    ContractionFailure { iteration: usize, reason: String },

    #[error("window underflow at t={at}: length {length:.3e} below minimum {minimum:.3e}")]
    WindowUnderflow { at: f64, length: f64, minimum: f64 },

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("fit window empty: {0}")]
    FitWindowEmpty(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code of the command-line tool: 2 for configuration problems,
    /// 3 for everything raised by a solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Scenario { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    pub fn in_scenario(self, scenario: &str) -> Self {
        match self {
            Error::Config { .. } | Error::Scenario { .. } => self,
            other => Error::Scenario {
                scenario: scenario.to_string(),
                source: Box::new(other),
            },
        }
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
