use thiserror::Error;

/// Errors raised by the switch model and its numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmsError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error(
        "quadrature did not converge within {subdivisions} subdivisions \
         (best value {value:e}, error estimate {error:e})"
    )]
    NoConvergence {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("integrand is not finite at node {node}")]
    NonFiniteNode { node: f64 },

    #[error("degenerate contraction: K = {k:e} 1/s is below the guard {guard:e} 1/s")]
    DegenerateContraction { k: f64, guard: f64 },

    #[error("bridge population {value} overshoots [0, 1] by more than the quadrature tolerance")]
    PopulationOutOfRange { value: f64 },

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("bias {v} V lies outside [{lo}, {hi}] V")]
    OutOfRange { v: f64, lo: f64, hi: f64 },

    #[error("time ordering violated: t = {t} s precedes tau = {tau} s")]
    TimeOrder { t: f64, tau: f64 },

    #[error(
        "history holds {len} samples but the truncation depth is {depth}; \
         pass an explicit padding rule"
    )]
    HistoryTooShort { len: usize, depth: usize },

    #[error("step refinement stalled: successive refinements differ by {achieved:e} (target {target:e})")]
    RefinementFailed { achieved: f64, target: f64 },

    #[error("invalid weighting: {0}")]
    InvalidWeighting(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("io: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for DmsError {
    fn from(e: std::io::Error) -> Self {
        DmsError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for DmsError {
    fn from(e: serde_json::Error) -> Self {
        DmsError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DmsError>;

pub(crate) fn ensure_finite(x: f64, what: &'static str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(DmsError::NonFinite(what))
    }
}
