use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no convergence after {iterations} iterations (residual {residual:e}){}", level_suffix(*.level))]
    NoConvergence {
        iterations: usize,
        residual: f64,
        level: Option<usize>,
    },

    #[error("derivative vanished: theta'({at}) = {value:e}{}", level_suffix(*.level))]
    DerivativeVanished {
        at: f64,
        value: f64,
        level: Option<usize>,
    },

    #[error("quadrature failed on [{a}, {b}]: error estimate {estimate:e} above tolerance {tol:e}")]
    QuadratureFailure {
        a: f64,
        b: f64,
        estimate: f64,
        tol: f64,
    },

    #[error("{value} is outside the domain {domain}")]
    OutOfDomain { value: f64, domain: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("coefficient rationalization exceeds the precision budget of 2^{bits}")]
    CoefficientOverflow { bits: u32 },

    #[error("delayed argument {delayed} at t = {t} lies before the history start {history_start}")]
    DelayBeyondHistory {
        t: f64,
        delayed: f64,
        history_start: f64,
    },

    #[error("trajectory covers [{start}, {end}] but {needed} is required")]
    DomainMismatch { start: f64, end: f64, needed: f64 },

    #[error("no admissible point found; least violating value {least_violation:e}")]
    NoAdmissiblePoint {
        least_violation: f64,
        coeffs: Vec<f64>,
    },

    #[error("seed is not admissible: {0}")]
    NotAdmissible(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn level_suffix(level: Option<usize>) -> String {
    match level {
        Some(j) => format!(" at composition level {j}"),
        None => String::new(),
    }
}

impl Error {
    /// Tags a root-finding failure with the composition level it occurred at.
    pub fn at_level(self, j: usize) -> Self {
        match self {
            Error::NoConvergence {
                iterations,
                residual,
                ..
            } => Error::NoConvergence {
                iterations,
                residual,
                level: Some(j),
            },
            Error::DerivativeVanished { at, value, .. } => Error::DerivativeVanished {
                at,
                value,
                level: Some(j),
            },
            other => other,
        }
    }
}
