use thiserror::Error;

use crate::dsl::DslError;
use crate::ode::IntegrationError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown built-in model `{0}`")]
    UnknownModel(String),

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("input signal is identically zero over the period")]
    ZeroInput,

    #[error("generator trajectory is not periodic: closure gap {gap:.3e} exceeds {tolerance:.3e}")]
    GeneratorNotPeriodic { gap: f64, tolerance: f64 },

    #[error(
        "no periodic steady state after {periods} periods (residual {residual:.3e}){}",
        match .subharmonic { Some(k) => format!("; response looks {k}-periodic (subharmonic)"), None => String::new() }
    )]
    NoConvergence { periods: usize, residual: f64, subharmonic: Option<usize> },

    #[error(transparent)]
    Integration(#[from] IntegrationError),

    #[error("output is degenerate (‖Y‖ ≈ 0): phase and radius are undefined")]
    Degenerate,

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("matrix is not Hurwitz (max real part of spectrum {0:.3e})")]
    NotHurwitz(f64),

    #[error("frequencies are incommensurate: no rational period ratio with denominator ≤ {max_denominator}")]
    IncommensurateFrequencies { max_denominator: u64 },

    #[error(transparent)]
    Dsl(#[from] DslError),
}
