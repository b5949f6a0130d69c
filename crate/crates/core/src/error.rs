use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("epsilon out of narrow-resonance regime: epsilon = {epsilon} violates {bound}")]
    EpsilonOutOfRange { epsilon: f64, bound: &'static str },

    #[error("invalid parameter `{name}` = {value}: requires {requirement}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        requirement: String,
    },

    #[error(
        "frequency grid too coarse to resolve the resonance linewidth: \
         spacing {spacing} > epsilon*omega0/10 = {bound}; need n_modes >= {required_modes}"
    )]
    GridTooCoarse {
        spacing: f64,
        bound: f64,
        required_modes: usize,
    },

    #[error("undamped resonance: response diverges at omega = omega0 when epsilon = 0")]
    UndampedResonance,

    #[error("time step dt = {dt} exceeds the bound (2 pi / omega0) / 40 = {max}")]
    StepTooLarge { dt: f64, max: f64 },

    #[error("non-finite state at step {step} (t = {time}); inputs are likely mis-scaled")]
    NonFiniteState { step: usize, time: f64 },

    #[error(
        "quadrature did not converge after {intervals} subintervals: \
         estimated error {achieved:e}, requested {requested:e}"
    )]
    QuadratureNotConverged {
        intervals: usize,
        achieved: f64,
        requested: f64,
    },

    #[error("realization with seed {seed} failed: {source}")]
    Realization {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(
        name: &'static str,
        value: impl ToString,
        requirement: impl Into<String>,
    ) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            requirement: requirement.into(),
        }
    }

    /// True for errors caused by inputs that fail a precondition, as opposed
    /// to failures while running an otherwise valid experiment.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::EpsilonOutOfRange { .. }
            | Error::InvalidParameter { .. }
            | Error::GridTooCoarse { .. }
            | Error::StepTooLarge { .. }
            | Error::Config(_) => true,
            Error::Realization { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
