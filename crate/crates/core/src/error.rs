use std::fmt;

use serde::Serialize;

/// Errors raised by the numerical operators, the solvers and the experiment runner.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("multiplier is not finite at frequency {xi}")]
    NonFiniteMultiplier { xi: f64 },

    #[error("negative order {order} requires a mean-free input, but the mean coefficient is {mean:e}")]
    NegativeOrderOnNonzeroMean { order: f64, mean: f64 },

    #[error("operation requires nonzero data")]
    ZeroData,

    #[error("Picard iteration diverged: contraction ratio {ratio} > 1 for {streak} consecutive iterations (iteration {iteration})")]
    NonConvergence {
        iteration: usize,
        ratio: f64,
        streak: usize,
    },

    #[error("blow-up detected at t = {time}: sup norm {sup:e} exceeds the ceiling {ceiling:e}")]
    BlowupDetected { time: f64, sup: f64, ceiling: f64 },

    #[error("config error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl fmt::Display, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_string(),
            source,
        }
    }
}

/// Non-fatal diagnostics attached to results. Warnings never change an exit code.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// A function that should decay is still significant at the domain edges,
    /// so periodic wrap-around contaminates line-integral quantities.
    WrapAround {
        context: String,
        edge_ratio: f64,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::WrapAround {
                context,
                edge_ratio,
            } => write!(
                f,
                "wrap-around in {context}: edge/sup ratio {edge_ratio:.3e} exceeds decay threshold"
            ),
        }
    }
}

/// A value together with the warnings raised while computing it.
#[derive(Debug, Clone)]
pub struct Diagnosed<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Diagnosed<T> {
    pub fn clean(value: T) -> Self {
        Self {
            value,
            warnings: Vec::new(),
        }
    }

    pub fn with(value: T, warning: Option<Warning>) -> Self {
        Self {
            value,
            warnings: warning.into_iter().collect(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }
}

impl Error {
    /// Process exit code: 2 for invalid input, 3 for solver failure, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } | Error::BlowupDetected { .. } => 3,
            Error::Io { .. } => 4,
            _ => 2,
        }
    }
}
