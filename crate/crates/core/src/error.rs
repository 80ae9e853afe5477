use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `J = det F` left the admissible range at a quadrature point.
    #[error("element inversion (J = {jacobian:e}){}", cell.map(|c| format!(" in cell {c}")).unwrap_or_default())]
    ElementInversion { jacobian: f64, cell: Option<usize> },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("expression syntax error at byte {offset}: {message}")]
    ExprSyntax { offset: usize, message: String },

    #[error("expression evaluation error: {0}")]
    ExprEval(String),

    #[error("linear solve failed: {0}")]
    Factorization(String),

    #[error("Newton solver diverged: {message}")]
    Divergence {
        message: String,
        record: Box<crate::solver::ConvergenceRecord>,
    },

    #[error("iterative geometric algorithm failed at iteration {iteration}: {source}")]
    Iga {
        iteration: usize,
        history: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn inversion(jacobian: f64) -> Self {
        Error::ElementInversion {
            jacobian,
            cell: None,
        }
    }

    /// True for errors the continuation loop can recover from by cutting the step.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            Error::ElementInversion { .. } | Error::Divergence { .. } | Error::Factorization(_)
        )
    }
}
