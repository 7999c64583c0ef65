use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A node, skill, or team id that does not resolve.
    #[error("unknown {kind} `{id}`")]
    Reference { kind: &'static str, id: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The kernel system `I - c·L×(A1⊗A2)` is not safely invertible.
    #[error(
        "kernel did not converge: decay {decay} × guard bound {guard_bound} = {} (must be < 1){}",
        decay * guard_bound,
        detail.as_deref().map(|d| format!("; {d}")).unwrap_or_default()
    )]
    NonConvergence {
        decay: f64,
        guard_bound: f64,
        detail: Option<String>,
    },

    #[error("precompute cache does not match query: {0}")]
    CacheMismatch(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn unknown_node(id: impl Into<String>) -> Self {
        Error::Reference {
            kind: "node",
            id: id.into(),
        }
    }

    pub(crate) fn singular(decay: f64, guard_bound: f64, what: &str) -> Self {
        Error::NonConvergence {
            decay,
            guard_bound,
            detail: Some(format!("{what} is singular")),
        }
    }
}
