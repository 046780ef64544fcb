use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Wrong number of inputs, mismatched dimensions, malformed offsets.
    #[error("input shape error: {0}")]
    InputShape(String),

    /// A structurally well-formed value that breaks a required invariant
    /// (non-monotone rule, malformed certificate, ...).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown builtin rule `{0}`")]
    Lookup(String),

    /// Arguments outside the domain where a formula or guarantee applies.
    #[error("domain error: {0}")]
    Domain(String),

    /// Engine or run configuration that cannot be honoured.
    #[error("configuration error: {0}")]
    Config(String),

    /// Requests exceeding hard resource caps.
    #[error("resource error: {0}")]
    Resource(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short machine-readable tag used in JSON error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InputShape(_) => "input_shape",
            Error::Validation(_) => "validation",
            Error::Lookup(_) => "lookup",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Resource(_) => "resource",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
