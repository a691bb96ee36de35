use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("xml parse error at byte {offset}: {message}")]
    Xml { offset: u64, message: String },

    #[error("empty extraction: no annotation matched tags [{tags}] for ontology {ontology}")]
    EmptyExtraction { ontology: String, tags: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unsupported optimizer: {0}")]
    UnsupportedOptimizer(String),

    #[error("dimension mismatch: expected {expected}, got {got}{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: Option<String>,
    },

    #[error("class {class} has {count} samples, at least {required} required")]
    ClassTooSmall {
        class: String,
        count: usize,
        required: usize,
    },

    #[error("no features: text {0:?} has no alphanumeric tokens")]
    NoFeatures(String),

    #[error("unknown sample id {0}")]
    UnknownSampleId(String),

    #[error("kernel matrix is not positive definite after {attempts} jitter attempts")]
    SingularKernel { attempts: usize },

    #[error("transport error after {retries} retries: {message}")]
    Transport { retries: usize, message: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("all grid points infeasible: {0}")]
    AllInfeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// Short stable identifier used by the command line for machine-parsable
    /// diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Xml { .. } => "xml",
            Error::EmptyExtraction { .. } => "empty_extraction",
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::UnsupportedOptimizer(_) => "unsupported_optimizer",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ClassTooSmall { .. } => "class_too_small",
            Error::NoFeatures(_) => "no_features",
            Error::UnknownSampleId(_) => "unknown_sample_id",
            Error::SingularKernel { .. } => "singular_kernel",
            Error::Transport { .. } => "transport",
            Error::Contract(_) => "contract",
            Error::Format(_) => "format",
            Error::AllInfeasible(_) => "all_infeasible",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
