use thiserror::Error;

/// Errors produced by partitioning, aggregation, and the supporting samplers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// No candidate cut leaves both sides nonempty in every subset.
    #[error("no valid cut along this dimension")]
    NoValidCut,

    /// Every block has a zero count in at least one subset, so the product
    /// of the subset histograms vanishes everywhere.
    #[error("empty product: subset histograms share no block with positive counts in every subset")]
    EmptyProduct,

    #[error("pairwise stage {stage}, pair ({first}, {second}): {source}")]
    Stage {
        stage: usize,
        first: usize,
        second: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular covariance")]
    SingularCovariance,

    #[error("no proposals accepted in an adaptation window of {window} iterations")]
    NoAcceptance { window: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyInput => "EmptyInput",
            Error::InvalidInput(_) => "InvalidInput",
            Error::NonFinite(_) => "NonFinite",
            Error::NoValidCut => "NoValidCut",
            Error::EmptyProduct => "EmptyProduct",
            Error::Stage { source, .. } => source.kind(),
            Error::SingularCovariance => "SingularCovariance",
            Error::NoAcceptance { .. } => "NoAcceptance",
            Error::Parse { .. } => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
