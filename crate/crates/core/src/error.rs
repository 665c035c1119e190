use thiserror::Error;

/// Every failure the library can report. Variants map one-to-one onto the
/// error classes used by the command-line tool for exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("not a square: {0}")]
    NotASquare(String),
    #[error("invalid Tate period: {0}")]
    InvalidPeriod(String),
    #[error("embedding unavailable: {0}")]
    EmbeddingUnavailable(String),
    #[error("prime not inert: {0}")]
    PrimeNotInert(String),
    #[error("curve does not have multiplicative reduction: {0}")]
    NotMultiplicative(String),
    #[error("fixed points are not in the p-adic upper half plane: {0}")]
    EmbeddingNotInert(String),
    #[error("set not expressible at depth {0}")]
    OutOfDepth(u32),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("radial contract violated at {0}")]
    RadialContractViolation(String),
    #[error("depth exceeded: {0}")]
    DepthExceeded(String),
    #[error("kappa oracle has no entry for {0}")]
    OracleIncomplete(String),
    #[error("degeneration base values underdetermined: {0}")]
    DegenerationUnderdetermined(String),
    #[error("lift inconsistent: {0}")]
    LiftInconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, with stage annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// Short machine-readable class name.
    pub fn class(&self) -> &'static str {
        match self.root() {
            Error::InsufficientPrecision(_) => "InsufficientPrecision",
            Error::NotASquare(_) => "NotASquare",
            Error::InvalidPeriod(_) => "InvalidPeriod",
            Error::EmbeddingUnavailable(_) => "EmbeddingUnavailable",
            Error::PrimeNotInert(_) => "PrimeNotInert",
            Error::NotMultiplicative(_) => "NotMultiplicative",
            Error::EmbeddingNotInert(_) => "EmbeddingNotInert",
            Error::OutOfDepth(_) => "OutOfDepth",
            Error::Schema(_) => "SchemaError",
            Error::RadialContractViolation(_) => "RadialContractViolation",
            Error::DepthExceeded(_) => "DepthExceeded",
            Error::OracleIncomplete(_) => "OracleIncomplete",
            Error::DegenerationUnderdetermined(_) => "DegenerationUnderdetermined",
            Error::LiftInconsistent(_) => "LiftInconsistent",
            Error::Parse(_) => "ParseError",
            Error::Stage { .. } => unreachable!(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
