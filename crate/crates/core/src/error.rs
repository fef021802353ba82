use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("duplicate letter `{0}`")]
    DuplicateLetter(String),
    #[error("letter `{0}` has no incoming or no outgoing transition")]
    StrandedLetter(String),
    #[error("empty alphabet")]
    EmptyAlphabet,
    #[error("word is not admissible")]
    NotAdmissible,
    #[error("period does not wrap admissibly")]
    WrapNotAdmissible,
    #[error("periods must be nonempty")]
    EmptyPeriod,
    #[error("window table has no entry for `{0}`")]
    MissingTableEntry(String),
    #[error("window graph is empty after trimming")]
    EmptyAfterTrim,
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("piece not realizable: {0}")]
    PieceNotRealizable(String),
    #[error("extraction infeasible: {0}")]
    ExtractionInfeasible(String),
    #[error("reference dimension is zero, nothing to extract")]
    NoExtraction,
    #[error("spectrum has no accumulation point")]
    NoAccumulation,
    #[error("word is not in the family")]
    NotInFamily,
    #[error("cut words differ, no conclusion")]
    NotComparable,
    #[error("not a transient of this decomposition")]
    NotTransient,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
