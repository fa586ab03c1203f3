use thiserror::Error;

pub type Result<T> = std::result::Result<T, SptError>;

#[derive(Debug, Error)]
pub enum SptError {
    #[error("invalid item `{id}`: {reason}")]
    InvalidItem { id: String, reason: String },
    #[error("dataset parse error at line {line}: {message}")]
    DatasetParse { line: usize, message: String },
    #[error("duplicate item id `{0}`")]
    DuplicateId(String),
    #[error("too few items: need at least 2, got {0}")]
    TooFewItems(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("mock script has no entry for fingerprint {0} and no default")]
    MockMiss(String),
    #[error("transport failure after retries: {0}")]
    Transport(String),
    #[error("provider returned status {status}: {body}")]
    Provider { status: u16, body: String },
    #[error("no valid answer choice found in reply")]
    UnparseableAnswer,
    #[error("impact ledger required for variant spt-imp")]
    MissingLedger,
    #[error("corrector self-update is not defined for variant {0}")]
    VariantMismatch(String),
    #[error("corrector response was empty after parsing")]
    EmptyAfterParse,
    #[error("no candidate prompt survived parsing")]
    AllCandidatesFailed,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
