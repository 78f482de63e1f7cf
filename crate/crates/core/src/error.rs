use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate factor label `{0}`")]
    DuplicateFactor(String),
    #[error("invalid factor `{label}`: {reason}")]
    InvalidFactor { label: String, reason: String },
    #[error("unknown factor `{0}`")]
    UnknownFactor(String),
    #[error("factor `{factor}` has no basis label `{label}`")]
    UnknownLabel { factor: String, label: String },
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("matrix is not unitary (max deviation from identity {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("basis `{basis}`: outcomes `{a}` and `{b}` are not orthonormal (inner product {inner:.6})")]
    NotOrthonormal {
        basis: String,
        a: String,
        b: String,
        inner: f64,
    },
    #[error("basis `{basis}` has no outcome `{outcome}`")]
    UnknownOutcome { basis: String, outcome: String },
    #[error("basis `{basis}` is incomplete: {declared} outcomes for a {dimension}-dimensional space")]
    IncompleteBasis {
        basis: String,
        declared: usize,
        dimension: usize,
    },
    #[error("states live in different spaces")]
    SpaceMismatch,
    #[error("agent already holds a record: recorder `{recorder}` is not blank")]
    AlreadyRecorded { recorder: String },
    #[error("recorder `{recorder}` has no blank label or too few record labels")]
    BadRecorder { recorder: String },
    #[error("state populates an unrecordable completion outcome (weight {weight:.3e})")]
    UnrecordedOutcome { weight: f64 },
    #[error("branch does not exist: outcome `{outcome}` has probability {probability:.3e}")]
    BranchDoesNotExist { outcome: String, probability: f64 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}` has no value `{value}`")]
    UnknownValue { variable: String, value: String },
    #[error("cannot postselect `{0}`: its measurement does not collapse")]
    PostselectWithoutCollapse(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("distribution is not normalized (sum {sum})")]
    Unnormalized { sum: f64 },
    #[error("internal invariant breached: {0}")]
    InvariantBreach(String),
    #[error("malformed distribution: {0}")]
    Decode(String),
    #[error("exact arithmetic: {0}")]
    Exact(String),
}

impl Error {
    /// Whether this error signals a broken internal invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::InvariantBreach(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
