use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid frequency list: {0}")]
    InvalidFrequencies(String),

    #[error(
        "frequencies are not commensurable: no common denominator up to {max_denominator} reconciles {frequency} Hz"
    )]
    NonCommensurableFrequencies { frequency: f64, max_denominator: u64 },

    #[error("sample rate {sample_rate} Hz must exceed twice the highest frequency ({max_frequency} Hz)")]
    NyquistViolation { sample_rate: f64, max_frequency: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("degenerate spread: {0}")]
    DegenerateSpread(String),

    #[error("zero spread between ordered distances in {skipped} of {total} replications")]
    ZeroSpread { skipped: usize, total: usize },

    #[error("groups are not defined on the same frequency grid")]
    GridMismatch,

    #[error("confidence level {0} is outside [0, 1]")]
    InvalidAlpha(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input")]
    EmptyInput,

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the data's statistics rather than by
    /// malformed input.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegenerateSpread(_) | Error::ZeroSpread { .. })
    }
}
