/// Error type shared by every module in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown design variable `{0}`")]
    UnknownVariable(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("not enough rows: need {need}, have {have}")]
    NotEnoughRows { need: usize, have: usize },
    #[error("design matrix is rank deficient in columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("degenerate correlation matrix")]
    DegenerateCorrelation,
    #[error("duplicate centers after selection")]
    DuplicateCenters,
    #[error("baseline response is zero")]
    ZeroBaseline,
    #[error("reference values have zero mean")]
    ZeroMeanReference,
    #[error("reference values are constant (zero total variance)")]
    ZeroVariance,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("oracle evaluation failed: {0}")]
    Oracle(String),
    #[error("dataset is already augmented; set `force` to augment again")]
    AlreadyAugmented,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of user input
    /// or I/O. The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::DegenerateCorrelation
                | Error::DuplicateCenters
                | Error::ZeroBaseline
                | Error::ZeroMeanReference
                | Error::ZeroVariance
                | Error::NonFinite(_)
                | Error::Oracle(_)
                | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
