use std::path::PathBuf;

/// Broad failure category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or unusable input data.
    Input,
    /// The pipeline could not produce a result from otherwise valid input.
    Pipeline,
    /// Invalid parameters or configuration.
    Config,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing column `{0}` in input header")]
    MissingColumn(String),

    #[error("no valid rows in input")]
    EmptyInput,

    #[error("irregular sampling: entity `{entity}` timestamp {timestamp} is off the {period} s grid")]
    IrregularSampling {
        entity: String,
        timestamp: f64,
        period: i64,
    },

    #[error("annotation at {timestamp} is not on the {resolution} s label grid")]
    MisalignedAnnotation { timestamp: i64, resolution: i64 },

    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("annotation references unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("invalid resolution {resolution} s: {reason}")]
    InvalidResolution { resolution: i64, reason: String },

    #[error("resolution {resolution} s exceeds the {span} s data span")]
    ResolutionTooCoarse { resolution: i64, span: i64 },

    #[error("window length {window} s is not a multiple of label resolution {label} s")]
    ResolutionMismatch { window: i64, label: i64 },

    #[error("candidate resolution set is empty")]
    EmptyCandidateSet,

    #[error("every candidate resolution failed")]
    AllCandidatesFailed,

    #[error("training targets contain a single class `{0}`")]
    DegenerateTarget(String),

    #[error("training targets are empty")]
    EmptyTargets,

    #[error("non-finite value in feature `{feature}` at row {row}")]
    NonFiniteFeature { feature: String, row: usize },

    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("length mismatch: {predicted} predictions vs {actual} targets")]
    LengthMismatch { predicted: usize, actual: usize },

    #[error("only {groups} distinct windows available for {k} folds")]
    TooFewGroups { groups: usize, k: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported model format version {0}")]
    UnsupportedFormat(u32),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::Csv(_)
            | Error::MissingColumn(_)
            | Error::EmptyInput
            | Error::IrregularSampling { .. }
            | Error::MisalignedAnnotation { .. }
            | Error::UnknownEntity(_)
            | Error::MalformedRow { .. }
            | Error::UnsupportedFormat(_) => ErrorKind::Input,
            Error::Json(_)
            | Error::InvalidResolution { .. }
            | Error::ResolutionMismatch { .. }
            | Error::EmptyCandidateSet
            | Error::InvalidConfig(_) => ErrorKind::Config,
            Error::Fold { source, .. } => source.kind(),
            _ => ErrorKind::Pipeline,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
