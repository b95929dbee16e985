use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("truncated input at byte offset {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },

    #[error("record count mismatch: header declares {declared}, payload holds {found}")]
    CountMismatch { declared: u64, found: u64 },

    #[error("{trailing} trailing bytes after the last record")]
    TrailingBytes { trailing: usize },

    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),

    #[error("format error: {0}")]
    Format(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid modality id {0:?}")]
    InvalidModality(String),

    #[error("empty sequence: pooling needs at least one row")]
    EmptySequence,

    #[error("unresolved samples: {}", fmt_missing(.0))]
    Unresolved(Vec<(String, String)>),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("no labeled training samples")]
    EmptyTrain,

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("expected exactly {expected} predictions, got {found}")]
    Arity { expected: usize, found: usize },

    #[error("value {0} outside [0, 1]")]
    Domain(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("mining iteration {iteration} failed: {source}")]
    Iteration {
        iteration: usize,
        source: alloc::boxed::Box<Error>,
    },
}

fn fmt_missing(missing: &[(String, String)]) -> String {
    let mut out = String::new();
    for (i, (modality, id)) in missing.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        if i == 8 {
            out.push_str(&alloc::format!("... ({} total)", missing.len()));
            break;
        }
        out.push_str(&alloc::format!("({modality}, {id})"));
    }
    out
}

impl Error {
    /// True for errors caused by bad inputs rather than failures while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::NonFinite(_) | Error::Diverged { .. } => false,
            Error::Iteration { source, .. } => source.is_validation(),
            _ => true,
        }
    }
}
