use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GriError>;

#[derive(Debug, Error)]
pub enum GriError {
    #[error("{routine} did not converge after {iterations} sweeps")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error("matrix is not symmetric (max |s_ij - s_ji| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("corpus contains no tokens")]
    EmptyCorpus,

    #[error("no word reaches min_count = {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("cannot draw a negative different from word {exclude}: vocabulary has a single word")]
    CannotExclude { exclude: usize },

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("zero rows after {stage}: {}", .words.join(", "))]
    ZeroRows { stage: &'static str, words: Vec<String> },

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("all {oov} test queries are out of vocabulary")]
    NoEvaluableQueries { oov: usize },

    #[error("correlation undefined: zero variance on the {side} side")]
    UndefinedCorrelation { side: &'static str },

    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{}:{line}: {message}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: duplicate word {word:?}", .path.display())]
    DuplicateWord {
        path: PathBuf,
        line: usize,
        word: String,
    },

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("non-finite loss at step {step} (sg = {sg_loss}, iso = {iso_loss})")]
    NonFiniteLoss {
        step: usize,
        sg_loss: f64,
        iso_loss: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GriError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        GriError::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }

    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            GriError::NoConvergence { .. } | GriError::NonFiniteLoss { .. }
        )
    }
}
