use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point with norm {norm:e} lies outside the usable disk (norm must stay below 1 - boundary margin)")]
    OutsideDisk { norm: f64 },

    #[error("leaf index {index} out of range for {n} leaves")]
    LeafOutOfRange { index: usize, n: usize },

    #[error("lca of a leaf with itself is undefined (leaf {0})")]
    SameLeaf(usize),

    #[error("size mismatch: {what} has {got} entries, expected {expected}")]
    SizeMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error(
        "embedding is not normalized: row norms span {spread:e}; rescale to a common norm first"
    )]
    NotNormalized { spread: f64 },

    #[error("non-finite gradient at row {row}; step aborted")]
    NonFiniteGradient { row: usize },

    #[error("scale {scale} pushes the tree past the working-precision boundary; largest usable scale is about {max_scale}")]
    ScaleTooLarge { scale: f64, max_scale: f64 },

    #[error("no pair of leaves shares a class label")]
    NoSameClassPair,

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("newick: {0}")]
    Newick(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
