//! Kernel SVM on precomputed Gram matrices, one-vs-rest multiclass and
//! nested cross-validation.

mod cv;
mod multiclass;
mod smo;

pub use cv::{
    accuracy, nested_cv, plain_folds, stratified_folds, CvConfig, CvPipeline, CvReport, FoldRecord, CV_CSV_HEADER,
};
pub use multiclass::{one_vs_rest, OneVsRest};
pub use smo::{predict, train_svm, SvmModel, DEFAULT_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("labels must be +1 or -1, found {0}")]
    BadLabel(i32),
    #[error("gram matrix is {rows}x{cols}, expected {n}x{n}")]
    Shape { rows: usize, cols: usize, n: usize },
    #[error("gram matrix is not symmetric at ({0}, {1})")]
    NonSymmetric(usize, usize),
    #[error("kernel row has length {got}, expected {expected}")]
    RowLength { got: usize, expected: usize },
    #[error("regularisation C must be positive, got {0}")]
    BadC(f64),
    #[error("class {0} has no members")]
    EmptyClass(usize),
    #[error("class {class} has {size} members, fewer than {folds} folds")]
    ClassTooSmall { class: usize, size: usize, folds: usize },
    #[error("{samples} samples cannot fill {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },
    #[error("invalid cross-validation config: {0}")]
    BadConfig(String),
    #[error("pipeline failed: {0}")]
    Pipeline(String),
}
