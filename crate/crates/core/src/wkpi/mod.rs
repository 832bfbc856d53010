//! The WKPI kernel, its induced distance, the trace-form total cost with its
//! analytic gradient, and the gradient-descent trainer for the weight.

mod cost;
mod init;
mod io;
mod kernel;
mod pairs;
mod train;
mod weight;

pub use cost::{
    build_cost_matrices, class_count, cost_gradient, distance_matrix, total_cost_direct, total_cost_matrix,
    CostMatrices,
};
pub use init::{init_kcenter, init_kmeans, init_random, transformed_points};
pub use io::{
    read_weight_file, sample_weight_on_grid, write_heatmap_csv, write_heatmap_pgm, write_weight_file,
};
pub use kernel::{
    alt_wkpi_kernel, cross_gram, gram_matrix, kernel_value, wkpi_distance, wkpi_kernel, KernelVariant, WkpiParams,
};
pub use train::{train_metric, BatchMode, LineSearch, TraceEntry, TrainConfig, TrainResult};
pub use weight::{Component, GaussianMixtureWeight};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WkpiError {
    #[error("images do not share one pixel layout")]
    GridMismatch,
    #[error("need at least {needed} images, got {got}")]
    TooFewImages { needed: usize, got: usize },
    #[error("label count {labels} does not match image count {images}")]
    LabelCount { labels: usize, images: usize },
    #[error("class {0} has no members")]
    EmptyClass(usize),
    #[error("class {0} is degenerate: every distance touching it is zero")]
    DegenerateClass(usize),
    #[error("squared distance radicand {0} is negative beyond rounding")]
    NegativeRadicand(f64),
    #[error("cost became non-finite")]
    NonFinite,
    #[error("invalid weight function: {0}")]
    InvalidWeight(String),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("no points to initialise from")]
    NoPoints,
    #[error("weight file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
