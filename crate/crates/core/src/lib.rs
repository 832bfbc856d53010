//! Learned weighted persistence-image kernels (WKPI) for graph classification.
//!
//! The crate is organised as a pipeline:
//!
//! * [`graph`]: graphs, TU benchmark ingestion and descriptor functions
//!   (degree, Jaccard index, Ollivier-Ricci curvature).
//! * [`persistence`]: sublevel/superlevel/extended filtrations of graphs and
//!   their persistence diagrams.
//! * [`pimage`]: persistence images on a shared grid.
//! * [`wkpi`]: the WKPI kernel and distance, the trace-form total cost, its
//!   analytic gradient and the Armijo (stochastic) gradient-descent trainer.
//! * [`svm`]: SMO kernel SVM on precomputed Gram matrices, one-vs-rest and
//!   nested cross-validation.
//! * [`pipeline`]: glue that turns a dataset into diagrams, images and a
//!   cross-validated classifier.

pub mod graph;
pub mod persistence;
pub mod pimage;
pub mod pipeline;
pub mod rng;
pub mod svm;
pub mod synthetic;
pub mod wkpi;

mod error;

pub use error::{Error, Result};
