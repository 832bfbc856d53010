use thiserror::Error;

use crate::graph::GraphError;
use crate::persistence::PersistenceError;
use crate::pimage::ImageError;
use crate::svm::SvmError;
use crate::wkpi::WkpiError;

/// Crate-level error aggregating the per-module errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Persistence(#[from] PersistenceError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Wkpi(#[from] WkpiError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
