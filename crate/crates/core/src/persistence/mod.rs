//! Filtrations of graphs and their persistence diagrams.
//!
//! Zero-dimensional sublevel persistence has a union-find fast path
//! ([`compute_0dim_sublevel`]); everything else, including the one-dimensional
//! classes of extended persistence, goes through exhaustive column reduction
//! over ℤ/2 ([`compute_extended_persistence`]).
//!
//! Finite ordinary pairs of zero persistence (a simplex that enters and is
//! immediately merged at the same value) are not reported. Extended pairs
//! are always reported, so their counts match components and cycle rank.

mod filtration;
mod io;
mod reduction;
mod union_find;

pub use filtration::{build_sublevel_filtration, Filtration, Simplex};
pub use io::{read_diagram_csv, write_diagram_csv, DIAGRAM_CSV_HEADER};
pub use reduction::{compute_extended_persistence, ordinary_pairs_by_reduction, ExtendedPersistence};
pub use union_find::{compute_0dim_sublevel, compute_0dim_superlevel, zero_dim_pairs, ZeroDimPairs};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PersistenceError {
    #[error("edge ({u}, {v}) has value {edge} below endpoint value {node}")]
    NotMonotone { u: usize, v: usize, edge: f64, node: f64 },
    #[error("simplex values do not match the graph ({nodes} node / {edges} edge values expected)")]
    Shape { nodes: usize, edges: usize },
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error("diagram csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One point of a persistence diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePoint {
    pub birth: f64,
    pub death: f64,
    pub dimension: u8,
    pub essential: bool,
}

impl PersistencePoint {
    pub fn new(birth: f64, death: f64, dimension: u8, essential: bool) -> Self {
        PersistencePoint {
            birth,
            death,
            dimension,
            essential,
        }
    }

    pub fn persistence(&self) -> f64 {
        (self.death - self.birth).abs()
    }
}

/// A multiset of persistence points, possibly mixing dimensions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PersistenceDiagram {
    pub points: Vec<PersistencePoint>,
}

impl PersistenceDiagram {
    pub fn new(points: Vec<PersistencePoint>) -> Self {
        PersistenceDiagram { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sub-diagram of one homological dimension.
    pub fn of_dimension(&self, dim: u8) -> PersistenceDiagram {
        PersistenceDiagram::new(self.points.iter().filter(|p| p.dimension == dim).copied().collect())
    }

    pub fn without_essential(&self) -> PersistenceDiagram {
        PersistenceDiagram::new(self.points.iter().filter(|p| !p.essential).copied().collect())
    }

    pub fn count(&self, dim: u8, essential: bool) -> usize {
        self.points
            .iter()
            .filter(|p| p.dimension == dim && p.essential == essential)
            .count()
    }

    /// Points sorted by (dimension, essential, birth, death); handy for multiset comparison.
    pub fn sorted(&self) -> Vec<PersistencePoint> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| {
            (a.dimension, a.essential)
                .cmp(&(b.dimension, b.essential))
                .then(a.birth.total_cmp(&b.birth))
                .then(a.death.total_cmp(&b.death))
        });
        pts
    }
}

/// Multiset union.
pub fn merge_diagrams(a: &PersistenceDiagram, b: &PersistenceDiagram) -> PersistenceDiagram {
    let mut points = Vec::with_capacity(a.len() + b.len());
    points.extend_from_slice(&a.points);
    points.extend_from_slice(&b.points);
    PersistenceDiagram { points }
}
