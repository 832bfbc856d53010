//! Undirected simple graphs, benchmark datasets and descriptor functions.

mod descriptor;
mod ricci;
mod tu;

pub use descriptor::{
    degree_function, extend_edge_to_node, extend_node_to_edge, jaccard_index, DescriptorKind,
    DescriptorValues, SimplexValues,
};
pub use ricci::{ricci_curvature, transport_cost, RicciConfig};
pub use tu::{load_tu_dataset, write_tu_dataset, LoadStats};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("descriptor has {got} values but the graph has {expected} {kind}")]
    DescriptorLength {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("descriptor value {0} is not finite")]
    NonFinite(f64),
    #[error("expected a {expected} descriptor, got a {got} descriptor")]
    KindMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("graph has {0} node(s) but no edges to extend an edge-valued descriptor from")]
    NoEdges(usize),
    #[error("ricci curvature: support of edge ({0}, {1}) is disconnected")]
    DisconnectedSupport(usize, usize),
    #[error("laziness must lie in [0, 1], got {0}")]
    BadLaziness(f64),
    #[error("missing dataset file {0}")]
    MissingFile(String),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("dataset {0} contains no graphs")]
    EmptyDataset(String),
    #[error("labels ({labels}) do not match graphs ({graphs})")]
    LabelCount { labels: usize, graphs: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An undirected simple graph on nodes `0..node_count`.
///
/// Edges are stored once as `(min, max)` pairs in sorted order; an edge's
/// position in [`Graph::edges`] is its edge index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, silently dropping self-loops and duplicate edges.
    pub fn new<I>(node_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::with_stats(node_count, edges).map(|(g, _, _)| g)
    }

    /// Like [`Graph::new`] but also reports `(duplicates, self_loops)` dropped.
    pub fn with_stats<I>(node_count: usize, edges: I) -> Result<(Self, usize, usize), GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut canon = Vec::new();
        let mut self_loops = 0;
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(GraphError::EdgeOutOfRange(u, v, node_count));
            }
            if u == v {
                self_loops += 1;
                continue;
            }
            canon.push((u.min(v), u.max(v)));
        }
        let before = canon.len();
        canon.sort_unstable();
        canon.dedup();
        let duplicates = before - canon.len();

        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &canon {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok((
            Graph {
                node_count,
                edges: canon,
                adjacency,
            },
            duplicates,
            self_loops,
        ))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted open neighbourhood of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Index of edge `{u, v}` in [`Graph::edges`].
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    /// Connected component id per node, numbered in order of smallest node.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut comp = vec![usize::MAX; self.node_count];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.node_count {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &w in &self.adjacency[u] {
                    if comp[w] == usize::MAX {
                        comp[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    /// Number of independent cycles, `|E| - |V| + #components`.
    pub fn cycle_rank(&self) -> usize {
        let (c, _) = self.components();
        self.edges.len() + c - self.node_count
    }

    /// Relabels nodes: node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        Graph::new(
            self.node_count,
            self.edges.iter().map(|&(u, v)| (perm[u], perm[v])),
        )
    }
}

/// A labelled collection of graphs with class ids remapped to `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub labels: Vec<usize>,
    /// Original label value for each class id.
    pub class_values: Vec<i64>,
    /// Per-graph node labels when `NAME_node_labels.txt` is present (unused by the pipeline).
    pub node_labels: Option<Vec<Vec<i64>>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>, labels: Vec<usize>) -> Result<Self, GraphError> {
        let name = name.into();
        if graphs.is_empty() {
            return Err(GraphError::EmptyDataset(name));
        }
        if labels.len() != graphs.len() {
            return Err(GraphError::LabelCount {
                labels: labels.len(),
                graphs: graphs.len(),
            });
        }
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        Ok(Dataset {
            name,
            graphs,
            labels,
            class_values: (0..k as i64).collect(),
            node_labels: None,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_values.len()
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_and_dedups() {
        let (g, dups, loops) = Graph::with_stats(3, [(1, 0), (0, 1), (2, 2), (2, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!((dups, loops), (1, 1));
        assert!(g.has_edge(1, 0));
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.edge_index(2, 1), Some(1));
    }

    #[test]
    fn rejects_out_of_range_endpoint() {
        assert!(matches!(
            Graph::new(2, [(0, 2)]),
            Err(GraphError::EdgeOutOfRange(0, 2, 2))
        ));
    }

    #[test]
    fn cycle_rank_counts_independent_cycles() {
        assert_eq!(fixtures::cycle(5).cycle_rank(), 1);
        assert_eq!(fixtures::path(5).cycle_rank(), 0);
        assert_eq!(fixtures::complete(4).cycle_rank(), 3);
        let two = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(two.components().0, 2);
    }
}
