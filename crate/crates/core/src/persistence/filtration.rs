use super::PersistenceError;
use crate::graph::{Graph, SimplexValues};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Simplex {
    Node(usize),
    /// Index into [`Graph::edges`].
    Edge(usize),
}

impl Simplex {
    pub fn dimension(self) -> u8 {
        match self {
            Simplex::Node(_) => 0,
            Simplex::Edge(_) => 1,
        }
    }

    fn index(self) -> usize {
        match self {
            Simplex::Node(i) | Simplex::Edge(i) => i,
        }
    }
}

/// Simplices of a graph in filtration order.
///
/// Order is by value, then dimension (nodes first), then simplex index.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    pub(crate) entries: Vec<(Simplex, f64)>,
    pub(crate) edges: Vec<(usize, usize)>,
    pub(crate) node_count: usize,
}

impl Filtration {
    pub fn entries(&self) -> &[(Simplex, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub(crate) fn max_value(&self) -> Option<f64> {
        self.entries.iter().map(|e| e.1).reduce(f64::max)
    }

    /// Filtration position of every node and every edge.
    pub(crate) fn positions(&self) -> (Vec<usize>, Vec<usize>) {
        let mut node_pos = vec![0; self.node_count];
        let mut edge_pos = vec![0; self.edges.len()];
        for (pos, &(s, _)) in self.entries.iter().enumerate() {
            match s {
                Simplex::Node(v) => node_pos[v] = pos,
                Simplex::Edge(e) => edge_pos[e] = pos,
            }
        }
        (node_pos, edge_pos)
    }
}

/// Orders the simplices of `g` by `values`; each edge value must be at least
/// its endpoint values.
pub fn build_sublevel_filtration(g: &Graph, values: &SimplexValues) -> Result<Filtration, PersistenceError> {
    if values.nodes.len() != g.node_count() || values.edges.len() != g.edge_count() {
        return Err(PersistenceError::Shape {
            nodes: g.node_count(),
            edges: g.edge_count(),
        });
    }
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        let ev = values.edges[e];
        for w in [u, v] {
            if ev < values.nodes[w] {
                return Err(PersistenceError::NotMonotone {
                    u,
                    v,
                    edge: ev,
                    node: values.nodes[w],
                });
            }
        }
    }
    let mut entries: Vec<(Simplex, f64)> = values
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &x)| (Simplex::Node(i), x))
        .chain(values.edges.iter().enumerate().map(|(i, &x)| (Simplex::Edge(i), x)))
        .collect();
    entries.sort_by(|a, b| {
        a.1.total_cmp(&b.1)
            .then(a.0.dimension().cmp(&b.0.dimension()))
            .then(a.0.index().cmp(&b.0.index()))
    });
    Ok(Filtration {
        entries,
        edges: g.edges().to_vec(),
        node_count: g.node_count(),
    })
}
