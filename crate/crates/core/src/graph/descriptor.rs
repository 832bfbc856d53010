use super::{Graph, GraphError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorKind {
    Node,
    Edge,
}

impl DescriptorKind {
    fn name(self) -> &'static str {
        match self {
            DescriptorKind::Node => "node-valued",
            DescriptorKind::Edge => "edge-valued",
        }
    }
}

/// A real-valued descriptor function on the nodes or on the edges of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorValues {
    kind: DescriptorKind,
    values: Vec<f64>,
}

impl DescriptorValues {
    pub fn new(g: &Graph, kind: DescriptorKind, values: Vec<f64>) -> Result<Self, GraphError> {
        let (expected, what) = match kind {
            DescriptorKind::Node => (g.node_count(), "nodes"),
            DescriptorKind::Edge => (g.edge_count(), "edges"),
        };
        if values.len() != expected {
            return Err(GraphError::DescriptorLength {
                kind: what,
                expected,
                got: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(GraphError::NonFinite(bad));
        }
        Ok(DescriptorValues { kind, values })
    }

    pub fn node(g: &Graph, values: Vec<f64>) -> Result<Self, GraphError> {
        Self::new(g, DescriptorKind::Node, values)
    }

    pub fn edge(g: &Graph, values: Vec<f64>) -> Result<Self, GraphError> {
        Self::new(g, DescriptorKind::Edge, values)
    }

    pub fn kind(&self) -> DescriptorKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn negated(&self) -> Self {
        DescriptorValues {
            kind: self.kind,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Extends to every simplex with the rule matching the descriptor's kind.
    pub fn extend(&self, g: &Graph) -> Result<SimplexValues, GraphError> {
        match self.kind {
            DescriptorKind::Node => extend_node_to_edge(g, self),
            DescriptorKind::Edge => extend_edge_to_node(g, self),
        }
    }
}

/// Filtration values for every node and every edge of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexValues {
    pub nodes: Vec<f64>,
    pub edges: Vec<f64>,
}

impl SimplexValues {
    pub fn negated(&self) -> Self {
        SimplexValues {
            nodes: self.nodes.iter().map(|v| -v).collect(),
            edges: self.edges.iter().map(|v| -v).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SimplexValues {
            nodes: self.nodes.iter().map(|&v| f(v)).collect(),
            edges: self.edges.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min(&self) -> Option<f64> {
        self.nodes.iter().chain(&self.edges).copied().reduce(f64::min)
    }

    pub fn max(&self) -> Option<f64> {
        self.nodes.iter().chain(&self.edges).copied().reduce(f64::max)
    }
}

/// Node degree as a node-valued descriptor.
pub fn degree_function(g: &Graph) -> DescriptorValues {
    DescriptorValues {
        kind: DescriptorKind::Node,
        values: (0..g.node_count()).map(|v| g.degree(v) as f64).collect(),
    }
}

/// Jaccard index `|N(u) ∩ N(v)| / |N(u) ∪ N(v)|` of every edge, on open neighbourhoods.
pub fn jaccard_index(g: &Graph) -> DescriptorValues {
    let values = g
        .edges()
        .iter()
        .map(|&(u, v)| {
            let (a, b) = (g.neighbors(u), g.neighbors(v));
            let common = sorted_intersection_len(a, b);
            let union = a.len() + b.len() - common;
            common as f64 / union as f64
        })
        .collect();
    DescriptorValues {
        kind: DescriptorKind::Edge,
        values,
    }
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Nodes keep `f(v)`; each edge gets the max of its endpoint values.
pub fn extend_node_to_edge(g: &Graph, f: &DescriptorValues) -> Result<SimplexValues, GraphError> {
    if f.kind != DescriptorKind::Node {
        return Err(GraphError::KindMismatch {
            expected: DescriptorKind::Node.name(),
            got: f.kind.name(),
        });
    }
    let edges = g
        .edges()
        .iter()
        .map(|&(u, v)| f.values[u].max(f.values[v]))
        .collect();
    Ok(SimplexValues {
        nodes: f.values.clone(),
        edges,
    })
}

/// Edges keep `f(e)`; each node gets the min over its incident edges.
/// Isolated nodes get the global minimum edge value.
pub fn extend_edge_to_node(g: &Graph, f: &DescriptorValues) -> Result<SimplexValues, GraphError> {
    if f.kind != DescriptorKind::Edge {
        return Err(GraphError::KindMismatch {
            expected: DescriptorKind::Edge.name(),
            got: f.kind.name(),
        });
    }
    if g.edge_count() == 0 {
        if g.node_count() == 0 {
            return Ok(SimplexValues {
                nodes: Vec::new(),
                edges: Vec::new(),
            });
        }
        return Err(GraphError::NoEdges(g.node_count()));
    }
    let global_min = f.values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut nodes = vec![f64::INFINITY; g.node_count()];
    for (&(u, v), &val) in g.edges().iter().zip(&f.values) {
        nodes[u] = nodes[u].min(val);
        nodes[v] = nodes[v].min(val);
    }
    for x in &mut nodes {
        if x.is_infinite() {
            *x = global_min;
        }
    }
    Ok(SimplexValues {
        nodes,
        edges: f.values.clone(),
    })
}
