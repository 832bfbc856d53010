use super::{
    build_sublevel_filtration, Filtration, PersistenceDiagram, PersistenceError, PersistencePoint, Simplex,
};
use crate::graph::{DescriptorValues, Graph};

/// Raw 0-dimensional pairing in filtration positions, zero-length pairs included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroDimPairs {
    /// (birth position of the younger component, position of the merging edge)
    pub finite: Vec<(usize, usize)>,
    /// Birth position of each surviving component.
    pub essential: Vec<usize>,
}

struct Components {
    parent: Vec<usize>,
}

impl Components {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Union-find sweep with the elder rule: on a merge, the component born at
/// the earlier filtration position survives.
pub fn zero_dim_pairs(filt: &Filtration) -> ZeroDimPairs {
    let n = filt.node_count();
    // roots are always the oldest node of their component
    let mut uf = Components {
        parent: (0..n).collect(),
    };
    let mut birth_pos = vec![usize::MAX; n];
    let mut finite = Vec::new();
    for (pos, &(s, _)) in filt.entries().iter().enumerate() {
        match s {
            Simplex::Node(v) => birth_pos[v] = pos,
            Simplex::Edge(e) => {
                let (u, v) = filt.edge_endpoints(e);
                let (ru, rv) = (uf.find(u), uf.find(v));
                if ru == rv {
                    continue;
                }
                let (old, young) = if birth_pos[ru] < birth_pos[rv] { (ru, rv) } else { (rv, ru) };
                finite.push((birth_pos[young], pos));
                uf.parent[young] = old;
            }
        }
    }
    let mut essential: Vec<usize> = (0..n).filter(|&v| uf.find(v) == v).map(|v| birth_pos[v]).collect();
    essential.sort_unstable();
    ZeroDimPairs { finite, essential }
}

/// Ordinary 0-dimensional diagram of a sublevel sweep.
///
/// Essential points are born at their component's minimum and capped at the
/// global maximum value of the filtration.
pub fn compute_0dim_sublevel(filt: &Filtration) -> PersistenceDiagram {
    let raw = zero_dim_pairs(filt);
    let value = |p: usize| filt.entries()[p].1;
    let cap = filt.max_value().unwrap_or(0.0);
    let mut points: Vec<PersistencePoint> = raw
        .finite
        .iter()
        .map(|&(b, d)| (value(b), value(d)))
        .filter(|(b, d)| b != d)
        .map(|(b, d)| PersistencePoint::new(b, d, 0, false))
        .collect();
    points.extend(
        raw.essential
            .iter()
            .map(|&b| PersistencePoint::new(value(b), cap, 0, true)),
    );
    PersistenceDiagram::new(points)
}

/// Top-down sweep of `f`: the sublevel diagram of `-f` with values negated
/// back, so births are at least deaths.
pub fn compute_0dim_superlevel(g: &Graph, f: &DescriptorValues) -> Result<PersistenceDiagram, PersistenceError> {
    let neg = f.negated().extend(g)?;
    let filt = build_sublevel_filtration(g, &neg)?;
    let mut d = compute_0dim_sublevel(&filt);
    for p in &mut d.points {
        p.birth = -p.birth;
        p.death = -p.death;
    }
    Ok(d)
}
