//! Boundary-matrix reduction over ℤ/2.
//!
//! Extended persistence is computed on the coned complex: a cone vertex `w`,
//! then the ascending sublevel pass, then the cone `w * s` of every simplex in
//! descending superlevel order. Pairs are classified by which pass their
//! birth and death columns belong to.

use super::{
    build_sublevel_filtration, Filtration, PersistenceDiagram, PersistenceError, PersistencePoint, Simplex,
    ZeroDimPairs,
};
use crate::graph::{DescriptorValues, Graph};

/// Symmetric difference of two sorted index lists.
fn add_columns(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Standard left-to-right reduction. Returns `(birth, death)` column pairs and
/// the unpaired positive columns.
fn reduce(columns: Vec<Vec<usize>>) -> (Vec<(usize, usize)>, Vec<usize>) {
    let n = columns.len();
    let mut reduced: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut pivot_of = vec![usize::MAX; n];
    let mut pairs = Vec::new();
    for (j, mut col) in columns.into_iter().enumerate() {
        while let Some(&low) = col.last() {
            let k = pivot_of[low];
            if k == usize::MAX {
                break;
            }
            col = add_columns(&col, &reduced[k]);
        }
        if let Some(&low) = col.last() {
            pivot_of[low] = j;
            pairs.push((low, j));
        }
        reduced.push(col);
    }
    let mut killed = vec![false; n];
    for &(b, d) in &pairs {
        killed[b] = true;
        killed[d] = true;
    }
    let unpaired = (0..n).filter(|&j| !killed[j] && reduced[j].is_empty()).collect();
    (pairs, unpaired)
}

/// Sublevel 0-dimensional pairing by reducing the graph's boundary matrix.
///
/// Independent of the union-find sweep; used to cross-check it.
pub fn ordinary_pairs_by_reduction(filt: &Filtration) -> ZeroDimPairs {
    let (node_pos, _) = filt.positions();
    let columns = filt
        .entries()
        .iter()
        .map(|&(s, _)| match s {
            Simplex::Node(_) => Vec::new(),
            Simplex::Edge(e) => {
                let (u, v) = filt.edge_endpoints(e);
                let mut c = vec![node_pos[u], node_pos[v]];
                c.sort_unstable();
                c
            }
        })
        .collect();
    let (pairs, unpaired) = reduce(columns);
    let essential = unpaired
        .into_iter()
        .filter(|&p| matches!(filt.entries()[p].0, Simplex::Node(_)))
        .collect();
    ZeroDimPairs {
        finite: pairs,
        essential,
    }
}

/// All pairs of the extended filtration, as `(birth, death)` values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtendedPersistence {
    /// Component merges during the ascending pass (zero-length pairs omitted).
    pub ordinary0: Vec<(f64, f64)>,
    /// One per connected component: (component min, component max).
    pub extended0: Vec<(f64, f64)>,
    /// One per independent cycle: (ascending value closing the cycle, descending value killing it).
    pub extended1: Vec<(f64, f64)>,
    /// Relative classes created and killed in the descending pass (zero-length pairs omitted).
    pub relative1: Vec<(f64, f64)>,
}

impl ExtendedPersistence {
    /// Ordinary and extended points; relative points only when asked for.
    /// Extended points are flagged essential.
    pub fn diagram(&self, include_relative: bool) -> PersistenceDiagram {
        let mut pts = Vec::new();
        pts.extend(self.ordinary0.iter().map(|&(b, d)| PersistencePoint::new(b, d, 0, false)));
        pts.extend(self.extended0.iter().map(|&(b, d)| PersistencePoint::new(b, d, 0, true)));
        pts.extend(self.extended1.iter().map(|&(b, d)| PersistencePoint::new(b, d, 1, true)));
        if include_relative {
            pts.extend(self.relative1.iter().map(|&(b, d)| PersistencePoint::new(b, d, 1, false)));
        }
        PersistenceDiagram::new(pts)
    }
}

/// Extended persistence of a descriptor on a graph.
///
/// The ascending pass uses the descriptor's sublevel extension; the
/// descending pass uses the superlevel extension (for a node-valued `f` an
/// edge enters at the min of its endpoints).
pub fn compute_extended_persistence(g: &Graph, f: &DescriptorValues) -> Result<ExtendedPersistence, PersistenceError> {
    let up = build_sublevel_filtration(g, &f.extend(g)?)?;
    // descending order = sublevel order of -f
    let down = build_sublevel_filtration(g, &f.negated().extend(g)?)?;
    let k = up.len();
    let (up_node, up_edge) = up.positions();
    let (down_node, down_edge) = down.positions();
    let cone = |p: usize| 1 + k + p;

    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(2 * k + 1);
    columns.push(Vec::new());
    for &(s, _) in up.entries() {
        columns.push(match s {
            Simplex::Node(_) => Vec::new(),
            Simplex::Edge(e) => {
                let (u, v) = g.edges()[e];
                sorted(vec![1 + up_node[u], 1 + up_node[v]])
            }
        });
    }
    for &(s, _) in down.entries() {
        columns.push(match s {
            Simplex::Node(v) => vec![0, 1 + up_node[v]],
            Simplex::Edge(e) => {
                let (u, v) = g.edges()[e];
                sorted(vec![1 + up_edge[e], cone(down_node[u]), cone(down_node[v])])
            }
        });
    }
    debug_assert!(down_edge.len() == g.edge_count());

    let (pairs, unpaired) = reduce(columns);
    debug_assert_eq!(unpaired, vec![0], "coned complex has one essential class");

    let up_val = |col: usize| up.entries()[col - 1].1;
    let up_dim = |col: usize| up.entries()[col - 1].0.dimension();
    // descending values are stored negated
    let down_val = |col: usize| -down.entries()[col - 1 - k].1;
    let mut out = ExtendedPersistence::default();
    for (b, d) in pairs {
        let b_up = b <= k;
        let d_up = d <= k;
        match (b_up, d_up) {
            (true, true) => {
                let (bv, dv) = (up_val(b), up_val(d));
                if bv != dv {
                    out.ordinary0.push((bv, dv));
                }
            }
            (true, false) => {
                let point = (up_val(b), down_val(d));
                if up_dim(b) == 0 {
                    out.extended0.push(point);
                } else {
                    out.extended1.push(point);
                }
            }
            (false, false) => {
                let (bv, dv) = (down_val(b), down_val(d));
                if bv != dv {
                    out.relative1.push((bv, dv));
                }
            }
            (false, true) => unreachable!("cone columns come after the ascending pass"),
        }
    }
    Ok(out)
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}
