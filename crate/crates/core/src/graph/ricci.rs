//! Ollivier-Ricci curvature of graph edges.
//!
//! Each endpoint carries the lazy random-walk measure (mass `alpha` at the node,
//! `(1 - alpha) / deg` on each neighbour). The Wasserstein-1 distance between
//! the two measures is solved exactly as a small transportation problem with
//! hop-distance costs.

use std::collections::VecDeque;

use super::{DescriptorKind, DescriptorValues, Graph, GraphError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciConfig {
    pub laziness: f64,
}

impl Default for RicciConfig {
    fn default() -> Self {
        RicciConfig { laziness: 0.5 }
    }
}

impl RicciConfig {
    pub fn new(laziness: f64) -> Result<Self, GraphError> {
        if !(0.0..=1.0).contains(&laziness) {
            return Err(GraphError::BadLaziness(laziness));
        }
        Ok(RicciConfig { laziness })
    }
}

/// Curvature `1 - W1(m_u, m_v) / d(u, v)` for every edge.
pub fn ricci_curvature(g: &Graph, cfg: RicciConfig) -> Result<DescriptorValues, GraphError> {
    let cfg = RicciConfig::new(cfg.laziness)?;
    let mut values = Vec::with_capacity(g.edge_count());
    let mut dist = vec![usize::MAX; g.node_count()];
    let mut touched = Vec::new();
    for &(u, v) in g.edges() {
        let (su, mu) = lazy_measure(g, u, cfg.laziness);
        let (sv, mv) = lazy_measure(g, v, cfg.laziness);
        let mut cost = Vec::with_capacity(su.len());
        for &x in &su {
            // supports lie within hop distance 3 of each other
            bounded_bfs(g, x, 3, &mut dist, &mut touched);
            let mut row = Vec::with_capacity(sv.len());
            for &y in &sv {
                if dist[y] == usize::MAX {
                    return Err(GraphError::DisconnectedSupport(u, v));
                }
                row.push(dist[y] as f64);
            }
            for &t in &touched {
                dist[t] = usize::MAX;
            }
            touched.clear();
            cost.push(row);
        }
        let w1 = transport_cost(&mu, &mv, &cost);
        // d(u, v) = 1 for an edge
        values.push(1.0 - w1);
    }
    Ok(DescriptorValues::new(g, DescriptorKind::Edge, values).expect("finite curvature"))
}

fn lazy_measure(g: &Graph, u: usize, alpha: f64) -> (Vec<usize>, Vec<f64>) {
    let nbrs = g.neighbors(u);
    let mut support = Vec::with_capacity(nbrs.len() + 1);
    let mut mass = Vec::with_capacity(nbrs.len() + 1);
    support.push(u);
    mass.push(alpha);
    let share = (1.0 - alpha) / nbrs.len() as f64;
    for &w in nbrs {
        support.push(w);
        mass.push(share);
    }
    (support, mass)
}

fn bounded_bfs(g: &Graph, src: usize, limit: usize, dist: &mut [usize], touched: &mut Vec<usize>) {
    let mut queue = VecDeque::new();
    dist[src] = 0;
    touched.push(src);
    queue.push_back(src);
    while let Some(x) = queue.pop_front() {
        if dist[x] == limit {
            continue;
        }
        for &w in g.neighbors(x) {
            if dist[w] == usize::MAX {
                dist[w] = dist[x] + 1;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
}

const FLOW_EPS: f64 = 1e-15;

/// Exact minimum cost of moving `supply` onto `demand` with unit costs `cost[i][j]`.
///
/// Successive shortest paths on the bipartite residual network. Totals of
/// `supply` and `demand` are assumed equal up to rounding.
pub fn transport_cost(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (a, b) = (supply.len(), demand.len());
    // node ids: 0 = source, 1..=a supplies, a+1..=a+b demands, a+b+1 = sink
    let n = a + b + 2;
    let sink = n - 1;
    let mut net = Network::new(n);
    for (i, &s) in supply.iter().enumerate() {
        net.add(0, 1 + i, s, 0.0);
    }
    for (j, &d) in demand.iter().enumerate() {
        net.add(1 + a + j, sink, d, 0.0);
    }
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            net.add(1 + i, 1 + a + j, f64::INFINITY, c);
        }
    }

    let mut total = 0.0;
    // every augmentation saturates an arc; the bound only guards against rounding loops
    for _ in 0..4 * (a + 1) * (b + 1) {
        let Some((path_cost, parent)) = net.shortest_path(0, sink) else {
            break;
        };
        let mut push = f64::INFINITY;
        let mut x = sink;
        while x != 0 {
            let e = parent[x];
            push = push.min(net.arcs[e].cap);
            x = net.arcs[e ^ 1].to;
        }
        if push <= FLOW_EPS {
            break;
        }
        let mut x = sink;
        while x != 0 {
            let e = parent[x];
            net.arcs[e].cap -= push;
            net.arcs[e ^ 1].cap += push;
            x = net.arcs[e ^ 1].to;
        }
        total += push * path_cost;
    }
    total
}

struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

struct Network {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

impl Network {
    fn new(n: usize) -> Self {
        Network {
            arcs: Vec::new(),
            out: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        self.out[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap, cost });
        self.out[to].push(self.arcs.len());
        self.arcs.push(Arc {
            to: from,
            cap: 0.0,
            cost: -cost,
        });
    }

    /// Bellman-Ford over arcs with residual capacity; returns path cost and parent arcs.
    fn shortest_path(&self, src: usize, dst: usize) -> Option<(f64, Vec<usize>)> {
        let n = self.out.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        dist[src] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for x in 0..n {
                if dist[x].is_infinite() {
                    continue;
                }
                for &e in &self.out[x] {
                    let arc = &self.arcs[e];
                    if arc.cap > FLOW_EPS && dist[x] + arc.cost < dist[arc.to] - 1e-12 {
                        dist[arc.to] = dist[x] + arc.cost;
                        parent[arc.to] = e;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist[dst].is_finite().then(|| (dist[dst], parent))
    }
}
