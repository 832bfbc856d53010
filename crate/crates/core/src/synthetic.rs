//! Seeded synthetic data: cycle-vs-tree graph datasets and two-class image
//! sets.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{Dataset, Graph, GraphError};
use crate::persistence::{PersistenceDiagram, PersistencePoint};
use crate::pimage::{compute_persistence_image, GridSpec, ImageLayout, PersistenceImage, PiConfig};
use crate::rng::substream;

pub fn cycle_graph(n: usize) -> Result<Graph, GraphError> {
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Random recursive tree on `n` nodes with shuffled node ids.
pub fn random_tree<R: Rng>(n: usize, rng: &mut R) -> Result<Graph, GraphError> {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let edges: Vec<(usize, usize)> = (1..n).map(|i| (ids[i], ids[rng.gen_range(0..i)])).collect();
    Graph::new(n, edges)
}

/// `per_class` cycles (label 0) followed by `per_class` random trees
/// (label 1), node counts uniform in `min_nodes..=max_nodes`.
pub fn cycles_vs_trees(per_class: usize, min_nodes: usize, max_nodes: usize, seed: u64) -> Result<Dataset, GraphError> {
    let mut rng = substream(seed, "cycles-vs-trees", &[]);
    let mut graphs = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        graphs.push(cycle_graph(rng.gen_range(min_nodes..=max_nodes))?);
    }
    for _ in 0..per_class {
        let n = rng.gen_range(min_nodes..=max_nodes);
        graphs.push(random_tree(n, &mut rng)?);
    }
    let labels = (0..2 * per_class).map(|i| usize::from(i >= per_class)).collect();
    Dataset::new("cycles-vs-trees", graphs, labels)
}

fn jittered_diagram(rng: &mut ChaCha8Rng, centre: [f64; 2], points: usize, jitter: f64) -> PersistenceDiagram {
    PersistenceDiagram::new(
        (0..points)
            .map(|_| {
                let b = centre[0] + rng.gen_range(-jitter..jitter);
                let p = centre[1] + rng.gen_range(-jitter..jitter);
                PersistencePoint::new(b, b + p, 0, false)
            })
            .collect(),
    )
}

/// Two classes of images on `grid`: class 0 diagrams cluster around
/// `(0.3, 0.3)` and class 1 around `(0.7, 0.7)` in the unit square, with a
/// shared background point.
pub fn two_class_images(per_class: usize, grid: &GridSpec, seed: u64) -> (Vec<PersistenceImage>, Vec<usize>) {
    let mut rng = substream(seed, "two-class-images", &[]);
    let cfg = PiConfig {
        tau: Some(0.1),
        ..PiConfig::default()
    };
    let layout = Arc::new(ImageLayout::single(grid.clone(), None));
    let mut images = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    for class in 0..2 {
        let centre = if class == 0 { [0.3, 0.3] } else { [0.7, 0.7] };
        for _ in 0..per_class {
            let mut d = jittered_diagram(&mut rng, centre, 3, 0.08);
            d.points.extend(jittered_diagram(&mut rng, [0.5, 0.1], 1, 0.05).points);
            let img = compute_persistence_image(&d, grid, &cfg);
            images.push(PersistenceImage {
                layout: layout.clone(),
                pixels: img.pixels,
            });
            labels.push(class);
        }
    }
    (images, labels)
}
