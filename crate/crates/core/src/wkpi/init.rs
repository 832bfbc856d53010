use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Component, GaussianMixtureWeight, WkpiError};
use crate::persistence::PersistenceDiagram;
use crate::pimage::birth_persistence_transform;

const KMEANS_RESTARTS: usize = 5;
const LLOYD_MAX_ITER: usize = 300;

/// Transformed `(birth, persistence)` points of all `diagrams`.
pub fn transformed_points<'a, I>(diagrams: I) -> Vec<[f64; 2]>
where
    I: IntoIterator<Item = &'a PersistenceDiagram>,
{
    diagrams
        .into_iter()
        .flat_map(|d| d.points.iter())
        .map(|p| {
            let (x, y) = birth_persistence_transform(p.birth, p.death);
            [x, y]
        })
        .collect()
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn unit_weight(centers: &[[f64; 2]], spreads: &[f64]) -> GaussianMixtureWeight {
    GaussianMixtureWeight::new(
        centers
            .iter()
            .zip(spreads)
            .map(|(c, &s)| Component::new(c[0], c[1], s, 1.0))
            .collect(),
    )
    .expect("initialiser produces valid components")
}

/// Centres uniform in `bbox = [x_min, x_max, y_min, y_max]`, spreads equal
/// to the box diagonal over `m` (1.0 for a degenerate box), coefficients 1.
pub fn init_random(bbox: [f64; 4], m: usize, seed: u64) -> Result<GaussianMixtureWeight, WkpiError> {
    if m == 0 {
        return Err(WkpiError::InvalidParams("m must be at least 1".into()));
    }
    let [x0, x1, y0, y1] = bbox;
    if !(x0 <= x1 && y0 <= y1) || !bbox.iter().all(|v| v.is_finite()) {
        return Err(WkpiError::InvalidParams(format!("bad bounding box {bbox:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag = (x1 - x0).hypot(y1 - y0);
    let spread = if diag > 0.0 { diag / m as f64 } else { 1.0 };
    let mut uniform = |lo: f64, hi: f64| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let centers: Vec<[f64; 2]> = (0..m).map(|_| [uniform(x0, x1), uniform(y0, y1)]).collect();
    Ok(unit_weight(&centers, &vec![spread; m]))
}

fn nearest(p: [f64; 2], centers: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, &c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn distinct_count(points: &[[f64; 2]], cap: usize) -> usize {
    let mut seen: Vec<[u64; 2]> = Vec::new();
    for p in points {
        let key = [p[0].to_bits(), p[1].to_bits()];
        if !seen.contains(&key) {
            seen.push(key);
            if seen.len() == cap {
                break;
            }
        }
    }
    seen.len()
}

/// k-means++ seeding followed by Lloyd iterations; returns centres,
/// assignment and inertia.
fn lloyd(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> (Vec<[f64; 2]>, Vec<usize>, f64) {
    let n = points.len();
    let mut centers = vec![points[rng.gen_range(0..n)]];
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen_range(0.0..1.0) * total;
        let mut pick = n - 1;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        if d2[pick] == 0.0 {
            // rounding walked past the last positive weight
            pick = d2.iter().rposition(|&d| d > 0.0).expect("k does not exceed the distinct points");
        }
        centers.push(points[pick]);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, points[pick]));
        }
    }
    let mut assign = vec![usize::MAX; n];
    for _ in 0..LLOYD_MAX_ITER {
        let mut changed = false;
        for (a, &p) in assign.iter_mut().zip(points) {
            let j = nearest(p, &centers).0;
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![[0.0, 0.0, 0.0]; k];
        for (&a, &p) in assign.iter().zip(points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            sums[a][2] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[2] > 0.0 {
                *c = [s[0] / s[2], s[1] / s[2]];
            }
        }
    }
    let inertia = assign.iter().zip(points).map(|(&a, &p)| dist2(p, centers[a])).sum();
    (centers, assign, inertia)
}

/// Lloyd's k-means with seeded k-means++ starts (best of several restarts)
/// on `points`. Spreads are the cluster RMS radius, at least `min_spread`.
/// With fewer distinct points than `m`, the surplus components repeat the
/// fitted centres.
pub fn init_kmeans(
    points: &[[f64; 2]],
    m: usize,
    min_spread: f64,
    seed: u64,
) -> Result<GaussianMixtureWeight, WkpiError> {
    if points.is_empty() {
        return Err(WkpiError::NoPoints);
    }
    if m == 0 || !(min_spread > 0.0) {
        return Err(WkpiError::InvalidParams("need m >= 1 and a positive minimum spread".into()));
    }
    let k = distinct_count(points, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<[f64; 2]>, Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let run = lloyd(points, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (centers, assign, _) = best.expect("at least one restart");
    let mut sq = vec![(0.0, 0.0); k];
    for (&a, &p) in assign.iter().zip(points) {
        sq[a].0 += dist2(p, centers[a]);
        sq[a].1 += 1.0;
    }
    let spreads: Vec<f64> = sq
        .iter()
        .map(|&(s, c)| if c > 0.0 { (s / c).sqrt() } else { 0.0 }.max(min_spread))
        .collect();
    let centers: Vec<[f64; 2]> = (0..m).map(|r| centers[r % k]).collect();
    let spreads: Vec<f64> = (0..m).map(|r| spreads[r % k]).collect();
    Ok(unit_weight(&centers, &spreads))
}

/// Greedy farthest-point (Gonzalez) k-center from a seeded first point;
/// ties go to the smallest index. Spreads are the distance to the nearest
/// other centre (the covering radius when `m = 1`), at least `min_spread`.
pub fn init_kcenter(
    points: &[[f64; 2]],
    m: usize,
    min_spread: f64,
    seed: u64,
) -> Result<GaussianMixtureWeight, WkpiError> {
    if points.is_empty() {
        return Err(WkpiError::NoPoints);
    }
    if m == 0 || !(min_spread > 0.0) {
        return Err(WkpiError::InvalidParams("need m >= 1 and a positive minimum spread".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = points[rng.gen_range(0..points.len())];
    let mut centers = vec![first];
    let mut d2: Vec<f64> = points.iter().map(|&p| dist2(p, first)).collect();
    while centers.len() < m {
        let (far, &dmax) = d2
            .iter()
            .enumerate()
            .fold((0, &f64::NEG_INFINITY), |acc, (i, d)| if *d > *acc.1 { (i, d) } else { acc });
        if dmax == 0.0 {
            break;
        }
        let c = points[far];
        centers.push(c);
        for (d, &p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, c));
        }
    }
    let k = centers.len();
    let spreads: Vec<f64> = if k == 1 {
        vec![d2.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt().max(min_spread)]
    } else {
        (0..k)
            .map(|i| {
                (0..k)
                    .filter(|&j| j != i)
                    .map(|j| dist2(centers[i], centers[j]))
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
                    .max(min_spread)
            })
            .collect()
    };
    let all_centers: Vec<[f64; 2]> = (0..m).map(|r| centers[r % k]).collect();
    let all_spreads: Vec<f64> = (0..m).map(|r| spreads[r % k]).collect();
    Ok(unit_weight(&all_centers, &all_spreads))
}
