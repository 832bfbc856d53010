use nalgebra::DMatrix;

use super::kernel::{lambda_full, shared_layout};
use super::pairs::{dedup_rows, PairFactors};
use super::{GaussianMixtureWeight, WkpiError, WkpiParams};
use crate::pimage::PersistenceImage;

/// Number of classes `k = max label + 1`; every class must be non-empty.
pub fn class_count(labels: &[usize], images: usize) -> Result<usize, WkpiError> {
    if labels.len() != images {
        return Err(WkpiError::LabelCount {
            labels: labels.len(),
            images,
        });
    }
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    if let Some(t) = seen.iter().position(|&s| !s) {
        return Err(WkpiError::EmptyClass(t));
    }
    Ok(k)
}

/// `Lambda_ij = D^2(A_i, A_j)` for all pairs.
pub fn distance_matrix(images: &[PersistenceImage], p: &WkpiParams) -> Result<DMatrix<f64>, WkpiError> {
    let Some(layout) = shared_layout(images)? else {
        return Ok(DMatrix::zeros(0, 0));
    };
    let om = p.weight.eval_many(&layout.centers());
    let rows: Vec<&[f64]> = images.iter().map(|i| i.pixels.as_slice()).collect();
    Ok(lambda_full(&rows, &om, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrices {
    /// Pairwise squared distances.
    pub lambda: DMatrix<f64>,
    /// Diagonal matrix of the row sums of `lambda`.
    pub g: DMatrix<f64>,
    /// `g - lambda`.
    pub l: DMatrix<f64>,
    /// `k x n`; `h[t][i] = 1 / sqrt(cost(t, .))` for `i` in class `t`.
    pub h: DMatrix<f64>,
}

fn check_instance(images: &[PersistenceImage], labels: &[usize]) -> Result<usize, WkpiError> {
    if images.len() < 2 {
        return Err(WkpiError::TooFewImages {
            needed: 2,
            got: images.len(),
        });
    }
    class_count(labels, images.len())
}

pub fn build_cost_matrices(
    images: &[PersistenceImage],
    labels: &[usize],
    p: &WkpiParams,
) -> Result<CostMatrices, WkpiError> {
    let k = check_instance(images, labels)?;
    let lambda = distance_matrix(images, p)?;
    let n = images.len();
    let row_sums: Vec<f64> = (0..n).map(|i| lambda.row(i).sum()).collect();
    let mut denom = vec![0.0; k];
    for (i, &t) in labels.iter().enumerate() {
        denom[t] += row_sums[i];
    }
    if let Some(t) = denom.iter().position(|&b| !(b > 0.0)) {
        return Err(WkpiError::DegenerateClass(t));
    }
    let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(row_sums));
    let l = &g - &lambda;
    let h = DMatrix::from_fn(k, n, |t, i| if labels[i] == t { 1.0 / denom[t].sqrt() } else { 0.0 });
    Ok(CostMatrices { lambda, g, l, h })
}

/// `sum_t cost(t, t) / cost(t, .)` evaluated from its definition.
pub fn total_cost_direct(images: &[PersistenceImage], labels: &[usize], p: &WkpiParams) -> Result<f64, WkpiError> {
    let k = check_instance(images, labels)?;
    let lambda = distance_matrix(images, p)?;
    let n = images.len();
    let (mut within, mut all) = (vec![0.0; k], vec![0.0; k]);
    for i in 0..n {
        for j in 0..n {
            let t = labels[i];
            all[t] += lambda[(i, j)];
            if labels[j] == t {
                within[t] += lambda[(i, j)];
            }
        }
    }
    if let Some(t) = all.iter().position(|&b| !(b > 0.0)) {
        return Err(WkpiError::DegenerateClass(t));
    }
    Ok(within.iter().zip(&all).map(|(a, b)| a / b).sum())
}

/// `k - Tr(H L H^T)`.
pub fn total_cost_matrix(cm: &CostMatrices, k: usize) -> f64 {
    k as f64 - (&cm.h * &cm.l * cm.h.transpose()).trace()
}

/// Gradient of `TC + sum_r c exp(-w_r)` in parameter layout, from the
/// matrix form `TC = k - Tr(H L H^T)` differentiated through `H` and `L`.
pub fn cost_gradient(
    images: &[PersistenceImage],
    labels: &[usize],
    p: &WkpiParams,
    penalty: f64,
) -> Result<Vec<f64>, WkpiError> {
    let cm = build_cost_matrices(images, labels, p)?;
    let n = images.len();
    let k = cm.h.nrows();
    let hl = &cm.h * &cm.l;
    let hth = cm.h.transpose() * &cm.h;
    let mut scale = vec![0.0; n];
    for (i, &t) in labels.iter().enumerate() {
        // q_t / cost(t, .) with h_ti^2 = 1 / cost(t, .)
        let q = hl.row(t).dot(&cm.h.row(t));
        scale[i] = q * cm.h[(t, i)] * cm.h[(t, i)];
    }
    debug_assert_eq!(k, labels.iter().max().unwrap() + 1);
    // coefficient of d Lambda_ij (ordered pair) in dTC
    let gamma = DMatrix::from_fn(n, n, |i, j| scale[i] - hth[(i, i)] + hth[(i, j)]);

    let layout = shared_layout(images)?.expect("at least two images");
    let rows: Vec<&[f64]> = images.iter().map(|i| i.pixels.as_slice()).collect();
    let pf = PairFactors::new(&rows, p.variant, p.kernel_sigma, 0);
    let weights: Vec<f64> = pf
        .pairs()
        .iter()
        .map(|&(i, j)| gamma[(i as usize, j as usize)] + gamma[(j as usize, i as usize)])
        .collect();
    let centers_full = layout.centers();
    let centers: Vec<[f64; 2]> = pf.cols().iter().map(|&s| centers_full[s]).collect();
    let om = p.weight.eval_many(&centers);
    let q = pf.omega_gradient(&om, &weights);
    let mut grad = p.weight.pullback(&centers, &q);
    for (g, pg) in grad.iter_mut().zip(p.weight.penalty_gradient(penalty)) {
        *g += pg;
    }
    Ok(grad)
}

/// Total cost over a labelled image set in which identical images are merged
/// and carried as per-class multiplicities.
pub(crate) struct WeightedObjective {
    pf: PairFactors,
    centers: Vec<[f64; 2]>,
    /// `counts[u][t]`: copies of item `u` in class `t`.
    counts: Vec<Vec<f64>>,
    totals: Vec<f64>,
    k: usize,
    penalty: f64,
}

pub(crate) struct Evaluation {
    pub total_cost: f64,
    pub objective: f64,
    within: Vec<f64>,
    all: Vec<f64>,
}

impl WeightedObjective {
    /// `rows` share one layout with pixel centres `centers_full`; classes
    /// without members are skipped.
    pub fn new(
        rows: &[&[f64]],
        labels: &[usize],
        k: usize,
        centers_full: &[[f64; 2]],
        p: &WkpiParams,
        penalty: f64,
        cache_limit: usize,
    ) -> Self {
        let (reps, group) = dedup_rows(rows);
        let mut counts = vec![vec![0.0; k]; reps.len()];
        for (&g, &t) in group.iter().zip(labels) {
            counts[g][t] += 1.0;
        }
        let totals = counts.iter().map(|c| c.iter().sum()).collect();
        let items: Vec<&[f64]> = reps.iter().map(|&i| rows[i]).collect();
        let pf = PairFactors::new(&items, p.variant, p.kernel_sigma, cache_limit);
        let centers = pf.cols().iter().map(|&s| centers_full[s]).collect();
        WeightedObjective {
            pf,
            centers,
            counts,
            totals,
            k,
            penalty,
        }
    }

    pub fn unique_count(&self) -> usize {
        self.pf.item_count()
    }

    pub fn evaluate(&self, w: &GaussianMixtureWeight) -> Result<Evaluation, WkpiError> {
        let om = w.eval_many(&self.centers);
        let lambda = self.pf.lambda(&om);
        let (mut within, mut all) = (vec![0.0; self.k], vec![0.0; self.k]);
        for (&(u, v), &l) in self.pf.pairs().iter().zip(&lambda) {
            let (cu, cv) = (&self.counts[u as usize], &self.counts[v as usize]);
            let (nu, nv) = (self.totals[u as usize], self.totals[v as usize]);
            for t in 0..self.k {
                within[t] += 2.0 * cu[t] * cv[t] * l;
                all[t] += (cu[t] * nv + cv[t] * nu) * l;
            }
        }
        let mut total_cost = 0.0;
        for t in 0..self.k {
            let members: f64 = self.counts.iter().map(|c| c[t]).sum();
            if members == 0.0 {
                continue;
            }
            if !(all[t] > 0.0) {
                return Err(WkpiError::DegenerateClass(t));
            }
            total_cost += within[t] / all[t];
        }
        let objective = total_cost + w.penalty(self.penalty);
        if !objective.is_finite() {
            return Err(WkpiError::NonFinite);
        }
        Ok(Evaluation {
            total_cost,
            objective,
            within,
            all,
        })
    }

    /// Gradient of the objective at `w`, reusing the evaluation at `w`.
    pub fn gradient(&self, w: &GaussianMixtureWeight, ev: &Evaluation) -> Vec<f64> {
        let weights: Vec<f64> = self
            .pf
            .pairs()
            .iter()
            .map(|&(u, v)| {
                let (cu, cv) = (&self.counts[u as usize], &self.counts[v as usize]);
                let (nu, nv) = (self.totals[u as usize], self.totals[v as usize]);
                (0..self.k)
                    .filter(|&t| ev.all[t] > 0.0)
                    .map(|t| {
                        let b = ev.all[t];
                        2.0 * cu[t] * cv[t] / b - ev.within[t] * (cu[t] * nv + cv[t] * nu) / (b * b)
                    })
                    .sum()
            })
            .collect();
        let om = w.eval_many(&self.centers);
        let q = self.pf.omega_gradient(&om, &weights);
        let mut grad = w.pullback(&self.centers, &q);
        for (g, pg) in grad.iter_mut().zip(w.penalty_gradient(self.penalty)) {
            *g += pg;
        }
        grad
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::pimage::{GridSpec, ImageLayout};
    use crate::wkpi::{Component, KernelVariant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    /// Random images on a small grid, labels covering every class, and a
    /// random non-negative mixture.
    pub(crate) fn random_instance(
        seed: u64,
        n: usize,
        k: usize,
        m: usize,
    ) -> (Vec<PersistenceImage>, Vec<usize>, WkpiParams) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::from_bounds(0.0, 1.0, 0.0, 1.0, 5).unwrap();
        let layout = Arc::new(ImageLayout::single(grid, None));
        let images = (0..n)
            .map(|_| PersistenceImage {
                layout: layout.clone(),
                pixels: (0..layout.len()).map(|_| rng.gen_range(0.0..1.0)).collect(),
            })
            .collect();
        let labels = (0..n).map(|i| if i < k { i } else { rng.gen_range(0..k) }).collect();
        let comps = (0..m)
            .map(|_| {
                Component::new(
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.2..1.0),
                    rng.gen_range(0.1..2.0),
                )
            })
            .collect();
        let w = GaussianMixtureWeight::new(comps).unwrap();
        let p = WkpiParams::new(rng.gen_range(0.3..2.0), w, KernelVariant::Wkpi).unwrap();
        (images, labels, p)
    }

    #[test]
    fn two_point_single_class() {
        let (images, _, p) = random_instance(1, 2, 1, 2);
        let labels = [0, 0];
        let cm = build_cost_matrices(&images, &labels, &p).unwrap();
        let d2 = wkpi_distance_sq(&images[0], &images[1], &p);
        assert!((cm.lambda[(0, 1)] - d2).abs() < 1e-12 * d2);
        assert_eq!(cm.lambda[(0, 0)], 0.0);
        assert!((cm.h[(0, 0)] - 1.0 / (2.0 * d2).sqrt()).abs() < 1e-12);
        let hgh = &cm.h * &cm.g * cm.h.transpose();
        assert!((hgh[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((total_cost_direct(&images, &labels, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((total_cost_matrix(&cm, 1) - 1.0).abs() < 1e-12);
    }

    fn wkpi_distance_sq(a: &PersistenceImage, b: &PersistenceImage, p: &WkpiParams) -> f64 {
        let d = crate::wkpi::wkpi_distance(a, b, p).unwrap();
        d * d
    }

    #[test]
    fn two_singleton_classes() {
        let (images, _, p) = random_instance(2, 2, 2, 2);
        let labels = [0, 1];
        assert_eq!(total_cost_direct(&images, &labels, &p).unwrap(), 0.0);
        let cm = build_cost_matrices(&images, &labels, &p).unwrap();
        let tr = (&cm.h * &cm.l * cm.h.transpose()).trace();
        assert!((tr - 2.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let (images, labels, p) = random_instance(3, 12, 3, 3);
        let cm = build_cost_matrices(&images, &labels, &p).unwrap();
        for i in 0..12 {
            assert!(cm.l.row(i).sum().abs() < 1e-12 * cm.g[(i, i)]);
        }
    }

    #[test]
    fn degenerate_and_empty_classes() {
        let (images, _, p) = random_instance(4, 3, 1, 1);
        let same = vec![images[0].clone(), images[0].clone(), images[1].clone()];
        assert!(matches!(class_count(&[0, 2, 2], 3), Err(WkpiError::EmptyClass(1))));
        let zero = p.with_weight(GaussianMixtureWeight::single(0.0, 0.0, 1.0, 0.0).unwrap());
        assert!(matches!(
            total_cost_direct(&same, &[0, 0, 1], &zero),
            Err(WkpiError::DegenerateClass(_))
        ));
        assert!(matches!(
            build_cost_matrices(&images[..1], &[0], &p),
            Err(WkpiError::TooFewImages { .. })
        ));
    }

    #[test]
    fn single_class_gradient_is_penalty_only() {
        let (images, _, p) = random_instance(5, 8, 1, 3);
        let labels = vec![0; 8];
        let g = cost_gradient(&images, &labels, &p, 0.0).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
        let g = cost_gradient(&images, &labels, &p, 2.0).unwrap();
        for (r, c) in p.weight.components().iter().enumerate() {
            assert!((g[4 * r + 3] + 2.0 * (-c.w).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_objective_matches_definition() {
        let (mut images, mut labels, p) = random_instance(6, 9, 3, 2);
        images.push(images[2].clone());
        labels.push(0);
        images.push(images[4].clone());
        labels.push(labels[4]);
        let layout = images[0].layout.clone();
        let rows: Vec<&[f64]> = images.iter().map(|i| i.pixels.as_slice()).collect();
        let obj = WeightedObjective::new(&rows, &labels, 3, &layout.centers(), &p, 0.5, usize::MAX);
        assert_eq!(obj.unique_count(), 9);
        let ev = obj.evaluate(&p.weight).unwrap();
        let direct = total_cost_direct(&images, &labels, &p).unwrap();
        assert!((ev.total_cost - direct).abs() < 1e-12);
        assert!((ev.objective - direct - p.weight.penalty(0.5)).abs() < 1e-12);
        let g1 = obj.gradient(&p.weight, &ev);
        let g2 = cost_gradient(&images, &labels, &p, 0.5).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}
