//! Per-pair pixel factors shared by distance, cost, gradient and Gram
//! assembly.
//!
//! For a pair `(a, b)` and pixel `s` with `c_s = (a_s - b_s)^2 / (2 sigma^2)`:
//!
//! * WKPI stores `e_s = 1 - exp(-c_s)`; then `D^2 = 2 sum_s omega_s e_s`.
//! * altWKPI stores `c_s`; then `D^2 = 2 sum_s (1 - exp(-omega_s c_s))`.
//!
//! Pixels on which every item agrees contribute nothing and are dropped.

use std::collections::HashMap;

use rayon::prelude::*;

use super::KernelVariant;

const CHUNK: usize = 256;

/// Groups bitwise-identical vectors: returns the representative index of
/// each group (in first-seen order) and the group of every input.
pub(crate) fn dedup_rows(rows: &[&[f64]]) -> (Vec<usize>, Vec<usize>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut reps = Vec::new();
    let mut group = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let key: Vec<u64> = r.iter().map(|v| v.to_bits()).collect();
        let g = *seen.entry(key).or_insert_with(|| {
            reps.push(i);
            reps.len() - 1
        });
        group.push(g);
    }
    (reps, group)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let rem: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + rem
}

pub(crate) struct PairFactors {
    cols: Vec<usize>,
    items: Vec<Vec<f64>>,
    pairs: Vec<(u32, u32)>,
    cache: Option<Vec<f64>>,
    variant: KernelVariant,
    scale: f64,
}

impl PairFactors {
    /// All pairs `u < v` of `items`; factors are cached when they fit in
    /// `cache_limit` bytes.
    pub fn new(items: &[&[f64]], variant: KernelVariant, sigma: f64, cache_limit: usize) -> Self {
        let n = items.len();
        let pairs: Vec<(u32, u32)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u as u32, v as u32)))
            .collect();
        Self::with_pairs(items, pairs, variant, sigma, cache_limit)
    }

    pub fn with_pairs(
        items: &[&[f64]],
        pairs: Vec<(u32, u32)>,
        variant: KernelVariant,
        sigma: f64,
        cache_limit: usize,
    ) -> Self {
        let width = items.first().map_or(0, |r| r.len());
        let cols: Vec<usize> = (0..width)
            .filter(|&s| items.iter().any(|r| r[s] != items[0][s]))
            .collect();
        let items: Vec<Vec<f64>> = items.iter().map(|r| cols.iter().map(|&s| r[s]).collect()).collect();
        let mut pf = PairFactors {
            cols,
            items,
            pairs,
            cache: None,
            variant,
            scale: 1.0 / (2.0 * sigma * sigma),
        };
        let bytes = pf.pairs.len().saturating_mul(pf.cols.len()).saturating_mul(8);
        if bytes <= cache_limit {
            let w = pf.cols.len();
            let mut data = vec![0.0; pf.pairs.len() * w];
            data.par_chunks_mut(w.max(1) * CHUNK)
                .zip(pf.pairs.par_chunks(CHUNK))
                .for_each(|(block, ps)| {
                    for (row, &p) in block.chunks_mut(w.max(1)).zip(ps) {
                        pf.fill_row(p, row);
                    }
                });
            pf.cache = Some(data);
        }
        pf
    }

    /// Pixel indices (into the full image) that carry any difference.
    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    fn fill_row(&self, (u, v): (u32, u32), row: &mut [f64]) {
        let (a, b) = (&self.items[u as usize], &self.items[v as usize]);
        for ((o, x), y) in row.iter_mut().zip(a).zip(b) {
            let d = x - y;
            let c = d * d * self.scale;
            *o = match self.variant {
                KernelVariant::Wkpi => -(-c).exp_m1(),
                KernelVariant::AltWkpi => c,
            };
        }
    }

    /// Runs `f(pair_index, factor_row)` over pair chunks in parallel and
    /// returns the per-chunk outputs in order.
    fn map_chunks<T: Send>(&self, f: impl Fn(usize, &[f64], &mut T) + Sync, init: impl Fn() -> T + Sync) -> Vec<T> {
        let w = self.cols.len();
        let idx: Vec<usize> = (0..self.pairs.len()).step_by(CHUNK).collect();
        idx.par_iter()
            .map(|&start| {
                let end = (start + CHUNK).min(self.pairs.len());
                let mut acc = init();
                let mut buf = vec![0.0; w];
                for p in start..end {
                    let row: &[f64] = match &self.cache {
                        Some(data) => &data[p * w..(p + 1) * w],
                        None => {
                            self.fill_row(self.pairs[p], &mut buf);
                            &buf
                        }
                    };
                    f(p, row, &mut acc);
                }
                acc
            })
            .collect()
    }

    /// Squared distance of every pair given `omega` on [`Self::cols`].
    pub fn lambda(&self, omega: &[f64]) -> Vec<f64> {
        let variant = self.variant;
        self.map_chunks(
            |_, row, out: &mut Vec<f64>| {
                let v = match variant {
                    KernelVariant::Wkpi => 2.0 * dot(omega, row),
                    KernelVariant::AltWkpi => 2.0 * row.iter().zip(omega).map(|(c, w)| -(-w * c).exp_m1()).sum::<f64>(),
                };
                out.push(v);
            },
            Vec::new,
        )
        .concat()
    }

    /// `sum_p weights_p * d lambda_p / d omega_s` for every active pixel.
    pub fn omega_gradient(&self, omega: &[f64], weights: &[f64]) -> Vec<f64> {
        let w = self.cols.len();
        let variant = self.variant;
        let partials = self.map_chunks(
            |p, row, q: &mut Vec<f64>| {
                let a = 2.0 * weights[p];
                if a == 0.0 {
                    return;
                }
                match variant {
                    KernelVariant::Wkpi => {
                        for (qs, e) in q.iter_mut().zip(row) {
                            *qs += a * e;
                        }
                    }
                    KernelVariant::AltWkpi => {
                        for ((qs, c), om) in q.iter_mut().zip(row).zip(omega) {
                            *qs += a * c * (-om * c).exp();
                        }
                    }
                }
            },
            || vec![0.0; w],
        );
        let mut q = vec![0.0; w];
        for part in partials {
            for (a, b) in q.iter_mut().zip(part) {
                *a += b;
            }
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedup_groups_identical_rows() {
        let rows: Vec<&[f64]> = vec![&[1.0, 2.0], &[0.0, 1.0], &[1.0, 2.0]];
        let (reps, group) = dedup_rows(&rows);
        assert_eq!(reps, vec![0, 1]);
        assert_eq!(group, vec![0, 1, 0]);
    }

    #[test]
    fn cached_and_streamed_agree() {
        let a = [0.1, 0.5, 0.0, 0.3, 0.9];
        let b = [0.2, 0.5, 0.0, 0.1, 0.0];
        let c = [0.0, 0.5, 0.0, 0.7, 0.4];
        let items: Vec<&[f64]> = vec![&a, &b, &c];
        let omega_full = [1.0, 2.0, 0.5, 0.25, 3.0];
        for variant in [KernelVariant::Wkpi, KernelVariant::AltWkpi] {
            let cached = PairFactors::new(&items, variant, 0.3, usize::MAX);
            let streamed = PairFactors::new(&items, variant, 0.3, 0);
            assert_eq!(cached.cols(), &[0, 3, 4]);
            let omega: Vec<f64> = cached.cols().iter().map(|&s| omega_full[s]).collect();
            assert_eq!(cached.lambda(&omega), streamed.lambda(&omega));
            let wts = [0.5, -1.0, 2.0];
            assert_eq!(cached.omega_gradient(&omega, &wts), streamed.omega_gradient(&omega, &wts));
        }
    }
}
