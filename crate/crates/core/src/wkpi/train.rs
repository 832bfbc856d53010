use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cost::{class_count, Evaluation, WeightedObjective};
use super::kernel::shared_layout;
use super::{GaussianMixtureWeight, WkpiError, WkpiParams};
use crate::pimage::PersistenceImage;

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub initial_step: f64,
    /// Step multiplier after a rejected trial, in `(0, 1)`.
    pub backtrack: f64,
    /// Sufficient-decrease constant.
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            initial_step: 1.0,
            backtrack: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    /// Full batch up to 500 images, otherwise minibatches of 256.
    #[default]
    Auto,
    Full,
    Minibatch(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch: BatchMode,
    pub max_iterations: usize,
    /// Stop once `|delta TC|` between consecutive full evaluations is at most this.
    pub cost_tolerance: f64,
    /// `c` in the penalty `sum_r c exp(-w_r)`.
    pub penalty: f64,
    pub line_search: LineSearch,
    pub seed: u64,
    /// Minibatch iterations between full-cost evaluations.
    pub revalidate_every: usize,
    /// Pair factors are cached when they fit in this many bytes.
    pub cache_limit_bytes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch: BatchMode::Auto,
            max_iterations: 2000,
            cost_tolerance: 1e-4,
            penalty: 1.0,
            line_search: LineSearch::default(),
            seed: 0,
            revalidate_every: 25,
            cache_limit_bytes: 512 << 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), WkpiError> {
        let bad = |m: &str| Err(WkpiError::InvalidParams(m.into()));
        let ls = &self.line_search;
        if !(self.cost_tolerance > 0.0) {
            return bad("cost tolerance must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(ls.backtrack > 0.0 && ls.backtrack < 1.0) {
            return bad("backtrack factor must lie in (0, 1)");
        }
        if !(ls.initial_step > 0.0 && ls.initial_step.is_finite()) || !(ls.sufficient_decrease >= 0.0) {
            return bad("line search step and decrease constant must be positive");
        }
        if !(self.penalty >= 0.0) {
            return bad("penalty constant must be non-negative");
        }
        if let BatchMode::Minibatch(s) = self.batch {
            if s < 2 {
                return bad("minibatch size must be at least 2");
            }
        }
        if self.revalidate_every == 0 {
            return bad("revalidation interval must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub total_cost: f64,
    pub objective: f64,
    pub step: f64,
    /// Whether the cost was evaluated on the full training set.
    pub full: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    /// Best parameters seen.
    pub weight: GaussianMixtureWeight,
    pub initial_total_cost: f64,
    pub initial_objective: f64,
    pub best_total_cost: f64,
    pub best_objective: f64,
    pub trace: Vec<TraceEntry>,
    pub iterations: usize,
    pub converged: bool,
    pub unique_images: usize,
}

struct Projection {
    sigma_floor: f64,
}

impl Projection {
    fn apply(&self, theta: &mut [f64]) {
        for c in theta.chunks_exact_mut(4) {
            c[2] = c[2].max(self.sigma_floor);
            c[3] = c[3].max(0.0);
        }
    }

    fn step(&self, theta: &[f64], grad: &[f64], eta: f64) -> Vec<f64> {
        let mut out: Vec<f64> = theta.iter().zip(grad).map(|(t, g)| t - eta * g).collect();
        self.apply(&mut out);
        out
    }
}

/// Armijo backtracking from `eta`; returns the accepted step, point and
/// evaluation.
fn armijo(
    obj: &WeightedObjective,
    proj: &Projection,
    theta: &[f64],
    grad: &[f64],
    current: &Evaluation,
    mut eta: f64,
    ls: &LineSearch,
) -> Option<(f64, Vec<f64>, GaussianMixtureWeight, Evaluation)> {
    for _ in 0..ls.max_backtracks {
        let cand = proj.step(theta, grad, eta);
        if let Ok(w) = GaussianMixtureWeight::from_params(&cand) {
            if let Ok(ev) = obj.evaluate(&w) {
                let decrease: f64 = grad.iter().zip(theta).zip(&cand).map(|((g, t), c)| g * (t - c)).sum();
                if ev.objective <= current.objective - ls.sufficient_decrease * decrease {
                    return Some((eta, cand, w, ev));
                }
            }
        }
        eta *= ls.backtrack;
    }
    None
}

/// Minimises `TC + sum_r c exp(-w_r)` over the mixture parameters by
/// projected gradient descent with Armijo line search (full batch) or
/// fixed-step minibatch steps revalidated on the full set.
pub fn train_metric(
    images: &[PersistenceImage],
    labels: &[usize],
    init: &GaussianMixtureWeight,
    cfg: &TrainConfig,
    p: &WkpiParams,
) -> Result<TrainResult, WkpiError> {
    cfg.validate()?;
    if images.len() < 2 {
        return Err(WkpiError::TooFewImages {
            needed: 2,
            got: images.len(),
        });
    }
    let k = class_count(labels, images.len())?;
    let layout = shared_layout(images)?.expect("non-empty image set");
    let centers = layout.centers();
    let proj = Projection {
        sigma_floor: 1e-6 * layout.diagonal(),
    };
    let rows: Vec<&[f64]> = images.iter().map(|i| i.pixels.as_slice()).collect();
    let mut theta = init.params();
    proj.apply(&mut theta);
    let w0 = GaussianMixtureWeight::from_params(&theta)?;
    let full = WeightedObjective::new(&rows, labels, k, &centers, p, cfg.penalty, cfg.cache_limit_bytes);
    let batch = match cfg.batch {
        BatchMode::Full => None,
        BatchMode::Auto if images.len() <= 500 => None,
        BatchMode::Auto => Some(256),
        BatchMode::Minibatch(s) if s >= images.len() => None,
        BatchMode::Minibatch(s) => Some(s),
    };
    let ev0 = full.evaluate(&w0)?;
    log::debug!(
        "training on {} images ({} distinct), initial TC {}",
        images.len(),
        full.unique_count(),
        ev0.total_cost
    );
    let mut result = TrainResult {
        weight: w0.clone(),
        initial_total_cost: ev0.total_cost,
        initial_objective: ev0.objective,
        best_total_cost: ev0.total_cost,
        best_objective: ev0.objective,
        trace: Vec::new(),
        iterations: 0,
        converged: false,
        unique_images: full.unique_count(),
    };
    match batch {
        None => full_batch(&full, &proj, theta, ev0, cfg, &mut result)?,
        Some(s) => {
            let ctx = MinibatchContext {
                rows: &rows,
                labels,
                k,
                centers: &centers,
                p,
                full: &full,
                proj: &proj,
            };
            ctx.run(s, theta, ev0, cfg, &mut result)?
        }
    }
    Ok(result)
}

fn full_batch(
    obj: &WeightedObjective,
    proj: &Projection,
    mut theta: Vec<f64>,
    mut ev: Evaluation,
    cfg: &TrainConfig,
    result: &mut TrainResult,
) -> Result<(), WkpiError> {
    let ls = &cfg.line_search;
    let max_step = ls.initial_step * 1e3;
    let mut eta = ls.initial_step;
    let mut w = GaussianMixtureWeight::from_params(&theta)?;
    for it in 1..=cfg.max_iterations {
        result.iterations = it;
        let grad = obj.gradient(&w, &ev);
        let Some((step, cand, cw, cev)) = armijo(obj, proj, &theta, &grad, &ev, eta, ls) else {
            result.converged = true;
            break;
        };
        let delta = (cev.total_cost - ev.total_cost).abs();
        result.trace.push(TraceEntry {
            iteration: it,
            total_cost: cev.total_cost,
            objective: cev.objective,
            step,
            full: true,
        });
        theta = cand;
        w = cw;
        ev = cev;
        if ev.objective <= result.best_objective {
            result.best_objective = ev.objective;
            result.best_total_cost = ev.total_cost;
            result.weight = w.clone();
        }
        eta = (2.0 * step).min(max_step);
        if delta <= cfg.cost_tolerance {
            result.converged = true;
            break;
        }
    }
    Ok(())
}

struct MinibatchContext<'a> {
    rows: &'a [&'a [f64]],
    labels: &'a [usize],
    k: usize,
    centers: &'a [[f64; 2]],
    p: &'a WkpiParams,
    full: &'a WeightedObjective,
    proj: &'a Projection,
}

impl MinibatchContext<'_> {
    fn run(
        &self,
        s: usize,
        mut theta: Vec<f64>,
        ev0: Evaluation,
        cfg: &TrainConfig,
        result: &mut TrainResult,
    ) -> Result<(), WkpiError> {
        let ls = &cfg.line_search;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut eta = ls.initial_step;
        let mut last_full = ev0;
        let mut w = GaussianMixtureWeight::from_params(&theta)?;
        for it in 1..=cfg.max_iterations {
            result.iterations = it;
            let mut idx = sample(&mut rng, self.rows.len(), s).into_vec();
            idx.sort_unstable();
            let rows: Vec<&[f64]> = idx.iter().map(|&i| self.rows[i]).collect();
            let labels: Vec<usize> = idx.iter().map(|&i| self.labels[i]).collect();
            let obj = WeightedObjective::new(&rows, &labels, self.k, self.centers, self.p, cfg.penalty, cfg.cache_limit_bytes);
            let Ok(bev) = obj.evaluate(&w) else {
                continue;
            };
            let grad = obj.gradient(&w, &bev);
            let revalidate = it % cfg.revalidate_every == 0 || it == cfg.max_iterations;
            if it == 1 || (it - 1) % cfg.revalidate_every == 0 {
                // refresh the fixed step by a line search on this batch
                if let Some((step, ..)) = armijo(&obj, self.proj, &theta, &grad, &bev, 2.0 * eta, ls) {
                    eta = step;
                }
            }
            theta = self.proj.step(&theta, &grad, eta);
            w = GaussianMixtureWeight::from_params(&theta)?;
            result.trace.push(TraceEntry {
                iteration: it,
                total_cost: bev.total_cost,
                objective: bev.objective,
                step: eta,
                full: false,
            });
            if !revalidate {
                continue;
            }
            let ev = self.full.evaluate(&w)?;
            result.trace.push(TraceEntry {
                iteration: it,
                total_cost: ev.total_cost,
                objective: ev.objective,
                step: eta,
                full: true,
            });
            if ev.objective < result.best_objective {
                result.best_objective = ev.objective;
                result.best_total_cost = ev.total_cost;
                result.weight = w.clone();
            } else if ev.objective > last_full.objective {
                eta *= ls.backtrack;
            }
            let delta = (ev.total_cost - last_full.total_cost).abs();
            last_full = ev;
            if delta <= cfg.cost_tolerance {
                result.converged = true;
                break;
            }
        }
        Ok(())
    }
}
