use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::smo::DEFAULT_TOLERANCE;
use super::SvmError;
use crate::rng::{substream, substream_seed};

pub const CV_CSV_HEADER: &str = "repeat,fold,m,sigma,C,accuracy";

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub repeats: usize,
    pub m_grid: Vec<usize>,
    pub sigma_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub seed: u64,
    pub stratified: bool,
    pub tolerance: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            outer_folds: 10,
            inner_folds: 10,
            repeats: 10,
            m_grid: vec![3, 4, 5, 6, 7, 8],
            sigma_grid: vec![0.001, 0.01, 0.1, 1.0, 10.0, 100.0],
            c_grid: vec![0.1, 1.0, 10.0, 100.0],
            seed: 0,
            stratified: true,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        let bad = |m: &str| Err(SvmError::BadConfig(m.into()));
        if self.outer_folds < 2 || self.inner_folds < 2 {
            return bad("fold counts must be at least 2");
        }
        if self.repeats == 0 {
            return bad("repeats must be positive");
        }
        if self.m_grid.is_empty() || self.sigma_grid.is_empty() || self.c_grid.is_empty() {
            return bad("hyperparameter grids must be non-empty");
        }
        if self.m_grid.contains(&0) {
            return bad("m must be positive");
        }
        if self.sigma_grid.iter().chain(&self.c_grid).any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad("sigma and C must be positive and finite");
        }
        if !(self.tolerance > 0.0) {
            return bad("solver tolerance must be positive");
        }
        Ok(())
    }

    fn sorted_grids(&self) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
        let mut m = self.m_grid.clone();
        m.sort_unstable();
        m.dedup();
        let sort = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        (m, sort(&self.sigma_grid), sort(&self.c_grid))
    }
}

/// Hooks connecting cross-validation to a concrete model.
pub trait CvPipeline: Sync {
    /// State fitted on `train` only (e.g. image grids), reused across the
    /// hyperparameter grid.
    type Prepared: Send + Sync;

    fn prepare(&self, train: &[usize], test: &[usize]) -> Result<Self::Prepared, SvmError>;

    /// Predicted labels of the test items, one vector per entry of `c_grid`.
    fn evaluate(
        &self,
        prepared: &Self::Prepared,
        m: usize,
        sigma: f64,
        c_grid: &[f64],
        tol: f64,
        seed: u64,
    ) -> Result<Vec<Vec<usize>>, SvmError>;
}

fn class_members(labels: &[usize], items: &[usize]) -> Vec<Vec<usize>> {
    let k = items.iter().map(|&i| labels[i] + 1).max().unwrap_or(0);
    let mut members = vec![Vec::new(); k];
    for &i in items {
        members[labels[i]].push(i);
    }
    members
}

/// Stratified fold id for each entry of `items`: every class is shuffled,
/// classes are concatenated in order and position `p` goes to fold `p mod folds`.
pub fn stratified_folds<R: Rng>(labels: &[usize], items: &[usize], folds: usize, rng: &mut R) -> Result<Vec<usize>, SvmError> {
    let members = class_members(labels, items);
    for (class, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < folds {
            return Err(SvmError::ClassTooSmall {
                class,
                size: m.len(),
                folds,
            });
        }
    }
    let pos: std::collections::HashMap<usize, usize> = items.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let mut out = vec![0; items.len()];
    let mut p = 0;
    for mut m in members {
        m.shuffle(rng);
        for i in m {
            out[pos[&i]] = p % folds;
            p += 1;
        }
    }
    Ok(out)
}

pub fn plain_folds<R: Rng>(n: usize, folds: usize, rng: &mut R) -> Result<Vec<usize>, SvmError> {
    if n < folds {
        return Err(SvmError::TooFewSamples { samples: n, folds });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut out = vec![0; n];
    for (p, i) in order.into_iter().enumerate() {
        out[i] = p % folds;
    }
    Ok(out)
}

fn assign_folds<R: Rng>(labels: &[usize], items: &[usize], folds: usize, stratified: bool, rng: &mut R) -> Result<Vec<usize>, SvmError> {
    if items.len() < folds {
        return Err(SvmError::TooFewSamples {
            samples: items.len(),
            folds,
        });
    }
    if stratified {
        stratified_folds(labels, items, folds, rng)
    } else {
        plain_folds(items.len(), folds, rng)
    }
}

fn split(items: &[usize], assignment: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    let (test, train): (Vec<_>, Vec<_>) = items.iter().zip(assignment).partition(|(_, &f)| f == fold);
    (train.into_iter().map(|(&i, _)| i).collect(), test.into_iter().map(|(&i, _)| i).collect())
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldRecord {
    pub repeat: usize,
    pub fold: usize,
    pub m: usize,
    pub sigma: f64,
    pub c: f64,
    /// Mean inner-CV accuracy of the selected hyperparameters.
    pub inner_accuracy: f64,
    pub accuracy: f64,
    pub test_items: Vec<usize>,
    pub predictions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldRecord>,
    /// Test accuracy over all outer folds of each repeat.
    pub repeat_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `repeat_accuracies`.
    pub std: f64,
}

impl CvReport {
    fn from_folds(folds: Vec<FoldRecord>, repeats: usize) -> Self {
        let repeat_accuracies: Vec<f64> = (0..repeats)
            .map(|r| {
                let (mut hit, mut tot) = (0usize, 0usize);
                for f in folds.iter().filter(|f| f.repeat == r) {
                    tot += f.test_items.len();
                    hit += (f.accuracy * f.test_items.len() as f64).round() as usize;
                }
                if tot == 0 { 0.0 } else { hit as f64 / tot as f64 }
            })
            .collect();
        let mean = repeat_accuracies.iter().sum::<f64>() / repeats as f64;
        let var = repeat_accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / repeats as f64;
        CvReport {
            folds,
            repeat_accuracies,
            mean,
            std: var.sqrt(),
        }
    }

    /// One row per outer fold and a final `summary` row carrying the mean.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CV_CSV_HEADER}")?;
        for f in &self.folds {
            writeln!(w, "{},{},{},{:?},{:?},{:?}", f.repeat, f.fold, f.m, f.sigma, f.c, f.accuracy)?;
        }
        writeln!(w, "summary,,,,,{:?}", self.mean)
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "accuracy {:.2}% +- {:.2}% over {} repeats",
            100.0 * self.mean,
            100.0 * self.std,
            self.repeat_accuracies.len()
        );
        for (r, a) in self.repeat_accuracies.iter().enumerate() {
            let _ = writeln!(s, "repeat {r}: {:.2}%", 100.0 * a);
        }
        for f in &self.folds {
            let _ = writeln!(
                s,
                "repeat {} fold {}: m={} sigma={} C={} inner={:.4} test={:.4}",
                f.repeat, f.fold, f.m, f.sigma, f.c, f.inner_accuracy, f.accuracy
            );
        }
        s
    }
}

struct Selection {
    m: usize,
    sigma: f64,
    c: f64,
    inner_accuracy: f64,
}

fn select<P: CvPipeline>(
    pipeline: &P,
    labels: &[usize],
    train: &[usize],
    cfg: &CvConfig,
    repeat: usize,
    fold: usize,
) -> Result<Selection, SvmError> {
    let (ms, sigmas, cs) = cfg.sorted_grids();
    let ids = [repeat as u64, fold as u64];
    let assignment = assign_folds(labels, train, cfg.inner_folds, cfg.stratified, &mut substream(cfg.seed, "inner-folds", &ids))?;
    let mut scores = vec![0.0; ms.len() * sigmas.len() * cs.len()];
    for inner in 0..cfg.inner_folds {
        let (itrain, itest) = split(train, &assignment, inner);
        let truth: Vec<usize> = itest.iter().map(|&i| labels[i]).collect();
        let prep = pipeline.prepare(&itrain, &itest)?;
        let seed = substream_seed(cfg.seed, "fit", &[repeat as u64, fold as u64, inner as u64 + 1]);
        for (a, &m) in ms.iter().enumerate() {
            for (b, &sigma) in sigmas.iter().enumerate() {
                let preds = pipeline.evaluate(&prep, m, sigma, &cs, cfg.tolerance, seed)?;
                for (c, p) in preds.iter().enumerate() {
                    scores[(a * sigmas.len() + b) * cs.len() + c] += accuracy(p, &truth) / cfg.inner_folds as f64;
                }
            }
        }
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(Selection {
        m: ms[best / (sigmas.len() * cs.len())],
        sigma: sigmas[(best / cs.len()) % sigmas.len()],
        c: cs[best % cs.len()],
        inner_accuracy: scores[best],
    })
}

/// Repeated nested cross-validation. Hyperparameters are selected by inner
/// CV on each outer-training split (ties: smaller m, then sigma, then C),
/// refitted on the whole outer-training split and scored on its test split.
pub fn nested_cv<P: CvPipeline>(pipeline: &P, labels: &[usize], cfg: &CvConfig) -> Result<CvReport, SvmError> {
    cfg.validate()?;
    let all: Vec<usize> = (0..labels.len()).collect();
    let mut jobs = Vec::new();
    for repeat in 0..cfg.repeats {
        let assignment = assign_folds(labels, &all, cfg.outer_folds, cfg.stratified, &mut substream(cfg.seed, "outer-folds", &[repeat as u64]))?;
        for fold in 0..cfg.outer_folds {
            let (train, test) = split(&all, &assignment, fold);
            jobs.push((repeat, fold, train, test));
        }
    }
    let folds = jobs
        .par_iter()
        .map(|(repeat, fold, train, test)| {
            let sel = select(pipeline, labels, train, cfg, *repeat, *fold)?;
            let prep = pipeline.prepare(train, test)?;
            let seed = substream_seed(cfg.seed, "fit", &[*repeat as u64, *fold as u64, 0]);
            let predictions = pipeline
                .evaluate(&prep, sel.m, sel.sigma, &[sel.c], cfg.tolerance, seed)?
                .pop()
                .ok_or_else(|| SvmError::Pipeline("no predictions returned".into()))?;
            if predictions.len() != test.len() {
                return Err(SvmError::Pipeline(format!(
                    "{} predictions for {} test items",
                    predictions.len(),
                    test.len()
                )));
            }
            let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
            log::info!(
                "repeat {repeat} fold {fold}: m={} sigma={} C={} inner={:.4}",
                sel.m,
                sel.sigma,
                sel.c,
                sel.inner_accuracy
            );
            Ok(FoldRecord {
                repeat: *repeat,
                fold: *fold,
                m: sel.m,
                sigma: sel.sigma,
                c: sel.c,
                inner_accuracy: sel.inner_accuracy,
                accuracy: accuracy(&predictions, &truth),
                test_items: test.clone(),
                predictions,
            })
        })
        .collect::<Result<Vec<_>, SvmError>>()?;
    Ok(CvReport::from_folds(folds, cfg.repeats))
}
