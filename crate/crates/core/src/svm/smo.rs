use nalgebra::DMatrix;

use super::SvmError;

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
const TAU: f64 = 1e-12;

/// A trained binary SVM.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_indices: Vec<usize>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub n_train: usize,
    /// Maximal KKT violation `m(alpha) - M(alpha)` at termination.
    pub kkt_gap: f64,
    pub iterations: usize,
}

impl SvmModel {
    /// All `n_train` dual variables `alpha_i` (zero off the support).
    pub fn alphas(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n_train];
        for (&i, &c) in self.support_indices.iter().zip(&self.dual_coefficients) {
            a[i] = c.abs();
        }
        a
    }
}

fn check_gram(gram: &DMatrix<f64>, n: usize) -> Result<(), SvmError> {
    if gram.nrows() != n || gram.ncols() != n {
        return Err(SvmError::Shape {
            rows: gram.nrows(),
            cols: gram.ncols(),
            n,
        });
    }
    let scale = gram.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    for i in 0..n {
        for j in i + 1..n {
            if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-10 * scale {
                return Err(SvmError::NonSymmetric(i, j));
            }
        }
    }
    Ok(())
}

/// Dual SMO solver with maximal-violating-pair working-set selection.
///
/// Solves `min 1/2 a^T Q a - e^T a` with `Q_ij = y_i y_j K_ij`,
/// `0 <= a_i <= C`, `y^T a = 0`, until `m(a) - M(a) <= tol`.
pub fn train_svm(gram: &DMatrix<f64>, labels: &[i8], c: f64, tol: f64) -> Result<SvmModel, SvmError> {
    let n = labels.len();
    check_gram(gram, n)?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(SvmError::BadC(c));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(SvmError::BadLabel(bad as i32));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(SvmError::SingleClass);
    }
    let y: Vec<f64> = labels.iter().map(|&v| v as f64).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * gram[(i, j)];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let is_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let max_iter = 10_000_000usize.max(100 * n);
    let mut iterations = 0;
    let gap = loop {
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if is_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if is_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        let gap = gmax - gmin;
        if gap <= tol || i == usize::MAX || j == usize::MAX || iterations >= max_iter {
            break gap;
        }
        iterations += 1;
        let (ai, aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    };

    // bias from free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel {
        dual_coefficients: support.iter().map(|&t| alpha[t] * y[t]).collect(),
        support_indices: support,
        bias: -rho,
        c,
        n_train: n,
        kkt_gap: gap.max(0.0),
        iterations,
    })
}

/// `(label, margin)` for a kernel row against the training set; a zero
/// margin maps to `+1`.
pub fn predict(model: &SvmModel, kernel_row: &[f64]) -> Result<(i8, f64), SvmError> {
    if kernel_row.len() != model.n_train {
        return Err(SvmError::RowLength {
            got: kernel_row.len(),
            expected: model.n_train,
        });
    }
    let margin = model
        .support_indices
        .iter()
        .zip(&model.dual_coefficients)
        .map(|(&i, &a)| a * kernel_row[i])
        .sum::<f64>()
        + model.bias;
    Ok((if margin >= 0.0 { 1 } else { -1 }, margin))
}
