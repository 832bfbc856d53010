use nalgebra::DMatrix;

use super::smo::{predict, train_svm, SvmModel};
use super::SvmError;

/// One-vs-rest ensemble over classes `0..k`. With two classes a single
/// model separates class 0 (`+1`) from class 1.
#[derive(Debug, Clone, PartialEq)]
pub struct OneVsRest {
    pub classes: usize,
    pub models: Vec<SvmModel>,
}

impl OneVsRest {
    /// One margin per class.
    pub fn margins(&self, kernel_row: &[f64]) -> Result<Vec<f64>, SvmError> {
        if self.classes == 2 {
            let (_, m) = predict(&self.models[0], kernel_row)?;
            return Ok(vec![m, -m]);
        }
        self.models.iter().map(|model| predict(model, kernel_row).map(|(_, m)| m)).collect()
    }

    /// Argmax margin; ties go to the smallest class id.
    pub fn predict(&self, kernel_row: &[f64]) -> Result<usize, SvmError> {
        let margins = self.margins(kernel_row)?;
        let mut best = 0;
        for (c, &m) in margins.iter().enumerate() {
            if m > margins[best] {
                best = c;
            }
        }
        Ok(best)
    }

    /// Predictions for each row of a `test x train` cross-kernel matrix.
    pub fn predict_rows(&self, cross: &DMatrix<f64>) -> Result<Vec<usize>, SvmError> {
        (0..cross.nrows())
            .map(|i| {
                let row: Vec<f64> = cross.row(i).iter().copied().collect();
                self.predict(&row)
            })
            .collect()
    }
}

pub fn one_vs_rest(gram: &DMatrix<f64>, labels: &[usize], c: f64, tol: f64) -> Result<OneVsRest, SvmError> {
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    if k < 2 {
        return Err(SvmError::SingleClass);
    }
    let mut counts = vec![0usize; k];
    for &l in labels {
        counts[l] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(SvmError::EmptyClass(empty));
    }
    let binary = |class: usize| -> Vec<i8> { labels.iter().map(|&l| if l == class { 1 } else { -1 }).collect() };
    let models = if k == 2 {
        vec![train_svm(gram, &binary(0), c, tol)?]
    } else {
        (0..k).map(|class| train_svm(gram, &binary(class), c, tol)).collect::<Result<_, _>>()?
    };
    Ok(OneVsRest { classes: k, models })
}
