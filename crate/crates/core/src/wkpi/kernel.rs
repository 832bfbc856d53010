use std::sync::Arc;

use nalgebra::DMatrix;

use super::pairs::{dedup_rows, PairFactors};
use super::{GaussianMixtureWeight, WkpiError};
use crate::pimage::{ImageLayout, PersistenceImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelVariant {
    /// `sum_s omega_s exp(-(a_s - b_s)^2 / (2 sigma^2))`
    #[default]
    Wkpi,
    /// `sum_s exp(-omega_s (a_s - b_s)^2 / (2 sigma^2))`
    AltWkpi,
}

impl std::str::FromStr for KernelVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wkpi" => Ok(KernelVariant::Wkpi),
            "alt-wkpi" | "altwkpi" | "alt" => Ok(KernelVariant::AltWkpi),
            other => Err(format!("unknown kernel variant {other:?} (expected wkpi or alt-wkpi)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WkpiParams {
    pub kernel_sigma: f64,
    pub weight: GaussianMixtureWeight,
    pub variant: KernelVariant,
}

impl WkpiParams {
    pub fn new(kernel_sigma: f64, weight: GaussianMixtureWeight, variant: KernelVariant) -> Result<Self, WkpiError> {
        if !(kernel_sigma > 0.0 && kernel_sigma.is_finite()) {
            return Err(WkpiError::InvalidParams(format!("kernel sigma must be positive, got {kernel_sigma}")));
        }
        Ok(WkpiParams {
            kernel_sigma,
            weight,
            variant,
        })
    }

    pub fn with_weight(&self, weight: GaussianMixtureWeight) -> Self {
        WkpiParams {
            weight,
            ..self.clone()
        }
    }
}

pub(crate) fn same_layout(a: &Arc<ImageLayout>, b: &Arc<ImageLayout>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Common layout of `images`, or a mismatch error.
pub(crate) fn shared_layout<'a, I>(images: I) -> Result<Option<Arc<ImageLayout>>, WkpiError>
where
    I: IntoIterator<Item = &'a PersistenceImage>,
{
    let mut layout: Option<Arc<ImageLayout>> = None;
    for img in images {
        if img.pixels.len() != img.layout.len() {
            return Err(WkpiError::GridMismatch);
        }
        match &layout {
            None => layout = Some(img.layout.clone()),
            Some(l) if same_layout(l, &img.layout) => {}
            Some(_) => return Err(WkpiError::GridMismatch),
        }
    }
    Ok(layout)
}

fn omega(a: &PersistenceImage, b: &PersistenceImage, p: &WkpiParams) -> Result<Vec<f64>, WkpiError> {
    shared_layout([a, b])?;
    Ok(p.weight.eval_many(&a.layout.centers()))
}

pub fn wkpi_kernel(a: &PersistenceImage, b: &PersistenceImage, p: &WkpiParams) -> Result<f64, WkpiError> {
    let om = omega(a, b, p)?;
    let s2 = 2.0 * p.kernel_sigma * p.kernel_sigma;
    Ok(a.pixels
        .iter()
        .zip(&b.pixels)
        .zip(&om)
        .map(|((x, y), w)| w * (-(x - y) * (x - y) / s2).exp())
        .sum())
}

pub fn alt_wkpi_kernel(a: &PersistenceImage, b: &PersistenceImage, p: &WkpiParams) -> Result<f64, WkpiError> {
    let om = omega(a, b, p)?;
    let s2 = 2.0 * p.kernel_sigma * p.kernel_sigma;
    Ok(a.pixels
        .iter()
        .zip(&b.pixels)
        .zip(&om)
        .map(|((x, y), w)| (-w * (x - y) * (x - y) / s2).exp())
        .sum())
}

/// The kernel selected by `p.variant`.
pub fn kernel_value(a: &PersistenceImage, b: &PersistenceImage, p: &WkpiParams) -> Result<f64, WkpiError> {
    match p.variant {
        KernelVariant::Wkpi => wkpi_kernel(a, b, p),
        KernelVariant::AltWkpi => alt_wkpi_kernel(a, b, p),
    }
}

/// `sqrt(k(a,a) + k(b,b) - 2 k(a,b))` for the kernel selected by `p.variant`.
///
/// Radicands down to `-1e-12` (relative to the kernel scale) are rounding
/// and clamp to zero; anything more negative is an error.
pub fn wkpi_distance(a: &PersistenceImage, b: &PersistenceImage, p: &WkpiParams) -> Result<f64, WkpiError> {
    let (kaa, kbb, kab) = (kernel_value(a, a, p)?, kernel_value(b, b, p)?, kernel_value(a, b, p)?);
    let r = kaa + kbb - 2.0 * kab;
    if r < 0.0 {
        if r < -1e-12 * (kaa + kbb).max(1.0) {
            return Err(WkpiError::NegativeRadicand(r));
        }
        return Ok(0.0);
    }
    Ok(r.sqrt())
}

/// Squared-distance matrix of `rows` (all on one layout) in the stable
/// pair-factor form, with identical images evaluated once.
pub(crate) fn lambda_full(rows: &[&[f64]], omega_full: &[f64], p: &WkpiParams) -> DMatrix<f64> {
    let n = rows.len();
    let (reps, group) = dedup_rows(rows);
    let items: Vec<&[f64]> = reps.iter().map(|&i| rows[i]).collect();
    let pf = PairFactors::new(&items, p.variant, p.kernel_sigma, 0);
    let om: Vec<f64> = pf.cols().iter().map(|&s| omega_full[s]).collect();
    let lam = pf.lambda(&om);
    let u = items.len();
    let mut small = DMatrix::zeros(u, u);
    for (&(a, b), &l) in pf.pairs().iter().zip(&lam) {
        small[(a as usize, b as usize)] = l;
        small[(b as usize, a as usize)] = l;
    }
    DMatrix::from_fn(n, n, |i, j| small[(group[i], group[j])])
}

fn kernel_total(omega_full: &[f64], p: &WkpiParams) -> f64 {
    match p.variant {
        KernelVariant::Wkpi => omega_full.iter().sum(),
        KernelVariant::AltWkpi => omega_full.len() as f64,
    }
}

/// Gram matrix `K_ij = k(a_i, a_j)`, assembled as `k(a,a) - D^2 / 2`.
pub fn gram_matrix(images: &[PersistenceImage], p: &WkpiParams) -> Result<DMatrix<f64>, WkpiError> {
    let Some(layout) = shared_layout(images)? else {
        return Ok(DMatrix::zeros(0, 0));
    };
    let om = p.weight.eval_many(&layout.centers());
    let rows: Vec<&[f64]> = images.iter().map(|i| i.pixels.as_slice()).collect();
    let total = kernel_total(&om, p);
    Ok(lambda_full(&rows, &om, p).map(|l| total - 0.5 * l))
}

/// Kernel rows of `rows` against `cols`: a `rows.len() x cols.len()` matrix.
pub fn cross_gram(
    rows: &[PersistenceImage],
    cols: &[PersistenceImage],
    p: &WkpiParams,
) -> Result<DMatrix<f64>, WkpiError> {
    let Some(layout) = shared_layout(rows.iter().chain(cols))? else {
        return Ok(DMatrix::zeros(rows.len(), cols.len()));
    };
    let om = p.weight.eval_many(&layout.centers());
    let all: Vec<&[f64]> = rows.iter().chain(cols).map(|i| i.pixels.as_slice()).collect();
    let total = kernel_total(&om, p);
    let lam = lambda_full(&all, &om, p);
    let n = rows.len();
    Ok(DMatrix::from_fn(n, cols.len(), |i, j| total - 0.5 * lam[(i, n + j)]))
}
