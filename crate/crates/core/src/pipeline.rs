//! From graphs to diagrams, images, a trained WKPI metric and a
//! cross-validated classifier.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::graph::{degree_function, jaccard_index, ricci_curvature, DescriptorValues, Graph, RicciConfig};
use crate::persistence::{
    build_sublevel_filtration, compute_0dim_sublevel, compute_0dim_superlevel, compute_extended_persistence,
    merge_diagrams, PersistenceDiagram, PersistencePoint,
};
use crate::pimage::{
    concatenate_images, fit_grid, image_for_dimension, GridSpec, ImageError, ImageLayout, PersistenceImage, PiConfig,
    SurfaceWeight,
};
use crate::rng::substream_seed;
use crate::svm::{one_vs_rest, CvPipeline, SvmError};
use crate::wkpi::{
    gram_matrix, init_kcenter, init_kmeans, init_random, train_metric, transformed_points,
    GaussianMixtureWeight, KernelVariant, TrainConfig, TrainResult, WkpiParams,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Descriptor {
    Degree,
    #[default]
    Ricci,
    Jaccard,
}

impl FromStr for Descriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "degree" => Ok(Descriptor::Degree),
            "ricci" => Ok(Descriptor::Ricci),
            "jaccard" => Ok(Descriptor::Jaccard),
            _ => Err(Error::Invalid(format!("unknown descriptor {s:?} (degree, ricci, jaccard)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMethod {
    #[default]
    KMeans,
    KCenter,
    Random,
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(InitMethod::KMeans),
            "kcenter" | "k-center" => Ok(InitMethod::KCenter),
            "random" => Ok(InitMethod::Random),
            _ => Err(Error::Invalid(format!("unknown init method {s:?} (kmeans, kcenter, random)"))),
        }
    }
}

pub fn descriptor_values(g: &Graph, d: Descriptor) -> Result<DescriptorValues> {
    Ok(match d {
        Descriptor::Degree => degree_function(g),
        Descriptor::Jaccard => jaccard_index(g),
        Descriptor::Ricci => ricci_curvature(g, RicciConfig::default())?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramOptions {
    /// Subset of `{0, 1}`; dimension 1 needs `use_extended`.
    pub dimensions: Vec<u8>,
    pub use_extended: bool,
    /// Drop the capped essential points of the plain sweeps.
    pub drop_essential: bool,
}

impl Default for DiagramOptions {
    fn default() -> Self {
        DiagramOptions {
            dimensions: vec![0, 1],
            use_extended: true,
            drop_essential: false,
        }
    }
}

impl DiagramOptions {
    pub fn validate(&self) -> Result<()> {
        if self.dimensions.is_empty() || self.dimensions.iter().any(|&d| d > 1) {
            return Err(Error::Invalid("dimensions must be a non-empty subset of {0, 1}".into()));
        }
        if self.dimensions.contains(&1) && !self.use_extended {
            return Err(Error::Invalid("dimension 1 requires extended persistence".into()));
        }
        Ok(())
    }

    fn sorted_dimensions(&self) -> Vec<u8> {
        let mut d = self.dimensions.clone();
        d.sort_unstable();
        d.dedup();
        d
    }
}

/// Diagram of one graph.
///
/// Dimension 0 is the union of the sublevel and superlevel sweeps. Without
/// extended persistence each component contributes two capped essential
/// points; with it, one extended `(min, max)` point, and dimension 1 holds
/// the extended cycle points.
pub fn graph_diagram(g: &Graph, f: &DescriptorValues, opts: &DiagramOptions) -> Result<PersistenceDiagram> {
    opts.validate()?;
    let mut d = if opts.use_extended {
        let ep = compute_extended_persistence(g, f)?;
        let mut pts: Vec<PersistencePoint> = ep.ordinary0.iter().map(|&(b, d)| PersistencePoint::new(b, d, 0, false)).collect();
        pts.extend(ep.relative1.iter().map(|&(b, d)| PersistencePoint::new(b, d, 0, false)));
        pts.extend(ep.extended0.iter().map(|&(b, d)| PersistencePoint::new(b, d, 0, true)));
        pts.extend(ep.extended1.iter().map(|&(b, d)| PersistencePoint::new(b, d, 1, true)));
        PersistenceDiagram::new(pts)
    } else {
        let sub = compute_0dim_sublevel(&build_sublevel_filtration(g, &f.extend(g)?)?);
        let sup = compute_0dim_superlevel(g, f)?;
        let merged = merge_diagrams(&sub, &sup);
        if opts.drop_essential {
            merged.without_essential()
        } else {
            merged
        }
    };
    let dims = opts.sorted_dimensions();
    d.points.retain(|p| dims.contains(&p.dimension));
    Ok(d)
}

/// Diagrams of all graphs, computed in parallel.
pub fn compute_diagrams(graphs: &[Graph], descriptor: Descriptor, opts: &DiagramOptions) -> Result<Vec<PersistenceDiagram>> {
    opts.validate()?;
    graphs
        .par_iter()
        .map(|g| graph_diagram(g, &descriptor_values(g, descriptor)?, opts))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SurfaceChoice {
    #[default]
    Constant,
    /// Piecewise-linear weight; `None` uses the largest persistence among
    /// the training diagrams.
    PiecewiseLinear(Option<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageOptions {
    pub y_resolution: usize,
    pub tau: Option<f64>,
    pub surface: SurfaceChoice,
}

impl Default for ImageOptions {
    fn default() -> Self {
        ImageOptions {
            y_resolution: 40,
            tau: None,
            surface: SurfaceChoice::Constant,
        }
    }
}

/// Per-dimension grids fitted on a training set; maps any diagram to a
/// concatenated, dimension-tagged image.
#[derive(Debug, Clone)]
pub struct ImageFeaturizer {
    pub dimensions: Vec<u8>,
    pub grids: Vec<GridSpec>,
    pub config: PiConfig,
    layout: Arc<ImageLayout>,
}

impl ImageFeaturizer {
    pub fn fit(train: &[&PersistenceDiagram], dims: &[u8], opts: &ImageOptions) -> Result<Self> {
        if opts.y_resolution == 0 {
            return Err(ImageError::BadGrid("y resolution must be positive".into()).into());
        }
        let mut dimensions = dims.to_vec();
        dimensions.sort_unstable();
        dimensions.dedup();
        let surface_weight = match opts.surface {
            SurfaceChoice::Constant => SurfaceWeight::Constant,
            SurfaceChoice::PiecewiseLinear(Some(b)) => SurfaceWeight::PiecewiseLinear { b },
            SurfaceChoice::PiecewiseLinear(None) => {
                let b = train
                    .iter()
                    .flat_map(|d| d.points.iter())
                    .map(|p| p.persistence())
                    .fold(0.0, f64::max);
                SurfaceWeight::PiecewiseLinear {
                    b: if b > 0.0 { b } else { 1.0 },
                }
            }
        };
        let config = PiConfig {
            tau: opts.tau,
            surface_weight,
        };
        config.validate()?;
        let mut grids = Vec::with_capacity(dimensions.len());
        let mut any = false;
        for &dim in &dimensions {
            let per: Vec<PersistenceDiagram> = train.iter().map(|d| d.of_dimension(dim)).collect();
            match fit_grid(&per, opts.y_resolution, opts.tau) {
                Ok(g) => {
                    any = true;
                    grids.push(g);
                }
                Err(ImageError::NoPoints) => {
                    grids.push(GridSpec::from_bounds(-0.5, 0.5, -0.5, 0.5, opts.y_resolution)?);
                }
                Err(e) => return Err(e.into()),
            }
        }
        if !any {
            return Err(ImageError::NoPoints.into());
        }
        let layout = concatenate_images(
            &dimensions
                .iter()
                .zip(&grids)
                .map(|(&dim, g)| image_for_dimension(&PersistenceDiagram::default(), dim, g, &config))
                .collect::<Vec<_>>(),
        )
        .layout;
        Ok(ImageFeaturizer {
            dimensions,
            grids,
            config,
            layout,
        })
    }

    pub fn layout(&self) -> &Arc<ImageLayout> {
        &self.layout
    }

    pub fn transform(&self, d: &PersistenceDiagram) -> PersistenceImage {
        let parts: Vec<PersistenceImage> = self
            .dimensions
            .iter()
            .zip(&self.grids)
            .map(|(&dim, g)| image_for_dimension(d, dim, g, &self.config))
            .collect();
        PersistenceImage {
            layout: self.layout.clone(),
            pixels: concatenate_images(&parts).pixels,
        }
    }

    pub fn transform_all(&self, ds: &[&PersistenceDiagram]) -> Vec<PersistenceImage> {
        ds.par_iter().map(|d| self.transform(d)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricOptions {
    pub init: InitMethod,
    pub variant: KernelVariant,
    pub train: TrainConfig,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            init: InitMethod::KMeans,
            variant: KernelVariant::Wkpi,
            train: TrainConfig::default(),
        }
    }
}

/// Initial mixture for a training set, from its transformed diagram points.
pub fn initial_weight(
    train: &[&PersistenceDiagram],
    layout: &ImageLayout,
    m: usize,
    method: InitMethod,
    seed: u64,
) -> Result<GaussianMixtureWeight> {
    let min_spread = layout.min_pixel_size();
    let w = match method {
        InitMethod::Random => init_random(layout.bounds(), m, seed)?,
        InitMethod::KMeans => init_kmeans(&transformed_points(train.iter().copied()), m, min_spread, seed)?,
        InitMethod::KCenter => init_kcenter(&transformed_points(train.iter().copied()), m, min_spread, seed)?,
    };
    Ok(w)
}

/// Initialises and trains the weight of an `m`-component mixture with
/// kernel width `sigma`. Seeds for initialisation and minibatches are
/// sub-streams of `seed`.
pub fn fit_metric(
    train: &[&PersistenceDiagram],
    images: &[PersistenceImage],
    labels: &[usize],
    m: usize,
    sigma: f64,
    opts: &MetricOptions,
    seed: u64,
) -> Result<(WkpiParams, TrainResult)> {
    let layout = images
        .first()
        .map(|i| i.layout.clone())
        .ok_or_else(|| Error::Invalid("no training images".into()))?;
    let init = initial_weight(train, &layout, m, opts.init, substream_seed(seed, "init", &[]))?;
    let params = WkpiParams::new(sigma, init.clone(), opts.variant)?;
    let cfg = TrainConfig {
        seed: substream_seed(seed, "minibatch", &[]),
        ..opts.train.clone()
    };
    let result = train_metric(images, labels, &init, &cfg, &params)?;
    Ok((params.with_weight(result.weight.clone()), result))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub descriptor: Descriptor,
    pub diagrams: DiagramOptions,
    pub images: ImageOptions,
    pub metric: MetricOptions,
}

/// Nested-CV hooks for the full WKPI pipeline on precomputed diagrams.
pub struct WkpiCv<'a> {
    pub diagrams: &'a [PersistenceDiagram],
    pub labels: &'a [usize],
    pub config: &'a PipelineConfig,
}

pub struct PreparedSplit<'a> {
    train: Vec<&'a PersistenceDiagram>,
    train_labels: Vec<usize>,
    train_images: Vec<PersistenceImage>,
    test_images: Vec<PersistenceImage>,
}

fn pipeline_error(e: Error) -> SvmError {
    SvmError::Pipeline(e.to_string())
}

impl<'a> WkpiCv<'a> {
    /// Gram matrix of the training split and cross-kernel rows of the test
    /// split under a freshly trained metric.
    pub fn kernels(&self, prep: &PreparedSplit<'a>, m: usize, sigma: f64, seed: u64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (params, _) = fit_metric(
            &prep.train,
            &prep.train_images,
            &prep.train_labels,
            m,
            sigma,
            &self.config.metric,
            seed,
        )?;
        let all: Vec<PersistenceImage> = prep.train_images.iter().chain(&prep.test_images).cloned().collect();
        let joint = gram_matrix(&all, &params)?;
        let n = prep.train_images.len();
        let gram = joint.view((0, 0), (n, n)).into_owned();
        let cross = joint.view((n, 0), (all.len() - n, n)).into_owned();
        Ok((gram, cross))
    }
}

impl<'a> CvPipeline for WkpiCv<'a> {
    type Prepared = PreparedSplit<'a>;

    fn prepare(&self, train: &[usize], test: &[usize]) -> Result<PreparedSplit<'a>, SvmError> {
        let tr: Vec<&PersistenceDiagram> = train.iter().map(|&i| &self.diagrams[i]).collect();
        let te: Vec<&PersistenceDiagram> = test.iter().map(|&i| &self.diagrams[i]).collect();
        let dims = self.config.diagrams.sorted_dimensions();
        let feat = ImageFeaturizer::fit(&tr, &dims, &self.config.images).map_err(pipeline_error)?;
        Ok(PreparedSplit {
            train_labels: train.iter().map(|&i| self.labels[i]).collect(),
            train_images: feat.transform_all(&tr),
            test_images: feat.transform_all(&te),
            train: tr,
        })
    }

    fn evaluate(
        &self,
        prep: &PreparedSplit<'a>,
        m: usize,
        sigma: f64,
        c_grid: &[f64],
        tol: f64,
        seed: u64,
    ) -> Result<Vec<Vec<usize>>, SvmError> {
        let (gram, cross) = self.kernels(prep, m, sigma, seed).map_err(pipeline_error)?;
        c_grid
            .iter()
            .map(|&c| one_vs_rest(&gram, &prep.train_labels, c, tol)?.predict_rows(&cross))
            .collect()
    }
}
