//! Persistence images.
//!
//! A diagram is mapped to the birth-persistence plane by `(b, d) -> (b, d - b)`
//! and each point becomes a normalised spherical Gaussian of spread `tau`,
//! scaled by a surface weight. A pixel holds the exact integral of that
//! mixture over its square, evaluated as products of one-dimensional normal
//! CDF differences.
//!
//! Pixels are indexed row-major from the bottom-left corner:
//! `s = iy * x_resolution + ix`.

mod io;

pub use io::{read_images_binary, write_images_binary, write_images_csv, IMAGE_MAGIC};

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::persistence::PersistenceDiagram;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("cannot fit a grid: no persistence points")]
    NoPoints,
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("invalid image config: {0}")]
    BadConfig(String),
    #[error("image container: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// `(birth, death) -> (birth, death - birth)`.
pub fn birth_persistence_transform(birth: f64, death: f64) -> (f64, f64) {
    (birth, death - birth)
}

/// A grid of square pixels on the birth-persistence plane.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub x_resolution: usize,
    pub y_resolution: usize,
    pub pixel_size: f64,
}

impl GridSpec {
    /// Square pixels of side `(y_max - y_min) / y_resolution`; the x range is
    /// widened on the right to a whole number of pixels.
    pub fn from_bounds(x_min: f64, x_max: f64, y_min: f64, y_max: f64, y_resolution: usize) -> Result<Self, ImageError> {
        if y_resolution == 0 {
            return Err(ImageError::BadGrid("y_resolution must be positive".into()));
        }
        if !(x_min.is_finite() && x_max.is_finite() && y_min.is_finite() && y_max.is_finite()) {
            return Err(ImageError::BadGrid("non-finite bounds".into()));
        }
        if y_max <= y_min || x_max < x_min {
            return Err(ImageError::BadGrid(format!(
                "empty box [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        let pixel_size = (y_max - y_min) / y_resolution as f64;
        let ratio = (x_max - x_min) / pixel_size;
        // absorb rounding noise such as 1 / 0.05 = 20.000000000000004
        let x_resolution = ((ratio - 1e-9).ceil() as usize).max(1);
        Ok(GridSpec {
            x_min,
            x_max: x_min + x_resolution as f64 * pixel_size,
            y_min,
            y_max,
            x_resolution,
            y_resolution,
            pixel_size,
        })
    }

    /// Rebuilds a grid from stored bounds and resolutions.
    pub fn from_parts(
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        x_resolution: usize,
        y_resolution: usize,
    ) -> Result<Self, ImageError> {
        if x_resolution == 0 || y_resolution == 0 || !(y_max > y_min) || !(x_max > x_min) {
            return Err(ImageError::BadGrid("degenerate stored grid".into()));
        }
        Ok(GridSpec {
            x_min,
            x_max,
            y_min,
            y_max,
            x_resolution,
            y_resolution,
            pixel_size: (y_max - y_min) / y_resolution as f64,
        })
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.x_resolution * self.y_resolution
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn x_edge(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.pixel_size
    }

    fn y_edge(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.pixel_size
    }

    pub fn center(&self, s: usize) -> [f64; 2] {
        let (iy, ix) = (s / self.x_resolution, s % self.x_resolution);
        [
            self.x_min + (ix as f64 + 0.5) * self.pixel_size,
            self.y_min + (iy as f64 + 0.5) * self.pixel_size,
        ]
    }

    pub fn centers(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|s| self.center(s)).collect()
    }

    pub fn diagonal(&self) -> f64 {
        (self.x_max - self.x_min).hypot(self.y_max - self.y_min)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> GridSpec {
        GridSpec {
            x_min: self.x_min + dx,
            x_max: self.x_max + dx,
            y_min: self.y_min + dy,
            y_max: self.y_max + dy,
            ..self.clone()
        }
    }
}

const FALLBACK_PAD: f64 = 0.5;

/// Bounding box of the transformed points of `diagrams`, padded by 10% of
/// each side (at least `3 * tau` when `tau` is given), with square pixels.
pub fn fit_grid<'a, I>(diagrams: I, y_resolution: usize, tau: Option<f64>) -> Result<GridSpec, ImageError>
where
    I: IntoIterator<Item = &'a PersistenceDiagram>,
{
    let mut bbox: Option<[f64; 4]> = None;
    for d in diagrams {
        for p in &d.points {
            let (x, y) = birth_persistence_transform(p.birth, p.death);
            let b = bbox.get_or_insert([x, x, y, y]);
            b[0] = b[0].min(x);
            b[1] = b[1].max(x);
            b[2] = b[2].min(y);
            b[3] = b[3].max(y);
        }
    }
    let [x0, x1, y0, y1] = bbox.ok_or(ImageError::NoPoints)?;
    let pad = |lo: f64, hi: f64| {
        let mut p = 0.1 * (hi - lo);
        if let Some(t) = tau {
            p = p.max(3.0 * t);
        }
        if p <= 0.0 {
            p = FALLBACK_PAD;
        }
        p
    };
    let (px, py) = (pad(x0, x1), pad(y0, y1));
    GridSpec::from_bounds(x0 - px, x1 + px, y0 - py, y1 + py, y_resolution)
}

/// Piecewise-linear surface weight on a transformed point `(x, y)`.
///
/// `|y - x| / b` above the axis, `|-y - x| / b` below it (when those ratios
/// are below one) and 1 otherwise, including on `y = 0`.
pub fn pl_weight(x: f64, y: f64, b: f64) -> f64 {
    if y > 0.0 && (y - x).abs() < b {
        (y - x).abs() / b
    } else if y < 0.0 && (-y - x).abs() < b {
        (-y - x).abs() / b
    } else {
        1.0
    }
}

pub type WeightFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The surface weight applied to each transformed point.
#[derive(Clone)]
pub enum SurfaceWeight {
    Constant,
    PiecewiseLinear { b: f64 },
    Custom(WeightFn),
}

impl fmt::Debug for SurfaceWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceWeight::Constant => write!(f, "Constant"),
            SurfaceWeight::PiecewiseLinear { b } => write!(f, "PiecewiseLinear {{ b: {b} }}"),
            SurfaceWeight::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl SurfaceWeight {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            SurfaceWeight::Constant => 1.0,
            SurfaceWeight::PiecewiseLinear { b } => pl_weight(x, y, *b),
            SurfaceWeight::Custom(f) => f(x, y),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PiConfig {
    /// Gaussian spread; `None` means one pixel width of the grid in use.
    pub tau: Option<f64>,
    pub surface_weight: SurfaceWeight,
}

impl Default for PiConfig {
    fn default() -> Self {
        PiConfig {
            tau: None,
            surface_weight: SurfaceWeight::Constant,
        }
    }
}

impl PiConfig {
    pub fn validate(&self) -> Result<(), ImageError> {
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ImageError::BadConfig(format!("tau must be positive, got {t}")));
            }
        }
        if let SurfaceWeight::PiecewiseLinear { b } = self.surface_weight {
            if !(b > 0.0) {
                return Err(ImageError::BadConfig(format!("b must be positive, got {b}")));
            }
        }
        Ok(())
    }

    pub fn tau_for(&self, grid: &GridSpec) -> f64 {
        self.tau.unwrap_or(grid.pixel_size)
    }
}

/// One grid of a (possibly concatenated) image, tagged with the homology
/// dimension it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBlock {
    pub dimension: Option<u8>,
    pub grid: GridSpec,
}

/// Pixel layout shared by a family of images.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageLayout {
    pub blocks: Vec<ImageBlock>,
}

impl ImageLayout {
    pub fn single(grid: GridSpec, dimension: Option<u8>) -> Self {
        ImageLayout {
            blocks: vec![ImageBlock { dimension, grid }],
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.grid.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixel centres of all blocks in layout order.
    pub fn centers(&self) -> Vec<[f64; 2]> {
        self.blocks.iter().flat_map(|b| b.grid.centers()).collect()
    }

    /// Block index of every pixel.
    pub fn block_tags(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| std::iter::repeat(i).take(b.grid.len()))
            .collect()
    }

    pub fn min_pixel_size(&self) -> f64 {
        self.blocks.iter().map(|b| b.grid.pixel_size).fold(f64::INFINITY, f64::min)
    }

    /// Bounding box `[x_min, x_max, y_min, y_max]` over all blocks.
    pub fn bounds(&self) -> [f64; 4] {
        self.blocks.iter().fold(
            [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY],
            |b, blk| {
                [
                    b[0].min(blk.grid.x_min),
                    b[1].max(blk.grid.x_max),
                    b[2].min(blk.grid.y_min),
                    b[3].max(blk.grid.y_max),
                ]
            },
        )
    }

    pub fn diagonal(&self) -> f64 {
        let b = self.bounds();
        (b[1] - b[0]).hypot(b[3] - b[2])
    }
}

/// A persistence image: non-negative pixel integrals on a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceImage {
    pub layout: Arc<ImageLayout>,
    pub pixels: Vec<f64>,
}

impl PersistenceImage {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Tags the (single-block) image with a homology dimension.
    pub fn with_dimension(mut self, dim: u8) -> Self {
        let layout = Arc::make_mut(&mut self.layout);
        for b in &mut layout.blocks {
            b.dimension = Some(dim);
        }
        self
    }
}

/// Probability mass of a standard normal on `[lo, hi]`.
fn normal_mass(lo: f64, hi: f64) -> f64 {
    use std::f64::consts::FRAC_1_SQRT_2;
    if lo >= 0.0 {
        0.5 * (libm::erfc(lo * FRAC_1_SQRT_2) - libm::erfc(hi * FRAC_1_SQRT_2))
    } else if hi <= 0.0 {
        0.5 * (libm::erfc(-hi * FRAC_1_SQRT_2) - libm::erfc(-lo * FRAC_1_SQRT_2))
    } else {
        0.5 * (libm::erf(hi * FRAC_1_SQRT_2) - libm::erf(lo * FRAC_1_SQRT_2))
    }
}

/// Adds the image of `d` on `grid` into `out`.
fn accumulate(d: &PersistenceDiagram, grid: &GridSpec, cfg: &PiConfig, out: &mut [f64]) {
    let tau = cfg.tau_for(grid);
    let (xr, yr) = (grid.x_resolution, grid.y_resolution);
    let mut cx = vec![0.0; xr];
    let mut cy = vec![0.0; yr];
    for p in &d.points {
        let (ux, uy) = birth_persistence_transform(p.birth, p.death);
        let w = cfg.surface_weight.eval(ux, uy);
        if w == 0.0 {
            continue;
        }
        for (ix, c) in cx.iter_mut().enumerate() {
            *c = normal_mass((grid.x_edge(ix) - ux) / tau, (grid.x_edge(ix + 1) - ux) / tau);
        }
        for (iy, c) in cy.iter_mut().enumerate() {
            *c = w * normal_mass((grid.y_edge(iy) - uy) / tau, (grid.y_edge(iy + 1) - uy) / tau);
        }
        for (iy, &my) in cy.iter().enumerate() {
            if my == 0.0 {
                continue;
            }
            let row = &mut out[iy * xr..(iy + 1) * xr];
            for (o, &mx) in row.iter_mut().zip(&cx) {
                *o += my * mx;
            }
        }
    }
}

/// Image of every point of `d` (all dimensions) on `grid`.
pub fn compute_persistence_image(d: &PersistenceDiagram, grid: &GridSpec, cfg: &PiConfig) -> PersistenceImage {
    let mut pixels = vec![0.0; grid.len()];
    accumulate(d, grid, cfg, &mut pixels);
    PersistenceImage {
        layout: Arc::new(ImageLayout::single(grid.clone(), None)),
        pixels,
    }
}

/// Image of the dimension-`dim` points of `d`, tagged with `dim`.
pub fn image_for_dimension(d: &PersistenceDiagram, dim: u8, grid: &GridSpec, cfg: &PiConfig) -> PersistenceImage {
    compute_persistence_image(&d.of_dimension(dim), grid, cfg).with_dimension(dim)
}

/// Concatenates blocks ordered by dimension tag (untagged first, then 0, 1, ...).
pub fn concatenate_images(per_dimension: &[PersistenceImage]) -> PersistenceImage {
    let mut parts: Vec<(&ImageBlock, &[f64])> = Vec::new();
    for img in per_dimension {
        let mut offset = 0;
        for blk in &img.layout.blocks {
            let n = blk.grid.len();
            parts.push((blk, &img.pixels[offset..offset + n]));
            offset += n;
        }
    }
    parts.sort_by_key(|(blk, _)| blk.dimension);
    let blocks = parts.iter().map(|(b, _)| (*b).clone()).collect();
    let pixels = parts.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    PersistenceImage {
        layout: Arc::new(ImageLayout { blocks }),
        pixels,
    }
}
