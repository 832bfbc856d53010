use super::WkpiError;

/// One spherical Gaussian `w * exp(-|z - (x, y)|^2 / sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
    pub w: f64,
}

impl Component {
    pub fn new(x: f64, y: f64, sigma: f64, w: f64) -> Self {
        Component { x, y, sigma, w }
    }

    #[inline]
    fn shape(&self, z: [f64; 2]) -> f64 {
        let (dx, dy) = (z[0] - self.x, z[1] - self.y);
        (-(dx * dx + dy * dy) / (self.sigma * self.sigma)).exp()
    }
}

/// Weight function: a non-negative mixture of `m` spherical Gaussians.
///
/// Parameters are laid out as `[x_0, y_0, sigma_0, w_0, x_1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixtureWeight {
    components: Vec<Component>,
}

impl GaussianMixtureWeight {
    pub fn new(components: Vec<Component>) -> Result<Self, WkpiError> {
        if components.is_empty() {
            return Err(WkpiError::InvalidWeight("need at least one component".into()));
        }
        for (r, c) in components.iter().enumerate() {
            if ![c.x, c.y, c.sigma, c.w].iter().all(|v| v.is_finite()) {
                return Err(WkpiError::InvalidWeight(format!("component {r} is not finite")));
            }
            if c.sigma <= 0.0 {
                return Err(WkpiError::InvalidWeight(format!("component {r} has spread {}", c.sigma)));
            }
            if c.w < 0.0 {
                return Err(WkpiError::InvalidWeight(format!("component {r} has coefficient {}", c.w)));
            }
        }
        Ok(GaussianMixtureWeight { components })
    }

    /// A single unit Gaussian.
    pub fn single(x: f64, y: f64, sigma: f64, w: f64) -> Result<Self, WkpiError> {
        Self::new(vec![Component::new(x, y, sigma, w)])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn eval(&self, z: [f64; 2]) -> f64 {
        self.components.iter().map(|c| c.w * c.shape(z)).sum()
    }

    pub fn eval_many(&self, points: &[[f64; 2]]) -> Vec<f64> {
        points.iter().map(|&z| self.eval(z)).collect()
    }

    pub fn params(&self) -> Vec<f64> {
        self.components.iter().flat_map(|c| [c.x, c.y, c.sigma, c.w]).collect()
    }

    pub fn from_params(params: &[f64]) -> Result<Self, WkpiError> {
        if params.is_empty() || params.len() % 4 != 0 {
            return Err(WkpiError::InvalidWeight(format!("{} parameters is not 4m", params.len())));
        }
        Self::new(params.chunks_exact(4).map(|p| Component::new(p[0], p[1], p[2], p[3])).collect())
    }

    /// Every coefficient multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        GaussianMixtureWeight {
            components: self
                .components
                .iter()
                .map(|c| Component { w: c.w * lambda, ..*c })
                .collect(),
        }
    }

    /// `sum_r c * exp(-w_r)`.
    pub fn penalty(&self, c: f64) -> f64 {
        self.components.iter().map(|r| c * (-r.w).exp()).sum()
    }

    /// Gradient of the penalty in parameter layout.
    pub fn penalty_gradient(&self, c: f64) -> Vec<f64> {
        self.components
            .iter()
            .flat_map(|r| [0.0, 0.0, 0.0, -c * (-r.w).exp()])
            .collect()
    }

    /// `sum_s q_s * d omega(points_s) / d theta` in parameter layout.
    pub fn pullback(&self, points: &[[f64; 2]], q: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; 4 * self.len()];
        for (r, c) in self.components.iter().enumerate() {
            let s2 = c.sigma * c.sigma;
            let (mut gx, mut gy, mut gs, mut gw) = (0.0, 0.0, 0.0, 0.0);
            for (&z, &qs) in points.iter().zip(q) {
                if qs == 0.0 {
                    continue;
                }
                let (dx, dy) = (z[0] - c.x, z[1] - c.y);
                let d2 = dx * dx + dy * dy;
                let g = (-d2 / s2).exp();
                let qg = qs * g;
                gw += qg;
                let t = qg * c.w * 2.0 / s2;
                gx += t * dx;
                gy += t * dy;
                gs += t * d2 / c.sigma;
            }
            grad[4 * r..4 * r + 4].copy_from_slice(&[gx, gy, gs, gw]);
        }
        grad
    }
}
