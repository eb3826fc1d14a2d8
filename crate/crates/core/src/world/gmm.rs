use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::WorldError;
use crate::geometry::{Point2, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmmComponent {
    pub weight: f64,
    pub mean: [f64; 2],
    /// Row-major 2 × 2 covariance.
    pub cov: [[f64; 2]; 2],
}

impl GmmComponent {
    /// Lower-triangular `L` with `L Lᵀ = Σ`, tolerant of singular `Σ`.
    fn cholesky(&self) -> [[f64; 2]; 2] {
        let [[a, b], [_, d]] = self.cov;
        let l00 = a.max(0.0).sqrt();
        let l10 = if l00 > 0.0 { b / l00 } else { 0.0 };
        let l11 = (d - l10 * l10).max(0.0).sqrt();
        [[l00, 0.0], [l10, l11]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub components: Vec<GmmComponent>,
}

impl GmmParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |what: String| Err(WorldError::Config(what));
        if self.components.is_empty() {
            return bad("mixture needs at least one component".into());
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if self.components.iter().any(|c| c.weight.is_nan() || c.weight < 0.0) || (total - 1.0).abs() > 1e-9 {
            return bad(format!("mixture weights must be non-negative and sum to 1, got {total}"));
        }
        for c in &self.components {
            let [[a, b], [b2, d]] = c.cov;
            if (b - b2).abs() > 1e-12 || a < 0.0 || d < 0.0 || a * d - b * b < -1e-12 {
                return bad(format!("covariance {:?} is not symmetric PSD", c.cov));
            }
        }
        Ok(())
    }
}

/// Maximum redraws before giving up on rejection sampling.
const MAX_REDRAWS: usize = 100_000;

/// Picks a component by weight, draws from it, and redraws until the point
/// lies inside `bounds`. Falls back to clamping after [`MAX_REDRAWS`].
pub fn sample_resource(gmm: &GmmParams, bounds: &Rect<f64>, rng: &mut impl Rng) -> Point2<f64> {
    let mut last = Point2::origin();
    for _ in 0..MAX_REDRAWS {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut comp = gmm.components.last().expect("validated mixture");
        for c in &gmm.components {
            acc += c.weight;
            if u < acc {
                comp = c;
                break;
            }
        }
        let l = comp.cholesky();
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        last = Point2::new(comp.mean[0] + l[0][0] * z0, comp.mean[1] + l[1][0] * z0 + l[1][1] * z1);
        if bounds.contains(last) {
            return last;
        }
    }
    bounds.clamp(last)
}
