//! Planar points, rectangles and Apollonius circles.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point2<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::new(S::zero(), S::zero())
    }

    pub fn from_polar(radius: S, angle: S) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn dot(self, other: Self) -> S {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    pub fn norm(self) -> S {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> S {
        (self - other).norm()
    }

    pub fn angle(self) -> S {
        self.y.atan2(self.x)
    }

    /// Unit vector in the same direction, or zero for the zero vector.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        if n > S::zero() {
            self * (S::one() / n)
        } else {
            Self::origin()
        }
    }
}

impl<S: Scalar> Add for Point2<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<S: Scalar> Sub for Point2<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<S: Scalar> Mul<S> for Point2<S> {
    type Output = Self;
    fn mul(self, k: S) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

/// Axis-aligned rectangle `[min.x, max.x] × [min.y, max.y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect<S> {
    pub min: Point2<S>,
    pub max: Point2<S>,
}

impl<S: Scalar> Rect<S> {
    pub fn new(min: Point2<S>, max: Point2<S>) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> S {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> S {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> S {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> S {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point2<S> {
        (self.min + self.max) * S::lit(0.5)
    }

    pub fn contains(&self, p: Point2<S>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn clamp(&self, p: Point2<S>) -> Point2<S> {
        Point2::new(
            p.x.max(self.min.x).min(self.max.x),
            p.y.max(self.min.y).min(self.max.y),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle<S> {
    pub center: Point2<S>,
    pub radius: S,
}

impl<S: Scalar> Circle<S> {
    pub fn contains(&self, p: Point2<S>) -> bool {
        p.distance(self.center) <= self.radius
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeometryError {
    #[error("ratio 1 gives a half-plane, not a circle")]
    Degenerate,
    #[error("ratio must be positive and finite, got {0}")]
    Domain(f64),
}

/// Apollonius circle `{p : ‖p − p1‖ ≤ α‖p − p2‖}` for `α ≠ 1`.
///
/// For `α < 1` the set is the returned disc. For `α > 1` the set is the
/// complement of the returned disc's interior; that disc is the `1/α` circle
/// of the swapped pair. With speeds `v1`, `v2` and `α = v1 / v2`, the set is
/// where an agent starting at `p1` arrives no later than one starting at
/// `p2`.
pub fn apollonius_circle<S: Scalar>(
    p1: Point2<S>,
    p2: Point2<S>,
    alpha: S,
) -> Result<Circle<S>, GeometryError> {
    if !alpha.is_finite() || alpha <= S::zero() {
        return Err(GeometryError::Domain(alpha.as_f64()));
    }
    let a2 = alpha * alpha;
    let denom = S::one() - a2;
    if denom == S::zero() {
        return Err(GeometryError::Degenerate);
    }
    let center = (p1 - p2 * a2) * (S::one() / denom);
    let radius = alpha * p1.distance(p2) / denom.abs();
    Ok(Circle { center, radius })
}

/// Earliest `t ∈ [0, horizon]` at which an evader running from `evader` along
/// unit direction `dir` at `evader_speed` can be met by a pursuer at
/// `pursuer` moving at `pursuer_speed`, i.e. the ray leaves the evader's
/// Apollonius region `C(evader, pursuer, v_e / v_p)`. `None` if the ray stays
/// inside for the whole horizon.
pub fn ray_interception<S: Scalar>(
    evader: Point2<S>,
    evader_speed: S,
    dir: Point2<S>,
    pursuer: Point2<S>,
    pursuer_speed: S,
    horizon: S,
) -> Option<S> {
    // Pursuer reaches p(t) = e + t·dir first iff
    //   v_e² ‖t·dir − d‖² ≤ v_p² t²,  d = pursuer − evader,
    // i.e. q(t) = (v_e² − v_p²) t² − 2 v_e² (dir·d) t + v_e² ‖d‖² ≤ 0.
    let d = pursuer - evader;
    let ve2 = evader_speed * evader_speed;
    let vp2 = pursuer_speed * pursuer_speed;
    let qa = ve2 - vp2;
    let qb = -S::lit(2.0) * ve2 * dir.dot(d);
    let qc = ve2 * d.norm_sq();
    if qc <= S::zero() {
        return Some(S::zero());
    }
    if qa > S::zero() {
        let disc = qb * qb - S::lit(4.0) * qa * qc;
        if disc < S::zero() {
            return None;
        }
        let t0 = (-qb - disc.sqrt()) / (S::lit(2.0) * qa);
        return (t0 >= S::zero() && t0 <= horizon).then_some(t0);
    }
    if qa == S::zero() {
        if qb >= S::zero() {
            return None;
        }
        let t0 = -qc / qb;
        return (t0 <= horizon).then_some(t0);
    }
    // Concave: roots have opposite signs since q(0) > 0.
    let disc = (qb * qb - S::lit(4.0) * qa * qc).sqrt();
    let r1 = (-qb - disc) / (S::lit(2.0) * qa);
    let r2 = (-qb + disc) / (S::lit(2.0) * qa);
    let t0 = r1.max(r2);
    (t0 <= horizon).then_some(t0)
}
