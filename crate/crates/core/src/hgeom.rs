//! Arithmetic in the first Heisenberg group, the Euclidean and Heisenberg
//! metrics, and the geometry of horizontal planes.
//!
//! Coordinates are exponential coordinates `(x, y, t)` on R^3. The group law is
//!
//! ```text
//! p * q = (x + x', y + y', t + t' + 2(x y' - x' y))
//! ```
//!
//! which is the orientation under which the gauge distance
//!
//! ```text
//! d_H(p, q) = (((x - x')^2 + (y - y')^2)^2 + (t - t' - 2(x' y - x y'))^2)^(1/4)
//! ```
//!
//! is left invariant and `V(p)` is the left translate of the plane `t = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A point of H^1.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0, t: 0.0 };

    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Point { x, y, t }
    }

    /// Checked constructor rejecting NaN and infinite coordinates.
    pub fn try_new(x: f64, y: f64, t: f64) -> Result<Self> {
        let p = Point { x, y, t };
        if !p.is_finite() {
            return invalid(format!("non-finite point ({x}, {y}, {t})"));
        }
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.t.is_finite()
    }

    /// Horizontal projection `(x, y)`.
    pub fn project(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn euclidean_norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.t * self.t).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Heisenberg,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Heisenberg => "heisenberg",
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" | "E" => Ok(MetricKind::Euclidean),
            "heisenberg" | "H" => Ok(MetricKind::Heisenberg),
            other => invalid(format!("unknown metric '{other}'")),
        }
    }
}

/// The horizontal plane `V(base)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneSpec {
    pub base: Point,
}

impl PlaneSpec {
    pub fn through(base: Point) -> Self {
        PlaneSpec { base }
    }

    /// `sqrt(1 + 4(x0^2 + y0^2))`, the length of the plane's normal `(-2y0, 2x0, -1)`.
    pub fn normal_len(&self) -> f64 {
        let Point { x, y, .. } = self.base;
        (1.0 + 4.0 * (x * x + y * y)).sqrt()
    }
}

pub fn group_mul(p: Point, q: Point) -> Point {
    Point {
        x: p.x + q.x,
        y: p.y + q.y,
        t: p.t + q.t + 2.0 * (p.x * q.y - q.x * p.y),
    }
}

pub fn group_inv(p: Point) -> Point {
    Point { x: -p.x, y: -p.y, t: -p.t }
}

/// Anisotropic dilation `(lambda x, lambda y, lambda^2 t)`.
pub fn dilate(p: Point, lambda: f64) -> Result<Point> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return invalid(format!("dilation factor must be positive and finite, got {lambda}"));
    }
    Ok(dilate_unchecked(p, lambda))
}

#[inline]
pub(crate) fn dilate_unchecked(p: Point, lambda: f64) -> Point {
    Point { x: lambda * p.x, y: lambda * p.y, t: lambda * lambda * p.t }
}

#[inline]
pub fn euclidean_dist(p: Point, q: Point) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dt = p.t - q.t;
    (dx * dx + dy * dy + dt * dt).sqrt()
}

#[inline]
pub fn heisenberg_dist(p: Point, q: Point) -> f64 {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let h = dx * dx + dy * dy;
    let v = p.t - q.t - 2.0 * (q.x * p.y - p.x * q.y);
    (h * h + v * v).sqrt().sqrt()
}

#[inline]
pub fn dist(p: Point, q: Point, m: MetricKind) -> f64 {
    match m {
        MetricKind::Euclidean => euclidean_dist(p, q),
        MetricKind::Heisenberg => heisenberg_dist(p, q),
    }
}

/// Signed defining expression of `V(p)`: `t0 - t - 2(x y0 - y x0)`.
#[inline]
pub fn plane_residual(q: Point, v: &PlaneSpec) -> f64 {
    let b = v.base;
    b.t - q.t - 2.0 * (q.x * b.y - q.y * b.x)
}

/// Euclidean distance from `q` to the plane `V(p)`.
#[inline]
pub fn dist_to_plane(q: Point, v: &PlaneSpec) -> f64 {
    plane_residual(q, v).abs() / v.normal_len()
}

/// Membership in the closed Euclidean `rho`-neighbourhood `V(p)(rho)`.
pub fn in_neighborhood(q: Point, v: &PlaneSpec, rho: f64) -> Result<bool> {
    if !(rho >= 0.0) {
        return invalid(format!("neighbourhood radius must be nonnegative, got {rho}"));
    }
    Ok(dist_to_plane(q, v) <= rho)
}

/// Lower dimension-comparison bound `max{s, 2s - 2}`.
pub fn beta_minus(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return invalid(format!("beta_minus needs s >= 0, got {s}"));
    }
    Ok(s.max(2.0 * s - 2.0))
}

/// Upper dimension-comparison bound `min{2s, s + 1}`.
pub fn beta_plus(s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return invalid(format!("beta_plus needs s >= 0, got {s}"));
    }
    Ok((2.0 * s).min(s + 1.0))
}
