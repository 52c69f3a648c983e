//! Iterated function systems: the Heisenberg square and the symmetric
//! Cantor set on the t-axis.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hgeom::{dilate_unchecked, group_mul, Point};

/// A contraction of H^1 that can be iterated by address enumeration.
pub trait Contraction: Sync {
    fn apply(&self, p: Point) -> Point;
}

/// Heisenberg similarity `p -> translation * delta_ratio(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IfsMapH {
    pub translation: Point,
    pub ratio: f64,
}

impl IfsMapH {
    pub fn new(translation: Point, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return invalid(format!("similarity ratio must lie in (0, 1), got {ratio}"));
        }
        if !translation.is_finite() {
            return invalid("non-finite translation");
        }
        Ok(IfsMapH { translation, ratio })
    }
}

impl Contraction for IfsMapH {
    #[inline]
    fn apply(&self, p: Point) -> Point {
        group_mul(self.translation, dilate_unchecked(p, self.ratio))
    }
}

/// Corner offsets of the four planar maps `f_j(z) = (z + v_j) / 2`.
pub const SQUARE_CORNERS: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];

/// Horizontal lifts `F_1..F_4` of the square IFS, with zero vertical translation.
pub fn hsquare_ifs() -> [IfsMapH; 4] {
    SQUARE_CORNERS.map(|(vx, vy)| IfsMapH { translation: Point::new(0.5 * vx, 0.5 * vy, 0.0), ratio: 0.5 })
}

/// Affine map `t -> scale t + shift` acting on the t-coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisMap {
    pub scale: f64,
    pub shift: f64,
}

impl Contraction for AxisMap {
    #[inline]
    fn apply(&self, p: Point) -> Point {
        Point::new(p.x, p.y, self.scale * p.t + self.shift)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorParams {
    pub d: f64,
    /// Euclidean contraction `2^(-1/d)` of each map
    pub ratio: f64,
}

impl CantorParams {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 0.0 && d < 1.0) {
            return invalid(format!("Cantor dimension must lie in (0, 1), got {d}"));
        }
        Ok(CantorParams { d, ratio: 2f64.powf(-1.0 / d) })
    }

    pub fn maps(&self) -> [AxisMap; 2] {
        let r = self.ratio;
        [AxisMap { scale: r, shift: 0.0 }, AxisMap { scale: r, shift: 1.0 - r }]
    }
}

/// The two maps generating the symmetric Cantor set `C_d` in `[0, 1]`.
pub fn cantor_ifs(d: f64) -> Result<(CantorParams, [AxisMap; 2])> {
    let p = CantorParams::new(d)?;
    Ok((p, p.maps()))
}
