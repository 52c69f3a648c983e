use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hgeom::{beta_minus, beta_plus, euclidean_dist, heisenberg_dist, Point};
use crate::rng;

/// Where sample pairs are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRegion {
    /// uniform in the Euclidean ball `B_E(0, R)`
    Ball,
    /// uniform on the segment `{(0, 0, t) : |t| <= R}`
    TAxis,
    /// uniform on the segment `{(x, 0, 0) : |x| <= R}`
    XAxis,
}

/// Observed constants of `d_E <= c d_H` and `d_H <= c d_E^(1/2)` on sampled pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub region: PairRegion,
    /// max of `d_E / d_H`
    pub sup_ratio_lower: f64,
    /// max of `d_H / d_E^(1/2)`
    pub sup_ratio_upper: f64,
    pub samples: usize,
    pub seed: u64,
}

fn sample_point<R: Rng>(rng: &mut R, region: PairRegion, r: f64) -> Point {
    match region {
        PairRegion::Ball => loop {
            let p = Point::new(rng.random_range(-r..=r), rng.random_range(-r..=r), rng.random_range(-r..=r));
            if p.euclidean_norm() <= r {
                return p;
            }
        },
        PairRegion::TAxis => Point::new(0.0, 0.0, rng.random_range(-r..=r)),
        PairRegion::XAxis => Point::new(rng.random_range(-r..=r), 0.0, 0.0),
    }
}

pub fn fit_metric_comparison(r: f64, samples: usize, seed: u64) -> Result<ComparisonReport> {
    fit_metric_comparison_in(PairRegion::Ball, r, samples, seed)
}

pub fn fit_metric_comparison_in(region: PairRegion, r: f64, samples: usize, seed: u64) -> Result<ComparisonReport> {
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("sampling radius must be positive, got {r}"));
    }
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let ratios: Vec<(f64, f64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(seed, i);
            let p = sample_point(&mut g, region, r);
            let q = sample_point(&mut g, region, r);
            let de = euclidean_dist(p, q);
            let dh = heisenberg_dist(p, q);
            if de == 0.0 {
                (0.0, 0.0)
            } else {
                (de / dh, dh / de.sqrt())
            }
        })
        .collect();
    let (lower, upper) = ratios.iter().fold((0.0f64, 0.0f64), |(a, b), &(x, y)| (a.max(x), b.max(y)));
    Ok(ComparisonReport { r, region, sup_ratio_lower: lower, sup_ratio_upper: upper, samples, seed })
}

/// Outcome of `beta_-(dim_E) - tol <= dim_H <= beta_+(dim_E) + tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub ok: bool,
    #[serde(rename = "dimE")]
    pub dim_e: f64,
    #[serde(rename = "dimH")]
    pub dim_h: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
    /// `dim_H - beta_-(dim_E)`
    pub lower_margin: f64,
    /// `beta_+(dim_E) - dim_H`
    pub upper_margin: f64,
    pub tol: f64,
}

pub fn check_dimension_inequalities(dim_e: f64, dim_h: f64, tol: f64) -> Result<InequalityCheck> {
    if !(tol >= 0.0) {
        return invalid(format!("tolerance must be nonnegative, got {tol}"));
    }
    // slightly negative estimates are clamped so the bounds stay defined
    let s = dim_e.max(0.0);
    let lo = beta_minus(s)?;
    let hi = beta_plus(s)?;
    let lower_margin = dim_h - lo;
    let upper_margin = hi - dim_h;
    Ok(InequalityCheck {
        ok: lower_margin >= -tol && upper_margin >= -tol,
        dim_e,
        dim_h,
        beta_minus: lo,
        beta_plus: hi,
        lower_margin,
        upper_margin,
        tol,
    })
}
