//! Monte Carlo check of the lens-shape inclusions
//! `V(p)(r^2 / sqrt(2(1+4R^2))) ∩ B_E(p, r/2) ⊂ B_H(p, r) ⊂ V(p)(r^2) ∩ B_E(p, r)`.
//!
//! Each sample draws a base point `p` with `x0^2 + y0^2 <= R^2` and two candidates.
//! The first is aimed at the inner set: a point of `B_E(p, r/2)` projected onto
//! `V(p)` and pushed off it by at most the inner slab width. The second is aimed at
//! the Heisenberg ball: `p * delta_r(h)` with `h` uniform in `[-1, 1]^3`, which
//! covers `B_H(p, r)`. Candidates outside the set under test are not counted.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hgeom::{dilate_unchecked, dist_to_plane, euclidean_dist, group_mul, heisenberg_dist, PlaneSpec, Point};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub samples: usize,
    pub inner_violations: usize,
    pub outer_violations: usize,
    #[serde(rename = "R")]
    pub r_max: f64,
    pub seed: u64,
    pub r_values: Vec<f64>,
    /// inner-set candidates actually tested
    pub inner_members: usize,
    /// Heisenberg-ball candidates actually tested
    pub outer_members: usize,
    /// Heisenberg-ball points outside `V(p)(r^2)`
    pub outer_plane_violations: usize,
    /// Heisenberg-ball points outside `B_E(p, r)`
    pub outer_ball_violations: usize,
    /// max of `d_E(p, q) / r` over Heisenberg-ball points
    pub max_euclid_ratio: f64,
    /// max of `dist(q, V(p)) / r^2` over Heisenberg-ball points
    pub max_plane_ratio: f64,
}

/// Membership of one candidate in the three sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SandwichVerdict {
    pub inner: bool,
    pub heisenberg_ball: bool,
    pub outer_plane: bool,
    pub outer_ball: bool,
}

impl SandwichVerdict {
    pub fn inner_violation(&self) -> bool {
        self.inner && !self.heisenberg_ball
    }

    pub fn outer_violation(&self) -> bool {
        self.heisenberg_ball && !(self.outer_plane && self.outer_ball)
    }
}

fn inner_width(r: f64, r_max: f64) -> f64 {
    r * r / (2.0 * (1.0 + 4.0 * r_max * r_max)).sqrt()
}

/// Classifies `q` against the three sets at base `p`, radius `r`, bound `R`.
pub fn sandwich_check(p: Point, q: Point, r: f64, r_max: f64) -> SandwichVerdict {
    let plane = PlaneSpec::through(p);
    let h = dist_to_plane(q, &plane);
    let de = euclidean_dist(p, q);
    SandwichVerdict {
        inner: h <= inner_width(r, r_max) && de <= 0.5 * r,
        heisenberg_ball: heisenberg_dist(p, q) <= r,
        outer_plane: h <= r * r,
        outer_ball: de <= r,
    }
}

fn uniform_ball<G: Rng>(g: &mut G, radius: f64) -> [f64; 3] {
    loop {
        let v = [g.random_range(-1.0..=1.0), g.random_range(-1.0..=1.0), g.random_range(-1.0..=1.0)];
        if v[0] * v[0] + v[1] * v[1] + v[2] * v[2] <= 1.0 {
            return v.map(|c| c * radius);
        }
    }
}

/// A point of `B_E(p, r/2)` moved onto `V(p)`, then shifted along the normal.
fn inner_candidate<G: Rng>(g: &mut G, p: Point, r: f64, width: f64) -> Point {
    let e = uniform_ball(g, 0.5 * r);
    // the residual of p + e is grad . e with grad = (-2 y0, 2 x0, -1)
    let grad = [-2.0 * p.y, 2.0 * p.x, -1.0];
    let n2 = grad.iter().map(|c| c * c).sum::<f64>();
    let res = grad[0] * e[0] + grad[1] * e[1] + grad[2] * e[2];
    let shift = g.random_range(-width..=width) / n2.sqrt();
    let k = shift - res / n2;
    Point::new(p.x + e[0] + k * grad[0], p.y + e[1] + k * grad[1], p.t + e[2] + k * grad[2])
}

fn ball_candidate<G: Rng>(g: &mut G, p: Point, r: f64) -> Point {
    let h = Point::new(g.random_range(-1.0..=1.0), g.random_range(-1.0..=1.0), g.random_range(-1.0..=1.0));
    group_mul(p, dilate_unchecked(h, r))
}

#[derive(Default, Clone, Copy)]
struct Tally {
    inner_members: usize,
    inner_violations: usize,
    outer_members: usize,
    outer_violations: usize,
    plane: usize,
    ball: usize,
    euclid_ratio: f64,
    plane_ratio: f64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            inner_members: self.inner_members + o.inner_members,
            inner_violations: self.inner_violations + o.inner_violations,
            outer_members: self.outer_members + o.outer_members,
            outer_violations: self.outer_violations + o.outer_violations,
            plane: self.plane + o.plane,
            ball: self.ball + o.ball,
            euclid_ratio: self.euclid_ratio.max(o.euclid_ratio),
            plane_ratio: self.plane_ratio.max(o.plane_ratio),
        }
    }
}

/// Sample `i` uses radius `r_values[i % len]` and its own random stream.
pub fn sandwich_sample(r_max: f64, r_values: &[f64], samples: usize, seed: u64) -> Result<SandwichReport> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return invalid(format!("R must be positive, got {r_max}"));
    }
    if r_values.is_empty() || r_values.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return invalid("radii must lie in (0, 1]");
    }
    if samples == 0 {
        return invalid("need at least one sample");
    }
    let tallies: Vec<Tally> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut g = rng::stream(seed, i);
            let r = r_values[i as usize % r_values.len()];
            let (x0, y0) = loop {
                let (a, b) = (g.random_range(-r_max..=r_max), g.random_range(-r_max..=r_max));
                if a * a + b * b <= r_max * r_max {
                    break (a, b);
                }
            };
            let p = Point::new(x0, y0, g.random_range(-r_max..=r_max));
            let mut t = Tally::default();
            let q = inner_candidate(&mut g, p, r, inner_width(r, r_max));
            let v = sandwich_check(p, q, r, r_max);
            if v.inner {
                t.inner_members = 1;
                t.inner_violations = v.inner_violation() as usize;
            }
            let q = ball_candidate(&mut g, p, r);
            let v = sandwich_check(p, q, r, r_max);
            if v.heisenberg_ball {
                t.outer_members = 1;
                t.outer_violations = v.outer_violation() as usize;
                t.plane = !v.outer_plane as usize;
                t.ball = !v.outer_ball as usize;
                t.euclid_ratio = euclidean_dist(p, q) / r;
                t.plane_ratio = dist_to_plane(q, &PlaneSpec::through(p)) / (r * r);
            }
            t
        })
        .collect();
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);
    Ok(SandwichReport {
        samples,
        inner_violations: t.inner_violations,
        outer_violations: t.outer_violations,
        r_max,
        seed,
        r_values: r_values.to_vec(),
        inner_members: t.inner_members,
        outer_members: t.outer_members,
        outer_plane_violations: t.plane,
        outer_ball_violations: t.ball,
        max_euclid_ratio: t.euclid_ratio,
        max_plane_ratio: t.plane_ratio,
    })
}
