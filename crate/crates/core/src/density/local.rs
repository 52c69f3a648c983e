//! Multiscale evaluation on `F_s = Q_H * C_d` without a global cloud.
//!
//! A word `w` of the Heisenberg-square IFS acts as `F_w(q) = g_w * delta_(s_w)(q)`,
//! an affine map of R^3, so the image of the box `[0,1]^2 x [-T, T]` containing
//! `Q_H` is contained in an explicit box. For each ball `B_E(p, r)` the pieces of
//! `Q_H` and `C_d` that can meet it are enumerated at a depth tied to `r`, and
//! each product piece is represented by its centre with its own placement bound.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::examples::estimate_hdc;
use super::{Denominator, PointSeries, ProbeResult, RhoRule, SeriesEntry, Split, Summary, Ex3Constants};
use crate::constructions::{cantor_cloud, CantorParams, HSQUARE_T_BOUND, MAX_ITEMS, SQUARE_CORNERS};
use crate::error::{invalid, Error, Result};
use crate::hgeom::{dilate_unchecked, dist_to_plane, euclidean_dist, group_mul, PlaneSpec, Point};
use crate::rng;

/// Piece sizes relative to the radius, with depth floors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalResolution {
    /// `Q_H` pieces have side at most `r / qh_cells_per_radius`
    pub qh_cells_per_radius: f64,
    /// `C_d` pieces have length at most `r / cantor_cells_per_radius`
    pub cantor_cells_per_radius: f64,
    pub min_qh_depth: u32,
    pub min_cantor_depth: u32,
}

impl Default for LocalResolution {
    fn default() -> Self {
        LocalResolution { qh_cells_per_radius: 128.0, cantor_cells_per_radius: 256.0, min_qh_depth: 6, min_cantor_depth: 6 }
    }
}

impl LocalResolution {
    fn validate(&self) -> Result<()> {
        if !(self.qh_cells_per_radius >= 1.0) || !(self.cantor_cells_per_radius >= 1.0) {
            return invalid("cells per radius must be at least 1");
        }
        Ok(())
    }

    fn qh_depth(&self, r: f64) -> u32 {
        ((self.qh_cells_per_radius / r).log2().ceil().max(0.0) as u32).max(self.min_qh_depth)
    }

    fn cantor_depth(&self, r: f64, ratio: f64) -> u32 {
        (((r / self.cantor_cells_per_radius).ln() / ratio.ln()).ceil().max(0.0) as u32).max(self.min_cantor_depth)
    }
}

/// `F_w = g * delta_s`.
#[derive(Clone, Copy)]
struct Word {
    g: Point,
    s: f64,
}

impl Word {
    const ID: Word = Word { g: Point::ORIGIN, s: 1.0 };

    fn child(self, j: usize) -> Word {
        let (vx, vy) = SQUARE_CORNERS[j];
        Word { g: group_mul(self.g, dilate_unchecked(Point::new(0.5 * vx, 0.5 * vy, 0.0), self.s)), s: 0.5 * self.s }
    }

    /// Box containing `F_w([0,1]^2 x [-T, T])`: `(x, y, t)` ranges.
    fn bounds(self) -> [(f64, f64); 3] {
        let Word { g, s } = self;
        // g * delta_s(k) has t = g.t + s^2 k.t + 2 s (g.x k.y - k.x g.y), extreme at the corners of [0,1]^2
        let twist = [0.0, g.x, -g.y, g.x - g.y];
        let lo = twist.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = twist.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tt = s * s * HSQUARE_T_BOUND;
        [(g.x, g.x + s), (g.y, g.y + s), (g.t - tt + 2.0 * s * lo, g.t + tt + 2.0 * s * hi)]
    }
}

fn box_dist(p: Point, b: &[(f64, f64); 3]) -> f64 {
    let gap = |v: f64, (lo, hi): (f64, f64)| (lo - v).max(v - hi).max(0.0);
    let (dx, dy, dt) = (gap(p.x, b[0]), gap(p.y, b[1]), gap(p.t, b[2]));
    (dx * dx + dy * dy + dt * dt).sqrt()
}

/// Depth-`depth` words whose piece, shifted up by at most 1, can come within `reach` of `p`.
fn qh_words(p: Point, reach: f64, depth: u32) -> Vec<Word> {
    let mut out = Vec::new();
    let mut stack = vec![(Word::ID, 0u32)];
    while let Some((w, k)) = stack.pop() {
        let mut b = w.bounds();
        b[2].1 += 1.0;
        if box_dist(p, &b) > reach {
            continue;
        }
        if k == depth {
            out.push(w);
        } else {
            stack.extend((0..4).rev().map(|j| (w.child(j), k + 1)));
        }
    }
    out
}

/// Left endpoints of the depth-`depth` intervals of `C_d` meeting `[lo, hi]`, ascending.
fn cantor_endpoints(ratio: f64, depth: u32, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut stack = vec![(0.0f64, 1.0f64, 0u32)];
    while let Some((a, len, k)) = stack.pop() {
        if a > hi || a + len < lo {
            continue;
        }
        if k == depth {
            out.push(a);
        } else {
            let l = len * ratio;
            stack.push((a + len - l, l, k + 1));
            stack.push((a, l, k + 1));
        }
    }
    out
}

/// Mass split of `B_E(p, r)` for the product measure on `F_s`.
pub fn fs_local_split(d: f64, p: Point, r: f64, rho: f64, res: &LocalResolution) -> Result<Split> {
    let cp = CantorParams::new(d)?;
    res.validate()?;
    let m = res.qh_depth(r);
    let n = res.cantor_depth(r, cp.ratio);
    let s = 0.5f64.powi(m as i32);
    let len = cp.ratio.powi(n as i32);
    // worst placement over the unit square, used only to widen the search
    let slack = (0.5 * s * s + (s * s * HSQUARE_T_BOUND + 2.0 * s + 0.5 * len).powi(2)).sqrt();
    let reach = r + slack;
    let words = qh_words(p, reach, m);
    if words.is_empty() {
        return Ok(Split { inside: 0.0, outside: 0.0, uncertain: 0.0 });
    }
    let centers: Vec<Point> = words.iter().map(|w| group_mul(w.g, Point::new(0.5 * s, 0.5 * s, 0.0))).collect();
    let tmin = centers.iter().map(|c| c.t).fold(f64::INFINITY, f64::min);
    let tmax = centers.iter().map(|c| c.t).fold(f64::NEG_INFINITY, f64::max);
    let cantor: Vec<f64> = cantor_endpoints(cp.ratio, n, p.t - reach - tmax - len, p.t + reach - tmin)
        .into_iter()
        .map(|a| a + 0.5 * len)
        .collect();
    let count = words.len() as u128 * cantor.len() as u128;
    if count > MAX_ITEMS as u128 * 10 {
        return Err(Error::ResourceLimit(format!("local F_s ball at r = {r} needs {count} pieces")));
    }
    let w = 0.25f64.powi(m as i32) * 0.5f64.powi(n as i32);
    let plane = PlaneSpec::through(p);
    let glen = plane.normal_len();
    let (mut inside, mut outside, mut uncertain) = (0.0, 0.0, 0.0);
    for (word, c) in words.iter().zip(&centers) {
        let g = word.g;
        let vertical = s * s * HSQUARE_T_BOUND + s * (g.x.abs() + g.y.abs()) + 0.5 * len;
        let eta = (0.5 * s * s + vertical * vertical).sqrt();
        let eta_slab = (s * ((g.y - p.y).abs() + (p.x - g.x).abs()) + s * s * HSQUARE_T_BOUND + 0.5 * len) / glen;
        let lo = cantor.partition_point(|&t| c.t + t < p.t - r - eta);
        for &ct in &cantor[lo..] {
            let q = Point::new(c.x, c.y, c.t + ct);
            if q.t > p.t + r + eta {
                break;
            }
            let de = euclidean_dist(q, p);
            if de > r + eta {
                continue;
            }
            let h = dist_to_plane(q, &plane);
            if de <= r {
                if h <= rho {
                    inside += w;
                } else {
                    outside += w;
                }
            }
            if (de - r).abs() <= eta || (h - rho).abs() <= eta_slab {
                uncertain += w;
            }
        }
    }
    Ok(Split { inside, outside, uncertain })
}

/// `n` points of `F_s` drawn from its natural measure by random addresses of length `depth`.
pub fn fs_typical_points(d: f64, n: usize, seed: u64, depth: u32) -> Result<Vec<Point>> {
    let cp = CantorParams::new(d)?;
    Ok((0..n as u64)
        .map(|i| {
            let mut g = rng::stream(seed, i);
            let mut w = Word::ID;
            for _ in 0..depth {
                w = w.child(g.random_range(0..4));
            }
            let (mut t, mut len) = (0.0, 1.0);
            for _ in 0..depth {
                let l = len * cp.ratio;
                if g.random_bool(0.5) {
                    t += len - l;
                }
                len = l;
            }
            Point::new(w.g.x, w.g.y, w.g.t + t)
        })
        .collect())
}

/// Example 3 evaluated with per-ball local refinement.
///
/// `(c0, cd)` come from a Cantor cloud fine enough for the smallest radius.
pub fn ex3_probe_local(d: f64, radii: &[f64], points: &[Point], res: &LocalResolution, seed: u64) -> Result<ProbeResult> {
    let cp = CantorParams::new(d)?;
    res.validate()?;
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) || radii.windows(2).any(|w| !(w[0] > w[1])) {
        return invalid("radii must be positive and strictly decreasing");
    }
    if points.is_empty() {
        return invalid("no base points given");
    }
    let r_min = radii[radii.len() - 1];
    let cantor = cantor_cloud(d, res.cantor_depth(r_min, cp.ratio))?;
    let (c0, cd) = estimate_hdc(&cantor, d, radii)?;
    let delta_s = c0 / 6.0;
    let rule = RhoRule::Fixed { fraction: delta_s };
    let s = 2.0 + d;
    let rows: Vec<Result<(PointSeries, f64)>> = points
        .par_iter()
        .map(|&p| {
            let mut err = 0.0f64;
            let mut series = Vec::with_capacity(radii.len());
            for &r in radii {
                let split = fs_local_split(d, p, r, rule.rho(r), res)?;
                let denom = Denominator::RPowS.eval(r, s);
                err = err.max(split.uncertain / denom);
                series.push(SeriesEntry { r, inside: split.inside, outside: split.outside, ratio: split.outside / denom });
            }
            Ok((PointSeries { p, series }, err))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let error_bound = rows.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let points: Vec<PointSeries> = rows.into_iter().map(|(ps, _)| ps).collect();
    Ok(ProbeResult {
        probe: "ex3".into(),
        convention: Denominator::RPowS,
        rho_rule: rule,
        s,
        summary: Summary::of(&points),
        points,
        error_bound,
        seed,
        constants: Some(Ex3Constants { c0, cd, delta_s }),
    })
}
