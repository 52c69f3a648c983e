//! Density ratios of cloud measures against thin slabs around horizontal planes.
//!
//! For a base point `p`, a radius `r` and a slab half-width `rho`, the mass of
//! `B_E(p, r)` splits into the part within `rho` of `V(p)` and the part outside.
//! A probe evaluates `outside / denominator` over a radius grid at a panel of
//! base points. Each probe fixes its own denominator convention and records it.
//!
//! Every sample stands for a piece of the true set lying within the cloud's
//! `placement_error` of it, with vertical offset at most `vertical_placement_error`.
//! Moving a point by `(dx, dy, dt)` changes its distance to `V(p)` by at most
//! `(2 |y0| |dx| + 2 |x0| |dy| + |dt|) / sqrt(1 + 4 (x0^2 + y0^2))`, so only samples
//! that close to the slab boundary, or within `placement_error` of the sphere,
//! can be misclassified. Their mass over the denominator is the reported
//! `error_bound`.

mod examples;
mod local;
mod sandwich;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{RectFamily, Source, WeightedCloud};
use crate::error::{invalid, Result};
use crate::hgeom::{dist_to_plane, euclidean_dist, PlaneSpec, Point};

pub use examples::{
    annulus_mass, estimate_hdc, ex1_probe, ex1_probe_on, ex1_radii, ex2_probe, ex2_probe_on, ex2_window_level,
    ex3_probe, ex3_probe_on, Ex3Constants, HDC_GRID_LEN,
};
pub use local::{ex3_probe_local, fs_local_split, fs_typical_points, LocalResolution};
pub use sandwich::{sandwich_check, sandwich_sample, SandwichReport, SandwichVerdict};

/// How the slab half-width depends on the radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RhoRule {
    /// `rho = r^(1 + epsilon)`
    PowerLaw { epsilon: f64 },
    /// `rho = delta r`
    Linear { delta: f64 },
    /// `rho = M r^2`
    Quadratic {
        #[serde(rename = "M")]
        m: f64,
    },
    /// `rho = fraction r`
    Fixed { fraction: f64 },
}

impl RhoRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RhoRule::PowerLaw { epsilon } if !(epsilon > 0.0 && epsilon < 1.0) => {
                invalid(format!("epsilon must lie in (0, 1), got {epsilon}"))
            }
            RhoRule::Linear { delta } if !(delta > 0.0) || !delta.is_finite() => {
                invalid(format!("delta must be positive, got {delta}"))
            }
            RhoRule::Quadratic { m } if !(m > 1.0) || !m.is_finite() => invalid(format!("M must exceed 1, got {m}")),
            RhoRule::Fixed { fraction } if !(fraction >= 0.0) || !fraction.is_finite() => {
                invalid(format!("fraction must be nonnegative, got {fraction}"))
            }
            _ => Ok(()),
        }
    }

    pub fn rho(&self, r: f64) -> f64 {
        match *self {
            RhoRule::PowerLaw { epsilon } => r.powf(1.0 + epsilon),
            RhoRule::Linear { delta } => delta * r,
            RhoRule::Quadratic { m } => m * r * r,
            RhoRule::Fixed { fraction } => fraction * r,
        }
    }
}

/// Denominator of a density ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Denominator {
    #[serde(rename = "r^s")]
    RPowS,
    #[serde(rename = "(2r)^s")]
    TwoRPowS,
}

impl Denominator {
    pub fn eval(self, r: f64, s: f64) -> f64 {
        match self {
            Denominator::RPowS => r.powf(s),
            Denominator::TwoRPowS => (2.0 * r).powf(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub s: f64,
    /// strictly decreasing
    pub radii: Vec<f64>,
    pub rho_rule: RhoRule,
    pub denominator: Denominator,
    pub base_points: Vec<Point>,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) || !self.s.is_finite() {
            return invalid(format!("exponent s must be positive, got {}", self.s));
        }
        self.rho_rule.validate()?;
        if self.radii.is_empty() {
            return invalid("no radii given");
        }
        if self.radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return invalid("radii must be finite and positive");
        }
        if self.radii.windows(2).any(|w| !(w[0] > w[1])) {
            return invalid("radii must be strictly decreasing");
        }
        if self.base_points.is_empty() {
            return invalid("no base points given");
        }
        if let Some(p) = self.base_points.iter().find(|p| !p.is_finite()) {
            return invalid(format!("non-finite base point {p:?}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub r: f64,
    pub inside: f64,
    pub outside: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSeries {
    pub p: Point,
    pub series: Vec<SeriesEntry>,
}

impl PointSeries {
    pub fn min_ratio(&self) -> f64 {
        self.series.iter().map(|e| e.ratio).fold(f64::INFINITY, f64::min)
    }

    pub fn max_ratio(&self) -> f64 {
        self.series.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Median over radii (mean of the middle pair for even lengths).
    pub fn median_ratio(&self) -> f64 {
        let mut v: Vec<f64> = self.series.iter().map(|e| e.ratio).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            return f64::NAN;
        }
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin_r: f64,
    pub argmax_r: f64,
    /// index into `points`
    pub argmin_point: usize,
    pub argmax_point: usize,
}

impl Summary {
    /// Extremes over all points and radii; ties keep the first occurrence.
    pub fn of(points: &[PointSeries]) -> Summary {
        let mut summary = Summary {
            min_ratio: f64::INFINITY,
            max_ratio: f64::NEG_INFINITY,
            argmin_r: f64::NAN,
            argmax_r: f64::NAN,
            argmin_point: 0,
            argmax_point: 0,
        };
        for (i, ps) in points.iter().enumerate() {
            for e in &ps.series {
                if e.ratio < summary.min_ratio {
                    (summary.min_ratio, summary.argmin_r, summary.argmin_point) = (e.ratio, e.r, i);
                }
                if e.ratio > summary.max_ratio {
                    (summary.max_ratio, summary.argmax_r, summary.argmax_point) = (e.ratio, e.r, i);
                }
            }
        }
        summary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub probe: String,
    pub convention: Denominator,
    pub rho_rule: RhoRule,
    pub s: f64,
    pub points: Vec<PointSeries>,
    pub summary: Summary,
    /// largest possible change of any ratio caused by sample placement
    pub error_bound: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<Ex3Constants>,
}

impl ProbeResult {
    pub fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().flat_map(|ps| ps.series.iter().map(|e| e.ratio))
    }
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(self) -> f64 {
        self.s + self.c
    }
}

fn check_split_args(r: f64, rho: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("radius must be positive, got {r}"));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return invalid(format!("rho must be nonnegative, got {rho}"));
    }
    Ok(())
}

/// `(inside, outside)` masses of `B_E(p, r)` relative to `V(p)(rho)`, by a full scan.
pub fn mass_split(cloud: &WeightedCloud, p: Point, r: f64, rho: f64) -> Result<(f64, f64)> {
    check_split_args(r, rho)?;
    let plane = PlaneSpec::through(p);
    let (mut inside, mut outside) = (Sum::default(), Sum::default());
    for (q, w) in cloud.iter() {
        if euclidean_dist(q, p) <= r {
            if dist_to_plane(q, &plane) <= rho {
                inside.add(w);
            } else {
                outside.add(w);
            }
        }
    }
    Ok((inside.value(), outside.value()))
}

/// `outside / (2r)^s`.
pub fn density_ratio(cloud: &WeightedCloud, p: Point, r: f64, rho: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return invalid(format!("exponent s must be positive, got {s}"));
    }
    let (_, outside) = mass_split(cloud, p, r, rho)?;
    Ok(outside / Denominator::TwoRPowS.eval(r, s))
}

/// Masses of one ball split, plus the mass that placement error could move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub inside: f64,
    pub outside: f64,
    pub uncertain: f64,
}

/// Cloud copy sorted by `x` for ball queries.
pub struct ProbeIndex {
    points: Vec<Point>,
    weights: Vec<f64>,
    eta: f64,
    horizontal: f64,
    vertical: f64,
    /// the approximated set lies in `y = 0`, so placement never moves `y`
    planar: bool,
}

impl ProbeIndex {
    pub fn new(cloud: &WeightedCloud) -> Self {
        let mut order: Vec<usize> = (0..cloud.len()).collect();
        order.sort_by(|&i, &j| cloud.points[i].x.total_cmp(&cloud.points[j].x).then(i.cmp(&j)));
        ProbeIndex {
            points: order.iter().map(|&i| cloud.points[i]).collect(),
            weights: order.iter().map(|&i| cloud.weights[i]).collect(),
            eta: cloud.placement_error,
            horizontal: (cloud.placement_error.powi(2) - cloud.vertical_placement_error.powi(2)).max(0.0).sqrt(),
            vertical: cloud.vertical_placement_error,
            planar: matches!(cloud.source, Source::Ex1 { .. } | Source::Ex2 { .. } | Source::Xseg { .. } | Source::Tseg { .. }),
        }
    }

    pub fn split(&self, p: Point, r: f64, rho: f64) -> Split {
        let eta = self.eta;
        let reach = r + eta;
        let lo = self.points.partition_point(|q| q.x < p.x - reach);
        let hi = self.points.partition_point(|q| q.x <= p.x + reach);
        let plane = PlaneSpec::through(p);
        let arm = if self.planar { p.y.abs() } else { p.x.hypot(p.y) };
        let eta_slab = (2.0 * arm * self.horizontal + self.vertical) / plane.normal_len();
        let (mut inside, mut outside, mut uncertain) = (Sum::default(), Sum::default(), Sum::default());
        for (q, &w) in self.points[lo..hi].iter().zip(&self.weights[lo..hi]) {
            let d = euclidean_dist(*q, p);
            if d > reach {
                continue;
            }
            let h = dist_to_plane(*q, &plane);
            if d <= r {
                if h <= rho {
                    inside.add(w);
                } else {
                    outside.add(w);
                }
            }
            if (d - r).abs() <= eta || (h - rho).abs() <= eta_slab {
                uncertain.add(w);
            }
        }
        Split { inside: inside.value(), outside: outside.value(), uncertain: uncertain.value() }
    }
}

/// Evaluates the configured ratio at every base point and radius.
pub fn run_probe(cloud: &WeightedCloud, probe: &str, cfg: &ProbeConfig) -> Result<ProbeResult> {
    cfg.validate()?;
    if cloud.is_empty() {
        return invalid("cannot probe an empty cloud");
    }
    let index = ProbeIndex::new(cloud);
    run_probe_indexed(&index, probe, cfg)
}

fn run_probe_indexed(index: &ProbeIndex, probe: &str, cfg: &ProbeConfig) -> Result<ProbeResult> {
    let rows: Vec<(PointSeries, f64)> = cfg
        .base_points
        .par_iter()
        .map(|&p| {
            let mut err = 0.0f64;
            let series = cfg
                .radii
                .iter()
                .map(|&r| {
                    let split = index.split(p, r, cfg.rho_rule.rho(r));
                    let denom = cfg.denominator.eval(r, cfg.s);
                    err = err.max(split.uncertain / denom);
                    SeriesEntry { r, inside: split.inside, outside: split.outside, ratio: split.outside / denom }
                })
                .collect();
            (PointSeries { p, series }, err)
        })
        .collect();
    let error_bound = rows.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let points: Vec<PointSeries> = rows.into_iter().map(|(ps, _)| ps).collect();
    let summary = Summary::of(&points);
    Ok(ProbeResult {
        probe: probe.to_string(),
        convention: cfg.denominator,
        rho_rule: cfg.rho_rule,
        s: cfg.s,
        points,
        summary,
        error_bound,
        seed: cfg.seed,
        constants: None,
    })
}

/// Theorem 3.1 style scan: `rho = r^(1+epsilon)`, denominator `r^s`. Read the minimum.
pub fn thm1_scan(cloud: &WeightedCloud, points: &[Point], epsilon: f64, radii: &[f64], s: f64) -> Result<ProbeResult> {
    let cfg = ProbeConfig {
        s,
        radii: radii.to_vec(),
        rho_rule: RhoRule::PowerLaw { epsilon },
        denominator: Denominator::RPowS,
        base_points: points.to_vec(),
        seed: 0,
    };
    run_probe(cloud, "thm1", &cfg)
}

/// Theorem 3.2/3.3 style scan: `rho = delta r`, denominator `(2r)^s`. Read the maximum.
pub fn thm2_scan(cloud: &WeightedCloud, points: &[Point], delta: f64, radii: &[f64], s: f64) -> Result<ProbeResult> {
    let cfg = ProbeConfig {
        s,
        radii: radii.to_vec(),
        rho_rule: RhoRule::Linear { delta },
        denominator: Denominator::TwoRPowS,
        base_points: points.to_vec(),
        seed: 0,
    };
    run_probe(cloud, "thm2", &cfg)
}

/// `n` cloud points at golden-ratio storage positions, kept in storage order.
///
/// Product clouds repeat an inner factor with a fixed period, and evenly spaced
/// positions would all land on the same inner index.
pub fn cloud_panel(cloud: &WeightedCloud, n: usize) -> Vec<Point> {
    let len = cloud.len();
    if n >= len {
        return cloud.points.clone();
    }
    let step = 0.5 * (5f64.sqrt() - 1.0);
    let mut idx: Vec<usize> =
        (0..n).map(|j| (((0.5 + j as f64 * step).fract() * len as f64) as usize).min(len - 1)).collect();
    idx.sort_unstable();
    idx.dedup();
    idx.into_iter().map(|i| cloud.points[i]).collect()
}

/// Centres of `n` evenly spaced rectangles of the family, in the plane `y = 0`.
pub fn family_panel(family: &RectFamily, n: usize) -> Vec<Point> {
    let len = family.len();
    let n = n.min(len);
    (0..n)
        .map(|j| {
            let (x, t) = family.rects[(2 * j + 1) * len / (2 * n)].center();
            Point::new(x, 0.0, t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{segment_cloud, Axis};
    use proptest::prelude::*;

    fn taxis() -> WeightedCloud {
        segment_cloud(Axis::T, -1.0, 1.0, 200_000).unwrap()
    }

    #[test]
    fn t_axis_split() {
        let c = taxis();
        let (i, o) = mass_split(&c, Point::ORIGIN, 0.1, 0.025).unwrap();
        assert!((i - 0.05).abs() < 1e-9, "{i}");
        assert!((o - 0.15).abs() < 1e-9, "{o}");
        let ratio = density_ratio(&c, Point::ORIGIN, 0.1, 0.025, 1.0).unwrap();
        assert!((ratio - 0.75).abs() < 1e-8, "{ratio}");
    }

    #[test]
    fn x_axis_is_flat() {
        let c = segment_cloud(Axis::X, -1.0, 1.0, 5000).unwrap();
        for r in [0.01, 0.3, 2.0] {
            for rho in [0.0, 1e-6, 0.5] {
                assert_eq!(mass_split(&c, Point::ORIGIN, r, rho).unwrap().1, 0.0);
            }
        }
        let radii = [0.5, 0.1, 0.02];
        let pts = [Point::ORIGIN, Point::new(0.3, 0.0, 0.0)];
        let rules = [
            RhoRule::PowerLaw { epsilon: 0.5 },
            RhoRule::Linear { delta: 0.25 },
            RhoRule::Quadratic { m: 2.0 },
            RhoRule::Fixed { fraction: 0.125 },
        ];
        for rule in rules {
            let cfg = ProbeConfig {
                s: 1.0,
                radii: radii.to_vec(),
                rho_rule: rule,
                denominator: Denominator::TwoRPowS,
                base_points: pts.to_vec(),
                seed: 0,
            };
            let res = run_probe(&c, "x", &cfg).unwrap();
            assert!(res.ratios().all(|q| q == 0.0), "{rule:?}");
        }
    }

    #[test]
    fn wide_slab_swallows_ball() {
        let c = taxis();
        let (_, o) = mass_split(&c, Point::new(0.0, 0.0, 0.3), 0.2, 0.2).unwrap();
        assert_eq!(o, 0.0);
    }

    #[test]
    fn thm_scans_on_t_axis() {
        let c = taxis();
        let radii: Vec<f64> = (0..9).map(|j| 0.5 * 0.7f64.powi(j)).collect();
        let r2 = thm2_scan(&c, &[Point::ORIGIN], 0.25, &radii, 1.0).unwrap();
        assert!((r2.summary.max_ratio - 0.75).abs() < 1e-3, "{}", r2.summary.max_ratio);
        assert_eq!(r2.convention, Denominator::TwoRPowS);
        let r1 = thm1_scan(&c, &[Point::ORIGIN], 0.5, &radii, 1.0).unwrap();
        for e in &r1.points[0].series {
            let want = 2.0 * (1.0 - e.r.sqrt());
            assert!((e.ratio - want).abs() < 1e-3, "r={} got {} want {want}", e.r, e.ratio);
        }
    }

    #[test]
    fn config_validation() {
        let c = taxis();
        assert!(thm1_scan(&c, &[Point::ORIGIN], 1.0, &[0.1], 1.0).is_err());
        assert!(thm2_scan(&c, &[Point::ORIGIN], 0.0, &[0.1], 1.0).is_err());
        assert!(thm2_scan(&c, &[Point::ORIGIN], 0.1, &[0.1, 0.2], 1.0).is_err());
        assert!(thm2_scan(&c, &[], 0.1, &[0.1], 1.0).is_err());
        assert!(mass_split(&c, Point::ORIGIN, 0.0, 0.1).is_err());
        assert!(mass_split(&c, Point::ORIGIN, 0.1, -0.1).is_err());
    }

    #[test]
    fn result_json_keys() {
        let c = taxis();
        let res = thm2_scan(&c, &[Point::ORIGIN], 0.25, &[0.1], 1.0).unwrap();
        let v = serde_json::to_value(&res).unwrap();
        for key in ["probe", "convention", "rho_rule", "s", "points", "summary", "error_bound", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["convention"], "(2r)^s");
        let entry = &v["points"][0]["series"][0];
        for key in ["r", "inside", "outside", "ratio"] {
            assert!(entry.get(key).is_some(), "{key}");
        }
        let back: ProbeResult = serde_json::from_value(v).unwrap();
        assert_eq!(back, res);
    }

    #[test]
    fn panels_pick_evenly() {
        let c = segment_cloud(Axis::X, 0.0, 1.0, 100).unwrap();
        let p = cloud_panel(&c, 4);
        assert_eq!(p.len(), 4);
        assert!(p.windows(2).all(|w| w[0].x < w[1].x));
        assert_eq!(cloud_panel(&c, 1000).len(), 100);
    }

    fn random_cloud(seed: u64, n: usize) -> WeightedCloud {
        use rand::Rng;
        let mut g = crate::rng::stream(seed, 0);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)))
            .collect();
        let ws: Vec<f64> = (0..n).map(|_| g.random_range(0.0..1.0)).collect();
        WeightedCloud::new(pts, ws, 0, Source::Other { label: "random".into() }).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partition_and_index_agree(seed in 0u64..1000, px in -1.0f64..1.0, py in -1.0f64..1.0,
                                     pt in -1.0f64..1.0, r in 0.01f64..1.5, rho in 0.0f64..0.5) {
            let c = random_cloud(seed, 400);
            let p = Point::new(px, py, pt);
            let (i, o) = mass_split(&c, p, r, rho).unwrap();
            prop_assert!(i >= 0.0 && o >= 0.0);
            let ball: f64 = c.iter().filter(|(q, _)| euclidean_dist(*q, p) <= r).map(|(_, w)| w).sum();
            prop_assert!((i + o - ball).abs() <= 1e-12 * c.total_mass);
            let s = ProbeIndex::new(&c).split(p, r, rho);
            prop_assert!((s.inside - i).abs() <= 1e-12 * c.total_mass);
            prop_assert!((s.outside - o).abs() <= 1e-12 * c.total_mass);
            prop_assert_eq!(s.uncertain, 0.0);
        }

        #[test]
        fn outside_mass_nonincreasing_in_rho(seed in 0u64..1000, r in 0.05f64..1.5,
                                            a in 0.0f64..0.5, b in 0.0f64..0.5) {
            let c = random_cloud(seed, 400);
            let p = Point::new(0.1, -0.2, 0.05);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let o_lo = mass_split(&c, p, r, lo).unwrap().1;
            let o_hi = mass_split(&c, p, r, hi).unwrap().1;
            prop_assert!(o_hi <= o_lo + 1e-15);
        }
    }
}
