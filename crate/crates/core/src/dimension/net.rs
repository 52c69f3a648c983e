//! Greedy delta-nets.
//!
//! Points are scanned in stored order and a point becomes a centre iff it is
//! farther than `delta` from every existing centre. The centres are then
//! `delta`-separated and `delta`-cover the cloud, so their number sits between
//! the covering and packing numbers at comparable scales.
//!
//! Candidate centres are looked up in a hash grid. For the Euclidean metric the
//! cells are cubes of side `delta`. For `d_H` the horizontal sides are `delta`
//! and the vertical side is `delta^2 + 2 S delta`, where `S` bounds `|x| + |y|`
//! over the cloud: `d_H(q, c) <= delta` forces `|dx|, |dy| <= delta` and
//! `|dt| <= delta^2 + 2 delta (|q.x| + |q.y|)`. Either way every centre within
//! `delta` lies in the 27 cells around the query, and the exact distance
//! decides.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::WeightedCloud;
use crate::error::{invalid, Result};
use crate::hgeom::{dist, MetricKind, Point};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetCount {
    pub delta: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    pub delta: f64,
    pub metric: MetricKind,
    /// indices into the cloud, in the order they were accepted
    pub centers: Vec<usize>,
}

impl Net {
    pub fn count(&self) -> NetCount {
        NetCount { delta: self.delta, count: self.centers.len() }
    }
}

type Cell = (i64, i64, i64);

struct CenterGrid {
    inv: [f64; 3],
    cells: HashMap<Cell, Vec<u32>>,
}

impl CenterGrid {
    fn new(points: &[Point], delta: f64, metric: MetricKind) -> Self {
        let vertical = match metric {
            MetricKind::Euclidean => delta,
            MetricKind::Heisenberg => {
                let s = points.iter().map(|p| p.x.abs() + p.y.abs()).fold(0.0, f64::max);
                delta * delta + 2.0 * s * delta
            }
        };
        CenterGrid { inv: [1.0 / delta, 1.0 / delta, 1.0 / vertical], cells: HashMap::new() }
    }

    #[inline]
    fn cell(&self, p: Point) -> Cell {
        (
            (p.x * self.inv[0]).floor() as i64,
            (p.y * self.inv[1]).floor() as i64,
            (p.t * self.inv[2]).floor() as i64,
        )
    }
}

/// Greedy `delta`-net of the cloud support under metric `m`.
pub fn greedy_net(cloud: &WeightedCloud, delta: f64, m: MetricKind) -> Result<Net> {
    greedy_net_points(&cloud.points, delta, m)
}

pub fn greedy_net_points(points: &[Point], delta: f64, m: MetricKind) -> Result<Net> {
    if points.is_empty() {
        return invalid("cannot build a net of an empty cloud");
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return invalid(format!("net radius must be positive, got {delta}"));
    }
    let mut grid = CenterGrid::new(points, delta, m);
    let mut centers = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        let (cx, cy, ct) = grid.cell(p);
        let mut covered = false;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dt in -1..=1 {
                    if let Some(list) = grid.cells.get(&(cx + dx, cy + dy, ct + dt)) {
                        if list.iter().any(|&j| dist(p, points[j as usize], m) <= delta) {
                            covered = true;
                            break 'search;
                        }
                    }
                }
            }
        }
        if !covered {
            grid.cells.entry((cx, cy, ct)).or_default().push(i as u32);
            centers.push(i);
        }
    }
    Ok(Net { delta, metric: m, centers })
}

/// Net counts for strictly decreasing `deltas`; scales are evaluated concurrently.
pub fn net_counts(cloud: &WeightedCloud, deltas: &[f64], m: MetricKind) -> Result<Vec<NetCount>> {
    if deltas.is_empty() {
        return invalid("no scales given");
    }
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return invalid("scales must be strictly positive");
    }
    if deltas.windows(2).any(|w| !(w[0] > w[1])) {
        return invalid("scales must be strictly decreasing");
    }
    deltas.par_iter().map(|&d| greedy_net(cloud, d, m).map(|n| n.count())).collect()
}

/// `n` log-uniform scales from `max` down to `min`, both included.
pub fn log_scales(max: f64, min: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min) || !max.is_finite() {
        return invalid(format!("need 0 < delta_min < delta_max, got [{min}, {max}]"));
    }
    if n < 2 {
        return invalid("need at least two scales");
    }
    let (lo, hi) = (min.ln(), max.ln());
    Ok((0..n).map(|i| (hi + (lo - hi) * i as f64 / (n - 1) as f64).exp()).collect())
}

/// Default scale count: eight per decade, endpoints included.
pub fn default_scale_count(max: f64, min: f64) -> usize {
    ((max / min).log10() * 8.0).round().max(1.0) as usize + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{segment_cloud, Axis, Source};

    fn cloud(points: Vec<Point>) -> WeightedCloud {
        let n = points.len();
        WeightedCloud::new(points, vec![1.0 / n as f64; n], 0, Source::Other { label: "test".into() }).unwrap()
    }

    /// Plain quadratic greedy scan.
    fn brute(points: &[Point], delta: f64, m: MetricKind) -> Vec<usize> {
        let mut centers: Vec<usize> = Vec::new();
        for (i, &p) in points.iter().enumerate() {
            if centers.iter().all(|&j| dist(p, points[j], m) > delta) {
                centers.push(i);
            }
        }
        centers
    }

    #[test]
    fn trivial_nets() {
        let one = cloud(vec![Point::new(0.3, 0.1, 0.2)]);
        assert_eq!(greedy_net(&one, 0.01, MetricKind::Heisenberg).unwrap().centers, vec![0]);
        let two = cloud(vec![Point::ORIGIN, Point::new(1.0, 0.0, 0.0)]);
        assert_eq!(greedy_net(&two, 0.5, MetricKind::Euclidean).unwrap().centers.len(), 2);
        assert_eq!(greedy_net(&two, 2.0, MetricKind::Euclidean).unwrap().centers.len(), 1);
    }

    #[test]
    fn empty_cloud_and_bad_delta() {
        assert!(greedy_net_points(&[], 0.1, MetricKind::Euclidean).is_err());
        let one = cloud(vec![Point::ORIGIN]);
        assert!(greedy_net(&one, 0.0, MetricKind::Euclidean).is_err());
        assert!(net_counts(&one, &[0.1, 0.2], MetricKind::Euclidean).is_err());
        assert!(net_counts(&one, &[0.2, -0.1], MetricKind::Euclidean).is_err());
    }

    #[test]
    fn unit_segment_count() {
        let seg = segment_cloud(Axis::X, 0.0, 1.0, 10_000).unwrap();
        let n = greedy_net(&seg, 0.1, MetricKind::Euclidean).unwrap().centers.len();
        assert!((10..=21).contains(&n), "{n}");
    }

    #[test]
    fn segment_counts_track_inverse_scale() {
        let seg = segment_cloud(Axis::X, 0.0, 1.0, 20_000).unwrap();
        let deltas: Vec<f64> = (2..=8).map(|j| 2f64.powi(-j)).collect();
        let counts = net_counts(&seg, &deltas, MetricKind::Euclidean).unwrap();
        for (j, c) in (2..=8).zip(&counts) {
            let want = 2f64.powi(j);
            let ratio = c.count as f64 / want;
            assert!((1.0 / 2.2..=2.2).contains(&ratio), "j={j} count={}", c.count);
        }
    }

    #[test]
    fn t_axis_needs_inverse_square_centres() {
        let seg = segment_cloud(Axis::T, 0.0, 1.0, 50_000).unwrap();
        for delta in [0.2, 0.1, 0.05, 0.03] {
            let n = greedy_net(&seg, delta, MetricKind::Heisenberg).unwrap().centers.len() as f64;
            let want = delta.powi(-2);
            assert!(n / want <= 4.0 && want / n <= 4.0, "delta={delta} n={n}");
        }
    }

    #[test]
    fn constant_cloud_counts_are_one() {
        let c = cloud(vec![Point::new(0.2, 0.2, 0.2); 50]);
        let counts = net_counts(&c, &[1.0, 0.1, 0.01], MetricKind::Heisenberg).unwrap();
        assert!(counts.iter().all(|c| c.count == 1));
    }

    #[test]
    fn grid_matches_brute_force_and_is_a_valid_net() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point> = (0..2000)
            .map(|_| Point::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0)))
            .collect();
        for m in [MetricKind::Euclidean, MetricKind::Heisenberg] {
            for delta in [0.5, 0.2, 0.07] {
                let net = greedy_net_points(&pts, delta, m).unwrap();
                assert_eq!(net.centers, brute(&pts, delta, m), "{m:?} {delta}");
                for (a, &i) in net.centers.iter().enumerate() {
                    for &j in &net.centers[a + 1..] {
                        assert!(dist(pts[i], pts[j], m) > delta);
                    }
                }
                for &p in &pts {
                    assert!(net.centers.iter().any(|&i| dist(p, pts[i], m) <= delta));
                }
            }
        }
    }

    #[test]
    fn scales() {
        let s = log_scales(1.0, 0.01, 17).unwrap();
        assert_eq!(s.len(), 17);
        assert!((s[0] - 1.0).abs() < 1e-15 && (s[16] - 0.01).abs() < 1e-15);
        assert!(s.windows(2).all(|w| w[0] > w[1]));
        assert_eq!(default_scale_count(1.0, 0.01), 17);
        assert!(log_scales(0.1, 0.2, 5).is_err());
    }
}
