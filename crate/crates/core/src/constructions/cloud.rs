use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ifs::{cantor_ifs, hsquare_ifs, Contraction};
use super::rects::{ExampleParams, RectFamily};
use super::MAX_ITEMS;
use crate::error::{invalid, Error, Result};
use crate::hgeom::Point;

/// What a cloud approximates. Carries enough parameters to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "set", rename_all = "lowercase")]
pub enum Source {
    Ex1 {
        samples_per_rect: usize,
    },
    Ex2 {
        #[serde(rename = "M")]
        m: f64,
        samples_per_rect: usize,
    },
    Hsquare {
        depth: u32,
    },
    Cantor {
        d: f64,
        depth: u32,
    },
    Fs {
        d: f64,
        qh_depth: u32,
        cantor_depth: u32,
    },
    /// segment `[from, to]` on the x-axis
    Xseg {
        from: f64,
        to: f64,
        points: usize,
    },
    /// segment `[from, to]` on the t-axis
    Tseg {
        from: f64,
        to: f64,
        points: usize,
    },
    Other {
        label: String,
    },
}

impl Source {
    pub fn name(&self) -> &str {
        match self {
            Source::Ex1 { .. } => "ex1",
            Source::Ex2 { .. } => "ex2",
            Source::Hsquare { .. } => "hsquare",
            Source::Cantor { .. } => "cantor",
            Source::Fs { .. } => "fs",
            Source::Xseg { .. } => "xseg",
            Source::Tseg { .. } => "tseg",
            Source::Other { label } => label,
        }
    }
}

/// Finite prefractal approximation: points with measure weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCloud {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub total_mass: f64,
    pub level: u32,
    pub source: Source,
    /// horizontal side of the pieces at the cloud's level, when defined
    pub h: Option<f64>,
    /// vertical side of the pieces at the cloud's level, when defined
    pub v: Option<f64>,
    /// bound on the t-distance from a sample to the piece it stands for
    pub vertical_placement_error: f64,
    /// bound on the Euclidean distance from a sample to the piece it stands for
    pub placement_error: f64,
}

impl WeightedCloud {
    /// Builds a cloud and checks the weight invariants.
    pub fn new(points: Vec<Point>, weights: Vec<f64>, level: u32, source: Source) -> Result<Self> {
        if points.len() != weights.len() {
            return invalid(format!("{} points but {} weights", points.len(), weights.len()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return invalid(format!("weights must be finite and nonnegative, found {w}"));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return invalid(format!("non-finite point {p:?}"));
        }
        let total_mass = weights.iter().sum();
        Ok(WeightedCloud {
            points,
            weights,
            total_mass,
            level,
            source,
            h: None,
            v: None,
            vertical_placement_error: 0.0,
            placement_error: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sum of weights, recomputed.
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

fn check_size(n: u128, what: &str) -> Result<()> {
    if n > MAX_ITEMS as u128 {
        return Err(Error::ResourceLimit(format!("{what} needs {n} points (limit {MAX_ITEMS})")));
    }
    Ok(())
}

/// Sample each rectangle on a uniform grid along its horizontal midline.
///
/// Rectangle `[a,b] x [c,d]` contributes points `(a + (i + 1/2)(b - a)/m, 0, (c + d)/2)`
/// for `i < m`, each carrying mass `h / m`.
pub fn family_cloud(family: &RectFamily, params: ExampleParams, samples_per_rect: usize) -> Result<WeightedCloud> {
    if samples_per_rect == 0 {
        return invalid("samples_per_rect must be at least 1");
    }
    check_size(family.len() as u128 * samples_per_rect as u128, "rectangle cloud")?;
    let m = samples_per_rect;
    let w = family.h / m as f64;
    let points: Vec<Point> = family
        .rects
        .par_iter()
        .flat_map_iter(|r| {
            let step = r.width() / m as f64;
            let tc = 0.5 * (r.c + r.d);
            (0..m).map(move |i| Point::new(r.a + (i as f64 + 0.5) * step, 0.0, tc))
        })
        .collect();
    let weights = vec![w; points.len()];
    let source = match params {
        ExampleParams::Example1 => Source::Ex1 { samples_per_rect },
        ExampleParams::Example2 { m } => Source::Ex2 { m, samples_per_rect },
    };
    let mut cloud = WeightedCloud::new(points, weights, family.level, source)?;
    cloud.total_mass = family.len() as f64 * family.h;
    cloud.h = Some(family.h);
    cloud.v = Some(family.v);
    cloud.vertical_placement_error = 0.5 * family.v;
    cloud.placement_error = (0.5 * family.h / m as f64).hypot(0.5 * family.v);
    Ok(cloud)
}

/// One point `F_w(seed)` per address `w` of length `depth`, in lexicographic order.
pub fn ifs_cloud<M: Contraction>(maps: &[M], depth: u32, seed_point: Point) -> Result<WeightedCloud> {
    if maps.is_empty() {
        return invalid("an IFS needs at least one map");
    }
    let k = maps.len() as u128;
    let n = k.checked_pow(depth).unwrap_or(u128::MAX);
    check_size(n, "IFS cloud")?;
    // F_{w1..wm}(seed) = F_{w1}(F_{w2..wm}(seed)), so prepend the new letter
    let mut pts = vec![seed_point];
    for _ in 0..depth {
        pts = maps.par_iter().flat_map_iter(|f| pts.iter().map(move |&p| f.apply(p))).collect();
    }
    let w = (maps.len() as f64).powi(-(depth as i32));
    let weights = vec![w; pts.len()];
    let mut cloud = WeightedCloud::new(pts, weights, depth, Source::Other { label: "ifs".into() })?;
    cloud.total_mass = 1.0;
    Ok(cloud)
}

/// `|t|` never exceeds this on the Heisenberg square: `T <= T/4 + 1/2`.
pub const HSQUARE_T_BOUND: f64 = 2.0 / 3.0;

/// Address cloud of the Heisenberg square seeded at the origin (the fixed point of `F_1`).
pub fn hsquare_cloud(depth: u32) -> Result<WeightedCloud> {
    let mut c = ifs_cloud(&hsquare_ifs(), depth, Point::ORIGIN)?;
    c.source = Source::Hsquare { depth };
    let scale = 0.5f64.powi(depth as i32);
    c.h = Some(scale);
    // F_w(q) - F_w(0) = (a, b, c + 2(x_w b - a y_w)) with |a|,|b| <= 2^-m, |c| <= 4^-m T
    let vertical = scale * (scale * HSQUARE_T_BOUND + 4.0);
    c.vertical_placement_error = vertical;
    c.placement_error = (2.0 * scale * scale + vertical * vertical).sqrt();
    Ok(c)
}

/// Left-endpoint cloud of `C_d` at the given depth.
pub fn cantor_cloud(d: f64, depth: u32) -> Result<WeightedCloud> {
    let (params, maps) = cantor_ifs(d)?;
    let mut c = ifs_cloud(&maps, depth, Point::ORIGIN)?;
    c.source = Source::Cantor { d, depth };
    let len = params.ratio.powi(depth as i32);
    c.v = Some(len);
    c.vertical_placement_error = len;
    c.placement_error = len;
    Ok(c)
}

/// Sumset `{(x, y, t + t')}` of a cloud with a t-axis cloud, with product weights.
pub fn product_cloud(qh: &WeightedCloud, cantor: &WeightedCloud) -> Result<WeightedCloud> {
    if let Some(p) = cantor.points.iter().find(|p| p.x != 0.0 || p.y != 0.0) {
        return invalid(format!("second factor must lie on the t-axis, found {p:?}"));
    }
    check_size(qh.len() as u128 * cantor.len() as u128, "product cloud")?;
    let (points, weights): (Vec<Point>, Vec<f64>) = qh
        .points
        .par_iter()
        .zip(qh.weights.par_iter())
        .flat_map_iter(|(&p, &w)| cantor.iter().map(move |(c, cw)| (Point::new(p.x, p.y, p.t + c.t), w * cw)))
        .unzip();
    let source = match (&qh.source, &cantor.source) {
        (Source::Hsquare { depth: qd }, Source::Cantor { d, depth: cd }) => {
            Source::Fs { d: *d, qh_depth: *qd, cantor_depth: *cd }
        }
        _ => Source::Other { label: "product".into() },
    };
    let mut c = WeightedCloud::new(points, weights, qh.level, source)?;
    c.total_mass = qh.total_mass * cantor.total_mass;
    c.h = qh.h;
    c.v = cantor.v;
    c.vertical_placement_error = qh.vertical_placement_error + cantor.vertical_placement_error;
    c.placement_error = qh.placement_error + cantor.placement_error;
    Ok(c)
}

/// `F_s` for `s = 2 + d`.
pub fn fs_cloud(d: f64, qh_depth: u32, cantor_depth: u32) -> Result<WeightedCloud> {
    let qh = hsquare_cloud(qh_depth)?;
    let c = cantor_cloud(d, cantor_depth)?;
    product_cloud(&qh, &c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    T,
}

/// Uniform cell-centred samples of a coordinate segment with mass equal to its length.
pub fn segment_cloud(axis: Axis, from: f64, to: f64, points: usize) -> Result<WeightedCloud> {
    if points == 0 || !(from < to) || !from.is_finite() || !to.is_finite() {
        return invalid(format!("bad segment [{from}, {to}] with {points} points"));
    }
    check_size(points as u128, "segment cloud")?;
    let step = (to - from) / points as f64;
    let pts: Vec<Point> = (0..points)
        .map(|i| {
            let u = from + (i as f64 + 0.5) * step;
            match axis {
                Axis::X => Point::new(u, 0.0, 0.0),
                Axis::T => Point::new(0.0, 0.0, u),
            }
        })
        .collect();
    let source = match axis {
        Axis::X => Source::Xseg { from, to, points },
        Axis::T => Source::Tseg { from, to, points },
    };
    let mut c = WeightedCloud::new(pts, vec![step; points], 0, source)?;
    c.total_mass = to - from;
    c.placement_error = 0.5 * step;
    if axis == Axis::T {
        c.vertical_placement_error = 0.5 * step;
    }
    Ok(c)
}

/// Dimension pair known analytically for a construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedDims {
    /// `None` where the Euclidean dimension is not asserted
    pub dim_e: Option<f64>,
    pub dim_h: f64,
}

pub fn expected_dims(source: &Source) -> Result<ExpectedDims> {
    let pair = |e: f64, h: f64| ExpectedDims { dim_e: Some(e), dim_h: h };
    Ok(match source {
        Source::Ex1 { .. } | Source::Ex2 { .. } => pair(1.0, 1.0),
        Source::Xseg { .. } => pair(1.0, 1.0),
        Source::Tseg { .. } => pair(1.0, 2.0),
        Source::Cantor { d, .. } => pair(*d, 2.0 * d),
        Source::Hsquare { .. } => ExpectedDims { dim_e: None, dim_h: 2.0 },
        Source::Fs { d, .. } => pair(2.0 + d, 2.0 + 2.0 * d),
        Source::Other { label } => return invalid(format!("no known dimensions for source '{label}'")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::rects::build_family;

    #[test]
    fn example1_level0_cloud() {
        let fam = build_family(ExampleParams::Example1, 0).unwrap();
        let c = family_cloud(&fam, ExampleParams::Example1, 1).unwrap();
        assert_eq!(c.points, vec![Point::new(0.25, 0.0, 0.25), Point::new(0.75, 0.0, 0.75)]);
        assert_eq!(c.weights, vec![0.5, 0.5]);
        assert_eq!(c.total_mass, 1.0);
    }

    #[test]
    fn example1_mass_is_one_at_every_level() {
        for k in 0..=4 {
            let fam = build_family(ExampleParams::Example1, k).unwrap();
            let c = family_cloud(&fam, ExampleParams::Example1, 3).unwrap();
            assert_eq!(c.total_mass, 1.0);
            assert!((c.weight_sum() - 1.0).abs() < 1e-9);
            assert!(c.points.iter().all(|p| p.y == 0.0));
            assert_eq!(c.vertical_placement_error, 0.5 * fam.v);
        }
    }

    #[test]
    fn depth_zero_is_the_seed() {
        let seed = Point::new(0.1, 0.2, 0.3);
        let c = ifs_cloud(&hsquare_ifs(), 0, seed).unwrap();
        assert_eq!(c.points, vec![seed]);
        assert_eq!(c.weights, vec![1.0]);
    }

    #[test]
    fn hsquare_projects_into_unit_square() {
        let c = hsquare_cloud(5).unwrap();
        assert_eq!(c.len(), 4usize.pow(5));
        for p in &c.points {
            assert!((0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y));
            assert!(p.t.abs() <= HSQUARE_T_BOUND);
        }
        assert!((c.weight_sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cantor_depth_two_addresses() {
        let c = cantor_cloud(0.5, 2).unwrap();
        let ts: Vec<f64> = c.points.iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![0.0, 3.0 / 16.0, 0.75, 15.0 / 16.0]);
        assert!(c.points.iter().all(|p| p.x == 0.0 && p.y == 0.0));
        assert_eq!(c.weights, vec![0.25; 4]);
    }

    #[test]
    fn product_with_unit_point_is_identity() {
        let q = hsquare_cloud(2).unwrap();
        let unit = WeightedCloud::new(vec![Point::ORIGIN], vec![1.0], 0, Source::Other { label: "unit".into() }).unwrap();
        let out = product_cloud(&q, &unit).unwrap();
        assert_eq!(out.points, q.points);
        assert_eq!(out.weights, q.weights);
        let c = cantor_cloud(0.5, 3).unwrap();
        let unit_h = WeightedCloud::new(vec![Point::ORIGIN], vec![1.0], 0, Source::Other { label: "unit".into() }).unwrap();
        let out = product_cloud(&unit_h, &c).unwrap();
        assert_eq!(out.points, c.points);
    }

    #[test]
    fn product_sizes_and_extent() {
        let q = hsquare_cloud(3).unwrap();
        let c = cantor_cloud(0.5, 4).unwrap();
        let f = product_cloud(&q, &c).unwrap();
        assert_eq!(f.len(), q.len() * c.len());
        assert!((f.total_mass - 1.0).abs() < 1e-12);
        assert!(matches!(f.source, Source::Fs { qh_depth: 3, cantor_depth: 4, .. }));
        let ext = |pts: &[Point]| {
            let lo = pts.iter().map(|p| p.t).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p.t).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        let (ql, qhh) = ext(&q.points);
        let (cl, ch) = ext(&c.points);
        let (fl, fh) = ext(&f.points);
        assert!((fl - (ql + cl)).abs() < 1e-12);
        assert!((fh - (qhh + ch)).abs() < 1e-12);
    }

    #[test]
    fn product_rejects_off_axis_factor() {
        let q = hsquare_cloud(1).unwrap();
        assert!(product_cloud(&q, &q).is_err());
    }

    #[test]
    fn resource_limit_on_deep_ifs() {
        assert!(matches!(hsquare_cloud(12), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn expected_dimension_table() {
        let e = expected_dims(&Source::Cantor { d: 0.5, depth: 3 }).unwrap();
        assert_eq!(e, ExpectedDims { dim_e: Some(0.5), dim_h: 1.0 });
        let e = expected_dims(&Source::Fs { d: 0.5, qh_depth: 1, cantor_depth: 1 }).unwrap();
        assert_eq!(e, ExpectedDims { dim_e: Some(2.5), dim_h: 3.0 });
        let e = expected_dims(&Source::Ex1 { samples_per_rect: 1 }).unwrap();
        assert_eq!(e, ExpectedDims { dim_e: Some(1.0), dim_h: 1.0 });
        assert_eq!(expected_dims(&Source::Hsquare { depth: 2 }).unwrap().dim_e, None);
        assert!(expected_dims(&Source::Other { label: "mystery".into() }).is_err());
    }

    #[test]
    fn segments() {
        let s = segment_cloud(Axis::T, -1.0, 1.0, 4).unwrap();
        let ts: Vec<f64> = s.points.iter().map(|p| p.t).collect();
        assert_eq!(ts, vec![-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(s.total_mass, 2.0);
        assert!(segment_cloud(Axis::X, 1.0, 0.0, 3).is_err());
    }
}
