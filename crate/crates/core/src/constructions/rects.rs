//! Rectangle families in the vertical plane `{y = 0}`.
//!
//! A rectangle `[a, b] x [c, d]` is split into `2n` children of width
//! `(b - a) / 2n`: even slots hug the bottom edge, odd slots the top edge, and
//! all children have height `lambda (b - a)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MAX_ITEMS;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect2 {
    /// horizontal interval `[a, b]` along x
    pub a: f64,
    pub b: f64,
    /// vertical interval `[c, d]` along t
    pub c: f64,
    pub d: f64,
}

impl Rect2 {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a < b && c < d) || ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return invalid(format!("degenerate rectangle [{a}, {b}] x [{c}, {d}]"));
        }
        Ok(Rect2 { a, b, c, d })
    }

    pub const UNIT: Rect2 = Rect2 { a: 0.0, b: 1.0, c: 0.0, d: 1.0 };

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn height(&self) -> f64 {
        self.d - self.c
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.a + self.b), 0.5 * (self.c + self.d))
    }

    pub fn contains(&self, other: &Rect2) -> bool {
        self.a <= other.a && other.b <= self.b && self.c <= other.c && other.d <= self.d
    }

    /// True if the interiors intersect.
    pub fn overlaps(&self, other: &Rect2) -> bool {
        self.a < other.b && other.a < self.b && self.c < other.d && other.c < self.d
    }
}

/// The `2n` children of `r`: bottom row (`i = 0..n`) first, then the top row.
pub fn subdivide_rect(r: &Rect2, n: u64, lambda: f64) -> Result<Vec<Rect2>> {
    if n == 0 {
        return invalid("subdivision count n must be at least 1");
    }
    if !(lambda > 0.0 && lambda <= 0.5) {
        return invalid(format!("lambda must lie in (0, 1/2], got {lambda}"));
    }
    let span = r.width();
    let child_h = lambda * span;
    if child_h > r.height() {
        return invalid(format!(
            "children of height {child_h} do not fit in a rectangle of height {}",
            r.height()
        ));
    }
    let w = span / (2 * n) as f64;
    let mut out = Vec::with_capacity(2 * n as usize);
    for i in 0..n {
        let left = r.a + (2 * i) as f64 * w;
        out.push(Rect2 { a: left, b: left + w, c: r.c, d: r.c + child_h });
    }
    for i in 0..n {
        let left = r.a + (2 * i + 1) as f64 * w;
        out.push(Rect2 { a: left, b: left + w, c: r.d - child_h, d: r.d });
    }
    Ok(out)
}

/// Parameter sequences of the two rectangle constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ExampleParams {
    /// `n_k = 2^(2^(k-1) - 1)`, `lambda_k = 2^(-3 * 2^(k-1))`.
    Example1,
    /// `n_k = 1`; `lambda_k = 1/2` while `2^k <= 34M`, then `34M 2^(-k-1)`.
    Example2 {
        #[serde(rename = "M")]
        m: f64,
    },
}

impl ExampleParams {
    pub fn example2(m: f64) -> Result<Self> {
        if !(m > 1.0) || !m.is_finite() {
            return invalid(format!("Example 2 needs a finite M > 1, got {m}"));
        }
        Ok(ExampleParams::Example2 { m })
    }

    /// Subdivision count used to pass from level `k - 1` to level `k` (k >= 1).
    pub fn n(&self, k: u32) -> Option<u64> {
        match self {
            ExampleParams::Example1 => {
                let e = 2u64.checked_pow(k.checked_sub(1)?)?.checked_sub(1)?;
                2u64.checked_pow(u32::try_from(e).ok()?)
            }
            ExampleParams::Example2 { .. } => Some(1),
        }
    }

    /// Height ratio used to pass from level `k - 1` to level `k` (k >= 1).
    pub fn lambda(&self, k: u32) -> f64 {
        match *self {
            ExampleParams::Example1 => 2f64.powf(-3.0 * 2f64.powi(k as i32 - 1)),
            ExampleParams::Example2 { m } => {
                if 2f64.powi(k as i32) <= 34.0 * m {
                    0.5
                } else {
                    34.0 * m * 2f64.powi(-(k as i32) - 1)
                }
            }
        }
    }

    /// First family of the recursion.
    ///
    /// Example 1 starts from the two rectangles of `R([0,1]^2, 1, 1/2)`.
    /// Example 2 counts levels from the unit square so that level `k` has
    /// horizontal side `2^-k`; its level 1 is again `R([0,1]^2, 1, 1/2)`.
    fn root(&self) -> RectFamily {
        match self {
            ExampleParams::Example1 => {
                let rects = subdivide_rect(&Rect2::UNIT, 1, 0.5).expect("unit square split");
                RectFamily { level: 0, rects, h: 0.5, v: 0.5 }
            }
            ExampleParams::Example2 { .. } => RectFamily { level: 0, rects: vec![Rect2::UNIT], h: 1.0, v: 1.0 },
        }
    }

    /// Number of rectangles at level `k`, saturating on overflow.
    pub fn count(&self, k: u32) -> u128 {
        let mut c: u128 = match self {
            ExampleParams::Example1 => 2,
            ExampleParams::Example2 { .. } => 1,
        };
        for j in 1..=k {
            let n = match self.n(j) {
                Some(n) => n as u128,
                None => return u128::MAX,
            };
            c = c.saturating_mul(2 * n);
        }
        c
    }

    /// Closed-form horizontal side at level `k`.
    pub fn h(&self, k: u32) -> f64 {
        match self {
            ExampleParams::Example1 => 2f64.powf(-(2f64.powi(k as i32))),
            ExampleParams::Example2 { .. } => 2f64.powi(-(k as i32)),
        }
    }

    /// Closed-form vertical side at level `k`.
    pub fn v(&self, k: u32) -> f64 {
        match *self {
            ExampleParams::Example1 if k == 0 => 0.5,
            ExampleParams::Example1 => 2f64.powf(-(2f64.powi(k as i32 + 1))),
            ExampleParams::Example2 { m } => {
                let h = self.h(k);
                if k == 0 {
                    1.0
                } else {
                    h.min(34.0 * m * h * h)
                }
            }
        }
    }

    /// Smallest level with `2^k > 68M` (Example 2 only).
    pub fn asymptotic_level(&self) -> Option<u32> {
        match *self {
            ExampleParams::Example1 => None,
            ExampleParams::Example2 { m } => (0u32..62).find(|&k| 2f64.powi(k as i32) > 68.0 * m),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ExampleParams::Example1 => "ex1",
            ExampleParams::Example2 { .. } => "ex2",
        }
    }
}

/// One generation of rectangles, all of width `h` and height `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct RectFamily {
    pub level: u32,
    pub rects: Vec<Rect2>,
    pub h: f64,
    pub v: f64,
}

impl RectFamily {
    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    /// Apply one more generation of the recursion.
    pub fn refine(&self, n: u64, lambda: f64) -> Result<RectFamily> {
        let children: Vec<Vec<Rect2>> =
            self.rects.par_iter().map(|r| subdivide_rect(r, n, lambda)).collect::<Result<_>>()?;
        let rects: Vec<Rect2> = children.into_iter().flatten().collect();
        Ok(RectFamily {
            level: self.level + 1,
            rects,
            h: self.h / (2 * n) as f64,
            v: lambda * self.h,
        })
    }
}

/// Build level `k` of the construction selected by `params`.
pub fn build_family(params: ExampleParams, k: u32) -> Result<RectFamily> {
    if let ExampleParams::Example2 { m } = params {
        if !(m > 1.0) || !m.is_finite() {
            return invalid(format!("Example 2 needs a finite M > 1, got {m}"));
        }
    }
    let count = params.count(k);
    if count > MAX_ITEMS as u128 {
        let first_bad = (0..=k).find(|&j| params.count(j) > MAX_ITEMS as u128).unwrap_or(k);
        return Err(Error::ResourceLimit(format!(
            "{} level {first_bad} needs {} rectangles (limit {MAX_ITEMS})",
            params.label(),
            params.count(first_bad)
        )));
    }
    let mut fam = params.root();
    for j in 1..=k {
        let n = params.n(j).expect("count checked above");
        fam = fam.refine(n, params.lambda(j))?;
    }
    Ok(fam)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: f64, b: f64, c: f64, d: f64) -> Rect2 {
        Rect2 { a, b, c, d }
    }

    #[test]
    fn first_split_of_unit_square() {
        let kids = subdivide_rect(&Rect2::UNIT, 1, 0.5).unwrap();
        assert_eq!(kids, vec![r(0.0, 0.5, 0.0, 0.5), r(0.5, 1.0, 0.5, 1.0)]);
    }

    #[test]
    fn four_way_split() {
        let kids = subdivide_rect(&Rect2::UNIT, 2, 0.25).unwrap();
        assert_eq!(
            kids,
            vec![
                r(0.0, 0.25, 0.0, 0.25),
                r(0.5, 0.75, 0.0, 0.25),
                r(0.25, 0.5, 0.75, 1.0),
                r(0.75, 1.0, 0.75, 1.0),
            ]
        );
    }

    #[test]
    fn single_pair_has_half_width() {
        let parent = r(0.3, 1.1, -2.0, 0.5);
        let kids = subdivide_rect(&parent, 1, 0.3).unwrap();
        assert_eq!(kids.len(), 2);
        for k in &kids {
            assert!((k.width() - 0.4).abs() < 1e-15);
            assert!(parent.contains(k));
        }
    }

    #[test]
    fn subdivide_rejects_bad_input() {
        assert!(subdivide_rect(&r(0.0, 1.0, 0.0, 0.1), 1, 0.5).is_err());
        assert!(subdivide_rect(&Rect2::UNIT, 0, 0.5).is_err());
        assert!(subdivide_rect(&Rect2::UNIT, 1, 0.0).is_err());
        assert!(subdivide_rect(&Rect2::UNIT, 1, 0.6).is_err());
        assert!(Rect2::new(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn example1_parameters() {
        let p = ExampleParams::Example1;
        assert_eq!(p.n(1), Some(1));
        assert_eq!(p.n(2), Some(2));
        assert_eq!(p.n(3), Some(8));
        assert_eq!(p.n(4), Some(128));
        assert_eq!(p.lambda(1), 0.125);
        assert_eq!(p.lambda(2), 2f64.powi(-6));
        assert_eq!(p.count(3), 256);
        assert_eq!(p.count(4), 65536);
    }

    #[test]
    fn example1_levels() {
        let f0 = build_family(ExampleParams::Example1, 0).unwrap();
        assert_eq!(f0.len(), 2);
        assert_eq!((f0.h, f0.v), (0.5, 0.5));
        let f1 = build_family(ExampleParams::Example1, 1).unwrap();
        assert_eq!(f1.h, 0.25);
        assert_eq!(f1.v, 2f64.powi(-4));
        for k in 0..=4 {
            let f = build_family(ExampleParams::Example1, k).unwrap();
            let p = ExampleParams::Example1;
            assert_eq!(f.h, p.h(k), "h at level {k}");
            assert_eq!(f.v, p.v(k), "v at level {k}");
            if k > 0 {
                assert_eq!(f.v, f.h * f.h);
            }
            for rect in &f.rects {
                assert_eq!(rect.width(), f.h);
                assert_eq!(rect.height(), f.v);
            }
            if (1..4).contains(&k) {
                assert_eq!(p.h(k + 1), f.v);
            }
        }
    }

    #[test]
    fn example1_level5_is_over_the_limit() {
        match build_family(ExampleParams::Example1, 5) {
            Err(Error::ResourceLimit(msg)) => assert!(msg.contains("level 5"), "{msg}"),
            other => panic!("expected resource limit, got {other:?}"),
        }
    }

    #[test]
    fn example2_closed_forms_past_the_switch() {
        let m = 2.0;
        let p = ExampleParams::example2(m).unwrap();
        let k0 = p.asymptotic_level().unwrap();
        assert_eq!(k0, 8);
        let f = build_family(p, 12).unwrap();
        assert_eq!(f.h, 2f64.powi(-12));
        assert_eq!(f.v, 34.0 * m * 4f64.powi(-12));
        // level 1 coincides with R([0,1]^2, 1, 1/2)
        let f1 = build_family(p, 1).unwrap();
        assert_eq!(f1.rects, subdivide_rect(&Rect2::UNIT, 1, 0.5).unwrap());
        for k in 0..=14 {
            let f = build_family(p, k).unwrap();
            assert_eq!(f.h, p.h(k));
            assert!((f.v - p.v(k)).abs() <= 1e-15 * p.v(k), "v at {k}: {} vs {}", f.v, p.v(k));
        }
    }

    #[test]
    fn example2_sibling_gap() {
        let m = 2.0;
        let p = ExampleParams::example2(m).unwrap();
        for k in 8..12 {
            let parent = build_family(p, k).unwrap();
            let kids = build_family(p, k + 1).unwrap();
            for (i, _) in parent.rects.iter().enumerate().take(16) {
                let lo = kids.rects[2 * i];
                let hi = kids.rects[2 * i + 1];
                let gap = hi.c - lo.d;
                let want = 17.0 * m * 4f64.powi(-(k as i32));
                assert!((gap - want).abs() <= 1e-12 * want, "k={k} gap={gap} want={want}");
            }
        }
    }

    #[test]
    fn example2_rejects_small_m() {
        assert!(ExampleParams::example2(1.0).is_err());
        assert!(build_family(ExampleParams::Example2 { m: 0.5 }, 3).is_err());
    }

    #[test]
    fn vertical_side_bounded_by_square_of_horizontal() {
        let p = ExampleParams::Example1;
        for k in 1..=4 {
            assert!(p.v(k) <= p.h(k) * p.h(k));
        }
        let m = 3.0;
        let p = ExampleParams::example2(m).unwrap();
        let k0 = p.asymptotic_level().unwrap();
        for k in k0..k0 + 10 {
            assert!(p.v(k) <= 34.0 * m * p.h(k) * p.h(k) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn nesting_and_disjointness() {
        for params in [ExampleParams::Example1, ExampleParams::Example2 { m: 1.5 }] {
            for k in 0..3 {
                let parent = build_family(params, k).unwrap();
                let child = build_family(params, k + 1).unwrap();
                let per = child.len() / parent.len();
                for (i, pr) in parent.rects.iter().enumerate() {
                    let kids = &child.rects[i * per..(i + 1) * per];
                    let mut covered = 0.0;
                    for c in kids {
                        assert!(pr.contains(c));
                        let holders = parent.rects.iter().filter(|q| q.contains(c)).count();
                        assert_eq!(holders, 1);
                        covered += c.width();
                    }
                    assert!((covered - pr.width()).abs() < 1e-12);
                }
                for (i, a) in child.rects.iter().enumerate() {
                    for b in &child.rects[i + 1..] {
                        assert!(!a.overlaps(b));
                    }
                }
            }
        }
    }
}
