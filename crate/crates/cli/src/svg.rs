//! Plain polyline and scatter SVG, no external renderer.

use std::fmt::Write as _;

use heislab::constructions::WeightedCloud;
use heislab::dimension::DimensionEstimate;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 40.0;
const MAX_DOTS: usize = 20_000;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let (x0, x1) = bounds(xs);
        let (y0, y1) = bounds(ys);
        Frame { x0, x1, y0, y1 }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD), H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD))
    }
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !(hi > lo) {
        let c = if lo.is_finite() { lo } else { 0.0 };
        (c - 0.5, c + 0.5)
    } else {
        (lo, hi)
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{xlabel}</text>"#, W / 2.0, H - 10.0);
    let _ = writeln!(s, r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">{ylabel}</text>"#, H / 2.0, H / 2.0);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    s
}

/// Scatter of the cloud projected to the `(x, t)` plane, thinned by stride.
pub fn cloud_scatter(cloud: &WeightedCloud) -> String {
    let stride = cloud.len().div_ceil(MAX_DOTS).max(1);
    let pts: Vec<_> = cloud.points.iter().step_by(stride).collect();
    let frame = Frame::fit(pts.iter().map(|p| p.x), pts.iter().map(|p| p.t));
    let mut s = open(&format!("{} ({} points)", cloud.source.name(), cloud.len()), "x", "t");
    for p in pts {
        let (u, v) = frame.map(p.x, p.t);
        let _ = writeln!(s, r#"<circle cx="{u:.2}" cy="{v:.2}" r="1" fill="black"/>"#);
    }
    s.push_str("</svg>\n");
    s
}

/// `log N` against `log(1/delta)` with the fitted line.
pub fn loglog_plot(est: &DimensionEstimate) -> String {
    let all: Vec<(f64, f64)> = est
        .scales
        .iter()
        .chain(&est.dropped_scales)
        .map(|c| (-c.delta.ln(), (c.count as f64).ln()))
        .collect();
    let frame = Frame::fit(all.iter().map(|p| p.0), all.iter().map(|p| p.1));
    let mut s = open(&format!("{} slope {:.4}", est.metric.name(), est.slope), "log(1/delta)", "log N");
    let mut fitted: Vec<(f64, f64)> = est.scales.iter().map(|c| (-c.delta.ln(), (c.count as f64).ln())).collect();
    fitted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let line: Vec<String> = fitted
        .iter()
        .map(|&(x, y)| {
            let (u, v) = frame.map(x, y);
            format!("{u:.2},{v:.2}")
        })
        .collect();
    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="black"/>"#, line.join(" "));
    if let (Some(a), Some(b)) = (fitted.first(), fitted.last()) {
        let (u0, v0) = frame.map(a.0, est.intercept + est.slope * a.0);
        let (u1, v1) = frame.map(b.0, est.intercept + est.slope * b.0);
        let _ = writeln!(s, r#"<line x1="{u0:.2}" y1="{v0:.2}" x2="{u1:.2}" y2="{v1:.2}" stroke="red" stroke-dasharray="4 3"/>"#);
    }
    for &(x, y) in &all {
        let (u, v) = frame.map(x, y);
        let _ = writeln!(s, r#"<circle cx="{u:.2}" cy="{v:.2}" r="3" fill="black"/>"#);
    }
    s.push_str("</svg>\n");
    s
}
