use serde::{Deserialize, Serialize};

use super::net::NetCount;
use crate::error::{invalid, Result};
use crate::hgeom::MetricKind;

/// Least-squares fit of `log count` against `log(1/delta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub metric: MetricKind,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// scales used in the fit
    pub scales: Vec<NetCount>,
    /// scales measured but excluded from the fit
    pub dropped_scales: Vec<NetCount>,
}

/// Fit every given scale.
pub fn estimate_dimension(counts: &[NetCount], metric: MetricKind) -> Result<DimensionEstimate> {
    if counts.len() < 3 {
        return invalid(format!("need at least 3 scales for a fit, got {}", counts.len()));
    }
    if let Some(c) = counts.iter().find(|c| !(c.delta > 0.0) || c.count == 0) {
        return invalid(format!("bad scale {c:?}"));
    }
    let xs: Vec<f64> = counts.iter().map(|c| -c.delta.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.count as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return invalid("all scales coincide");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DimensionEstimate { metric, slope, intercept, r_squared, scales: counts.to_vec(), dropped_scales: Vec::new() })
}

/// Fit after dropping the largest and the smallest scale (saturation guards).
pub fn estimate_dimension_trimmed(counts: &[NetCount], metric: MetricKind) -> Result<DimensionEstimate> {
    if counts.len() < 5 {
        return invalid(format!("need at least 5 scales to trim both ends, got {}", counts.len()));
    }
    let mut sorted = counts.to_vec();
    sorted.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    let mut est = estimate_dimension(&sorted[1..sorted.len() - 1], metric)?;
    est.dropped_scales = vec![sorted[0], sorted[sorted.len() - 1]];
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(base: f64) -> Vec<NetCount> {
        (1..=6).map(|j| NetCount { delta: 2f64.powi(-j), count: base.powi(j) as usize }).collect()
    }

    #[test]
    fn exact_lines() {
        let e = estimate_dimension(&line(2.0), MetricKind::Euclidean).unwrap();
        assert!((e.slope - 1.0).abs() < 1e-12);
        assert!((e.r_squared - 1.0).abs() < 1e-12);
        assert!(e.intercept.abs() < 1e-12);
        let e = estimate_dimension(&line(4.0), MetricKind::Heisenberg).unwrap();
        assert!((e.slope - 2.0).abs() < 1e-12);
        assert!((e.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_scales() {
        assert!(estimate_dimension(&line(2.0)[..2], MetricKind::Euclidean).is_err());
        assert!(estimate_dimension_trimmed(&line(2.0)[..4], MetricKind::Euclidean).is_err());
    }

    #[test]
    fn trimming_drops_both_ends() {
        let mut counts = line(2.0);
        counts[0].count = 1;
        counts[5].count = 40;
        let e = estimate_dimension_trimmed(&counts, MetricKind::Euclidean).unwrap();
        assert!((e.slope - 1.0).abs() < 1e-12);
        assert_eq!(e.scales.len(), 4);
        assert_eq!(e.dropped_scales.len(), 2);
        assert_eq!(e.dropped_scales[0].delta, 0.5);
    }

    #[test]
    fn flat_counts_fit_zero_slope() {
        let counts: Vec<NetCount> = (1..=4).map(|j| NetCount { delta: 2f64.powi(-j), count: 1 }).collect();
        let e = estimate_dimension(&counts, MetricKind::Euclidean).unwrap();
        assert_eq!(e.slope, 0.0);
        assert_eq!(e.r_squared, 1.0);
    }
}
