//! Covering numbers under either metric, log-log dimension fits, and
//! numerical checks of the dimension-comparison inequalities.

mod compare;
mod fit;
mod net;

pub use compare::{
    check_dimension_inequalities, fit_metric_comparison, fit_metric_comparison_in, ComparisonReport, InequalityCheck,
    PairRegion,
};
pub use fit::{estimate_dimension, estimate_dimension_trimmed, DimensionEstimate};
pub use net::{default_scale_count, greedy_net, greedy_net_points, log_scales, net_counts, Net, NetCount};

use crate::constructions::WeightedCloud;
use crate::hgeom::MetricKind;
use crate::Result;

/// Net counts over `scales` log-uniform radii in `[delta_min, delta_max]`,
/// fitted with both end scales dropped.
pub fn estimate_cloud(
    cloud: &WeightedCloud,
    metric: MetricKind,
    delta_max: f64,
    delta_min: f64,
    scales: usize,
) -> Result<DimensionEstimate> {
    let deltas = log_scales(delta_max, delta_min, scales)?;
    let counts = net_counts(cloud, &deltas, metric)?;
    estimate_dimension_trimmed(&counts, metric)
}
