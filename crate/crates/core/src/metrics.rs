//! Run reports and derived views of them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{Outcome, RequestJourney, Strategy};
use crate::error::{Error, Result};
use crate::topology::NodeId;

/// Binned average CPU load of one router.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSeries {
    pub bin_ms: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JourneySummary {
    pub emitted: u64,
    pub executed: u64,
    pub dropped: u64,
    /// Requests that left their edge router.
    pub forwarded: u64,
    pub mean_hops: f64,
}

impl JourneySummary {
    pub fn from_journeys(journeys: &[RequestJourney]) -> Self {
        let mut s = JourneySummary::default();
        let mut hops = 0u64;
        for j in journeys {
            s.emitted += 1;
            match j.outcome {
                Outcome::Executed { .. } => s.executed += 1,
                Outcome::Dropped { .. } => s.dropped += 1,
            }
            if j.hops_taken.len() > 1 {
                s.forwarded += 1;
            }
            hops += j.hops_taken.len() as u64;
        }
        if s.emitted > 0 {
            s.mean_hops = hops as f64 / s.emitted as f64;
        }
        s
    }
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub scenario_digest: String,
    pub horizon_s: f64,
    /// Time-averaged CPU load over the horizon, in units of capacity.
    pub per_node_avg_load: BTreeMap<NodeId, f64>,
    pub per_node_mean_in_system: BTreeMap<NodeId, f64>,
    pub per_node_peak_load: BTreeMap<NodeId, f64>,
    /// Mean of the per-router average loads.
    pub avg_load_tau: f64,
    /// Mean latency of executed requests; `None` when nothing executed.
    pub avg_latency_phi_ms: Option<f64>,
    /// Fraction of emitted requests that were dropped.
    pub drop_ratio_psi: f64,
    pub load_series: BTreeMap<NodeId, LoadSeries>,
    pub journeys_summary: JourneySummary,
}

impl MetricsReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        strategy: Strategy,
        seed: u64,
        scenario_digest: String,
        horizon_s: f64,
        per_node_avg_load: BTreeMap<NodeId, f64>,
        per_node_mean_in_system: BTreeMap<NodeId, f64>,
        per_node_peak_load: BTreeMap<NodeId, f64>,
        load_series: BTreeMap<NodeId, LoadSeries>,
        journeys_summary: JourneySummary,
        journeys: &[RequestJourney],
    ) -> Self {
        let avg_load_tau = if per_node_avg_load.is_empty() {
            0.0
        } else {
            per_node_avg_load.values().sum::<f64>() / per_node_avg_load.len() as f64
        };
        let mut latency_sum = 0.0;
        let mut executed = 0u64;
        for j in journeys {
            if let Some(l) = j.latency {
                latency_sum += l;
                executed += 1;
            }
        }
        let avg_latency_phi_ms = (executed > 0).then(|| latency_sum / executed as f64 * 1e3);
        let drop_ratio_psi = if journeys_summary.emitted == 0 {
            0.0
        } else {
            1.0 - journeys_summary.executed as f64 / journeys_summary.emitted as f64
        };
        MetricsReport {
            strategy,
            seed,
            scenario_digest,
            horizon_s,
            per_node_avg_load,
            per_node_mean_in_system,
            per_node_peak_load,
            avg_load_tau,
            avg_latency_phi_ms,
            drop_ratio_psi,
            load_series,
            journeys_summary,
        }
    }
}

/// The `k` most loaded routers, heaviest first; ties go to the smaller id.
pub fn top_k_loads(report: &MetricsReport, k: usize) -> Vec<(NodeId, f64)> {
    let mut all: Vec<(NodeId, f64)> = report.per_node_avg_load.iter().map(|(&n, &l)| (n, l)).collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// `(bin start ms, load)` pairs for `node`, re-binned to `bin_ms`.
///
/// `bin_ms` must be a whole multiple of the recorded bin width.
pub fn load_time_series(report: &MetricsReport, node: NodeId, bin_ms: f64) -> Result<Vec<(f64, f64)>> {
    let series = report
        .load_series
        .get(&node)
        .ok_or_else(|| Error::Domain(format!("no load series recorded for node {node}")))?;
    let ratio = bin_ms / series.bin_ms;
    let factor = ratio.round();
    if !(factor >= 1.0) || (ratio - factor).abs() > 1e-9 * factor {
        return Err(Error::Domain(format!(
            "bin width {bin_ms} ms is not a whole multiple of the recorded {} ms",
            series.bin_ms
        )));
    }
    let factor = factor as usize;
    let horizon_ms = report.horizon_s * 1e3;
    let mut out = Vec::with_capacity(series.values.len().div_ceil(factor));
    for (g, chunk) in series.values.chunks(factor).enumerate() {
        let start = g as f64 * bin_ms;
        let mut weighted = 0.0;
        let mut width = 0.0;
        for (n, v) in chunk.iter().enumerate() {
            let b0 = start + n as f64 * series.bin_ms;
            let w = (horizon_ms - b0).min(series.bin_ms);
            weighted += v * w;
            width += w;
        }
        out.push((start, weighted / width));
    }
    Ok(out)
}

/// Average load of `node` over `[start_ms, end_ms)`, from the recorded bins.
pub fn window_avg_load(report: &MetricsReport, node: NodeId, start_ms: f64, end_ms: f64) -> Result<f64> {
    let series = report
        .load_series
        .get(&node)
        .ok_or_else(|| Error::Domain(format!("no load series recorded for node {node}")))?;
    let horizon_ms = report.horizon_s * 1e3;
    if !(start_ms >= 0.0 && end_ms > start_ms && end_ms <= horizon_ms * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!(
            "window [{start_ms}, {end_ms}) ms is empty or outside [0, {horizon_ms})"
        )));
    }
    let mut sum = 0.0;
    for (b, v) in series.values.iter().enumerate() {
        let b0 = b as f64 * series.bin_ms;
        let b1 = (b0 + series.bin_ms).min(horizon_ms);
        let overlap = b1.min(end_ms) - b0.max(start_ms);
        if overlap > 0.0 {
            sum += v * overlap;
        }
    }
    Ok(sum / (end_ms - start_ms))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_with(values: Vec<f64>, bin_ms: f64, horizon_s: f64) -> MetricsReport {
        let node = NodeId(1);
        let mut series = BTreeMap::new();
        series.insert(node, LoadSeries { bin_ms, values });
        MetricsReport::assemble(
            Strategy::None,
            0,
            String::new(),
            horizon_s,
            BTreeMap::from([(NodeId(1), 0.5), (NodeId(2), 0.7), (NodeId(3), 0.5)]),
            BTreeMap::new(),
            BTreeMap::new(),
            series,
            JourneySummary::default(),
            &[],
        )
    }

    #[test]
    fn tau_and_top_k() {
        let r = report_with(vec![], 1.0, 1.0);
        assert!((r.avg_load_tau - 0.5666666666666667).abs() < 1e-12);
        assert_eq!(top_k_loads(&r, 2), vec![(NodeId(2), 0.7), (NodeId(1), 0.5)]);
        assert_eq!(r.avg_latency_phi_ms, None);
        assert_eq!(r.drop_ratio_psi, 0.0);
    }

    #[test]
    fn rebinning() {
        let r = report_with(vec![1.0, 3.0, 2.0, 4.0, 5.0], 1.0, 0.005);
        let s = load_time_series(&r, NodeId(1), 2.0).unwrap();
        assert_eq!(s, vec![(0.0, 2.0), (2.0, 3.0), (4.0, 5.0)]);
        assert!(load_time_series(&r, NodeId(1), 1.5).is_err());
        assert!(load_time_series(&r, NodeId(9), 1.0).is_err());
    }

    #[test]
    fn window_average_uses_partial_bins() {
        let r = report_with(vec![1.0, 3.0, 2.0, 4.0], 1.0, 0.004);
        let w = window_avg_load(&r, NodeId(1), 0.5, 2.5).unwrap();
        assert!((w - (0.5 + 3.0 + 1.0) / 2.0).abs() < 1e-12);
        assert!(window_avg_load(&r, NodeId(1), 2.0, 2.0).is_err());
        assert!(window_avg_load(&r, NodeId(1), 0.0, 9.0).is_err());
    }
}
