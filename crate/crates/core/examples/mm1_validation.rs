//! Compares a simulated single node against the M/M/1 mean number in system.

use std::path::Path;

use compute_congestion::queueing::expected_queue_length;
use compute_congestion::{NodeId, Scenario, ScenarioConfig};
use serde_json::json;

fn main() -> compute_congestion::Result<()> {
    println!("{:>5} {:>9} {:>9} {:>8}", "rho", "simulated", "analytic", "error");
    for rho in [0.1, 0.3, 0.5, 0.7, 0.8, 0.9] {
        let config: ScenarioConfig = serde_json::from_value(json!({
            "seed": 1, "strategy": "proactive",
            "topology": {"kind": "line", "routers": 1, "capacity": {"default": {"cpu": 1, "mem": 1}}},
            "workload": {"rate": 1000.0 * rho, "horizon_s": 200,
                "catalog": {"kind": "explicit", "services": [{"exec_ms": 1, "cpu": 1, "mem": 1}]}},
            // execute everything: an unbounded FIFO queue
            "controller": {"pinned": {"lambda": 0, "mu": 1000, "cpu_mean": 1, "mem_mean": 1}},
            "output": {"series_nodes": []}
        }))
        .expect("valid scenario");
        let report = Scenario::new(config, Path::new("."))?.run_replicate(0)?;
        let sim = report.per_node_mean_in_system[&NodeId(1)];
        let want = expected_queue_length(rho)?;
        println!("{rho:>5} {sim:>9.4} {want:>9.4} {:>7.2}%", 100.0 * (sim - want) / want);
    }
    Ok(())
}
