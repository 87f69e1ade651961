//! Two short bursts on a two-router line: seed-averaged per-millisecond load
//! of both routers under the passive and proactive strategies.

use std::path::Path;

use compute_congestion::{NodeId, Scenario, Strategy};

fn main() -> compute_congestion::Result<()> {
    let base = Scenario::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/jitter_response.json"))?;
    let mut curves = Vec::new();
    for st in [Strategy::Passive, Strategy::Proactive] {
        let reports = base.with_strategy(st)?.run_all()?;
        let n = reports.len() as f64;
        let mean = |node| -> Vec<f64> {
            let len = reports[0].load_series[&node].values.len();
            (0..len)
                .map(|b| reports.iter().map(|r| r.load_series[&node].values[b]).sum::<f64>() / n)
                .collect()
        };
        curves.push((st, mean(NodeId(1)), mean(NodeId(2))));
    }
    println!(
        "{:>4} {:>8} {:>8} {:>8} {:>8}",
        "t_ms", "pas n1", "pas n2", "pro n1", "pro n2"
    );
    for b in 30..100 {
        println!(
            "{b:>4} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
            curves[0].1[b], curves[0].2[b], curves[1].1[b], curves[1].2[b]
        );
    }
    Ok(())
}
