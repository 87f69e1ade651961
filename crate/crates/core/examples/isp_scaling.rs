//! Sweeps the workload on the bundled backbone and prints the average load,
//! latency and drop ratio of each strategy.
//!
//! Usage: `isp_scaling [replicates]` (default 5).

use std::path::Path;

use compute_congestion::{Scenario, Strategy};

fn main() -> compute_congestion::Result<()> {
    let replicates = std::env::args()
        .nth(1)
        .map_or(5, |s| s.parse().expect("replicate count"));
    let base = Scenario::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/isp_scaling.json"))?
        .with_replicates(replicates)?;
    println!(
        "{:>5} {:<9} {:>7} {:>8} {:>7}",
        "scale", "strategy", "tau", "phi_ms", "psi"
    );
    for scale in [1.0, 2.0, 4.0, 8.0] {
        for st in Strategy::ALL {
            let reports = base.with_scale(scale)?.with_strategy(st)?.run_all()?;
            let n = reports.len() as f64;
            let tau = reports.iter().map(|r| r.avg_load_tau).sum::<f64>() / n;
            let phi = reports.iter().filter_map(|r| r.avg_latency_phi_ms).sum::<f64>() / n;
            let psi = reports.iter().map(|r| r.drop_ratio_psi).sum::<f64>() / n;
            println!("{scale:>5} {:<9} {tau:>7.4} {phi:>8.2} {psi:>7.4}", st.name());
        }
    }
    Ok(())
}
