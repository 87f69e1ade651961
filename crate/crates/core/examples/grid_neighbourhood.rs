//! One client at a grid corner under each strategy: how far work spreads
//! and how much is dropped.

use std::path::Path;

use compute_congestion::{top_k_loads, Scenario, Strategy};

fn main() -> compute_congestion::Result<()> {
    let base = Scenario::load(Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/grid_neighbourhood.json"))?;
    for st in Strategy::ALL {
        let r = base.with_strategy(st)?.run_replicate(0)?;
        let busy = r.per_node_avg_load.values().filter(|&&l| l >= 0.1).count();
        println!(
            "{:<9} psi {:.4} tau {:.4} routers >=10% load {busy:>3}",
            st.name(),
            r.drop_ratio_psi,
            r.avg_load_tau
        );
        let top: Vec<String> = top_k_loads(&r, 5).iter().map(|(n, l)| format!("{n}:{l:.2}")).collect();
        println!("          busiest {}", top.join(" "));
    }
    Ok(())
}
