//! Feeds a stream whose rate steps up and back down into one controller and
//! prints how the rate estimate, the conservative margin and the execution
//! probability follow it.

use compute_congestion::controller::{ControllerInit, ControllerState};
use compute_congestion::workload::Substream;
use rand::Rng;

fn main() -> compute_congestion::Result<()> {
    let init = ControllerInit {
        lambda: 0.0,
        mu: 1000.0,
        cpu_mean: 1.0,
        mem_mean: 1.0,
    };
    let mut c = ControllerState::new(50, 4.0, 4.0, init)?;
    let mut rng = Substream::Arrivals(0).rng(7);
    let mut t = 0.0;
    println!(
        "{:>8} {:>9} {:>9} {:>9} {:>6} {:>5}",
        "t_ms", "lambda", "lambda'", "eff", "q", "mode"
    );
    for n in 0..3000 {
        let rate = if (1000..1600).contains(&n) { 4000.0 } else { 1000.0 };
        t += -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln() / rate;
        let d = c.on_arrival(t, rng.gen())?;
        c.on_complete(1e-3, 1.0, 1.0)?;
        if n % 100 == 0 {
            println!(
                "{:>8.1} {:>9.1} {:>9.1} {:>9.1} {:>6.3} {:>5}",
                t * 1e3,
                d.lambda,
                c.lambda_prev(),
                d.lambda_effective,
                d.q_used,
                if d.conservative { "cons" } else { "" }
            );
        }
    }
    Ok(())
}
