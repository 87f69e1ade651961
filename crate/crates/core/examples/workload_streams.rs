//! Generates a jittered request trace and bins it per millisecond.

use compute_congestion::queueing::ServiceSpec;
use compute_congestion::topology::NodeId;
use compute_congestion::workload::{generate_trace, JitterSpec};

fn main() -> compute_congestion::Result<()> {
    let catalog = vec![ServiceSpec::new(0, 1.0, 5e-4, 1.0, 1.0)];
    let jitters = [JitterSpec::new(0.040, 0.010, 6.0), JitterSpec::new(0.070, 0.010, 6.0)];
    let trace = generate_trace(&[(NodeId(0), 1000.0)], &jitters, 0.1, &catalog, 42)?;
    let mut bins = [0usize; 100];
    for r in &trace {
        bins[(r.emit_time * 1e3) as usize] += 1;
    }
    println!("{} requests; arrivals per 10 ms:", trace.len());
    for (i, chunk) in bins.chunks(10).enumerate() {
        let n: usize = chunk.iter().sum();
        println!("{:>3}-{:<3} ms {:>4} {}", i * 10, i * 10 + 10, n, "#".repeat(n / 5));
    }
    let again = generate_trace(&[(NodeId(0), 1000.0)], &jitters, 0.1, &catalog, 42)?;
    println!("same seed reproduces the trace: {}", again == trace);
    Ok(())
}
