//! Steady-state view of a node: utilization, expected queue length and the
//! execution probability that keeps the induced load within capacity.

use compute_congestion::queueing::{
    aggregate_rates, assign_arrival_rates, execution_probability, expected_queue_length, mean_consumption, utilization,
    ServiceSpec, WorkloadEstimate,
};

fn main() -> compute_congestion::Result<()> {
    // two services: a light popular one and a heavy rare one
    let mut catalog = vec![
        ServiceSpec::new(0, 3.0, 2e-3, 0.5, 1.0),
        ServiceSpec::new(1, 1.0, 8e-3, 2.0, 4.0),
    ];
    let (cpu_mean, mem_mean) = mean_consumption(&catalog)?;
    println!("mean consumption: cpu {cpu_mean:.3}, mem {mem_mean:.3}");
    println!("{:>8} {:>8} {:>10} {:>8}", "lambda", "rho", "E[n]", "q");
    for lambda in [50.0, 150.0, 300.0, 450.0, 600.0, 1200.0] {
        assign_arrival_rates(&mut catalog, lambda)?;
        let (lambda, mu) = aggregate_rates(&catalog)?;
        let rho = utilization(lambda, mu)?;
        let queue = expected_queue_length(rho).map_or("unstable".to_string(), |l| format!("{l:.3}"));
        let q = execution_probability(&WorkloadEstimate {
            lambda,
            mu,
            cpu_capacity: 4.0,
            cpu_mean,
            mem_capacity: 8.0,
            mem_mean,
        })?;
        println!("{lambda:>8.0} {rho:>8.3} {queue:>10} {q:>8.3}");
    }
    Ok(())
}
