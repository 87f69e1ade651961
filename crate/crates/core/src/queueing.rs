//! Analytic workload model for a single service router.
//!
//! Requests for every service form a Poisson stream and execution times are
//! exponential, so the aggregate stream on a node behaves as an M/M/1
//! birth-death process. Everything here is a pure function of its inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceId(pub u32);

/// Demand profile of one in-network service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceSpec {
    pub id: ServiceId,
    /// Unnormalized popularity; normalizes to `p_j` over a catalog.
    pub popularity_weight: f64,
    /// Mean execution time in seconds.
    pub mean_exec_time: f64,
    pub cpu_demand: f64,
    pub mem_demand: f64,
    /// Per-service arrival rate in requests per second, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_rate: Option<f64>,
}

impl ServiceSpec {
    pub fn new(id: u32, popularity_weight: f64, mean_exec_time: f64, cpu: f64, mem: f64) -> Self {
        ServiceSpec {
            id: ServiceId(id),
            popularity_weight,
            mean_exec_time,
            cpu_demand: cpu,
            mem_demand: mem,
            arrival_rate: None,
        }
    }

    pub fn with_arrival_rate(mut self, rate: f64) -> Self {
        self.arrival_rate = Some(rate);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_exec_time > 0.0) || !self.mean_exec_time.is_finite() {
            return Err(Error::Domain(format!(
                "service {}: mean execution time must be positive, got {}",
                self.id.0, self.mean_exec_time
            )));
        }
        for (name, v) in [
            ("cpu demand", self.cpu_demand),
            ("memory demand", self.mem_demand),
            ("popularity weight", self.popularity_weight),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "service {}: {name} must be nonnegative, got {v}",
                    self.id.0
                )));
            }
        }
        Ok(())
    }
}

/// Rate and resource estimates that feed the execution probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadEstimate {
    /// Arrival rate, requests per second.
    pub lambda: f64,
    /// Completion rate, per second.
    pub mu: f64,
    pub cpu_capacity: f64,
    pub cpu_mean: f64,
    pub mem_capacity: f64,
    pub mem_mean: f64,
}

/// Normalized popularities `p_j` of a catalog.
pub fn normalized_popularity(catalog: &[ServiceSpec]) -> Result<Vec<f64>> {
    if catalog.is_empty() {
        return Err(Error::Domain("empty service catalog".into()));
    }
    for s in catalog {
        s.validate()?;
    }
    let total: f64 = catalog.iter().map(|s| s.popularity_weight).sum();
    if !(total > 0.0) {
        return Err(Error::Domain("catalog popularity weights sum to zero".into()));
    }
    Ok(catalog.iter().map(|s| s.popularity_weight / total).collect())
}

/// Aggregate birth and death rates `(Σ λ_j, Σ 1/t_j)` of a catalog.
///
/// Every service must carry an arrival rate; see [`assign_arrival_rates`].
pub fn aggregate_rates(catalog: &[ServiceSpec]) -> Result<(f64, f64)> {
    if catalog.is_empty() {
        return Err(Error::Domain("empty service catalog".into()));
    }
    let mut lambda = 0.0;
    let mut mu = 0.0;
    for s in catalog {
        s.validate()?;
        let rate = s
            .arrival_rate
            .ok_or_else(|| Error::Domain(format!("service {} has no arrival rate", s.id.0)))?;
        if !(rate >= 0.0) {
            return Err(Error::Domain(format!(
                "service {}: arrival rate must be nonnegative, got {rate}",
                s.id.0
            )));
        }
        lambda += rate;
        mu += 1.0 / s.mean_exec_time;
    }
    Ok((lambda, mu))
}

/// Splits an aggregate arrival rate over the catalog by popularity (`λ_j = p_j λ`).
pub fn assign_arrival_rates(catalog: &mut [ServiceSpec], lambda: f64) -> Result<()> {
    let p = normalized_popularity(catalog)?;
    for (s, p) in catalog.iter_mut().zip(p) {
        s.arrival_rate = Some(p * lambda);
    }
    Ok(())
}

/// `ρ = λ / μ`.
pub fn utilization(lambda: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("service rate must be positive, got {mu}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("arrival rate must be nonnegative, got {lambda}")));
    }
    Ok(lambda / mu)
}

/// Stationary mean number in an M/M/1 system, `ρ / (1 − ρ)`.
pub fn expected_queue_length(rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("utilization must be nonnegative, got {rho}")));
    }
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    Ok(rho / (1.0 - rho))
}

/// Popularity-weighted mean CPU and memory consumption `(c″, m″)`.
pub fn mean_consumption(catalog: &[ServiceSpec]) -> Result<(f64, f64)> {
    let p = normalized_popularity(catalog)?;
    let cpu = catalog.iter().zip(&p).map(|(s, p)| p * s.cpu_demand).sum();
    let mem = catalog.iter().zip(&p).map(|(s, p)| p * s.mem_demand).sum();
    Ok((cpu, mem))
}

/// Popularity-weighted mean execution time of a catalog, in seconds.
pub fn mean_exec_time(catalog: &[ServiceSpec]) -> Result<f64> {
    let p = normalized_popularity(catalog)?;
    Ok(catalog.iter().zip(&p).map(|(s, p)| p * s.mean_exec_time).sum())
}

/// Largest utilization a resource tolerates before its induced load
/// `l × used` reaches `capacity`.
fn capacity_ratio(capacity: f64, used: f64) -> f64 {
    capacity / (capacity + used)
}

/// Probability of executing an arriving request locally.
///
/// The thinned stream keeps its utilization at the first bottleneck between
/// CPU and memory, capped at one: `min(min(c′/(c′+c″), m′/(m′+m″)) × μ/λ, 1)`.
/// No arrivals means everything is accepted.
pub fn execution_probability(est: &WorkloadEstimate) -> Result<f64> {
    if !(est.cpu_capacity > 0.0) || !(est.mem_capacity > 0.0) {
        return Err(Error::Domain(format!(
            "capacities must be positive, got cpu={} mem={}",
            est.cpu_capacity, est.mem_capacity
        )));
    }
    if !(est.mu > 0.0) {
        return Err(Error::Domain(format!("service rate must be positive, got {}", est.mu)));
    }
    if !(est.lambda >= 0.0) || !(est.cpu_mean >= 0.0) || !(est.mem_mean >= 0.0) {
        return Err(Error::Domain(format!(
            "rates and consumptions must be nonnegative: {est:?}"
        )));
    }
    if est.lambda == 0.0 {
        return Ok(1.0);
    }
    let bound = capacity_ratio(est.cpu_capacity, est.cpu_mean).min(capacity_ratio(est.mem_capacity, est.mem_mean));
    Ok((bound * est.mu / est.lambda).min(1.0))
}
