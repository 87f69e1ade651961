//! Seeded request streams.
//!
//! All randomness in a run comes from one scenario seed split into named
//! ChaCha substreams, so arrivals, service choice, execution times and
//! controller draws never perturb each other. Two strategies run on the same
//! seed therefore see the same client emission trace.

use rand::distributions::Open01;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queueing::{normalized_popularity, ServiceId, ServiceSpec};
use crate::topology::NodeId;

/// Named random substreams of one scenario seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Catalog,
    ServiceChoice,
    ExecTime,
    /// Arrival process of the client at this position in the client list.
    Arrivals(usize),
    /// Controller draws of the node at this dense index.
    Decisions(usize),
}

impl Substream {
    fn stream_id(self) -> u64 {
        match self {
            Substream::Catalog => 1,
            Substream::ServiceChoice => 2,
            Substream::ExecTime => 3,
            Substream::Arrivals(i) => 1 << 20 | i as u64,
            Substream::Decisions(i) => 2 << 20 | i as u64,
        }
    }

    pub fn rng(self, seed: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.stream_id());
        rng
    }
}

/// Seed of replicate `index`; replicate 0 keeps the base seed.
pub fn replicate_seed(base: u64, index: usize) -> u64 {
    if index == 0 {
        return base;
    }
    // splitmix64 finalizer
    let mut z = base ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A burst of elevated (or suppressed) request rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterSpec {
    /// Seconds.
    pub start: f64,
    /// Seconds.
    pub duration: f64,
    pub rate_multiplier: f64,
}

impl JitterSpec {
    pub fn new(start: f64, duration: f64, rate_multiplier: f64) -> Self {
        JitterSpec {
            start,
            duration,
            rate_multiplier,
        }
    }

    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end()
    }
}

fn open_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Inverse-CDF exponential variate: `−mean × ln(draw)`.
pub fn exponential_exec_time(mean: f64, draw: f64) -> f64 {
    -mean * draw.ln()
}

/// Homogeneous Poisson arrivals in `[0, horizon)`.
pub fn poisson_stream<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    if !(rate > 0.0) {
        return out;
    }
    out.reserve((rate * horizon * 1.1) as usize + 16);
    let mut t = 0.0;
    loop {
        let next = t + exponential_exec_time(1.0 / rate, open_draw(rng));
        if next >= horizon {
            break;
        }
        // a gap below one ulp would repeat a timestamp
        if next > t {
            out.push(next);
        }
        t = next;
    }
    out
}

/// Validates jitter windows against a horizon: inside it, positive
/// durations, nonnegative multipliers, no overlap.
pub fn validate_jitters(jitters: &[JitterSpec], horizon: f64) -> Result<()> {
    let mut sorted: Vec<&JitterSpec> = jitters.iter().collect();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    for j in &sorted {
        if !(j.duration > 0.0) || !(j.rate_multiplier >= 0.0) || !(j.start >= 0.0) {
            return Err(Error::Config(format!("invalid jitter window {j:?}")));
        }
        if j.end() > horizon {
            return Err(Error::Config(format!(
                "jitter window [{}, {}) s extends past the horizon {horizon} s",
                j.start,
                j.end()
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[1].start < w[0].end() {
            return Err(Error::Config(format!(
                "jitter windows starting at {} s and {} s overlap",
                w[0].start, w[1].start
            )));
        }
    }
    Ok(())
}

/// Piecewise-constant-rate Poisson arrivals: `base_rate` outside the jitter
/// windows and `base_rate × rate_multiplier` inside. Generated by thinning one
/// stream at the peak rate.
pub fn with_jitters<R: Rng + ?Sized>(
    base_rate: f64,
    jitters: &[JitterSpec],
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    validate_jitters(jitters, horizon)?;
    if jitters.is_empty() {
        return Ok(poisson_stream(base_rate, horizon, rng));
    }
    let peak = jitters.iter().map(|j| j.rate_multiplier).fold(1.0f64, f64::max);
    let peak_rate = base_rate * peak;
    if !(peak_rate > 0.0) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        let next = t + exponential_exec_time(1.0 / peak_rate, open_draw(rng));
        if next >= horizon {
            break;
        }
        let multiplier = jitters
            .iter()
            .find(|j| j.contains(next))
            .map_or(1.0, |j| j.rate_multiplier);
        let keep: f64 = rng.gen();
        if keep < multiplier / peak && next > t {
            out.push(next);
        }
        t = next;
    }
    Ok(out)
}

/// Inverse-CDF sampler over a catalog's normalized popularity.
#[derive(Debug, Clone)]
pub struct ServiceSampler {
    cumulative: Vec<f64>,
}

impl ServiceSampler {
    pub fn new(catalog: &[ServiceSpec]) -> Result<Self> {
        let p = normalized_popularity(catalog)?;
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(ServiceSampler { cumulative })
    }

    /// Catalog position selected by `draw ∈ [0, 1)`.
    pub fn sample(&self, draw: f64) -> usize {
        let j = self.cumulative.partition_point(|&c| c <= draw);
        // rounding can leave the last cumulative value just under 1
        let j = j.min(self.cumulative.len() - 1);
        // skip zero-weight entries a boundary draw might land on
        let mut j = j;
        while j > 0 && self.cumulative[j] == self.cumulative[j - 1] {
            j -= 1;
        }
        j
    }
}

/// Service selected by `draw` under normalized popularity.
pub fn sample_service(catalog: &[ServiceSpec], draw: f64) -> Result<ServiceId> {
    let sampler = ServiceSampler::new(catalog)?;
    Ok(catalog[sampler.sample(draw)].id)
}

/// Catalog description in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogConfig {
    /// Services listed one by one; execution times in milliseconds.
    Explicit { services: Vec<ServiceEntry> },
    /// `count` services with Zipf popularity and execution times drawn
    /// uniformly once per scenario.
    Zipf {
        count: usize,
        exponent: f64,
        exec_ms_min: f64,
        exec_ms_max: f64,
        cpu: f64,
        mem: f64,
    },
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig::Zipf {
            count: 100,
            exponent: 0.8,
            exec_ms_min: 0.5,
            exec_ms_max: 1.5,
            cpu: 1.0,
            mem: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceEntry {
    #[serde(default = "one")]
    pub weight: f64,
    pub exec_ms: f64,
    pub cpu: f64,
    pub mem: f64,
}

fn one() -> f64 {
    1.0
}

impl CatalogConfig {
    pub fn build(&self, seed: u64) -> Result<Vec<ServiceSpec>> {
        let catalog = match self {
            CatalogConfig::Explicit { services } => services
                .iter()
                .enumerate()
                .map(|(j, s)| ServiceSpec::new(j as u32, s.weight, s.exec_ms / 1e3, s.cpu, s.mem))
                .collect::<Vec<_>>(),
            &CatalogConfig::Zipf {
                count,
                exponent,
                exec_ms_min,
                exec_ms_max,
                cpu,
                mem,
            } => {
                if count == 0 || !(exec_ms_min > 0.0) || exec_ms_max < exec_ms_min {
                    return Err(Error::Config(format!("invalid zipf catalog {self:?}")));
                }
                let mut rng = Substream::Catalog.rng(seed);
                (0..count)
                    .map(|j| {
                        let exec_ms = if exec_ms_max > exec_ms_min {
                            rng.gen_range(exec_ms_min..exec_ms_max)
                        } else {
                            exec_ms_min
                        };
                        let weight = 1.0 / ((j + 1) as f64).powf(exponent);
                        ServiceSpec::new(j as u32, weight, exec_ms / 1e3, cpu, mem)
                    })
                    .collect()
            }
        };
        normalized_popularity(&catalog).map_err(|e| Error::Config(format!("catalog: {e}")))?;
        Ok(catalog)
    }
}

/// One request emitted by a client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequestEvent {
    pub request_id: u64,
    /// Seconds.
    pub emit_time: f64,
    pub client: NodeId,
    pub service: ServiceId,
    /// Drawn execution time of this request, seconds.
    pub exec_time: f64,
}

/// Emission trace of all clients up to `horizon`, ordered by time then
/// client position. Request ids follow that order.
pub fn generate_trace(
    clients: &[(NodeId, f64)],
    jitters: &[JitterSpec],
    horizon: f64,
    catalog: &[ServiceSpec],
    seed: u64,
) -> Result<Vec<RequestEvent>> {
    let sampler = ServiceSampler::new(catalog)?;
    let mut arrivals: Vec<(f64, usize)> = Vec::new();
    for (i, &(_, rate)) in clients.iter().enumerate() {
        if !(rate >= 0.0) {
            return Err(Error::Config(format!("client rate must be nonnegative, got {rate}")));
        }
        let mut rng = Substream::Arrivals(i).rng(seed);
        arrivals.extend(
            with_jitters(rate, jitters, horizon, &mut rng)?
                .into_iter()
                .map(|t| (t, i)),
        );
    }
    arrivals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut choice = Substream::ServiceChoice.rng(seed);
    let mut exec = Substream::ExecTime.rng(seed);
    Ok(arrivals
        .into_iter()
        .enumerate()
        .map(|(n, (t, i))| {
            let j = sampler.sample(choice.gen());
            RequestEvent {
                request_id: n as u64,
                emit_time: t,
                client: clients[i].0,
                service: catalog[j].id,
                exec_time: exponential_exec_time(catalog[j].mean_exec_time, open_draw(&mut exec)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn strictly_increasing(ts: &[f64]) -> bool {
        ts.windows(2).all(|w| w[0] < w[1])
    }

    #[test]
    fn zero_rate_is_empty() {
        assert!(poisson_stream(0.0, 10.0, &mut rng(1)).is_empty());
    }

    #[test]
    fn poisson_count_statistics() {
        // count ~ Poisson(10000), σ = 100
        let ts = poisson_stream(1000.0, 10.0, &mut rng(2));
        assert!((ts.len() as f64 - 10_000.0).abs() < 300.0, "{}", ts.len());
        assert!(strictly_increasing(&ts));
        assert!(ts.iter().all(|&t| (0.0..10.0).contains(&t)));
    }

    #[test]
    fn poisson_is_reproducible() {
        let a = poisson_stream(500.0, 2.0, &mut rng(3));
        let b = poisson_stream(500.0, 2.0, &mut rng(3));
        assert_eq!(a, b);
        let c = poisson_stream(500.0, 2.0, &mut rng(4));
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_thresholds() {
        let single = [ServiceSpec::new(7, 2.0, 1.0, 1.0, 1.0)];
        for d in [0.0, 0.3, 0.999] {
            assert_eq!(sample_service(&single, d).unwrap(), ServiceId(7));
        }
        let two = [
            ServiceSpec::new(1, 0.25, 1.0, 1.0, 1.0),
            ServiceSpec::new(2, 0.75, 1.0, 1.0, 1.0),
        ];
        assert_eq!(sample_service(&two, 0.1).unwrap(), ServiceId(1));
        assert_eq!(sample_service(&two, 0.5).unwrap(), ServiceId(2));
        assert!(sample_service(&[], 0.5).is_err());
    }

    #[test]
    fn zero_weight_services_are_never_sampled() {
        let cat = [
            ServiceSpec::new(0, 1.0, 1.0, 1.0, 1.0),
            ServiceSpec::new(1, 0.0, 1.0, 1.0, 1.0),
            ServiceSpec::new(2, 1.0, 1.0, 1.0, 1.0),
        ];
        let s = ServiceSampler::new(&cat).unwrap();
        for k in 0..1000 {
            assert_ne!(s.sample(k as f64 / 1000.0), 1);
        }
    }

    #[test]
    fn sampling_frequencies_binomial() {
        let cat = [
            ServiceSpec::new(0, 0.2, 1.0, 1.0, 1.0),
            ServiceSpec::new(1, 0.8, 1.0, 1.0, 1.0),
        ];
        let s = ServiceSampler::new(&cat).unwrap();
        let mut r = rng(5);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| s.sample(r.gen()) == 0).count() as f64;
        let sd = (n as f64 * 0.2 * 0.8).sqrt();
        assert!((hits - 0.2 * n as f64).abs() < 3.0 * sd);
    }

    #[test]
    fn sampling_chi_square() {
        let weights = [5.0, 3.0, 1.0, 0.5, 0.5];
        let cat: Vec<_> = weights
            .iter()
            .enumerate()
            .map(|(j, &w)| ServiceSpec::new(j as u32, w, 1.0, 1.0, 1.0))
            .collect();
        let p = normalized_popularity(&cat).unwrap();
        let s = ServiceSampler::new(&cat).unwrap();
        let mut r = rng(6);
        let n = 1_000_000;
        let mut counts = [0u64; 5];
        for _ in 0..n {
            counts[s.sample(r.gen())] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&p)
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // χ²(4) upper 0.001 quantile
        assert!(chi2 < 18.467, "chi2 = {chi2}");
    }

    #[test]
    fn exponential_inversion() {
        assert!((exponential_exec_time(1.0, (-1.0f64).exp()) - 1.0).abs() < 1e-12);
        assert!((exponential_exec_time(2.0, (-3.0f64).exp()) - 6.0).abs() < 1e-12);
        let mut r = rng(7);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| exponential_exec_time(0.5, r.sample(Open01)))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "{mean}");
    }

    #[test]
    fn jitter_degenerate_matches_plain() {
        let a = with_jitters(800.0, &[], 3.0, &mut rng(8)).unwrap();
        let b = poisson_stream(800.0, 3.0, &mut rng(8));
        assert_eq!(a, b);
    }

    #[test]
    fn jitter_window_rates() {
        // the reference trace: base 1000/s, ×6 bursts at 40 ms and 70 ms
        let jitters = [JitterSpec::new(0.040, 0.010, 6.0), JitterSpec::new(0.070, 0.010, 6.0)];
        let runs = 400;
        let (mut inside, mut outside) = (0usize, 0usize);
        for seed in 0..runs {
            let ts = with_jitters(1000.0, &jitters, 0.150, &mut rng(seed)).unwrap();
            assert!(strictly_increasing(&ts));
            inside += ts.iter().filter(|&&t| jitters.iter().any(|j| j.contains(t))).count();
            outside += ts.iter().filter(|&&t| !jitters.iter().any(|j| j.contains(t))).count();
        }
        // expected 120 per run inside (2 × 10 ms × 6000/s), 130 outside
        let (ei, eo) = (120.0 * runs as f64, 130.0 * runs as f64);
        assert!((inside as f64 - ei).abs() < 3.0 * ei.sqrt(), "{inside}");
        assert!((outside as f64 - eo).abs() < 3.0 * eo.sqrt(), "{outside}");
    }

    #[test]
    fn jitter_with_zero_multiplier_silences_window() {
        let j = [JitterSpec::new(0.5, 0.25, 0.0)];
        let ts = with_jitters(2000.0, &j, 1.0, &mut rng(9)).unwrap();
        assert!(!ts.is_empty());
        assert!(ts.iter().all(|&t| !(0.5..0.75).contains(&t)));
    }

    #[test]
    fn jitter_validation() {
        let overlap = [JitterSpec::new(0.1, 0.2, 2.0), JitterSpec::new(0.2, 0.1, 2.0)];
        assert!(matches!(
            with_jitters(1.0, &overlap, 1.0, &mut rng(0)),
            Err(Error::Config(_))
        ));
        let outside = [JitterSpec::new(0.9, 0.2, 2.0)];
        assert!(with_jitters(1.0, &outside, 1.0, &mut rng(0)).is_err());
        let empty = [JitterSpec::new(0.1, 0.0, 2.0)];
        assert!(with_jitters(1.0, &empty, 1.0, &mut rng(0)).is_err());
    }

    #[test]
    fn substreams_are_independent() {
        let mut a = Substream::Arrivals(0).rng(11);
        let mut b = Substream::Arrivals(1).rng(11);
        let x: Vec<u64> = (0..4).map(|_| a.gen()).collect();
        let y: Vec<u64> = (0..4).map(|_| b.gen()).collect();
        assert_ne!(x, y);
        let mut a2 = Substream::Arrivals(0).rng(11);
        assert_eq!(x, (0..4).map(|_| a2.gen()).collect::<Vec<u64>>());
        assert_eq!(replicate_seed(5, 0), 5);
        assert_ne!(replicate_seed(5, 1), replicate_seed(5, 2));
    }

    #[test]
    fn trace_is_ordered_and_reproducible() {
        let cat = CatalogConfig::default().build(1).unwrap();
        assert_eq!(cat.len(), 100);
        let clients = [(NodeId(3), 300.0), (NodeId(9), 700.0)];
        let a = generate_trace(&clients, &[], 2.0, &cat, 42).unwrap();
        let b = generate_trace(&clients, &[], 2.0, &cat, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].emit_time <= w[1].emit_time));
        assert!(a
            .iter()
            .enumerate()
            .all(|(n, r)| r.request_id == n as u64 && r.exec_time > 0.0));
        let from_9 = a.iter().filter(|r| r.client == NodeId(9)).count() as f64;
        assert!((from_9 - 1400.0).abs() < 3.0 * 1400f64.sqrt());
    }
}
