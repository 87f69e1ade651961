use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;

use crate::controller::ControllerState;
use crate::topology::Capacity;

/// Time integral of a piecewise-constant signal over `[0, horizon)`, with an
/// optional binned breakdown.
#[derive(Debug, Clone)]
pub(crate) struct TimeIntegral {
    horizon: f64,
    last_t: f64,
    value: f64,
    total: f64,
    peak: f64,
    bin: f64,
    bins: Option<Vec<f64>>,
}

impl TimeIntegral {
    pub fn new(horizon: f64, bin: f64, binned: bool) -> Self {
        let n = (horizon / bin).ceil() as usize;
        TimeIntegral {
            horizon,
            last_t: 0.0,
            value: 0.0,
            total: 0.0,
            peak: 0.0,
            bin,
            bins: binned.then(|| vec![0.0; n]),
        }
    }

    fn accumulate(&mut self, t0: f64, t1: f64) {
        let (t0, t1) = (t0.min(self.horizon), t1.min(self.horizon));
        if t1 <= t0 || self.value == 0.0 {
            return;
        }
        self.total += self.value * (t1 - t0);
        if let Some(bins) = &mut self.bins {
            let mut b = (t0 / self.bin) as usize;
            let mut start = t0;
            while start < t1 && b < bins.len() {
                let edge = ((b + 1) as f64 * self.bin).min(t1);
                if edge > start {
                    bins[b] += self.value * (edge - start);
                }
                start = edge;
                b += 1;
            }
        }
    }

    pub fn set(&mut self, t: f64, value: f64) {
        self.accumulate(self.last_t, t);
        self.last_t = t;
        self.value = value;
        if t < self.horizon {
            self.peak = self.peak.max(value);
        }
    }

    pub fn finish(&mut self) {
        let t = self.horizon.max(self.last_t);
        self.accumulate(self.last_t, t);
        self.last_t = t;
    }

    pub fn mean(&self) -> f64 {
        self.total / self.horizon
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    /// Per-bin averages; the trailing bin is averaged over its covered width.
    pub fn bin_means(&self) -> Option<Vec<f64>> {
        let bins = self.bins.as_ref()?;
        Some(
            bins.iter()
                .enumerate()
                .map(|(b, v)| {
                    let width = (self.horizon - b as f64 * self.bin).min(self.bin);
                    v / width
                })
                .collect(),
        )
    }
}

pub(crate) struct NodeRuntime {
    pub capacity: Capacity,
    /// Admitted requests; the front one is in service.
    pub queue: VecDeque<usize>,
    pub cpu_reserved: f64,
    pub mem_reserved: f64,
    pub controller: Option<ControllerState>,
    pub draws: Option<ChaCha8Rng>,
    /// Router neighbors with the last reported load and its send time.
    pub neighbor_loads: Vec<(usize, f64, f64)>,
    pub load: TimeIntegral,
    pub in_system: TimeIntegral,
}

impl NodeRuntime {
    pub fn fits(&self, cpu: f64, mem: f64) -> bool {
        let slack = 1e-9;
        self.cpu_reserved + cpu <= self.capacity.cpu * (1.0 + slack)
            && self.mem_reserved + mem <= self.capacity.mem * (1.0 + slack)
    }

    /// Normalized CPU load from actual reservations.
    pub fn cpu_load(&self) -> f64 {
        self.cpu_reserved / self.capacity.cpu
    }

    /// Load a proactive node advertises: number in system times its `c″`
    /// estimate, over `c′`.
    pub fn advertised_load(&self) -> f64 {
        match &self.controller {
            Some(c) => self.queue.len() as f64 * c.cpu_mean() / self.capacity.cpu,
            None => self.cpu_load(),
        }
    }

    pub fn record(&mut self, now: f64) {
        let load = self.cpu_load();
        self.load.set(now, load);
        self.in_system.set(now, self.queue.len() as f64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_and_bins() {
        let mut t = TimeIntegral::new(1.0, 0.25, true);
        t.set(0.1, 2.0);
        t.set(0.3, 0.0);
        t.set(0.9, 1.0);
        t.finish();
        // 2 × 0.2 + 1 × 0.1
        assert!((t.mean() - 0.5).abs() < 1e-12);
        let bins = t.bin_means().unwrap();
        let want = [2.0 * 0.15 / 0.25, 2.0 * 0.05 / 0.25, 0.0, 0.1 / 0.25];
        for (a, b) in bins.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{bins:?}");
        }
        assert_eq!(t.peak(), 2.0);
    }

    #[test]
    fn values_past_horizon_are_ignored() {
        let mut t = TimeIntegral::new(1.0, 0.5, true);
        t.set(0.5, 1.0);
        t.set(3.0, 5.0);
        t.finish();
        assert!((t.mean() - 0.5).abs() < 1e-12);
        assert_eq!(t.peak(), 1.0);
        assert_eq!(t.bin_means().unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn partial_trailing_bin() {
        let mut t = TimeIntegral::new(1.0, 0.4, true);
        t.set(0.0, 1.0);
        t.finish();
        let bins = t.bin_means().unwrap();
        assert_eq!(bins.len(), 3);
        assert!(bins.iter().all(|&b| (b - 1.0).abs() < 1e-12));
    }
}
