//! Per-node proactive congestion controller.
//!
//! The controller keeps four fixed-size circular buffers: arrival timestamps,
//! execution times, CPU usage and memory usage of the most recent requests.
//! On every arrival it estimates the arrival rate in O(1), boosts the estimate
//! when the rate is rising (conservative mode), and turns the estimates into an
//! execution probability. Completion statistics and the reference arrival rate
//! `λ′` are folded in with an exponential mean of weight 0.5 each time the
//! corresponding buffer wraps.
//!
//! The uniform draw for each decision is supplied by the caller, so a
//! controller is a pure state machine and can be replayed exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::queueing::{self, ServiceSpec, WorkloadEstimate};

/// Fixed-capacity ring of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircularBuffer {
    slots: Vec<f64>,
    write_index: usize,
    len: usize,
    filled: bool,
}

impl CircularBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "circular buffer capacity must be positive");
        CircularBuffer {
            slots: vec![0.0; capacity],
            write_index: 0,
            len: 0,
            filled: false,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn write_index(&self) -> usize {
        self.write_index
    }

    /// Number of samples currently held.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Whether the buffer has wrapped at least once.
    pub fn is_filled(&self) -> bool {
        self.filled
    }

    pub fn slot(&self, index: usize) -> f64 {
        self.slots[index % self.slots.len()]
    }

    /// Stores `value` at the write index and advances it; returns `true` when
    /// the index wraps back to zero.
    pub fn push(&mut self, value: f64) -> bool {
        let k = self.slots.len();
        self.slots[self.write_index] = value;
        self.write_index = (self.write_index + 1) % k;
        self.len = (self.len + 1).min(k);
        let wrapped = self.write_index == 0;
        if wrapped {
            self.filled = true;
        }
        wrapped
    }

    /// Held samples from oldest to newest.
    pub fn iter_chronological(&self) -> impl Iterator<Item = f64> + '_ {
        let k = self.slots.len();
        let start = if self.filled { self.write_index } else { 0 };
        (0..self.len).map(move |j| self.slots[(start + j) % k])
    }

    pub fn mean(&self) -> Option<f64> {
        if self.len == 0 {
            return None;
        }
        Some(self.iter_chronological().sum::<f64>() / self.len as f64)
    }
}

/// Seed values for a controller's estimates before its buffers wrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerInit {
    /// Arrival-rate estimate returned while fewer than two arrivals are known.
    pub lambda: f64,
    pub mu: f64,
    pub cpu_mean: f64,
    pub mem_mean: f64,
}

impl Default for ControllerInit {
    fn default() -> Self {
        ControllerInit {
            lambda: 0.0,
            mu: 1.0,
            cpu_mean: 0.0,
            mem_mean: 0.0,
        }
    }
}

impl ControllerInit {
    /// Warm start from a configured catalog: `μ = 1/t̄`, `c″`, `m″` from the
    /// popularity-weighted means.
    pub fn from_catalog(catalog: &[ServiceSpec]) -> Result<Self> {
        let t = queueing::mean_exec_time(catalog)?;
        let (cpu_mean, mem_mean) = queueing::mean_consumption(catalog)?;
        Ok(ControllerInit {
            lambda: 0.0,
            mu: 1.0 / t,
            cpu_mean,
            mem_mean,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Execute,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalDecision {
    pub action: Action,
    /// Execution probability used for this arrival.
    pub q_used: f64,
    /// Whether the rate boost `Δλ > 0` was applied.
    pub conservative: bool,
    /// Raw arrival-rate estimate after recording this arrival.
    pub lambda: f64,
    /// Rate plugged into the execution probability (`λ + Δλ`).
    pub lambda_effective: f64,
}

/// State of one node's proactive controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    buf_arrivals: CircularBuffer,
    buf_exec: CircularBuffer,
    buf_cpu: CircularBuffer,
    buf_mem: CircularBuffer,
    last_timestamp: Option<f64>,
    last_rate: f64,
    lambda_prev: f64,
    mu_est: f64,
    cpu_mean_est: f64,
    mem_mean_est: f64,
    interval_sum: f64,
    cpu_capacity: f64,
    mem_capacity: f64,
    /// Fixed estimate used for decisions instead of the running one.
    pinned: Option<WorkloadEstimate>,
}

impl ControllerState {
    pub fn new(k: usize, cpu_capacity: f64, mem_capacity: f64, init: ControllerInit) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!(
                "controller buffer size must be at least 2, got {k}"
            )));
        }
        if !(cpu_capacity > 0.0) || !(mem_capacity > 0.0) {
            return Err(Error::Config(format!(
                "controller capacities must be positive, got cpu={cpu_capacity} mem={mem_capacity}"
            )));
        }
        if !(init.mu > 0.0) || !(init.cpu_mean >= 0.0) || !(init.mem_mean >= 0.0) || !(init.lambda >= 0.0) {
            return Err(Error::Config(format!("invalid initial estimates {init:?}")));
        }
        Ok(ControllerState {
            buf_arrivals: CircularBuffer::new(k),
            buf_exec: CircularBuffer::new(k),
            buf_cpu: CircularBuffer::new(k),
            buf_mem: CircularBuffer::new(k),
            last_timestamp: None,
            last_rate: init.lambda,
            lambda_prev: 0.0,
            mu_est: init.mu,
            cpu_mean_est: init.cpu_mean,
            mem_mean_est: init.mem_mean,
            interval_sum: 0.0,
            cpu_capacity,
            mem_capacity,
            pinned: None,
        })
    }

    /// Decide from a fixed estimate; rate bookkeeping still runs.
    pub fn pin(&mut self, estimate: WorkloadEstimate) -> Result<()> {
        queueing::execution_probability(&estimate)?;
        self.pinned = Some(estimate);
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.buf_arrivals.capacity()
    }

    pub fn arrivals(&self) -> &CircularBuffer {
        &self.buf_arrivals
    }

    pub fn exec_times(&self) -> &CircularBuffer {
        &self.buf_exec
    }

    pub fn arrival_index(&self) -> usize {
        self.buf_arrivals.write_index()
    }

    pub fn completion_index(&self) -> usize {
        self.buf_exec.write_index()
    }

    pub fn lambda_prev(&self) -> f64 {
        self.lambda_prev
    }

    pub fn lambda_last(&self) -> f64 {
        self.last_rate
    }

    pub fn mu(&self) -> f64 {
        self.mu_est
    }

    pub fn cpu_mean(&self) -> f64 {
        self.cpu_mean_est
    }

    pub fn mem_mean(&self) -> f64 {
        self.mem_mean_est
    }

    pub fn cpu_capacity(&self) -> f64 {
        self.cpu_capacity
    }

    pub fn interval_sum(&self) -> f64 {
        self.interval_sum
    }

    /// The estimate the controller would use at arrival rate `lambda`.
    pub fn estimate(&self, lambda: f64) -> WorkloadEstimate {
        WorkloadEstimate {
            lambda,
            mu: self.mu_est,
            cpu_capacity: self.cpu_capacity,
            cpu_mean: self.cpu_mean_est,
            mem_capacity: self.mem_capacity,
            mem_mean: self.mem_mean_est,
        }
    }

    /// Execution probability the running estimates give at rate `lambda`.
    pub fn probability_at(&self, lambda: f64) -> f64 {
        queueing::execution_probability(&self.estimate(lambda)).expect("controller estimates are kept in domain")
    }

    /// Records an arrival at `now` and returns the mean arrival rate over the
    /// timestamps held in the buffer.
    ///
    /// Once the buffer is full the interval leaving the window is
    /// `buf[i+1] − buf[i]` and the one entering is `now − buf[i−1]`, so the
    /// rolling interval sum moves in constant time. This is the rate-tracking
    /// half of [`on_arrival`](Self::on_arrival): it also refreshes `λ′` on
    /// wrap, but makes no execution decision.
    pub fn mean_rate_incremental(&mut self, now: f64) -> Result<f64> {
        let (lambda, wrapped) = self.record_arrival(now)?;
        if wrapped {
            self.lambda_prev = 0.5 * (self.lambda_prev + lambda);
        }
        Ok(lambda)
    }

    fn record_arrival(&mut self, now: f64) -> Result<(f64, bool)> {
        if !now.is_finite() {
            return Err(Error::Contract(format!("timestamp {now} is not finite")));
        }
        if let Some(last) = self.last_timestamp {
            if now < last {
                return Err(Error::Contract(format!(
                    "arrival timestamp {now} precedes previous {last}"
                )));
            }
        }
        let k = self.k();
        let i = self.buf_arrivals.write_index();
        if self.buf_arrivals.is_filled() {
            let leaving = self.buf_arrivals.slot(i + 1) - self.buf_arrivals.slot(i);
            let entering = now - self.buf_arrivals.slot(i + k - 1);
            self.interval_sum = self.interval_sum - leaving + entering;
        } else if let Some(last) = self.last_timestamp {
            self.interval_sum += now - last;
        }
        self.last_timestamp = Some(now);
        let wrapped = self.buf_arrivals.push(now);

        let held = self.buf_arrivals.len();
        // Identical timestamps leave the previous estimate in place.
        if held >= 2 && self.interval_sum > 0.0 {
            self.last_rate = (held - 1) as f64 / self.interval_sum;
        }
        Ok((self.last_rate, wrapped))
    }

    /// Handles one request arrival.
    pub fn on_arrival(&mut self, now: f64, uniform_draw: f64) -> Result<ArrivalDecision> {
        if !(0.0..1.0).contains(&uniform_draw) {
            return Err(Error::Contract(format!("uniform draw {uniform_draw} outside [0, 1)")));
        }
        let (lambda, wrapped) = self.record_arrival(now)?;
        let delta = (lambda - self.lambda_prev).max(0.0);
        let lambda_effective = lambda + delta;

        let (q, conservative) = match &self.pinned {
            Some(est) => (queueing::execution_probability(est)?, false),
            None => (self.probability_at(lambda_effective), delta > 0.0),
        };
        let action = if uniform_draw < q {
            Action::Execute
        } else {
            Action::Forward
        };

        if wrapped {
            self.lambda_prev = 0.5 * (self.lambda_prev + lambda_effective - delta);
        }

        Ok(ArrivalDecision {
            action,
            q_used: q,
            conservative,
            lambda,
            lambda_effective,
        })
    }

    /// Records a finished service and refreshes `μ`, `c″`, `m″` on wrap.
    pub fn on_complete(&mut self, exec_time: f64, cpu_used: f64, mem_used: f64) -> Result<()> {
        if !(exec_time > 0.0) || !exec_time.is_finite() {
            return Err(Error::Contract(format!(
                "execution time must be positive, got {exec_time}"
            )));
        }
        if !(cpu_used >= 0.0) || !(mem_used >= 0.0) {
            return Err(Error::Contract(format!(
                "resource consumption must be nonnegative, got cpu={cpu_used} mem={mem_used}"
            )));
        }
        self.buf_cpu.push(cpu_used);
        self.buf_mem.push(mem_used);
        if self.buf_exec.push(exec_time) {
            let mean_exec = self.buf_exec.mean().expect("wrapped buffer is full");
            self.mu_est = 0.5 * (self.mu_est + 1.0 / mean_exec);
            self.cpu_mean_est = 0.5 * (self.cpu_mean_est + self.buf_cpu.mean().unwrap());
            self.mem_mean_est = 0.5 * (self.mem_mean_est + self.buf_mem.mean().unwrap());
        }
        Ok(())
    }
}
