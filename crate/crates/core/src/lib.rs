//! Computation congestion control for in-network services.
//!
//! Routers that execute service requests can be overloaded by computation
//! rather than traffic. This crate models such a network as a discrete-event
//! simulation and implements three admission strategies:
//!
//! * [`Strategy::None`] executes when resources allow and drops otherwise.
//! * [`Strategy::Passive`] executes greedily and otherwise passes the request
//!   toward the server.
//! * [`Strategy::Proactive`] estimates arrival and service rates online,
//!   executes each request with the probability that keeps its queue within
//!   capacity, and forwards the rest to its least-loaded neighbor.
//!
//! The analytic model lives in [`queueing`], the per-node estimator in
//! [`controller`]. [`scenario`] loads experiment files and [`output`] writes
//! their results.

// Negated float comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod output;
pub mod queueing;
pub mod scenario;
pub mod topology;
pub mod workload;

pub use controller::{Action, ArrivalDecision, CircularBuffer, ControllerInit, ControllerState};
pub use engine::{simulate, Outcome, RequestJourney, SimulationInput, SimulationOutcome, Strategy};
pub use error::{Error, Result};
pub use metrics::{load_time_series, top_k_loads, window_avg_load, MetricsReport};
pub use queueing::{ServiceId, ServiceSpec, WorkloadEstimate};
pub use scenario::{Scenario, ScenarioConfig};
pub use topology::{NodeId, Topology};
