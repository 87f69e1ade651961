//! Discrete-event simulation of service requests over a router network.
//!
//! A request is emitted by a client, handed to its edge router and then
//! admitted, forwarded or dropped according to the node strategy. Admitted
//! requests are served FIFO by one execution unit per router; the result
//! travels back along the reverse of the request's path.
//!
//! The loop is strictly sequential. Events at equal times run in insertion
//! order, so a run is a pure function of its input.

mod event;
mod node;

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{Action, ControllerInit, ControllerState};
use crate::error::{Error, Result};
use crate::metrics::{JourneySummary, LoadSeries, MetricsReport};
use crate::queueing::{ServiceId, ServiceSpec, WorkloadEstimate};
use crate::topology::{NodeId, NodeRole, Topology};
use crate::workload::{RequestEvent, Substream};

pub use event::{Event, EventKind, EventQueue};
use node::{NodeRuntime, TimeIntegral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Execute when resources allow, otherwise drop at the edge.
    None,
    /// Execute when resources allow, otherwise pass toward the server; the
    /// last hop drops.
    Passive,
    /// Execute with the controller's probability, otherwise forward to the
    /// lightest-loaded unvisited neighbor.
    Proactive,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::None, Strategy::Passive, Strategy::Proactive];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Passive => "passive",
            Strategy::Proactive => "proactive",
        }
    }
}

/// Fixed rates a proactive controller decides from instead of its running
/// estimates. Capacities come from each node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinnedRates {
    pub lambda: f64,
    pub mu: f64,
    pub cpu_mean: f64,
    pub mem_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProactiveSettings {
    /// Circular buffer size.
    pub k: usize,
    /// Seconds between load publications.
    pub exchange_period: f64,
    /// Initial estimates; derived from the catalog when absent.
    pub init: Option<ControllerInit>,
    pub pinned: Option<PinnedRates>,
}

impl Default for ProactiveSettings {
    fn default() -> Self {
        ProactiveSettings {
            k: 50,
            exchange_period: 1e-3,
            init: None,
            pinned: None,
        }
    }
}

/// Everything one run needs.
#[derive(Debug, Clone)]
pub struct SimulationInput<'a> {
    pub topology: &'a Topology,
    pub strategy: Strategy,
    pub catalog: &'a [ServiceSpec],
    pub trace: &'a [RequestEvent],
    /// Seconds; emissions stop here and the network then drains.
    pub horizon: f64,
    pub seed: u64,
    pub proactive: ProactiveSettings,
    /// Load series bin width, seconds.
    pub bin: f64,
    /// Routers whose binned load is recorded; all routers when `None`.
    pub series_nodes: Option<Vec<NodeId>>,
    pub scenario_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Executed { at: NodeId },
    Dropped { at: NodeId },
}

/// Full history of one request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestJourney {
    pub request_id: u64,
    pub client: NodeId,
    /// Routers visited, starting at the client's edge router.
    pub hops_taken: Vec<NodeId>,
    pub outcome: Outcome,
    pub emit_time: f64,
    /// When the result reached the client.
    pub complete_time: Option<f64>,
    /// Seconds; executed requests only.
    pub latency: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineStats {
    pub events: u64,
    pub exchange_messages: u64,
    /// Oldest neighbor load report consulted by a forwarding decision.
    pub max_view_age: f64,
    pub conservative_decisions: u64,
    pub proactive_decisions: u64,
    /// Forward decisions admitted locally because every neighbor was visited.
    pub fallback_admissions: u64,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub report: MetricsReport,
    pub journeys: Vec<RequestJourney>,
    pub stats: EngineStats,
}

struct RequestState {
    service: usize,
    hops: Vec<usize>,
    outcome: Option<(bool, usize)>,
    delivered_at: Option<f64>,
}

enum Admission {
    Admit,
    Forward(usize),
    Drop,
}

struct Simulation<'a> {
    input: &'a SimulationInput<'a>,
    topo: &'a Topology,
    nodes: Vec<Option<NodeRuntime>>,
    requests: Vec<RequestState>,
    /// Dense index of each client's edge router.
    edge_of: HashMap<usize, usize>,
    client_index: Vec<usize>,
    queue: EventQueue,
    in_flight: usize,
    stats: EngineStats,
}

/// Runs one simulation to completion.
pub fn simulate(input: &SimulationInput<'_>) -> Result<SimulationOutcome> {
    let mut sim = Simulation::new(input)?;
    sim.run()?;
    Ok(sim.finish())
}

impl<'a> Simulation<'a> {
    fn new(input: &'a SimulationInput<'a>) -> Result<Self> {
        let topo = input.topology;
        if !(input.horizon > 0.0) || !input.horizon.is_finite() {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                input.horizon
            )));
        }
        if !(input.bin > 0.0) {
            return Err(Error::Config(format!("bin width must be positive, got {}", input.bin)));
        }
        if input.strategy == Strategy::Proactive {
            if input.proactive.k < 2 {
                return Err(Error::Config(format!(
                    "controller buffer size must be at least 2, got {}",
                    input.proactive.k
                )));
            }
            if !(input.proactive.exchange_period > 0.0) {
                return Err(Error::Config("exchange period must be positive".into()));
            }
        }

        let services: HashMap<ServiceId, usize> = input.catalog.iter().enumerate().map(|(j, s)| (s.id, j)).collect();
        for s in input.catalog {
            s.validate()?;
        }

        let mut edge_of = HashMap::new();
        for (i, n) in topo.nodes().iter().enumerate() {
            if n.role == NodeRole::Client {
                edge_of.insert(i, topo.adjacency_of(i)[0].0);
            }
        }

        let mut requests = Vec::with_capacity(input.trace.len());
        let mut client_index = Vec::with_capacity(input.trace.len());
        let mut last = 0.0;
        for r in input.trace {
            if !(r.emit_time >= last) || r.emit_time >= input.horizon {
                return Err(Error::Config(format!(
                    "request {} emitted at {} s is out of order or past the horizon",
                    r.request_id, r.emit_time
                )));
            }
            last = r.emit_time;
            let c = topo
                .index_of(r.client)
                .filter(|i| edge_of.contains_key(i))
                .ok_or_else(|| {
                    Error::Config(format!(
                        "request {} comes from non-client node {}",
                        r.request_id, r.client
                    ))
                })?;
            let service = *services.get(&r.service).ok_or_else(|| {
                Error::Config(format!("request {} uses unknown service {}", r.request_id, r.service.0))
            })?;
            if !(r.exec_time > 0.0) {
                return Err(Error::Config(format!(
                    "request {} has no positive execution time",
                    r.request_id
                )));
            }
            client_index.push(c);
            requests.push(RequestState {
                service,
                hops: Vec::new(),
                outcome: None,
                delivered_at: None,
            });
        }

        let series: Option<Vec<usize>> = match &input.series_nodes {
            None => None,
            Some(ids) => Some(
                ids.iter()
                    .map(|id| {
                        topo.index_of(*id)
                            .filter(|&i| topo.nodes()[i].role == NodeRole::Router)
                            .ok_or_else(|| Error::Config(format!("series node {id} is not a router")))
                    })
                    .collect::<Result<_>>()?,
            ),
        };

        let init = match input.proactive.init {
            Some(init) => init,
            None => ControllerInit::from_catalog(input.catalog)?,
        };

        let mut nodes = Vec::with_capacity(topo.len());
        for (i, n) in topo.nodes().iter().enumerate() {
            if n.role != NodeRole::Router {
                nodes.push(None);
                continue;
            }
            let capacity = n.capacity.expect("routers carry capacities");
            let (controller, draws) = if input.strategy == Strategy::Proactive {
                let mut c = ControllerState::new(input.proactive.k, capacity.cpu, capacity.mem, init)?;
                if let Some(p) = input.proactive.pinned {
                    c.pin(WorkloadEstimate {
                        lambda: p.lambda,
                        mu: p.mu,
                        cpu_capacity: capacity.cpu,
                        cpu_mean: p.cpu_mean,
                        mem_capacity: capacity.mem,
                        mem_mean: p.mem_mean,
                    })?;
                }
                (Some(c), Some(Substream::Decisions(i).rng(input.seed)))
            } else {
                (None, None)
            };
            let neighbor_loads = topo
                .adjacency_of(i)
                .iter()
                .filter(|&&(j, _)| topo.nodes()[j].role == NodeRole::Router)
                .map(|&(j, _)| (j, 0.0, f64::NEG_INFINITY))
                .collect();
            let binned = series.as_ref().is_none_or(|s| s.contains(&i));
            nodes.push(Some(NodeRuntime {
                capacity,
                queue: Default::default(),
                cpu_reserved: 0.0,
                mem_reserved: 0.0,
                controller,
                draws,
                neighbor_loads,
                load: TimeIntegral::new(input.horizon, input.bin, binned),
                in_system: TimeIntegral::new(input.horizon, input.bin, false),
            }));
        }

        Ok(Simulation {
            input,
            topo,
            nodes,
            requests,
            edge_of,
            client_index,
            queue: EventQueue::new(),
            in_flight: 0,
            stats: EngineStats::default(),
        })
    }

    fn node(&mut self, i: usize) -> &mut NodeRuntime {
        self.nodes[i].as_mut().expect("router runtime")
    }

    fn run(&mut self) -> Result<()> {
        if let Some(first) = self.input.trace.first() {
            self.queue.schedule(first.emit_time, EventKind::ClientEmit { req: 0 });
        }
        if self.input.strategy == Strategy::Proactive {
            self.queue.schedule(0.0, EventKind::ExchangeTick { n: 0 });
        }
        while let Some(ev) = self.queue.pop() {
            self.stats.events += 1;
            let now = ev.time;
            match ev.kind {
                EventKind::ClientEmit { req } => self.on_emit(now, req),
                EventKind::NodeArrival { req, node } => self.on_node_arrival(now, req, node)?,
                EventKind::ServiceComplete { node } => self.on_service_complete(now, node)?,
                EventKind::ResultDelivered { req } => {
                    self.requests[req].delivered_at = Some(now);
                    self.in_flight -= 1;
                }
                EventKind::ExchangeTick { n } => self.on_exchange_tick(now, n),
                EventKind::LoadStateExchange {
                    from,
                    to,
                    load,
                    sent_at,
                } => {
                    let entry = self
                        .node(to)
                        .neighbor_loads
                        .iter_mut()
                        .find(|e| e.0 == from)
                        .expect("reports travel between adjacent routers");
                    entry.1 = load;
                    entry.2 = sent_at;
                }
            }
        }
        Ok(())
    }

    fn on_emit(&mut self, now: f64, req: usize) {
        if let Some(next) = self.input.trace.get(req + 1) {
            self.queue
                .schedule(next.emit_time, EventKind::ClientEmit { req: req + 1 });
        }
        self.in_flight += 1;
        let client = self.client_index[req];
        let edge = self.edge_of[&client];
        let delay = self.topo.link_delay(client, edge);
        self.queue
            .schedule(now + delay, EventKind::NodeArrival { req, node: edge });
    }

    fn on_node_arrival(&mut self, now: f64, req: usize, node: usize) -> Result<()> {
        self.requests[req].hops.push(node);
        let service = &self.input.catalog[self.requests[req].service];
        let (cpu, mem) = (service.cpu_demand, service.mem_demand);
        let admission = match self.input.strategy {
            Strategy::None => {
                if self.node(node).fits(cpu, mem) {
                    Admission::Admit
                } else {
                    Admission::Drop
                }
            }
            Strategy::Passive => {
                if self.node(node).fits(cpu, mem) {
                    Admission::Admit
                } else {
                    let next = self.topo.next_hop_index(node).expect("routers route to the server");
                    if next == self.topo.server_index() {
                        Admission::Drop
                    } else {
                        Admission::Forward(next)
                    }
                }
            }
            Strategy::Proactive => self.proactive_decision(now, req, node)?,
        };
        match admission {
            Admission::Admit => self.admit(now, req, node),
            Admission::Forward(next) => {
                let delay = self.topo.link_delay(node, next);
                self.queue
                    .schedule(now + delay, EventKind::NodeArrival { req, node: next });
            }
            Admission::Drop => {
                self.requests[req].outcome = Some((false, node));
                self.in_flight -= 1;
            }
        }
        Ok(())
    }

    fn proactive_decision(&mut self, now: f64, req: usize, node: usize) -> Result<Admission> {
        let rt = self.nodes[node].as_mut().expect("router runtime");
        let draw: f64 = rt.draws.as_mut().expect("proactive draws").gen();
        let decision = rt
            .controller
            .as_mut()
            .expect("proactive controller")
            .on_arrival(now, draw)?;
        self.stats.proactive_decisions += 1;
        if decision.conservative {
            self.stats.conservative_decisions += 1;
        }
        if decision.action == Action::Execute {
            return Ok(Admission::Admit);
        }
        let hops = &self.requests[req].hops;
        let mut lightest = f64::INFINITY;
        let mut ties: Vec<(usize, f64)> = Vec::new();
        for &(j, load, sent_at) in &rt.neighbor_loads {
            if hops.contains(&j) {
                continue;
            }
            if load < lightest {
                lightest = load;
                ties.clear();
            }
            if load == lightest {
                ties.push((j, sent_at));
            }
        }
        // equally light neighbors are chosen uniformly from the node's own stream
        let best = match ties.len() {
            0 => None,
            1 => Some(ties[0]),
            n => Some(ties[rt.draws.as_mut().expect("proactive draws").gen_range(0..n)]),
        };
        Ok(match best {
            Some((j, sent_at)) => {
                if sent_at.is_finite() {
                    self.stats.max_view_age = self.stats.max_view_age.max(now - sent_at);
                }
                Admission::Forward(j)
            }
            None => {
                self.stats.fallback_admissions += 1;
                Admission::Admit
            }
        })
    }

    fn admit(&mut self, now: f64, req: usize, node: usize) {
        let service = &self.input.catalog[self.requests[req].service];
        let (cpu, mem) = (service.cpu_demand, service.mem_demand);
        let exec = self.input.trace[req].exec_time;
        let baseline = self.input.strategy != Strategy::Proactive;
        let rt = self.node(node);
        debug_assert!(!baseline || rt.fits(cpu, mem), "baseline admission over capacity");
        rt.queue.push_back(req);
        rt.cpu_reserved += cpu;
        rt.mem_reserved += mem;
        rt.record(now);
        if rt.queue.len() == 1 {
            self.queue.schedule(now + exec, EventKind::ServiceComplete { node });
        }
    }

    fn on_service_complete(&mut self, now: f64, node: usize) -> Result<()> {
        let trace = self.input.trace;
        let catalog = self.input.catalog;
        let rt = self.nodes[node].as_mut().expect("router runtime");
        let req = rt.queue.pop_front().expect("a request is in service");
        let service = &catalog[self.requests[req].service];
        rt.cpu_reserved -= service.cpu_demand;
        rt.mem_reserved -= service.mem_demand;
        if rt.queue.is_empty() {
            // drop accumulated rounding error
            rt.cpu_reserved = 0.0;
            rt.mem_reserved = 0.0;
        }
        rt.record(now);
        if let Some(c) = rt.controller.as_mut() {
            c.on_complete(trace[req].exec_time, service.cpu_demand, service.mem_demand)?;
        }
        if let Some(&next) = rt.queue.front() {
            self.queue
                .schedule(now + trace[next].exec_time, EventKind::ServiceComplete { node });
        }

        self.requests[req].outcome = Some((true, node));
        let hops = &self.requests[req].hops;
        let mut back = 0.0;
        for w in hops.windows(2) {
            back += self.topo.link_delay(w[0], w[1]);
        }
        let client = self.client_index[req];
        back += self.topo.link_delay(client, hops[0]);
        self.queue.schedule(now + back, EventKind::ResultDelivered { req });
        Ok(())
    }

    fn on_exchange_tick(&mut self, now: f64, n: u64) {
        for i in 0..self.nodes.len() {
            let Some(rt) = self.nodes[i].as_ref() else { continue };
            let load = rt.advertised_load();
            for k in 0..rt.neighbor_loads.len() {
                let to = self.nodes[i].as_ref().unwrap().neighbor_loads[k].0;
                let delay = self.topo.link_delay(i, to);
                self.queue.schedule(
                    now + delay,
                    EventKind::LoadStateExchange {
                        from: i,
                        to,
                        load,
                        sent_at: now,
                    },
                );
                self.stats.exchange_messages += 1;
            }
        }
        let next = (n + 1) as f64 * self.input.proactive.exchange_period;
        if next < self.input.horizon || self.in_flight > 0 {
            self.queue.schedule(next, EventKind::ExchangeTick { n: n + 1 });
        }
    }

    fn finish(mut self) -> SimulationOutcome {
        let topo = self.topo;
        let mut per_node_avg_load = BTreeMap::new();
        let mut per_node_mean_in_system = BTreeMap::new();
        let mut per_node_peak_load = BTreeMap::new();
        let mut load_series = BTreeMap::new();
        for (i, slot) in self.nodes.iter_mut().enumerate() {
            let Some(rt) = slot.as_mut() else { continue };
            let id = topo.nodes()[i].id;
            rt.load.finish();
            rt.in_system.finish();
            per_node_avg_load.insert(id, rt.load.mean());
            per_node_mean_in_system.insert(id, rt.in_system.mean());
            per_node_peak_load.insert(id, rt.load.peak());
            if let Some(values) = rt.load.bin_means() {
                load_series.insert(
                    id,
                    LoadSeries {
                        bin_ms: self.input.bin * 1e3,
                        values,
                    },
                );
            }
        }

        let mut journeys = Vec::with_capacity(self.requests.len());
        for (n, r) in self.requests.into_iter().enumerate() {
            let ev = &self.input.trace[n];
            let (executed, at) = r.outcome.expect("every request terminates after drain");
            let at = topo.nodes()[at].id;
            let latency = r.delivered_at.map(|t| t - ev.emit_time);
            journeys.push(RequestJourney {
                request_id: ev.request_id,
                client: ev.client,
                hops_taken: r.hops.iter().map(|&h| topo.nodes()[h].id).collect(),
                outcome: if executed {
                    Outcome::Executed { at }
                } else {
                    Outcome::Dropped { at }
                },
                emit_time: ev.emit_time,
                complete_time: r.delivered_at,
                latency,
            });
        }

        let report = MetricsReport::assemble(
            self.input.strategy,
            self.input.seed,
            self.input.scenario_digest.clone(),
            self.input.horizon,
            per_node_avg_load,
            per_node_mean_in_system,
            per_node_peak_load,
            load_series,
            JourneySummary::from_journeys(&journeys),
            &journeys,
        );
        SimulationOutcome {
            report,
            journeys,
            stats: self.stats,
        }
    }
}
