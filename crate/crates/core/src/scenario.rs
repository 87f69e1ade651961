//! Scenario files: one JSON document describing topology, workload,
//! controller settings, seed and replicate count.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controller::ControllerInit;
use crate::engine::{simulate, PinnedRates, ProactiveSettings, SimulationInput, SimulationOutcome, Strategy};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::queueing::ServiceSpec;
use crate::topology::{self, CapacityProfile, NodeId, NodeRole, Topology, DEFAULT_LINK_DELAY_MS};
use crate::workload::{generate_trace, replicate_seed, validate_jitters, CatalogConfig, JitterSpec, RequestEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    #[serde(default = "one_replicate")]
    pub replicates: usize,
    pub strategy: Strategy,
    pub topology: TopologyConfig,
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one_replicate() -> usize {
    1
}

fn default_delay() -> f64 {
    DEFAULT_LINK_DELAY_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyConfig {
    Grid {
        rows: usize,
        cols: usize,
        /// `[row, col]` of the client's edge router.
        client_at: [usize; 2],
        server_at: [usize; 2],
        capacity: CapacityProfile,
        #[serde(default = "default_delay")]
        link_delay_ms: f64,
    },
    Line {
        routers: usize,
        capacity: CapacityProfile,
        #[serde(default = "default_delay")]
        link_delay_ms: f64,
    },
    /// Topology text file, relative to the scenario file's directory.
    File {
        path: PathBuf,
        /// Replaces every router capacity given in the file.
        #[serde(default)]
        capacity: Option<CapacityProfile>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientRate {
    pub node: NodeId,
    /// Requests per second.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterConfig {
    pub start_ms: f64,
    pub duration_ms: f64,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    /// Aggregate requests per second, split evenly over the topology's
    /// clients. Exclusive with `clients`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clients: Option<Vec<ClientRate>>,
    /// Multiplies every client rate.
    #[serde(default = "unit_scale")]
    pub scale: f64,
    pub horizon_s: f64,
    #[serde(default)]
    pub jitters: Vec<JitterConfig>,
    #[serde(default)]
    pub catalog: CatalogConfig,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_period")]
    pub exchange_period_ms: f64,
    /// Initial estimates; derived from the catalog when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<ControllerInit>,
    /// Fixed rates used in place of the running estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinned: Option<PinnedRates>,
}

fn default_k() -> usize {
    50
}

fn default_period() -> f64 {
    1.0
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            k: default_k(),
            exchange_period_ms: default_period(),
            init: None,
            pinned: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_bin")]
    pub bin_ms: f64,
    /// Routers with a recorded load series; every router when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_nodes: Option<Vec<NodeId>>,
}

fn default_bin() -> f64 {
    1.0
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            bin_ms: default_bin(),
            series_nodes: None,
        }
    }
}

/// A validated scenario with its topology resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub topology: Topology,
    digest: String,
}

impl Scenario {
    /// Reads and validates a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: ScenarioConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Scenario::new(config, base)
    }

    /// Validates `config`; file topologies resolve against `base_dir`.
    pub fn new(config: ScenarioConfig, base_dir: &Path) -> Result<Self> {
        let topology = build_topology(&config.topology, base_dir)?;
        let scenario = Scenario::with_topology(config, topology)?;
        Ok(scenario)
    }

    fn with_topology(config: ScenarioConfig, topology: Topology) -> Result<Self> {
        validate(&config, &topology)?;
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&config).expect("config serializes"));
        hasher.update(topology.to_text().as_bytes());
        let digest = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Ok(Scenario {
            config,
            topology,
            digest,
        })
    }

    /// SHA-256 of the canonical config and resolved topology, hex.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// Same scenario under another strategy.
    pub fn with_strategy(&self, strategy: Strategy) -> Result<Self> {
        let mut config = self.config.clone();
        config.strategy = strategy;
        Scenario::with_topology(config, self.topology.clone())
    }

    /// Same scenario with every client rate multiplied by `scale`.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        let mut config = self.config.clone();
        config.workload.scale = scale;
        Scenario::with_topology(config, self.topology.clone())
    }

    pub fn with_seed(&self, seed: u64) -> Result<Self> {
        let mut config = self.config.clone();
        config.seed = seed;
        Scenario::with_topology(config, self.topology.clone())
    }

    pub fn with_replicates(&self, replicates: usize) -> Result<Self> {
        let mut config = self.config.clone();
        config.replicates = replicates;
        Scenario::with_topology(config, self.topology.clone())
    }

    /// `(client, rate)` pairs after scaling.
    pub fn client_rates(&self) -> Vec<(NodeId, f64)> {
        let w = &self.config.workload;
        match (&w.clients, w.rate) {
            (Some(list), _) => list.iter().map(|c| (c.node, c.rate * w.scale)).collect(),
            (None, Some(rate)) => {
                let clients = self.topology.clients();
                let each = rate * w.scale / clients.len() as f64;
                clients.into_iter().map(|c| (c, each)).collect()
            }
            (None, None) => unreachable!("validated"),
        }
    }

    pub fn jitters(&self) -> Vec<JitterSpec> {
        self.config
            .workload
            .jitters
            .iter()
            .map(|j| JitterSpec::new(j.start_ms / 1e3, j.duration_ms / 1e3, j.multiplier))
            .collect()
    }

    /// Service catalog and emission trace of replicate `index`.
    pub fn workload(&self, index: usize) -> Result<(Vec<ServiceSpec>, Vec<RequestEvent>)> {
        let seed = replicate_seed(self.config.seed, index);
        let catalog = self.config.workload.catalog.build(seed)?;
        let trace = generate_trace(
            &self.client_rates(),
            &self.jitters(),
            self.config.workload.horizon_s,
            &catalog,
            seed,
        )?;
        Ok((catalog, trace))
    }

    /// Runs replicate `index` and keeps its journeys.
    pub fn simulate_replicate(&self, index: usize) -> Result<SimulationOutcome> {
        let seed = replicate_seed(self.config.seed, index);
        let (catalog, trace) = self.workload(index)?;
        let c = &self.config.controller;
        let input = SimulationInput {
            topology: &self.topology,
            strategy: self.config.strategy,
            catalog: &catalog,
            trace: &trace,
            horizon: self.config.workload.horizon_s,
            seed,
            proactive: ProactiveSettings {
                k: c.k,
                exchange_period: c.exchange_period_ms / 1e3,
                init: c.init,
                pinned: c.pinned,
            },
            bin: self.config.output.bin_ms / 1e3,
            series_nodes: self.config.output.series_nodes.clone(),
            scenario_digest: self.digest.clone(),
        };
        simulate(&input)
    }

    pub fn run_replicate(&self, index: usize) -> Result<MetricsReport> {
        Ok(self.simulate_replicate(index)?.report)
    }

    /// Runs every replicate in parallel; reports come back in replicate order.
    pub fn run_all(&self) -> Result<Vec<MetricsReport>> {
        (0..self.config.replicates)
            .into_par_iter()
            .map(|i| self.run_replicate(i))
            .collect()
    }
}

fn build_topology(config: &TopologyConfig, base_dir: &Path) -> Result<Topology> {
    match config {
        TopologyConfig::Grid {
            rows,
            cols,
            client_at,
            server_at,
            capacity,
            link_delay_ms,
        } => topology::grid(
            *rows,
            *cols,
            capacity,
            (client_at[0], client_at[1]),
            (server_at[0], server_at[1]),
            *link_delay_ms,
        ),
        TopologyConfig::Line {
            routers,
            capacity,
            link_delay_ms,
        } => topology::line(*routers, capacity, *link_delay_ms),
        TopologyConfig::File { path, capacity } => {
            let t = topology::load_from_file(base_dir.join(path))?;
            Ok(match capacity {
                Some(p) => t.with_capacities(p),
                None => t,
            })
        }
    }
}

fn positive(value: f64, what: &str) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive, got {value}")))
    }
}

fn validate(config: &ScenarioConfig, topology: &Topology) -> Result<()> {
    if config.replicates == 0 {
        return Err(Error::Config("replicates must be at least 1".into()));
    }
    for n in topology.routers() {
        let c = n.capacity.expect("routers carry capacities");
        positive(c.cpu, &format!("cpu capacity of node {}", n.id))?;
        positive(c.mem, &format!("memory capacity of node {}", n.id))?;
    }

    let w = &config.workload;
    positive(w.horizon_s, "workload.horizon_s")?;
    if !(w.scale >= 0.0 && w.scale.is_finite()) {
        return Err(Error::Config(format!(
            "workload.scale must be nonnegative, got {}",
            w.scale
        )));
    }
    match (&w.clients, w.rate) {
        (Some(_), Some(_)) => return Err(Error::Config("workload takes either rate or clients, not both".into())),
        (None, None) => return Err(Error::Config("workload needs rate or clients".into())),
        (None, Some(rate)) => {
            positive(rate, "workload.rate")?;
            if topology.clients().is_empty() {
                return Err(Error::Config("topology has no clients".into()));
            }
        }
        (Some(list), None) => {
            if list.is_empty() {
                return Err(Error::Config("workload.clients is empty".into()));
            }
            for c in list {
                positive(c.rate, &format!("rate of client {}", c.node))?;
                match topology.node(c.node) {
                    Some(n) if n.role == NodeRole::Client => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "workload client {} is not a client node",
                            c.node
                        )))
                    }
                }
            }
        }
    }
    for j in &w.jitters {
        positive(j.duration_ms, "jitter duration_ms")?;
    }
    let jitters: Vec<JitterSpec> = w
        .jitters
        .iter()
        .map(|j| JitterSpec::new(j.start_ms / 1e3, j.duration_ms / 1e3, j.multiplier))
        .collect();
    validate_jitters(&jitters, w.horizon_s)?;
    w.catalog.build(config.seed)?;

    let c = &config.controller;
    if c.k < 2 {
        return Err(Error::Config(format!("controller.k must be at least 2, got {}", c.k)));
    }
    positive(c.exchange_period_ms, "controller.exchange_period_ms")?;
    if let Some(init) = c.init {
        positive(init.mu, "controller.init.mu")?;
        if init.lambda < 0.0 || init.cpu_mean < 0.0 || init.mem_mean < 0.0 {
            return Err(Error::Config("controller.init values must be nonnegative".into()));
        }
    }
    if let Some(p) = c.pinned {
        positive(p.mu, "controller.pinned.mu")?;
        if p.lambda < 0.0 || p.cpu_mean < 0.0 || p.mem_mean < 0.0 {
            return Err(Error::Config("controller.pinned values must be nonnegative".into()));
        }
    }

    positive(config.output.bin_ms, "output.bin_ms")?;
    if let Some(nodes) = &config.output.series_nodes {
        for id in nodes {
            match topology.node(*id) {
                Some(n) if n.role == NodeRole::Router => {}
                _ => return Err(Error::Config(format!("series node {id} is not a router"))),
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_config() -> ScenarioConfig {
        serde_json::from_str(
            r#"{
                "seed": 7,
                "strategy": "passive",
                "topology": {"kind": "line", "routers": 2, "capacity": {"default": {"cpu": 2, "mem": 2}}},
                "workload": {"rate": 500, "horizon_s": 0.2,
                             "catalog": {"kind": "explicit", "services": [{"exec_ms": 1, "cpu": 1, "mem": 1}]}}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = line_config();
        assert_eq!(c.replicates, 1);
        assert_eq!(c.controller.k, 50);
        assert_eq!(c.controller.exchange_period_ms, 1.0);
        assert_eq!(c.output.bin_ms, 1.0);
        assert_eq!(c.workload.scale, 1.0);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"seed": 1, "strategy": "none", "bogus": 3,
            "topology": {"kind": "line", "routers": 1, "capacity": {"default": {"cpu": 1, "mem": 1}}},
            "workload": {"rate": 1, "horizon_s": 1}}"#;
        assert!(serde_json::from_str::<ScenarioConfig>(bad).is_err());
    }

    #[test]
    fn validation_errors() {
        let base = Path::new(".");
        let mut c = line_config();
        c.controller.k = 1;
        assert!(matches!(Scenario::new(c, base), Err(Error::Config(_))));
        let mut c = line_config();
        c.workload.horizon_s = 0.0;
        assert!(Scenario::new(c, base).is_err());
        let mut c = line_config();
        c.workload.clients = Some(vec![ClientRate {
            node: NodeId(1),
            rate: 3.0,
        }]);
        assert!(Scenario::new(c, base).is_err());
        let mut c = line_config();
        c.output.series_nodes = Some(vec![NodeId(3)]);
        assert!(Scenario::new(c, base).is_err());
        let mut c = line_config();
        c.topology = TopologyConfig::File {
            path: "missing.topo".into(),
            capacity: None,
        };
        assert!(matches!(Scenario::new(c, base), Err(Error::Io { .. })));
    }

    #[test]
    fn digest_tracks_config() {
        let a = Scenario::new(line_config(), Path::new(".")).unwrap();
        let b = Scenario::new(line_config(), Path::new(".")).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        let c = a.with_seed(8).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn replicates_are_ordered_and_independent() {
        let s = Scenario::new(line_config(), Path::new("."))
            .unwrap()
            .with_replicates(3)
            .unwrap();
        let all = s.run_all().unwrap();
        assert_eq!(all.len(), 3);
        for (i, r) in all.iter().enumerate() {
            assert_eq!(r, &s.run_replicate(i).unwrap());
            assert_eq!(r.seed, replicate_seed(7, i));
        }
        assert_ne!(all[0].per_node_avg_load, all[1].per_node_avg_load);
    }

    #[test]
    fn equal_split_over_clients() {
        let s = Scenario::new(line_config(), Path::new(".")).unwrap();
        assert_eq!(s.client_rates(), vec![(NodeId(0), 500.0)]);
        let s = s.with_scale(8.0).unwrap();
        assert_eq!(s.client_rates(), vec![(NodeId(0), 4000.0)]);
    }
}
