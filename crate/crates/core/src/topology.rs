//! Network graph with per-router capacities and static routing toward a
//! single server.
//!
//! Nodes are routers, client endpoints or the server endpoint. Clients hang
//! off exactly one edge router; the server is the routing destination and
//! never executes services itself. Hop-count distances to the server are
//! computed once at construction, ties broken toward the smallest id.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::{self, Write as _};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LINK_DELAY_MS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Router,
    Client,
    Server,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    pub cpu: f64,
    pub mem: f64,
}

impl Capacity {
    pub fn new(cpu: f64, mem: f64) -> Self {
        Capacity { cpu, mem }
    }
}

/// Per-router capacities: one default plus optional per-node overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityProfile {
    pub default: Capacity,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<NodeId, Capacity>,
}

impl CapacityProfile {
    pub fn uniform(cpu: f64, mem: f64) -> Self {
        CapacityProfile {
            default: Capacity::new(cpu, mem),
            overrides: BTreeMap::new(),
        }
    }

    pub fn for_node(&self, id: NodeId) -> Capacity {
        self.overrides.get(&id).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub role: NodeRole,
    /// Present for routers only.
    pub capacity: Option<Capacity>,
}

impl Node {
    pub fn router(id: u32, capacity: Capacity) -> Self {
        Node {
            id: NodeId(id),
            role: NodeRole::Router,
            capacity: Some(capacity),
        }
    }

    pub fn client(id: u32) -> Self {
        Node {
            id: NodeId(id),
            role: NodeRole::Client,
            capacity: None,
        }
    }

    pub fn server(id: u32) -> Self {
        Node {
            id: NodeId(id),
            role: NodeRole::Server,
            capacity: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub delay_ms: f64,
}

impl Edge {
    pub fn new(a: u32, b: u32, delay_ms: f64) -> Self {
        Edge {
            a: NodeId(a),
            b: NodeId(b),
            delay_ms,
        }
    }

    /// Link delay in seconds.
    pub fn delay(&self) -> f64 {
        self.delay_ms / 1e3
    }

    fn key(&self) -> (NodeId, NodeId) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

/// Ordered node ids from source to destination.
pub type Path = Vec<NodeId>;

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: Vec<Node>,
    index: HashMap<NodeId, usize>,
    edges: Vec<Edge>,
    /// Neighbor indices with link delay in seconds, sorted by index.
    adjacency: Vec<Vec<(usize, f64)>>,
    server: usize,
    clients: Vec<usize>,
    distance: Vec<u32>,
    next_hop: Vec<Option<usize>>,
}

impl Topology {
    /// Builds and validates a topology. Node order does not matter; indices
    /// follow ascending id so index order and id order agree.
    pub fn new(mut nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        nodes.sort_by_key(|n| n.id);
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(Error::Config(format!("duplicate node {}", n.id)));
            }
            if n.role == NodeRole::Router {
                match n.capacity {
                    Some(c) if c.cpu > 0.0 && c.mem > 0.0 && c.cpu.is_finite() && c.mem.is_finite() => {}
                    other => {
                        return Err(Error::Config(format!(
                            "router {} needs positive capacities, got {other:?}",
                            n.id
                        )))
                    }
                }
            }
        }
        if !nodes.iter().any(|n| n.role == NodeRole::Router) {
            return Err(Error::Config("topology has no routers".into()));
        }
        let servers: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].role == NodeRole::Server)
            .collect();
        let server = match servers.as_slice() {
            [s] => *s,
            [] => return Err(Error::Config("no server declared".into())),
            _ => return Err(Error::Config("more than one server declared".into())),
        };

        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut seen = BTreeSet::new();
        for e in &edges {
            let (Some(&a), Some(&b)) = (index.get(&e.a), index.get(&e.b)) else {
                return Err(Error::Config(format!(
                    "edge {}-{} references an unknown node",
                    e.a, e.b
                )));
            };
            if a == b {
                return Err(Error::Config(format!("self-loop on node {}", e.a)));
            }
            if !(e.delay_ms > 0.0) || !e.delay_ms.is_finite() {
                return Err(Error::Config(format!(
                    "edge {}-{} needs a positive delay, got {} ms",
                    e.a, e.b, e.delay_ms
                )));
            }
            if !seen.insert(e.key()) {
                return Err(Error::Config(format!("duplicate edge {}-{}", e.a, e.b)));
            }
            adjacency[a].push((b, e.delay()));
            adjacency[b].push((a, e.delay()));
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(j, _)| j);
        }

        let clients: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].role == NodeRole::Client)
            .collect();
        for &c in &clients {
            match adjacency[c].as_slice() {
                [(r, _)] if nodes[*r].role == NodeRole::Router => {}
                _ => {
                    return Err(Error::Config(format!(
                        "client {} must attach to exactly one router",
                        nodes[c].id
                    )))
                }
            }
        }

        // connectivity over the whole graph
        let mut reach = vec![false; nodes.len()];
        let mut queue = VecDeque::from([server]);
        reach[server] = true;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &adjacency[v] {
                if !reach[u] {
                    reach[u] = true;
                    queue.push_back(u);
                }
            }
        }
        if let Some(i) = reach.iter().position(|r| !r) {
            return Err(Error::Config(format!(
                "topology is disconnected: node {} cannot reach the server",
                nodes[i].id
            )));
        }

        // hop counts toward the server; clients are leaves and never transit
        let mut distance = vec![u32::MAX; nodes.len()];
        distance[server] = 0;
        let mut queue = VecDeque::from([server]);
        while let Some(v) = queue.pop_front() {
            if v != server && nodes[v].role != NodeRole::Router {
                continue;
            }
            for &(u, _) in &adjacency[v] {
                if distance[u] == u32::MAX {
                    distance[u] = distance[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        if let Some(i) = distance.iter().position(|&d| d == u32::MAX) {
            return Err(Error::Config(format!(
                "node {} reaches the server only through a client endpoint",
                nodes[i].id
            )));
        }
        let next_hop = (0..nodes.len())
            .map(|v| {
                (v != server).then(|| {
                    adjacency[v]
                        .iter()
                        .map(|&(u, _)| u)
                        .find(|&u| distance[u] + 1 == distance[v] && nodes[u].role != NodeRole::Client)
                        .expect("BFS parent exists")
                })
            })
            .collect();

        let mut edges = edges;
        edges.sort_by_key(|e| e.key());
        Ok(Topology {
            nodes,
            index,
            edges,
            adjacency,
            server,
            clients,
            distance,
            next_hop,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn server(&self) -> NodeId {
        self.nodes[self.server].id
    }

    pub fn clients(&self) -> Vec<NodeId> {
        self.clients.iter().map(|&i| self.nodes[i].id).collect()
    }

    pub fn routers(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Router)
    }

    pub fn router_count(&self) -> usize {
        self.routers().count()
    }

    /// Edges whose endpoints are both routers.
    pub fn router_edge_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|e| {
                self.node(e.a).unwrap().role == NodeRole::Router && self.node(e.b).unwrap().role == NodeRole::Router
            })
            .count()
    }

    fn idx(&self, id: NodeId) -> Result<usize> {
        self.index
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Contract(format!("unknown node {id}")))
    }

    pub fn neighbors(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let i = self.idx(id)?;
        Ok(self.adjacency[i].iter().map(|&(j, _)| self.nodes[j].id).collect())
    }

    pub fn degree(&self, id: NodeId) -> Result<usize> {
        Ok(self.adjacency[self.idx(id)?].len())
    }

    /// Hop count from `id` to the server.
    pub fn distance_to_server(&self, id: NodeId) -> Result<u32> {
        Ok(self.distance[self.idx(id)?])
    }

    /// Neighbor on a hop-count shortest path to the server, smallest id first.
    pub fn next_hop_to_server(&self, from: NodeId) -> Result<NodeId> {
        let i = self.idx(from)?;
        match self.next_hop[i] {
            Some(j) => Ok(self.nodes[j].id),
            None => Err(Error::Contract("the server has no next hop to itself".into())),
        }
    }

    /// Shortest path from `from` to the server, both ends included.
    pub fn path_to_server(&self, from: NodeId) -> Result<Path> {
        let mut i = self.idx(from)?;
        let mut path = vec![self.nodes[i].id];
        while let Some(j) = self.next_hop[i] {
            path.push(self.nodes[j].id);
            i = j;
        }
        Ok(path)
    }

    /// Replaces every router's capacity from `profile`.
    pub fn with_capacities(mut self, profile: &CapacityProfile) -> Self {
        for n in &mut self.nodes {
            if n.role == NodeRole::Router {
                n.capacity = Some(profile.for_node(n.id));
            }
        }
        self
    }

    // Dense-index accessors for the simulation loop.

    pub(crate) fn len(&self) -> usize {
        self.nodes.len()
    }

    pub(crate) fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub(crate) fn adjacency_of(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub(crate) fn next_hop_index(&self, i: usize) -> Option<usize> {
        self.next_hop[i]
    }

    pub(crate) fn server_index(&self) -> usize {
        self.server
    }

    pub(crate) fn link_delay(&self, a: usize, b: usize) -> f64 {
        let adj = &self.adjacency[a];
        let pos = adj.binary_search_by_key(&b, |&(j, _)| j).expect("nodes are adjacent");
        adj[pos].1
    }

    /// Serializes to the line-oriented topology format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            match n.role {
                NodeRole::Router => {
                    let c = n.capacity.unwrap();
                    writeln!(out, "node {} cpu={} mem={}", n.id, c.cpu, c.mem).unwrap();
                }
                NodeRole::Client => writeln!(out, "client {}", n.id).unwrap(),
                NodeRole::Server => writeln!(out, "server {}", n.id).unwrap(),
            }
        }
        for e in &self.edges {
            writeln!(out, "edge {} {} delay_ms={}", e.a, e.b, e.delay_ms).unwrap();
        }
        out
    }
}

fn check_grid_coord(rows: usize, cols: usize, (r, c): (usize, usize), what: &str) -> Result<()> {
    if r >= rows || c >= cols {
        return Err(Error::Config(format!(
            "{what} coordinate ({r},{c}) outside {rows}x{cols} grid"
        )));
    }
    Ok(())
}

/// Id of the router at `(row, col)` in a grid built by [`grid`].
pub fn grid_router_id(cols: usize, (row, col): (usize, usize)) -> NodeId {
    NodeId((row * cols + col) as u32)
}

/// 4-neighbor `rows × cols` lattice of routers with a client endpoint on the
/// router at `client_at` and the server endpoint on the router at `server_at`.
///
/// Router `(r, c)` gets id `r * cols + c`; the client is `rows * cols` and the
/// server `rows * cols + 1`. All links use `link_delay_ms`.
pub fn grid(
    rows: usize,
    cols: usize,
    capacities: &CapacityProfile,
    client_at: (usize, usize),
    server_at: (usize, usize),
    link_delay_ms: f64,
) -> Result<Topology> {
    if rows < 2 || cols < 2 {
        return Err(Error::Config(format!(
            "grid needs at least 2x2 routers, got {rows}x{cols}"
        )));
    }
    check_grid_coord(rows, cols, client_at, "client")?;
    check_grid_coord(rows, cols, server_at, "server")?;
    let n = (rows * cols) as u32;
    let mut nodes: Vec<Node> = (0..n)
        .map(|id| Node::router(id, capacities.for_node(NodeId(id))))
        .collect();
    nodes.push(Node::client(n));
    nodes.push(Node::server(n + 1));
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = grid_router_id(cols, (r, c)).0;
            if c + 1 < cols {
                edges.push(Edge::new(id, id + 1, link_delay_ms));
            }
            if r + 1 < rows {
                edges.push(Edge::new(id, id + cols as u32, link_delay_ms));
            }
        }
    }
    edges.push(Edge::new(n, grid_router_id(cols, client_at).0, link_delay_ms));
    edges.push(Edge::new(n + 1, grid_router_id(cols, server_at).0, link_delay_ms));
    Topology::new(nodes, edges)
}

/// Chain `client - r1 - ... - rN - server`: client id 0, routers `1..=N`,
/// server `N + 1`.
pub fn line(routers: usize, capacities: &CapacityProfile, link_delay_ms: f64) -> Result<Topology> {
    if routers < 1 {
        return Err(Error::Config("line topology needs at least one router".into()));
    }
    let n = routers as u32;
    let mut nodes = vec![Node::client(0), Node::server(n + 1)];
    nodes.extend((1..=n).map(|id| Node::router(id, capacities.for_node(NodeId(id)))));
    let edges = (0..=n).map(|id| Edge::new(id, id + 1, link_delay_ms)).collect();
    Topology::new(nodes, edges)
}

/// A non-fatal normalization applied while parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

/// Parses the line-oriented topology format, returning warnings for
/// duplicate edges that were dropped.
pub fn parse_topology(text: &str) -> Result<(Topology, Vec<ParseWarning>)> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut declared: HashMap<u32, usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut edge_keys = BTreeSet::new();
    let mut warnings = Vec::new();

    let err = |line: usize, message: String| Error::Parse { line, message };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let keyword = tokens.next().unwrap();
        let parse_id = |tok: Option<&str>| -> Result<u32> {
            let tok = tok.ok_or_else(|| err(line, format!("`{keyword}` is missing a node id")))?;
            tok.parse::<u32>()
                .map_err(|_| err(line, format!("invalid node id `{tok}`")))
        };
        let parse_keys = |tokens: &mut dyn Iterator<Item = &str>, allowed: &[&str]| -> Result<BTreeMap<String, f64>> {
            let mut out = BTreeMap::new();
            for tok in tokens {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| err(line, format!("expected key=value, got `{tok}`")))?;
                if !allowed.contains(&k) {
                    return Err(err(line, format!("unknown key `{k}`")));
                }
                let v: f64 = v
                    .parse()
                    .map_err(|_| err(line, format!("invalid number `{v}` for `{k}`")))?;
                if out.insert(k.to_string(), v).is_some() {
                    return Err(err(line, format!("key `{k}` given twice")));
                }
            }
            Ok(out)
        };

        match keyword {
            "node" | "client" | "server" => {
                let id = parse_id(tokens.next())?;
                if let Some(prev) = declared.get(&id) {
                    return Err(err(line, format!("node {id} already declared on line {prev}")));
                }
                let node = match keyword {
                    "node" => {
                        let keys = parse_keys(&mut tokens, &["cpu", "mem"])?;
                        let get = |k: &str| {
                            keys.get(k)
                                .copied()
                                .ok_or_else(|| err(line, format!("node {id} is missing `{k}=`")))
                        };
                        let cap = Capacity::new(get("cpu")?, get("mem")?);
                        if !(cap.cpu > 0.0) || !(cap.mem > 0.0) {
                            return Err(err(line, format!("node {id} needs positive capacities")));
                        }
                        Node::router(id, cap)
                    }
                    "client" => Node::client(id),
                    _ => {
                        if nodes.iter().any(|n| n.role == NodeRole::Server) {
                            return Err(err(line, "more than one server declared".into()));
                        }
                        Node::server(id)
                    }
                };
                if keyword != "node" {
                    if let Some(extra) = tokens.next() {
                        return Err(err(line, format!("unexpected token `{extra}`")));
                    }
                }
                declared.insert(id, line);
                nodes.push(node);
            }
            "edge" => {
                let a = parse_id(tokens.next())?;
                let b = parse_id(tokens.next())?;
                let keys = parse_keys(&mut tokens, &["delay_ms"])?;
                for id in [a, b] {
                    if !declared.contains_key(&id) {
                        return Err(err(line, format!("edge references undeclared node {id}")));
                    }
                }
                if a == b {
                    return Err(err(line, format!("self-loop on node {a}")));
                }
                let delay_ms = keys.get("delay_ms").copied().unwrap_or(DEFAULT_LINK_DELAY_MS);
                if !(delay_ms > 0.0) {
                    return Err(err(line, format!("delay_ms must be positive, got {delay_ms}")));
                }
                let edge = Edge::new(a, b, delay_ms);
                if !edge_keys.insert(edge.key()) {
                    let message = format!("duplicate edge {a}-{b} ignored");
                    log::warn!("line {line}: {message}");
                    warnings.push(ParseWarning { line, message });
                    continue;
                }
                edges.push(edge);
            }
            other => return Err(err(line, format!("unknown declaration `{other}`"))),
        }
    }

    Ok((Topology::new(nodes, edges)?, warnings))
}

/// Reads a topology file.
pub fn load_from_file(path: impl AsRef<FsPath>) -> Result<Topology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (topology, _) = parse_topology(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    Ok(topology)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform() -> CapacityProfile {
        CapacityProfile::uniform(4.0, 100.0)
    }

    fn g(rows: usize, cols: usize) -> Topology {
        grid(rows, cols, &uniform(), (0, 0), (rows - 1, cols - 1), 1.0).unwrap()
    }

    #[test]
    fn grid_counts() {
        let t = g(10, 10);
        assert_eq!(t.router_count(), 100);
        assert_eq!(t.router_edge_count(), 180);
        let t = g(2, 2);
        assert_eq!(t.router_count(), 4);
        assert_eq!(t.router_edge_count(), 4);
    }

    #[test]
    fn grid_degrees() {
        let t = g(3, 3);
        assert_eq!(t.degree(grid_router_id(3, (1, 1))).unwrap(), 4);
        // corner (0,2) has no endpoint attached
        assert_eq!(t.degree(grid_router_id(3, (0, 2))).unwrap(), 2);
        assert_eq!(t.neighbors(grid_router_id(3, (2, 0))).unwrap().len(), 2);
    }

    #[test]
    fn grid_rejects_bad_coordinates() {
        assert!(matches!(
            grid(3, 3, &uniform(), (3, 0), (2, 2), 1.0),
            Err(Error::Config(_))
        ));
        assert!(grid(1, 5, &uniform(), (0, 0), (0, 4), 1.0).is_err());
    }

    #[test]
    fn grid_next_hop_tie_break() {
        let t = g(10, 10);
        assert_eq!(t.next_hop_to_server(NodeId(0)).unwrap(), NodeId(1));
        assert_eq!(t.next_hop_to_server(NodeId(99)).unwrap(), t.server());
        assert_eq!(t.next_hop_to_server(NodeId(100)).unwrap(), NodeId(0));
        assert!(matches!(t.next_hop_to_server(t.server()), Err(Error::Contract(_))));
    }

    #[test]
    fn line_shapes() {
        let t = line(2, &uniform(), 1.0).unwrap();
        assert_eq!(t.nodes().len(), 4);
        assert_eq!(t.next_hop_to_server(NodeId(1)).unwrap(), NodeId(2));
        assert_eq!(t.next_hop_to_server(NodeId(2)).unwrap(), NodeId(3));
        assert_eq!(t.neighbors(NodeId(1)).unwrap(), vec![NodeId(0), NodeId(2)]);
        let t = line(1, &uniform(), 1.0).unwrap();
        assert_eq!(t.router_count(), 1);
        let t = line(5, &uniform(), 1.0).unwrap();
        assert_eq!(t.nodes().len(), 7);
        assert_eq!(t.edges().len(), 6);
        assert!(line(0, &uniform(), 1.0).is_err());
        assert!(t.neighbors(NodeId(42)).is_err());
    }

    const SMALL: &str = "\
# four routers in a diamond
node 1 cpu=4 mem=8
node 2 cpu=4 mem=8
node 3 cpu=2 mem=8  # weaker
node 4 cpu=4 mem=8
client 10
server 20
edge 1 2 delay_ms=1
edge 1 3
edge 2 4 delay_ms=2.5
edge 3 4
edge 10 1
edge 20 4
";

    #[test]
    fn parse_small_file() {
        let (t, warnings) = parse_topology(SMALL).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(t.router_count(), 4);
        assert_eq!(t.clients(), vec![NodeId(10)]);
        assert_eq!(t.server(), NodeId(20));
        assert_eq!(t.node(NodeId(3)).unwrap().capacity, Some(Capacity::new(2.0, 8.0)));
        assert_eq!(t.next_hop_to_server(NodeId(1)).unwrap(), NodeId(2));
        let (again, _) = parse_topology(&t.to_text()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn duplicate_edge_is_ignored() {
        let text = format!("{SMALL}edge 2 1 delay_ms=5\n");
        let (t, warnings) = parse_topology(&text).unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].line, 14);
        assert_eq!(t.edges().len(), 6);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("node 1 cpu=4 mem=8 color=3\n", 1),
            ("node 1 cpu=4\n", 1),
            ("node 1 cpu=4 mem=8\nedge 1 2\n", 2),
            ("node 1 cpu=4 mem=8\nlink 1 2\n", 2),
            ("node x cpu=4 mem=8\n", 1),
            ("node 1 cpu=4 mem=8\nnode 1 cpu=4 mem=8\n", 2),
            ("server 1\nserver 2\n", 2),
        ];
        for (text, want) in cases {
            match parse_topology(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn disconnected_and_missing_server() {
        let text = "node 1 cpu=1 mem=1\nnode 2 cpu=1 mem=1\nserver 3\nedge 1 3\n";
        match parse_topology(text) {
            Err(Error::Config(msg)) => assert!(msg.contains("node 2"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let text = "node 1 cpu=1 mem=1\n";
        assert!(matches!(parse_topology(text), Err(Error::Config(m)) if m.contains("no server")));
    }

    #[test]
    fn load_from_file_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.topo");
        std::fs::write(&p, SMALL).unwrap();
        assert_eq!(load_from_file(&p).unwrap().router_count(), 4);
        assert!(matches!(load_from_file(dir.path().join("nope")), Err(Error::Io { .. })));
    }

    fn bfs_distances(t: &Topology) -> HashMap<NodeId, u32> {
        // independent BFS over the public neighbor API
        let mut dist = HashMap::new();
        dist.insert(t.server(), 0);
        let mut q = VecDeque::from([t.server()]);
        while let Some(v) = q.pop_front() {
            if v != t.server() && t.node(v).unwrap().role != NodeRole::Router {
                continue;
            }
            for u in t.neighbors(v).unwrap() {
                if !dist.contains_key(&u) {
                    dist.insert(u, dist[&v] + 1);
                    q.push_back(u);
                }
            }
        }
        dist
    }

    proptest! {
        #[test]
        fn generator_counts(rows in 2usize..=20, cols in 2usize..=20, n in 1usize..=20) {
            let t = g(rows, cols);
            prop_assert_eq!(t.router_count(), rows * cols);
            prop_assert_eq!(t.router_edge_count(), rows * (cols - 1) + cols * (rows - 1));
            prop_assert_eq!(t.nodes().len(), rows * cols + 2);
            let l = line(n, &uniform(), 1.0).unwrap();
            prop_assert_eq!(l.nodes().len(), n + 2);
            prop_assert_eq!(l.edges().len(), n + 1);
        }

        #[test]
        fn next_hop_descends_bfs(rows in 2usize..=12, cols in 2usize..=12,
                                 cr in 0usize..12, cc in 0usize..12, sr in 0usize..12, sc in 0usize..12) {
            let t = grid(rows, cols, &uniform(), (cr % rows, cc % cols), (sr % rows, sc % cols), 1.0).unwrap();
            let dist = bfs_distances(&t);
            for n in t.nodes() {
                if n.id == t.server() { continue; }
                let hop = t.next_hop_to_server(n.id).unwrap();
                prop_assert_eq!(dist[&hop] + 1, dist[&n.id]);
                prop_assert!(t.neighbors(n.id).unwrap().contains(&hop));
                // smallest id among qualifying neighbors
                let best = t.neighbors(n.id).unwrap().into_iter()
                    .filter(|u| dist[u] + 1 == dist[&n.id] && t.node(*u).unwrap().role != NodeRole::Client)
                    .min().unwrap();
                prop_assert_eq!(hop, best);
            }
        }

        #[test]
        fn text_round_trip(rows in 2usize..=6, cols in 2usize..=6, cpu in 0.1..100.0f64, delay in 0.01..10.0f64) {
            let t = grid(rows, cols, &CapacityProfile::uniform(cpu, cpu * 3.0), (0, 0), (rows - 1, cols - 1), delay).unwrap();
            let (back, warnings) = parse_topology(&t.to_text()).unwrap();
            prop_assert!(warnings.is_empty());
            prop_assert_eq!(back, t);
        }
    }
}
