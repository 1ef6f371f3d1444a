//! Substrate network model: hosts, switches and links with residual capacity
//! bookkeeping.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Resources are tracked in integer micro-units (1e-6 core, MB or Mbps) so that
/// allocate/release pairs cancel exactly.
pub const UNITS_PER_WHOLE: f64 = 1e6;

/// Converts a resource quantity to micro-units. Positive quantities never
/// round down to zero.
pub fn to_units(amount: f64) -> i64 {
    let u = (amount * UNITS_PER_WHOLE).round() as i64;
    if amount > 0.0 {
        u.max(1)
    } else {
        u
    }
}

pub fn from_units(units: i64) -> f64 {
    units as f64 / UNITS_PER_WHOLE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostSpec {
    pub id: String,
    pub cpus: u32,
    /// Memory in MB.
    pub memory: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    /// Defaults to `"<endpoint_a>-<endpoint_b>"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub endpoint_a: String,
    pub endpoint_b: String,
    /// Mbps.
    pub bandwidth: f64,
    /// Milliseconds.
    pub propagation_delay: f64,
}

impl LinkSpec {
    pub fn link_id(&self) -> String {
        self.id.clone().unwrap_or_else(|| format!("{}-{}", self.endpoint_a, self.endpoint_b))
    }
}

/// Declarative description of a substrate network, as found in the `network`
/// section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub hosts: Vec<HostSpec>,
    #[serde(default)]
    pub switches: Vec<String>,
    pub links: Vec<LinkSpec>,
    /// Attachment point of the traffic generator and classifier.
    pub ingress_node: String,
    /// Host running the web server that terminates every chain.
    pub egress_host: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("link endpoint {0:?} is not a declared node")]
    DanglingEndpoint(String),
    #[error("network is disconnected: {0:?} is unreachable")]
    Disconnected(String),
    #[error("non-positive capacity on {0:?}")]
    NonPositiveCapacity(String),
    #[error("negative propagation delay on link {0:?}")]
    NegativeDelay(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("unknown host {0:?}")]
    UnknownHost(String),
    #[error("unknown link {0:?}")]
    UnknownLink(String),
    #[error("demand must be positive, got {0}")]
    NonPositiveDemand(f64),
    #[error("insufficient cpu on {host:?}: residual {residual}, demand {demand}")]
    InsufficientCpu { host: String, residual: f64, demand: f64 },
    #[error("insufficient memory on {host:?}: residual {residual}, demand {demand}")]
    InsufficientMemory { host: String, residual: f64, demand: f64 },
    #[error("insufficient bandwidth on {link:?}: residual {residual}, demand {demand}")]
    InsufficientBandwidth { link: String, residual: f64, demand: f64 },
    #[error("release of {amount} on {element:?} would exceed capacity")]
    OverRelease { element: String, amount: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Host,
    Switch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: String,
    pub a: usize,
    pub b: usize,
    pub bandwidth: f64,
    pub propagation_delay: f64,
}

impl Link {
    pub fn other(&self, node: usize) -> usize {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Host {
    pub node: usize,
    pub cpus: u32,
    pub memory: f64,
}

/// A validated substrate with residual CPU, memory and bandwidth.
///
/// Node indices are assigned in ascending id order, so comparing index
/// sequences is the same as comparing id sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstrateNetwork {
    nodes: Vec<Node>,
    node_index: BTreeMap<String, usize>,
    links: Vec<Link>,
    link_index: BTreeMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
    hosts: Vec<Host>,
    host_of_node: BTreeMap<usize, usize>,
    ingress: usize,
    egress_host: usize,
    residual_cpu: Vec<i64>,
    residual_memory: Vec<i64>,
    residual_bandwidth: Vec<i64>,
}

pub fn build_network(spec: &NetworkSpec) -> Result<SubstrateNetwork, TopologyError> {
    SubstrateNetwork::new(spec)
}

impl SubstrateNetwork {
    pub fn new(spec: &NetworkSpec) -> Result<Self, TopologyError> {
        let mut kinds: BTreeMap<String, NodeKind> = BTreeMap::new();
        for h in &spec.hosts {
            if kinds.insert(h.id.clone(), NodeKind::Host).is_some() {
                return Err(TopologyError::DuplicateId(h.id.clone()));
            }
            if h.cpus == 0 || !(h.memory > 0.0) {
                return Err(TopologyError::NonPositiveCapacity(h.id.clone()));
            }
        }
        for s in &spec.switches {
            if kinds.insert(s.clone(), NodeKind::Switch).is_some() {
                return Err(TopologyError::DuplicateId(s.clone()));
            }
        }

        let nodes: Vec<Node> = kinds.iter().map(|(id, kind)| Node { id: id.clone(), kind: *kind }).collect();
        let node_index: BTreeMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();

        let mut links = Vec::with_capacity(spec.links.len());
        let mut link_index = BTreeMap::new();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for l in &spec.links {
            let id = l.link_id();
            let a =
                *node_index.get(&l.endpoint_a).ok_or_else(|| TopologyError::DanglingEndpoint(l.endpoint_a.clone()))?;
            let b =
                *node_index.get(&l.endpoint_b).ok_or_else(|| TopologyError::DanglingEndpoint(l.endpoint_b.clone()))?;
            if !(l.bandwidth > 0.0) {
                return Err(TopologyError::NonPositiveCapacity(id));
            }
            if !(l.propagation_delay >= 0.0) || !l.propagation_delay.is_finite() {
                return Err(TopologyError::NegativeDelay(id));
            }
            if node_index.contains_key(&id) || link_index.contains_key(&id) {
                return Err(TopologyError::DuplicateId(id));
            }
            let idx = links.len();
            link_index.insert(id.clone(), idx);
            adjacency[a].push(idx);
            if a != b {
                adjacency[b].push(idx);
            }
            links.push(Link { id, a, b, bandwidth: l.bandwidth, propagation_delay: l.propagation_delay });
        }

        let ingress =
            *node_index.get(&spec.ingress_node).ok_or_else(|| TopologyError::UnknownNode(spec.ingress_node.clone()))?;
        let egress_node =
            *node_index.get(&spec.egress_host).ok_or_else(|| TopologyError::UnknownHost(spec.egress_host.clone()))?;
        if nodes[egress_node].kind != NodeKind::Host {
            return Err(TopologyError::UnknownHost(spec.egress_host.clone()));
        }

        // Reachability from the first node.
        if !nodes.is_empty() {
            let mut seen = vec![false; nodes.len()];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(n) = queue.pop_front() {
                for &l in &adjacency[n] {
                    let m = links[l].other(n);
                    if !seen[m] {
                        seen[m] = true;
                        queue.push_back(m);
                    }
                }
            }
            if let Some(i) = seen.iter().position(|s| !s) {
                return Err(TopologyError::Disconnected(nodes[i].id.clone()));
            }
        }

        let by_id: BTreeMap<&str, &HostSpec> = spec.hosts.iter().map(|h| (h.id.as_str(), h)).collect();
        let mut hosts = Vec::new();
        let mut host_of_node = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.kind == NodeKind::Host {
                let h = by_id[n.id.as_str()];
                host_of_node.insert(i, hosts.len());
                hosts.push(Host { node: i, cpus: h.cpus, memory: h.memory });
            }
        }
        let egress_host = host_of_node[&egress_node];

        Ok(Self {
            residual_cpu: hosts.iter().map(|h| to_units(f64::from(h.cpus))).collect(),
            residual_memory: hosts.iter().map(|h| to_units(h.memory)).collect(),
            residual_bandwidth: links.iter().map(|l| to_units(l.bandwidth)).collect(),
            nodes,
            node_index,
            links,
            link_index,
            adjacency,
            hosts,
            host_of_node,
            ingress,
            egress_host,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn hosts(&self) -> &[Host] {
        &self.hosts
    }

    pub fn node_id(&self, node: usize) -> &str {
        &self.nodes[node].id
    }

    pub fn node(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn link(&self, id: &str) -> Option<usize> {
        self.link_index.get(id).copied()
    }

    /// Host index for a host id.
    pub fn host(&self, id: &str) -> Option<usize> {
        self.node(id).and_then(|n| self.host_of_node.get(&n).copied())
    }

    pub fn host_id(&self, host: usize) -> &str {
        self.node_id(self.hosts[host].node)
    }

    /// Links incident to `node`.
    pub fn incident(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn ingress(&self) -> usize {
        self.ingress
    }

    pub fn egress_host(&self) -> usize {
        self.egress_host
    }

    /// Hosts eligible for VNF placement: every host except the web server.
    pub fn compute_hosts(&self) -> Vec<usize> {
        (0..self.hosts.len()).filter(|&h| h != self.egress_host).collect()
    }

    pub fn residual_cpu(&self, host: usize) -> f64 {
        from_units(self.residual_cpu[host])
    }

    pub fn residual_memory(&self, host: usize) -> f64 {
        from_units(self.residual_memory[host])
    }

    pub fn residual_bandwidth(&self, link: usize) -> f64 {
        from_units(self.residual_bandwidth[link])
    }

    pub fn residual_cpu_units(&self, host: usize) -> i64 {
        self.residual_cpu[host]
    }

    pub fn residual_memory_units(&self, host: usize) -> i64 {
        self.residual_memory[host]
    }

    pub fn residual_bandwidth_units(&self, link: usize) -> i64 {
        self.residual_bandwidth[link]
    }

    fn host_index(&self, host: &str) -> Result<usize, TopologyError> {
        self.host(host).ok_or_else(|| TopologyError::UnknownHost(host.to_string()))
    }

    fn link_idx(&self, link: &str) -> Result<usize, TopologyError> {
        self.link(link).ok_or_else(|| TopologyError::UnknownLink(link.to_string()))
    }

    pub fn allocate_cpu(&mut self, host: &str, demand: f64) -> Result<(), TopologyError> {
        let h = self.host_index(host)?;
        self.allocate_cpu_at(h, demand)
    }

    pub fn release_cpu(&mut self, host: &str, amount: f64) -> Result<(), TopologyError> {
        let h = self.host_index(host)?;
        self.release_cpu_at(h, amount)
    }

    pub fn allocate_memory(&mut self, host: &str, demand: f64) -> Result<(), TopologyError> {
        let h = self.host_index(host)?;
        self.allocate_memory_at(h, demand)
    }

    pub fn release_memory(&mut self, host: &str, amount: f64) -> Result<(), TopologyError> {
        let h = self.host_index(host)?;
        self.release_memory_at(h, amount)
    }

    pub fn allocate_bandwidth(&mut self, link: &str, demand: f64) -> Result<(), TopologyError> {
        let l = self.link_idx(link)?;
        self.allocate_bandwidth_at(l, demand)
    }

    pub fn release_bandwidth(&mut self, link: &str, amount: f64) -> Result<(), TopologyError> {
        let l = self.link_idx(link)?;
        self.release_bandwidth_at(l, amount)
    }

    pub fn allocate_cpu_at(&mut self, host: usize, demand: f64) -> Result<(), TopologyError> {
        let units = demand_units(demand)?;
        let residual = self.residual_cpu[host];
        if residual < units {
            return Err(TopologyError::InsufficientCpu {
                host: self.host_id(host).to_string(),
                residual: from_units(residual),
                demand,
            });
        }
        self.residual_cpu[host] = residual - units;
        Ok(())
    }

    pub fn release_cpu_at(&mut self, host: usize, amount: f64) -> Result<(), TopologyError> {
        let units = demand_units(amount)?;
        let cap = to_units(f64::from(self.hosts[host].cpus));
        let next = self.residual_cpu[host] + units;
        if next > cap {
            return Err(TopologyError::OverRelease { element: self.host_id(host).to_string(), amount });
        }
        self.residual_cpu[host] = next;
        Ok(())
    }

    /// Zero-footprint VNFs are legal, so a zero demand is accepted as a no-op.
    pub fn allocate_memory_at(&mut self, host: usize, demand: f64) -> Result<(), TopologyError> {
        if demand == 0.0 {
            return Ok(());
        }
        let units = demand_units(demand)?;
        let residual = self.residual_memory[host];
        if residual < units {
            return Err(TopologyError::InsufficientMemory {
                host: self.host_id(host).to_string(),
                residual: from_units(residual),
                demand,
            });
        }
        self.residual_memory[host] = residual - units;
        Ok(())
    }

    pub fn release_memory_at(&mut self, host: usize, amount: f64) -> Result<(), TopologyError> {
        if amount == 0.0 {
            return Ok(());
        }
        let units = demand_units(amount)?;
        let cap = to_units(self.hosts[host].memory);
        let next = self.residual_memory[host] + units;
        if next > cap {
            return Err(TopologyError::OverRelease { element: self.host_id(host).to_string(), amount });
        }
        self.residual_memory[host] = next;
        Ok(())
    }

    pub fn allocate_bandwidth_at(&mut self, link: usize, demand: f64) -> Result<(), TopologyError> {
        let units = demand_units(demand)?;
        let residual = self.residual_bandwidth[link];
        if residual < units {
            return Err(TopologyError::InsufficientBandwidth {
                link: self.links[link].id.clone(),
                residual: from_units(residual),
                demand,
            });
        }
        self.residual_bandwidth[link] = residual - units;
        Ok(())
    }

    pub fn release_bandwidth_at(&mut self, link: usize, amount: f64) -> Result<(), TopologyError> {
        let units = demand_units(amount)?;
        let cap = to_units(self.links[link].bandwidth);
        let next = self.residual_bandwidth[link] + units;
        if next > cap {
            return Err(TopologyError::OverRelease { element: self.links[link].id.clone(), amount });
        }
        self.residual_bandwidth[link] = next;
        Ok(())
    }

    /// Distinct node ids, used when validating references from other sections.
    pub fn node_ids(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.id.as_str()).collect()
    }
}

fn demand_units(demand: f64) -> Result<i64, TopologyError> {
    if demand > 0.0 && demand.is_finite() {
        Ok(to_units(demand))
    } else {
        Err(TopologyError::NonPositiveDemand(demand))
    }
}
