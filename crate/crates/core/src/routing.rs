//! Bandwidth-constrained shortest paths over the substrate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{to_units, SubstrateNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("no path from {src:?} to {dst:?} with {min_bandwidth} Mbps available")]
    NoPath { src: String, dst: String, min_bandwidth: String },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
}

/// A simple path, as node and link indices into a [`SubstrateNetwork`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub nodes: Vec<usize>,
    pub links: Vec<usize>,
    /// Sum of propagation delays, ms.
    pub total_propagation: f64,
}

impl Path {
    pub fn trivial(node: usize) -> Self {
        Self { nodes: vec![node], links: Vec::new(), total_propagation: 0.0 }
    }

    pub fn hops(&self) -> usize {
        self.links.len()
    }

    pub fn first(&self) -> usize {
        self.nodes[0]
    }

    pub fn last(&self) -> usize {
        *self.nodes.last().expect("path has at least one node")
    }

    pub fn node_ids<'a>(&self, net: &'a SubstrateNetwork) -> Vec<&'a str> {
        self.nodes.iter().map(|&n| net.node_id(n)).collect()
    }
}

/// Search label. Ordered by cost, then hop count, then node sequence; node
/// indices follow id order so the last key is the lexicographic id order.
#[derive(Debug, Clone)]
struct Label {
    cost: f64,
    nodes: Vec<usize>,
    links: Vec<usize>,
}

impl Label {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.nodes.len().cmp(&other.nodes.len()))
            .then_with(|| self.nodes.cmp(&other.nodes))
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    // Reversed for a min-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Minimum-propagation-delay path from `src` to `dst` using only links with at
/// least `min_bandwidth` Mbps residual.
pub fn shortest_path(net: &SubstrateNetwork, src: &str, dst: &str, min_bandwidth: f64) -> Result<Path, RoutingError> {
    let s = net.node(src).ok_or_else(|| RoutingError::UnknownNode(src.into()))?;
    let d = net.node(dst).ok_or_else(|| RoutingError::UnknownNode(dst.into()))?;
    shortest_path_between(net, s, d, min_bandwidth)
}

/// Index-based form of [`shortest_path`].
pub fn shortest_path_between(
    net: &SubstrateNetwork,
    src: usize,
    dst: usize,
    min_bandwidth: f64,
) -> Result<Path, RoutingError> {
    if src == dst {
        return Ok(Path::trivial(src));
    }
    let required = if min_bandwidth > 0.0 { to_units(min_bandwidth) } else { 0 };
    let mut settled = vec![false; net.nodes().len()];
    let mut heap = BinaryHeap::new();
    heap.push(Label { cost: 0.0, nodes: vec![src], links: Vec::new() });

    while let Some(label) = heap.pop() {
        let at = *label.nodes.last().unwrap();
        if settled[at] {
            continue;
        }
        settled[at] = true;
        if at == dst {
            return Ok(Path { total_propagation: label.cost, nodes: label.nodes, links: label.links });
        }
        for &l in net.incident(at) {
            if net.residual_bandwidth_units(l) < required {
                continue;
            }
            let link = &net.links()[l];
            let next = link.other(at);
            if settled[next] {
                continue;
            }
            let mut nodes = label.nodes.clone();
            nodes.push(next);
            let mut links = label.links.clone();
            links.push(l);
            heap.push(Label { cost: label.cost + link.propagation_delay, nodes, links });
        }
    }

    Err(RoutingError::NoPath {
        src: net.node_id(src).into(),
        dst: net.node_id(dst).into(),
        min_bandwidth: min_bandwidth.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_network, HostSpec, LinkSpec, NetworkSpec};

    fn link(a: &str, b: &str, bw: f64, delay: f64) -> LinkSpec {
        LinkSpec { id: None, endpoint_a: a.into(), endpoint_b: b.into(), bandwidth: bw, propagation_delay: delay }
    }

    fn net(switches: &[&str], links: Vec<LinkSpec>) -> SubstrateNetwork {
        build_network(&NetworkSpec {
            hosts: vec![HostSpec { id: "h".into(), cpus: 1, memory: 1.0 }],
            switches: switches.iter().map(|s| s.to_string()).collect(),
            links,
            ingress_node: switches[0].into(),
            egress_host: "h".into(),
        })
        .unwrap()
    }

    #[test]
    fn same_node() {
        let n = net(&["A"], vec![link("A", "h", 10.0, 1.0)]);
        let p = shortest_path(&n, "A", "A", 5.0).unwrap();
        assert_eq!(p.node_ids(&n), vec!["A"]);
        assert!(p.links.is_empty());
        assert_eq!(p.total_propagation, 0.0);
    }

    #[test]
    fn line() {
        let n = net(
            &["A", "B", "C"],
            vec![link("A", "B", 10.0, 1.0), link("B", "C", 10.0, 1.0), link("C", "h", 10.0, 1.0)],
        );
        let p = shortest_path(&n, "A", "C", 1.0).unwrap();
        assert_eq!(p.node_ids(&n), vec!["A", "B", "C"]);
        assert_eq!(p.total_propagation, 2.0);
    }

    #[test]
    fn bandwidth_filter_forces_detour() {
        let mut n = net(
            &["A", "B", "C"],
            vec![
                link("A", "B", 100.0, 1.0),
                link("A", "C", 100.0, 1.0),
                link("C", "B", 100.0, 1.0),
                link("B", "h", 100.0, 1.0),
            ],
        );
        n.allocate_bandwidth("A-B", 95.0).unwrap();
        let p = shortest_path(&n, "A", "B", 10.0).unwrap();
        assert_eq!(p.node_ids(&n), vec!["A", "C", "B"]);
        for &l in &p.links {
            assert!(n.residual_bandwidth(l) >= 10.0);
        }
        let direct = shortest_path(&n, "A", "B", 5.0).unwrap();
        assert_eq!(direct.node_ids(&n), vec!["A", "B"]);
    }

    #[test]
    fn ties_prefer_fewer_hops_then_lexicographic() {
        // A-D direct costs 2; A-B-D and A-C-D also cost 2.
        let n = net(
            &["A", "B", "C", "D"],
            vec![
                link("A", "C", 10.0, 1.0),
                link("C", "D", 10.0, 1.0),
                link("A", "B", 10.0, 1.0),
                link("B", "D", 10.0, 1.0),
                link("D", "h", 10.0, 1.0),
            ],
        );
        let p = shortest_path(&n, "A", "D", 1.0).unwrap();
        assert_eq!(p.node_ids(&n), vec!["A", "B", "D"]);

        let n2 = net(
            &["A", "B", "C", "D"],
            vec![
                link("A", "C", 10.0, 1.0),
                link("C", "D", 10.0, 1.0),
                link("A", "B", 10.0, 1.0),
                link("B", "D", 10.0, 1.0),
                link("A", "D", 10.0, 2.0),
                link("D", "h", 10.0, 1.0),
            ],
        );
        let p = shortest_path(&n2, "A", "D", 1.0).unwrap();
        assert_eq!(p.node_ids(&n2), vec!["A", "D"]);
    }

    #[test]
    fn errors() {
        let n = net(&["A", "B"], vec![link("A", "B", 5.0, 1.0), link("B", "h", 5.0, 1.0)]);
        assert!(matches!(shortest_path(&n, "A", "B", 10.0), Err(RoutingError::NoPath { .. })));
        assert!(matches!(shortest_path(&n, "A", "Q", 1.0), Err(RoutingError::UnknownNode(_))));
    }
}
