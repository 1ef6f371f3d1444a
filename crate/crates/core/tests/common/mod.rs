//! Independent oracles and generators shared by the integration suites.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rase_sim::catalog::{Catalog, SfcRequest, TrafficPattern, TrafficSegment};
use rase_sim::experiment::Experiment;
use rase_sim::topology::{build_network, HostSpec, LinkSpec, NetworkSpec, SubstrateNetwork};

pub fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn scenario(name: &str) -> Experiment {
    Experiment::load(&scenarios_dir().join(name)).expect("shipped scenario loads")
}

/// Minimum over every simple path of `(cost, hops, node id sequence)`, with
/// cost summed along the path. Links below `min_bw` residual are unusable.
pub fn brute_force_path(net: &SubstrateNetwork, src: usize, dst: usize, min_bw: f64) -> Option<(f64, Vec<String>)> {
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        net: &SubstrateNetwork,
        at: usize,
        dst: usize,
        min_bw: f64,
        visited: &mut Vec<bool>,
        nodes: &mut Vec<usize>,
        cost: f64,
        best: &mut Option<(f64, Vec<String>)>,
    ) {
        if at == dst {
            let ids: Vec<String> = nodes.iter().map(|&n| net.node_id(n).to_string()).collect();
            let better = match best {
                None => true,
                Some((c, p)) => {
                    cost < *c || (cost == *c && (ids.len() < p.len() || (ids.len() == p.len() && ids < *p)))
                }
            };
            if better {
                *best = Some((cost, ids));
            }
            return;
        }
        for &l in net.incident(at) {
            if net.residual_bandwidth(l) < min_bw {
                continue;
            }
            let next = net.links()[l].other(at);
            if visited[next] {
                continue;
            }
            visited[next] = true;
            nodes.push(next);
            dfs(net, next, dst, min_bw, visited, nodes, cost + net.links()[l].propagation_delay, best);
            nodes.pop();
            visited[next] = false;
        }
    }
    let mut visited = vec![false; net.nodes().len()];
    visited[src] = true;
    let mut best = None;
    dfs(net, src, dst, min_bw, &mut visited, &mut vec![src], 0.0, &mut best);
    best
}

/// Random connected graph on `n` nodes: a random spanning tree plus extra
/// links. Node `n00` is the only host. Some links get part of their bandwidth
/// pre-allocated so the bandwidth filter matters.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> SubstrateNetwork {
    let ids: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let mut pairs = std::collections::BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        pairs.insert((j, i));
    }
    let extra = rng.random_range(0..=n * 2);
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let links = pairs
        .iter()
        .map(|&(a, b)| LinkSpec {
            id: None,
            endpoint_a: ids[a].clone(),
            endpoint_b: ids[b].clone(),
            bandwidth: 100.0,
            // Small integers make cost ties common.
            propagation_delay: f64::from(rng.random_range(0..6u32)) * 0.5,
        })
        .collect::<Vec<_>>();
    let spec = NetworkSpec {
        hosts: vec![HostSpec { id: ids[0].clone(), cpus: 1, memory: 1.0 }],
        switches: ids[1..].to_vec(),
        links,
        ingress_node: ids[0].clone(),
        egress_host: ids[0].clone(),
    };
    let mut net = build_network(&spec).expect("random graph is valid");
    for l in 0..net.links().len() {
        if rng.random_bool(0.25) {
            net.allocate_bandwidth_at(l, f64::from(rng.random_range(50..100u32))).unwrap();
        }
    }
    net
}

/// Greedy max-residual placement counting CPU only, in micro-cores. Returns
/// the accepted flags. Valid when memory and bandwidth never bind.
pub fn greedy_cpu_oracle(hosts: usize, cpus: u32, sfcrs: &[SfcRequest], catalog: &Catalog) -> Vec<bool> {
    let mut residual = vec![i64::from(cpus) * 1_000_000; hosts];
    sfcrs
        .iter()
        .map(|s| {
            let before = residual.clone();
            let peak = s.traffic.segments.iter().map(|g| g.rps).fold(0.0, f64::max);
            for v in &s.chain {
                let demand = (catalog.get(v).unwrap().cpu_per_request * peak * 1e6).round() as i64;
                let mut pick: Option<usize> = None;
                for h in 0..hosts {
                    if residual[h] >= demand && pick.is_none_or(|p| residual[h] > residual[p]) {
                        pick = Some(h);
                    }
                }
                match pick {
                    Some(h) => residual[h] -= demand,
                    None => {
                        residual = before;
                        return false;
                    }
                }
            }
            true
        })
        .collect()
}

/// Enumerates every host assignment for the requests' VNFs and counts those
/// under which all requests fit, charging CPU in request order with
/// per-request rollback.
pub fn count_fully_feasible(hosts: usize, cpus: u32, sfcrs: &[SfcRequest], catalog: &Catalog) -> (usize, usize) {
    let demands: Vec<Vec<i64>> = sfcrs
        .iter()
        .map(|s| {
            let peak = s.traffic.segments.iter().map(|g| g.rps).fold(0.0, f64::max);
            s.chain.iter().map(|v| (catalog.get(v).unwrap().cpu_per_request * peak * 1e6).round() as i64).collect()
        })
        .collect();
    let genes: usize = demands.iter().map(Vec::len).sum();
    let total = hosts.pow(genes as u32);
    let mut feasible = 0;
    for code in 0..total {
        let mut c = code;
        let assignment: Vec<usize> = (0..genes)
            .map(|_| {
                let h = c % hosts;
                c /= hosts;
                h
            })
            .collect();
        let mut residual = vec![i64::from(cpus) * 1_000_000; hosts];
        let mut k = 0;
        let mut all = true;
        for d in &demands {
            let before = residual.clone();
            let mut ok = true;
            for &x in d {
                let h = assignment[k];
                k += 1;
                if residual[h] >= x {
                    residual[h] -= x;
                } else {
                    ok = false;
                }
            }
            if !ok {
                residual = before;
                all = false;
            }
        }
        if all {
            feasible += 1;
        }
    }
    (feasible, total)
}

/// Central interval `[lo, hi]` holding at least `mass` of Binomial(n, p).
pub fn binomial_central_interval(n: u64, p: f64, mass: f64) -> (u64, u64) {
    let tail = (1.0 - mass) / 2.0;
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf = 0.0;
    let mut lo = None;
    let mut hi = n;
    for k in 0..=n {
        cdf += pmf;
        if lo.is_none() && cdf > tail {
            lo = Some(k);
        }
        if cdf >= 1.0 - tail {
            hi = k;
            break;
        }
        pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
    }
    (lo.unwrap_or(0), hi)
}

/// A small random substrate: a star or two-switch tree with 1..=5 compute
/// hosts and a web server.
pub fn random_substrate(rng: &mut ChaCha8Rng) -> SubstrateNetwork {
    let n_hosts = rng.random_range(1..=5);
    let mut hosts: Vec<HostSpec> = (0..n_hosts)
        .map(|i| HostSpec {
            id: format!("h{i}"),
            cpus: rng.random_range(1..=4),
            memory: f64::from(rng.random_range(1..=8u32)) * 256.0,
        })
        .collect();
    hosts.push(HostSpec { id: "web".into(), cpus: 1, memory: 1024.0 });
    let two_tier = rng.random_bool(0.5);
    let mut switches = vec!["s0".to_string()];
    let mut links = Vec::new();
    if two_tier {
        switches.push("s1".into());
        links.push(LinkSpec {
            id: None,
            endpoint_a: "s0".into(),
            endpoint_b: "s1".into(),
            bandwidth: f64::from(rng.random_range(20..200u32)),
            propagation_delay: 1.0,
        });
    }
    for (i, h) in hosts.iter().enumerate() {
        let sw = if two_tier && i % 2 == 1 { "s1" } else { "s0" };
        links.push(LinkSpec {
            id: None,
            endpoint_a: sw.into(),
            endpoint_b: h.id.clone(),
            bandwidth: f64::from(rng.random_range(20..200u32)),
            propagation_delay: f64::from(rng.random_range(1..4u32)) * 0.25,
        });
    }
    build_network(&NetworkSpec { hosts, switches, links, ingress_node: "s0".into(), egress_host: "web".into() })
        .unwrap()
}

pub fn random_requests(rng: &mut ChaCha8Rng, catalog: &Catalog) -> Vec<SfcRequest> {
    let names: Vec<String> = catalog.iter().map(|v| v.name.clone()).collect();
    let n = rng.random_range(1..=6);
    (0..n)
        .map(|i| {
            let len = rng.random_range(1..=4);
            let rps = f64::from(rng.random_range(1..=30u32));
            SfcRequest {
                id: format!("r{i}"),
                chain: (0..len).map(|_| names[rng.random_range(0..names.len())].clone()).collect(),
                bandwidth_mbps: f64::from(rng.random_range(1..=40u32)),
                request_size_bits: 8000.0,
                traffic: TrafficPattern {
                    segments: vec![
                        TrafficSegment { start_s: 0.0, end_s: 5.0, rps: rps / 2.0 },
                        TrafficSegment { start_s: 5.0, end_s: 10.0, rps },
                    ],
                },
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
