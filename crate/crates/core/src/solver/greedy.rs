//! Greedy placement followed by shortest-path linking.

use crate::catalog::{Catalog, SfcRequest};
use crate::topology::{to_units, SubstrateNetwork};

use super::{embed_request, resolve_all, EmbeddingScheme, SfcEmbedding, SolverError};

/// Embeds requests in submission order. Each VNF goes to the eligible host
/// with the most residual CPU that can also hold its memory (lowest host id
/// on ties). Rejected requests leave `net` untouched.
pub fn solve_simple_dijkstra(
    net: &mut SubstrateNetwork,
    sfcrs: &[SfcRequest],
    catalog: &Catalog,
) -> Result<EmbeddingScheme, SolverError> {
    let resolved = resolve_all(catalog, sfcrs)?;
    let candidates = net.compute_hosts();
    let mut entries = Vec::with_capacity(sfcrs.len());
    for (sfcr, vnfs) in sfcrs.iter().zip(&resolved) {
        let outcome = embed_request(net, sfcr, vnfs, |net, _, cpu, mem| max_residual_host(net, &candidates, cpu, mem));
        entries.push(SfcEmbedding { sfcr_id: sfcr.id.clone(), outcome });
    }
    Ok(EmbeddingScheme { entries })
}

fn max_residual_host(net: &SubstrateNetwork, candidates: &[usize], cpu: f64, memory: f64) -> Option<usize> {
    let need_cpu = if cpu > 0.0 { to_units(cpu) } else { 0 };
    let need_mem = if memory > 0.0 { to_units(memory) } else { 0 };
    let mut best: Option<(usize, i64)> = None;
    // Candidates ascend by id, so strict `>` keeps the lowest id on ties.
    for &h in candidates {
        let residual = net.residual_cpu_units(h);
        if residual < need_cpu || net.residual_memory_units(h) < need_mem {
            continue;
        }
        if best.is_none_or(|(_, r)| residual > r) {
            best = Some((h, residual));
        }
    }
    best.map(|(h, _)| h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::TrafficPattern;
    use crate::solver::{Outcome, RejectionReason};
    use crate::topology::{build_network, HostSpec, LinkSpec, NetworkSpec};

    fn star(cpus: &[u32]) -> SubstrateNetwork {
        let mut hosts: Vec<HostSpec> =
            cpus.iter().enumerate().map(|(i, &c)| HostSpec { id: format!("h{i}"), cpus: c, memory: 4096.0 }).collect();
        hosts.push(HostSpec { id: "web".into(), cpus: 1, memory: 1024.0 });
        let links = hosts
            .iter()
            .map(|h| LinkSpec {
                id: None,
                endpoint_a: "s0".into(),
                endpoint_b: h.id.clone(),
                bandwidth: 1000.0,
                propagation_delay: 0.5,
            })
            .collect();
        build_network(&NetworkSpec {
            hosts,
            switches: vec!["s0".into()],
            links,
            ingress_node: "s0".into(),
            egress_host: "web".into(),
        })
        .unwrap()
    }

    fn req(id: &str, chain: &[&str], rps: f64) -> SfcRequest {
        SfcRequest {
            id: id.into(),
            chain: chain.iter().map(|s| s.to_string()).collect(),
            bandwidth_mbps: 10.0,
            request_size_bits: 8000.0,
            traffic: TrafficPattern::constant(rps, 60.0),
        }
    }

    #[test]
    fn ample_capacity_accepts() {
        let mut net = star(&[4, 4]);
        let s = solve_simple_dijkstra(&mut net, &[req("a", &["firewall", "nat"], 10.0)], &Catalog::builtin()).unwrap();
        assert_eq!(s.acceptance_ratio().unwrap(), 1.0);
        let p = s.entries[0].placement().unwrap();
        // firewall (0.2 cpu) to h0 on the tie, nat to h1 which now has more room.
        assert_eq!(p.hosts, vec![0, 1]);
        assert_eq!(p.segments.len(), 3);
        assert_eq!(p.segments[0].first(), net.ingress());
        assert_eq!(p.segments[2].last(), net.hosts()[net.egress_host()].node);
    }

    #[test]
    fn oversized_first_vnf_rolls_back() {
        let mut net = star(&[2, 2]);
        let before = net.clone();
        // compressor: 0.1 cpu-s/req * 30 rps = 3 cores.
        let s = solve_simple_dijkstra(&mut net, &[req("big", &["compressor"], 30.0)], &Catalog::builtin()).unwrap();
        assert_eq!(s.entries[0].outcome, Outcome::Rejected(RejectionReason::NoFeasibleHost { position: 0 }));
        assert_eq!(net, before);
    }

    #[test]
    fn late_failure_rolls_back_earlier_vnfs() {
        // ids takes 1.2 of 2 cores, compressor then needs 1.5 on the only host.
        let mut net = star(&[2]);
        let before = net.clone();
        let s =
            solve_simple_dijkstra(&mut net, &[req("y", &["ids", "compressor"], 15.0)], &Catalog::builtin()).unwrap();
        assert_eq!(s.entries[0].outcome, Outcome::Rejected(RejectionReason::NoFeasibleHost { position: 1 }));
        assert_eq!(net, before);
    }

    #[test]
    fn bandwidth_shortage_rejects_with_no_path() {
        let mut net = star(&[4]);
        let before = net.clone();
        let mut r = req("fat", &["nat"], 1.0);
        r.bandwidth_mbps = 2000.0;
        let s = solve_simple_dijkstra(&mut net, &[r], &Catalog::builtin()).unwrap();
        assert_eq!(s.entries[0].outcome, Outcome::Rejected(RejectionReason::NoPath { segment: 0 }));
        assert_eq!(net, before);
    }

    #[test]
    fn unknown_vnf_is_an_error() {
        let mut net = star(&[2]);
        let r = req("q", &["warp-drive"], 1.0);
        assert!(matches!(solve_simple_dijkstra(&mut net, &[r], &Catalog::builtin()), Err(SolverError::Catalog(_))));
    }
}
