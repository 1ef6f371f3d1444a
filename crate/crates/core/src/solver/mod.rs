//! Embedding solvers.
//!
//! Both solvers share [`embed_request`]: VNFs of one request are placed in
//! chain order, consecutive placements are linked with
//! [`shortest_path_between`], and any failure rolls back everything charged
//! for that request.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, CatalogError, SfcRequest, VnfDescriptor};
use crate::routing::{shortest_path_between, Path};
use crate::topology::SubstrateNetwork;

pub mod ga;
pub mod greedy;

pub use ga::{
    crossover, ga_solve, mutate, random_search, tournament_select, Chromosome, Evaluator, EvolutionTrace, GaOutcome,
    GaParams, GenerationStats,
};
pub use greedy::solve_simple_dijkstra;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("acceptance ratio of an empty outcome list")]
    EmptyInput,
    #[error("invalid GA parameters: {0}")]
    InvalidParams(String),
    #[error("chromosomes have different gene counts ({0} vs {1})")]
    GeneCountMismatch(usize, usize),
    #[error("network has no hosts eligible for VNF placement")]
    NoComputeHosts,
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

/// Why a request could not be embedded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RejectionReason {
    /// No host could take the VNF at this chain position.
    NoFeasibleHost { position: usize },
    /// Segment `segment` (0 = ingress to first VNF) could not be routed.
    NoPath { segment: usize },
}

impl fmt::Display for RejectionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoFeasibleHost { position } => write!(f, "NoFeasibleHost({position})"),
            Self::NoPath { segment } => write!(f, "NoPath({segment})"),
        }
    }
}

/// Resources charged for one accepted request.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    /// Host index per chain position.
    pub hosts: Vec<usize>,
    /// ingress -> host(v1), host(vi) -> host(vi+1), host(vk) -> egress.
    pub segments: Vec<Path>,
    /// CPU charged per chain position.
    pub cpu: Vec<f64>,
    pub memory: Vec<f64>,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Accepted(Placement),
    Rejected(RejectionReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfcEmbedding {
    pub sfcr_id: String,
    pub outcome: Outcome,
}

impl SfcEmbedding {
    pub fn placement(&self) -> Option<&Placement> {
        match &self.outcome {
            Outcome::Accepted(p) => Some(p),
            Outcome::Rejected(_) => None,
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.placement().is_some()
    }
}

/// Per-request results, in submission order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingScheme {
    pub entries: Vec<SfcEmbedding>,
}

impl EmbeddingScheme {
    pub fn accepted_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_accepted()).count()
    }

    pub fn outcomes(&self) -> Vec<bool> {
        self.entries.iter().map(SfcEmbedding::is_accepted).collect()
    }

    pub fn acceptance_ratio(&self) -> Result<f64, SolverError> {
        acceptance_ratio(&self.outcomes())
    }

    pub fn get(&self, sfcr_id: &str) -> Option<&SfcEmbedding> {
        self.entries.iter().find(|e| e.sfcr_id == sfcr_id)
    }
}

/// Accepted count over total.
pub fn acceptance_ratio(outcomes: &[bool]) -> Result<f64, SolverError> {
    if outcomes.is_empty() {
        return Err(SolverError::EmptyInput);
    }
    let accepted = outcomes.iter().filter(|&&a| a).count();
    Ok(accepted as f64 / outcomes.len() as f64)
}

/// Joint objective: acceptance ratio first, then mean latency over accepted
/// chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub acceptance_ratio: f64,
    /// Undefined (`None`) when nothing was accepted.
    pub mean_latency: Option<f64>,
}

impl Fitness {
    pub fn new(acceptance_ratio: f64, mean_latency: Option<f64>) -> Self {
        Self { acceptance_ratio, mean_latency }
    }

    pub fn worst() -> Self {
        Self { acceptance_ratio: 0.0, mean_latency: None }
    }
}

/// `Greater` means `a` is the better candidate.
pub fn compare_fitness(a: &Fitness, b: &Fitness) -> Ordering {
    let a_dead = !(a.acceptance_ratio > 0.0);
    let b_dead = !(b.acceptance_ratio > 0.0);
    match (a_dead, b_dead) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        (false, false) => {}
    }
    a.acceptance_ratio.total_cmp(&b.acceptance_ratio).then_with(|| match (a.mean_latency, b.mean_latency) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Greater,
        (None, Some(_)) => Ordering::Less,
        (None, None) => Ordering::Equal,
    })
}

/// CPU charged for one VNF instance: per-request cost at the request's peak
/// rate.
pub fn cpu_demand(vnf: &VnfDescriptor, sfcr: &SfcRequest) -> f64 {
    vnf.cpu_per_request * sfcr.traffic.peak()
}

#[derive(Default)]
struct Charges {
    cpu: Vec<(usize, f64)>,
    memory: Vec<(usize, f64)>,
    bandwidth: Vec<(usize, f64)>,
}

impl Charges {
    fn rollback(self, net: &mut SubstrateNetwork) {
        for (l, bw) in self.bandwidth.into_iter().rev() {
            net.release_bandwidth_at(l, bw).expect("rollback of a charged link");
        }
        for (h, m) in self.memory.into_iter().rev() {
            net.release_memory_at(h, m).expect("rollback of charged memory");
        }
        for (h, c) in self.cpu.into_iter().rev() {
            net.release_cpu_at(h, c).expect("rollback of charged cpu");
        }
    }
}

/// Places and routes one request. `choose(net, position, cpu, memory)`
/// returns the host for each chain position; `None` or an infeasible host
/// rejects the request. On rejection `net` is restored exactly.
pub(crate) fn embed_request<F>(
    net: &mut SubstrateNetwork,
    sfcr: &SfcRequest,
    vnfs: &[&VnfDescriptor],
    mut choose: F,
) -> Outcome
where
    F: FnMut(&SubstrateNetwork, usize, f64, f64) -> Option<usize>,
{
    let mut charges = Charges::default();
    let mut hosts = Vec::with_capacity(vnfs.len());
    let mut cpu = Vec::with_capacity(vnfs.len());
    let mut memory = Vec::with_capacity(vnfs.len());

    for (position, vnf) in vnfs.iter().enumerate() {
        let c = cpu_demand(vnf, sfcr);
        let m = vnf.memory_mb;
        let Some(h) = choose(net, position, c, m) else {
            charges.rollback(net);
            return Outcome::Rejected(RejectionReason::NoFeasibleHost { position });
        };
        if c > 0.0 {
            if net.allocate_cpu_at(h, c).is_err() {
                charges.rollback(net);
                return Outcome::Rejected(RejectionReason::NoFeasibleHost { position });
            }
            charges.cpu.push((h, c));
        }
        if m > 0.0 {
            if net.allocate_memory_at(h, m).is_err() {
                charges.rollback(net);
                return Outcome::Rejected(RejectionReason::NoFeasibleHost { position });
            }
            charges.memory.push((h, m));
        }
        hosts.push(h);
        cpu.push(c);
        memory.push(m);
    }

    let mut waypoints = Vec::with_capacity(hosts.len() + 2);
    waypoints.push(net.ingress());
    waypoints.extend(hosts.iter().map(|&h| net.hosts()[h].node));
    waypoints.push(net.hosts()[net.egress_host()].node);

    let bw = sfcr.bandwidth_mbps;
    let mut segments = Vec::with_capacity(waypoints.len() - 1);
    for (segment, pair) in waypoints.windows(2).enumerate() {
        let Ok(path) = shortest_path_between(net, pair[0], pair[1], bw) else {
            charges.rollback(net);
            return Outcome::Rejected(RejectionReason::NoPath { segment });
        };
        for &l in &path.links {
            net.allocate_bandwidth_at(l, bw).expect("route only uses links with enough residual bandwidth");
            charges.bandwidth.push((l, bw));
        }
        segments.push(path);
    }

    Outcome::Accepted(Placement { hosts, segments, cpu, memory, bandwidth: bw })
}

/// Re-charges every accepted placement of `scheme` on a copy of `pristine`
/// and returns the loaded network. Fails if any charge exceeds capacity or a
/// segment does not connect its endpoints.
pub fn replay_scheme(
    pristine: &SubstrateNetwork,
    scheme: &EmbeddingScheme,
    sfcrs: &[SfcRequest],
    catalog: &Catalog,
) -> Result<SubstrateNetwork, String> {
    let mut net = pristine.clone();
    for (e, sfcr) in scheme.entries.iter().zip(sfcrs) {
        let Some(p) = e.placement() else { continue };
        let vnfs = catalog.resolve(sfcr).map_err(|e| e.to_string())?;
        for ((&h, vnf), &c) in p.hosts.iter().zip(&vnfs).zip(&p.cpu) {
            if h == net.egress_host() {
                return Err(format!("{}: vnf placed on the web server host", sfcr.id));
            }
            if c > 0.0 {
                net.allocate_cpu_at(h, c).map_err(|err| format!("{}: {err}", sfcr.id))?;
            }
            net.allocate_memory_at(h, vnf.memory_mb).map_err(|err| format!("{}: {err}", sfcr.id))?;
        }
        let mut expected = vec![net.ingress()];
        expected.extend(p.hosts.iter().map(|&h| net.hosts()[h].node));
        expected.push(net.hosts()[net.egress_host()].node);
        for (seg, pair) in p.segments.iter().zip(expected.windows(2)) {
            if seg.first() != pair[0] || seg.last() != pair[1] {
                return Err(format!("{}: segment endpoints do not match placement", sfcr.id));
            }
            let mut at = seg.first();
            for (&l, &next) in seg.links.iter().zip(&seg.nodes[1..]) {
                if net.links()[l].other(at) != next {
                    return Err(format!("{}: segment link does not join its nodes", sfcr.id));
                }
                at = next;
                net.allocate_bandwidth_at(l, sfcr.bandwidth_mbps).map_err(|err| format!("{}: {err}", sfcr.id))?;
            }
        }
    }
    Ok(net)
}

/// Catalog lookups for every request, failing on the first unknown VNF.
pub(crate) fn resolve_all<'a>(
    catalog: &'a Catalog,
    sfcrs: &[SfcRequest],
) -> Result<Vec<Vec<&'a VnfDescriptor>>, SolverError> {
    sfcrs.iter().map(|s| catalog.resolve(s).map_err(SolverError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_examples() {
        let mut o = vec![true; 24];
        o.extend(vec![false; 8]);
        assert_eq!(acceptance_ratio(&o).unwrap(), 0.75);
        assert_eq!(acceptance_ratio(&[true; 4]).unwrap(), 1.0);
        assert!(matches!(acceptance_ratio(&[]), Err(SolverError::EmptyInput)));
    }

    #[test]
    fn fitness_ordering() {
        let a = Fitness::new(1.0, Some(381.38));
        let b = Fitness::new(0.75, Some(100.0));
        assert_eq!(compare_fitness(&a, &b), Ordering::Greater);
        assert_eq!(compare_fitness(&b, &a), Ordering::Less);
        assert_eq!(compare_fitness(&Fitness::new(1.0, Some(50.0)), &Fitness::new(1.0, Some(60.0))), Ordering::Greater);
        assert_eq!(compare_fitness(&a, &a), Ordering::Equal);
        assert_eq!(compare_fitness(&Fitness::worst(), &Fitness::new(0.0, Some(1.0))), Ordering::Equal);
        assert_eq!(compare_fitness(&Fitness::worst(), &Fitness::new(0.01, Some(1e9))), Ordering::Less);
    }

    #[test]
    fn rejection_reason_display() {
        assert_eq!(RejectionReason::NoFeasibleHost { position: 2 }.to_string(), "NoFeasibleHost(2)");
        assert_eq!(RejectionReason::NoPath { segment: 0 }.to_string(), "NoPath(0)");
    }
}
