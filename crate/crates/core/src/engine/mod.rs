//! Fluid-flow traffic engine.
//!
//! Hosts are processor-sharing servers: a VNF's service time is inflated by
//! `1 / (1 - rho)` where `rho` is its host's CPU utilization. A request's
//! round trip is the forward path through every VNF to the web server plus
//! the same links reversed on the way back; VNFs only work on the forward
//! direction and the web server adds nothing.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, SfcRequest, VnfDescriptor};
use crate::solver::Chromosome;
use crate::solver::{EmbeddingScheme, Evaluator, Fitness, Placement, SfcEmbedding};
use crate::telemetry::{mean_latency, TelemetryFrame};
use crate::topology::SubstrateNetwork;

pub mod header;

pub use header::{decode_sfc_header, encode_sfc_header, HeaderError, SfcHeader};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid engine config: {0}")]
    InvalidConfig(String),
    #[error("inconsistent scheme: {0}")]
    InconsistentScheme(String),
    #[error("sfc {0:?} is not accepted")]
    NotAccepted(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub duration_s: f64,
    pub sample_interval_s: f64,
    pub utilization_cap: f64,
    /// Relative standard deviation of multiplicative latency noise; 0 disables.
    pub jitter_sigma: f64,
    /// Per-sample probability that an idle host reports a spike.
    pub idle_spike_prob: f64,
    pub idle_spike_range: [f64; 2],
    /// Defaults to a value derived from the experiment seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            sample_interval_s: 1.0,
            utilization_cap: 0.99,
            jitter_sigma: 0.05,
            idle_spike_prob: 0.01,
            idle_spike_range: [0.05, 0.15],
            seed: None,
        }
    }
}

impl EngineConfig {
    /// No jitter, no idle spikes.
    pub fn noiseless(duration_s: f64, sample_interval_s: f64) -> Self {
        Self { duration_s, sample_interval_s, jitter_sigma: 0.0, idle_spike_prob: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.into()));
        if !(self.sample_interval_s > 0.0) || !(self.sample_interval_s <= self.duration_s) {
            return bad("require 0 < sample_interval_s <= duration_s");
        }
        if !self.duration_s.is_finite() {
            return bad("duration_s must be finite");
        }
        if !(self.utilization_cap > 0.0 && self.utilization_cap < 1.0) {
            return bad("utilization_cap must be in (0, 1)");
        }
        if !(self.jitter_sigma >= 0.0) || !self.jitter_sigma.is_finite() {
            return bad("jitter_sigma must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.idle_spike_prob) {
            return bad("idle_spike_prob must be in [0, 1]");
        }
        let [lo, hi] = self.idle_spike_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return bad("idle_spike_range must satisfy 0 <= lo <= hi <= 1");
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration_s / self.sample_interval_s + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Utilization {
    /// Capped utilization.
    pub value: f64,
    pub uncapped: f64,
    /// Set when the uncapped value reaches 1.
    pub saturated: bool,
}

/// `loads` yields `(rate rps, cpu seconds per request)` for every VNF
/// instance on a host with `cpus` cores.
pub fn host_utilization<I>(loads: I, cpus: u32, cap: f64) -> Utilization
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let demand: f64 = loads.into_iter().map(|(rate, cpu)| rate * cpu).sum();
    let uncapped = demand / f64::from(cpus);
    Utilization { value: uncapped.min(cap), uncapped, saturated: uncapped >= 1.0 }
}

/// Per-host utilization at time `t`, indexed like [`SubstrateNetwork::hosts`].
pub fn utilizations_at(
    net: &SubstrateNetwork,
    scheme: &EmbeddingScheme,
    sfcrs: &[SfcRequest],
    catalog: &Catalog,
    t: f64,
    cap: f64,
) -> Vec<Utilization> {
    let mut loads: Vec<Vec<(f64, f64)>> = vec![Vec::new(); net.hosts().len()];
    for (entry, sfcr) in scheme.entries.iter().zip(sfcrs) {
        let Some(p) = entry.placement() else { continue };
        let rate = sfcr.traffic.rate_at(t);
        for (pos, &h) in p.hosts.iter().enumerate() {
            let vnf = catalog.get(&sfcr.chain[pos]).expect("scheme checked against catalog");
            loads[h].push((rate, vnf.cpu_per_request));
        }
    }
    net.hosts().iter().zip(loads).map(|(host, l)| host_utilization(l, host.cpus, cap)).collect()
}

/// Payload size on each forward segment after the preceding VNFs scaled it.
fn segment_sizes(sfcr: &SfcRequest, vnfs: &[&VnfDescriptor]) -> Vec<f64> {
    let mut size = sfcr.request_size_bits;
    let mut out = Vec::with_capacity(vnfs.len() + 1);
    out.push(size);
    for v in vnfs {
        size *= v.bandwidth_scale;
        out.push(size);
    }
    out
}

/// Transmission time in ms of `bits` over a `mbps` link.
fn transmission_ms(bits: f64, mbps: f64) -> f64 {
    bits / (mbps * 1e3)
}

/// Noise-free round-trip latency (ms) of one accepted chain.
pub fn sfc_latency(
    entry: &SfcEmbedding,
    sfcr: &SfcRequest,
    net: &SubstrateNetwork,
    catalog: &Catalog,
    utilizations: &[Utilization],
) -> Result<f64, EngineError> {
    let p = entry.placement().ok_or_else(|| EngineError::NotAccepted(entry.sfcr_id.clone()))?;
    let vnfs = catalog.resolve(sfcr).map_err(|e| EngineError::InconsistentScheme(e.to_string()))?;
    Ok(link_latency(p, sfcr, &vnfs, net) + service_latency(p, &vnfs, utilizations))
}

fn link_latency(p: &Placement, sfcr: &SfcRequest, vnfs: &[&VnfDescriptor], net: &SubstrateNetwork) -> f64 {
    let sizes = segment_sizes(sfcr, vnfs);
    let mut total = 0.0;
    for (seg, size) in p.segments.iter().zip(&sizes) {
        for &l in &seg.links {
            let link = &net.links()[l];
            total += link.propagation_delay + transmission_ms(*size, link.bandwidth);
        }
    }
    // Response retraces every forward link carrying the original payload.
    for seg in p.segments.iter().rev() {
        for &l in seg.links.iter().rev() {
            let link = &net.links()[l];
            total += link.propagation_delay + transmission_ms(sfcr.request_size_bits, link.bandwidth);
        }
    }
    total
}

fn service_latency(p: &Placement, vnfs: &[&VnfDescriptor], utilizations: &[Utilization]) -> f64 {
    p.hosts.iter().zip(vnfs).map(|(&h, v)| v.base_service_time_ms / (1.0 - utilizations[h].value)).sum()
}

/// Multiplies `latency` by `1 + e`, `e ~ N(0, sigma)` truncated to `|e| <= 3 sigma`.
pub fn apply_jitter(latency: f64, sigma: f64, rng: &mut impl Rng) -> f64 {
    if sigma <= 0.0 {
        return latency;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    loop {
        let e: f64 = normal.sample(rng);
        if e.abs() <= 3.0 * sigma {
            return latency * (1.0 + e);
        }
    }
}

fn check_scheme(
    net: &SubstrateNetwork,
    scheme: &EmbeddingScheme,
    sfcrs: &[SfcRequest],
    catalog: &Catalog,
) -> Result<(), EngineError> {
    let bad = |m: String| Err(EngineError::InconsistentScheme(m));
    if scheme.entries.len() != sfcrs.len() {
        return bad(format!("{} entries for {} requests", scheme.entries.len(), sfcrs.len()));
    }
    for (e, s) in scheme.entries.iter().zip(sfcrs) {
        if e.sfcr_id != s.id {
            return bad(format!("entry {:?} does not match request {:?}", e.sfcr_id, s.id));
        }
        if catalog.resolve(s).is_err() {
            return bad(format!("request {:?} uses an unknown vnf", s.id));
        }
        if let Some(p) = e.placement() {
            if p.hosts.len() != s.chain.len() || p.segments.len() != s.chain.len() + 1 {
                return bad(format!("placement of {:?} does not match its chain", s.id));
            }
            if p.hosts.iter().any(|&h| h >= net.hosts().len())
                || p.segments.iter().flat_map(|seg| &seg.links).any(|&l| l >= net.links().len())
            {
                return bad(format!("placement of {:?} references unknown elements", s.id));
            }
        }
    }
    Ok(())
}

/// Runs the engine over `cfg.duration_s`, one frame per sample interval.
pub fn simulate(
    net: &SubstrateNetwork,
    scheme: &EmbeddingScheme,
    sfcrs: &[SfcRequest],
    catalog: &Catalog,
    cfg: &EngineConfig,
) -> Result<Vec<TelemetryFrame>, EngineError> {
    cfg.validate()?;
    check_scheme(net, scheme, sfcrs, catalog)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
    let [spike_lo, spike_hi] = cfg.idle_spike_range;

    let accepted: Vec<(&SfcEmbedding, &SfcRequest, Vec<&VnfDescriptor>)> = scheme
        .entries
        .iter()
        .zip(sfcrs)
        .filter(|(e, _)| e.is_accepted())
        .map(|(e, s)| (e, s, catalog.resolve(s).expect("checked above")))
        .collect();

    let n = cfg.frame_count();
    let mut frames = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * cfg.sample_interval_s;
        let utils = utilizations_at(net, scheme, sfcrs, catalog, t, cfg.utilization_cap);

        let mut host_cpu = BTreeMap::new();
        for (h, u) in utils.iter().enumerate() {
            let mut value = u.value;
            if u.uncapped == 0.0 && cfg.idle_spike_prob > 0.0 && rng.random_bool(cfg.idle_spike_prob) {
                value = if spike_hi > spike_lo { rng.random_range(spike_lo..=spike_hi) } else { spike_lo };
            }
            host_cpu.insert(net.host_id(h).to_string(), value);
        }

        let mut link_use = vec![0.0; net.links().len()];
        let mut sfc_latency = BTreeMap::new();
        for (entry, sfcr, vnfs) in &accepted {
            let p = entry.placement().expect("filtered to accepted");
            let rate = sfcr.traffic.rate_at(t);
            let sizes = segment_sizes(sfcr, vnfs);
            for (seg, size) in p.segments.iter().zip(&sizes) {
                for &l in &seg.links {
                    link_use[l] += rate * (size + sfcr.request_size_bits) / 1e6;
                }
            }
            let base = link_latency(p, sfcr, vnfs, net) + service_latency(p, vnfs, &utils);
            sfc_latency.insert(sfcr.id.clone(), apply_jitter(base, cfg.jitter_sigma, &mut rng));
        }

        frames.push(TelemetryFrame {
            timestamp_s: t,
            host_cpu,
            link_bw: net.links().iter().zip(link_use).map(|(l, u)| (l.id.clone(), u)).collect(),
            sfc_latency,
        });
    }
    Ok(frames)
}

/// Scores GA candidates by simulating them: acceptance ratio from the decoded
/// scheme, mean latency from the engine's samples.
pub struct EngineEvaluator<'a> {
    pub net: &'a SubstrateNetwork,
    pub sfcrs: &'a [SfcRequest],
    pub catalog: &'a Catalog,
    pub config: EngineConfig,
}

impl Evaluator for EngineEvaluator<'_> {
    fn evaluate(&self, _chromosome: &Chromosome, scheme: &EmbeddingScheme, stream_seed: u64) -> Fitness {
        let Ok(ar) = scheme.acceptance_ratio() else {
            return Fitness::worst();
        };
        if ar == 0.0 {
            return Fitness::worst();
        }
        let cfg = EngineConfig { seed: Some(stream_seed), ..self.config.clone() };
        let accepted: Vec<&str> =
            scheme.entries.iter().filter(|e| e.is_accepted()).map(|e| e.sfcr_id.as_str()).collect();
        let latency = simulate(self.net, scheme, self.sfcrs, self.catalog, &cfg)
            .ok()
            .and_then(|frames| mean_latency(&frames, &accepted).ok());
        Fitness::new(ar, latency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn utilization_examples() {
        let empty: [(f64, f64); 0] = [];
        assert_eq!(host_utilization(empty, 2, 0.99).value, 0.0);
        let u = host_utilization([(10.0, 0.05)], 2, 0.99);
        assert_eq!(u.value, 0.25);
        assert!(!u.saturated);
        let u = host_utilization([(12.0, 0.2)], 2, 0.99);
        assert!((u.uncapped - 1.2).abs() < 1e-12);
        assert_eq!(u.value, 0.99);
        assert!(u.saturated);
    }

    #[test]
    fn config_validation() {
        assert!(EngineConfig::default().validate().is_ok());
        assert_eq!(EngineConfig::default().frame_count(), 60);
        let c = EngineConfig { utilization_cap: 1.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = EngineConfig { sample_interval_s: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = EngineConfig { sample_interval_s: 61.0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = EngineConfig { idle_spike_range: [0.2, 0.1], ..Default::default() };
        assert!(c.validate().is_err());
        let c = EngineConfig { idle_spike_prob: 1.1, ..Default::default() };
        assert!(c.validate().is_err());
        let c = EngineConfig { duration_s: 0.9, sample_interval_s: 0.3, ..Default::default() };
        assert_eq!(c.frame_count(), 3);
    }

    #[test]
    fn jitter_stays_truncated() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10_000 {
            let l = apply_jitter(100.0, 0.05, &mut rng);
            assert!((85.0 - 1e-9..=115.0 + 1e-9).contains(&l));
        }
        assert_eq!(apply_jitter(100.0, 0.0, &mut rng), 100.0);
    }
}
