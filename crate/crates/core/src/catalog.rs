//! VNF catalog, SFC requests and the request generator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The catalog shipped with the crate (`scenarios/catalog.json`).
pub const DEFAULT_CATALOG_JSON: &str = include_str!("../../../scenarios/catalog.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate vnf type {0:?}")]
    DuplicateVnfType(String),
    #[error("invalid profile for {name:?}: {reason}")]
    InvalidProfile { name: String, reason: String },
    #[error("unknown vnf type {vnf:?} in {sfcr:?}")]
    UnknownVnfType { sfcr: String, vnf: String },
    #[error("invalid sfc request {sfcr:?}: {reason}")]
    InvalidRequest { sfcr: String, reason: String },
    #[error("duplicate sfc request id {0:?}")]
    DuplicateSfcr(String),
}

/// Resource and service profile of one VNF type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VnfDescriptor {
    pub name: String,
    /// CPU-seconds consumed per request.
    pub cpu_per_request: f64,
    /// Service time at zero load, in ms.
    pub base_service_time_ms: f64,
    pub memory_mb: f64,
    /// Multiplier on payload size as a request leaves this VNF.
    #[serde(default = "unit_scale")]
    pub bandwidth_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl VnfDescriptor {
    fn validate(&self) -> Result<(), CatalogError> {
        let bad = |reason: &str| Err(CatalogError::InvalidProfile { name: self.name.clone(), reason: reason.into() });
        if self.name.is_empty() {
            return bad("empty name");
        }
        if !(self.cpu_per_request >= 0.0) || !self.cpu_per_request.is_finite() {
            return bad("cpu_per_request must be >= 0");
        }
        if !(self.base_service_time_ms > 0.0) || !self.base_service_time_ms.is_finite() {
            return bad("base_service_time_ms must be > 0");
        }
        if !(self.memory_mb >= 0.0) || !self.memory_mb.is_finite() {
            return bad("memory_mb must be >= 0");
        }
        if !(self.bandwidth_scale > 0.0) || !self.bandwidth_scale.is_finite() {
            return bad("bandwidth_scale must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDocument {
    #[serde(default)]
    pub vnfs: Vec<VnfDescriptor>,
}

/// VNF descriptors indexed by type name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    vnfs: BTreeMap<String, VnfDescriptor>,
}

impl Catalog {
    pub fn from_descriptors(vnfs: Vec<VnfDescriptor>) -> Result<Self, CatalogError> {
        let mut map = BTreeMap::new();
        for v in vnfs {
            v.validate()?;
            if map.contains_key(&v.name) {
                return Err(CatalogError::DuplicateVnfType(v.name));
            }
            map.insert(v.name.clone(), v);
        }
        Ok(Self { vnfs: map })
    }

    pub fn builtin() -> Self {
        load_catalog(DEFAULT_CATALOG_JSON).expect("bundled catalog is valid")
    }

    pub fn get(&self, name: &str) -> Option<&VnfDescriptor> {
        self.vnfs.get(name)
    }

    pub fn len(&self) -> usize {
        self.vnfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vnfs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &VnfDescriptor> {
        self.vnfs.values()
    }

    /// Resolves every chain entry of `sfcr`.
    pub fn resolve<'a>(&'a self, sfcr: &SfcRequest) -> Result<Vec<&'a VnfDescriptor>, CatalogError> {
        sfcr.chain
            .iter()
            .map(|name| {
                self.get(name).ok_or_else(|| CatalogError::UnknownVnfType { sfcr: sfcr.id.clone(), vnf: name.clone() })
            })
            .collect()
    }
}

/// Parses a catalog document. A document without VNFs is a valid, empty
/// catalog.
pub fn load_catalog(document: &str) -> Result<Catalog, CatalogError> {
    let doc: CatalogDocument =
        if document.trim().is_empty() { CatalogDocument::default() } else { serde_json::from_str(document)? };
    Catalog::from_descriptors(doc.vnfs)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub rps: f64,
}

/// Piecewise-constant request rate over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrafficPattern {
    pub segments: Vec<TrafficSegment>,
}

impl TrafficPattern {
    pub fn constant(rps: f64, duration_s: f64) -> Self {
        Self { segments: vec![TrafficSegment { start_s: 0.0, end_s: duration_s, rps }] }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.start_s < s.end_s) {
                return Err(format!("segment {i}: start must be < end"));
            }
            if !(s.rps >= 0.0) || !s.rps.is_finite() {
                return Err(format!("segment {i}: rate must be >= 0"));
            }
            if i > 0 && self.segments[i - 1].end_s != s.start_s {
                return Err(format!("segment {i}: not contiguous with previous segment"));
            }
        }
        Ok(())
    }

    /// Rate at time `t`; zero outside every segment.
    pub fn rate_at(&self, t: f64) -> f64 {
        self.segments.iter().find(|s| s.start_s <= t && t < s.end_s).map_or(0.0, |s| s.rps)
    }

    pub fn peak(&self) -> f64 {
        self.segments.iter().map(|s| s.rps).fold(0.0, f64::max)
    }
}

/// One SFC request: an ordered VNF chain with its traffic demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfcRequest {
    pub id: String,
    pub chain: Vec<String>,
    /// Reserved on every link of every path segment.
    pub bandwidth_mbps: f64,
    pub request_size_bits: f64,
    pub traffic: TrafficPattern,
}

impl SfcRequest {
    pub fn validate(&self, catalog: &Catalog) -> Result<(), CatalogError> {
        let bad = |reason: String| Err(CatalogError::InvalidRequest { sfcr: self.id.clone(), reason });
        if self.id.is_empty() {
            return bad("empty id".into());
        }
        if self.chain.is_empty() {
            return bad("empty chain".into());
        }
        if !(self.bandwidth_mbps > 0.0) || !self.bandwidth_mbps.is_finite() {
            return bad("bandwidth_mbps must be > 0".into());
        }
        if !(self.request_size_bits >= 0.0) || !self.request_size_bits.is_finite() {
            return bad("request_size_bits must be >= 0".into());
        }
        if let Err(e) = self.traffic.validate() {
            return bad(e);
        }
        catalog.resolve(self).map(|_| ())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SfcrDocument {
    pub sfcrs: Vec<SfcRequest>,
}

pub fn load_sfcrs(document: &str) -> Result<Vec<SfcRequest>, CatalogError> {
    let doc: SfcrDocument = serde_json::from_str(document)?;
    Ok(doc.sfcrs)
}

/// Validates a request list against `catalog` and checks id uniqueness.
pub fn validate_sfcrs(sfcrs: &[SfcRequest], catalog: &Catalog) -> Result<(), CatalogError> {
    let mut seen = std::collections::BTreeSet::new();
    for s in sfcrs {
        s.validate(catalog)?;
        if !seen.insert(s.id.as_str()) {
            return Err(CatalogError::DuplicateSfcr(s.id.clone()));
        }
    }
    Ok(())
}

/// Expands each template into `duplicates` copies, template-major. Copy `i`
/// of template `t` is named `<t.id>-<i>`.
///
/// `_seed` is accepted for provenance only; the expansion is deterministic.
pub fn generate_sfcrs(templates: &[SfcRequest], duplicates: usize, _seed: u64) -> Vec<SfcRequest> {
    templates
        .iter()
        .flat_map(|t| (0..duplicates).map(move |i| SfcRequest { id: format!("{}-{i}", t.id), ..t.clone() }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn template(id: &str) -> SfcRequest {
        SfcRequest {
            id: id.into(),
            chain: vec!["firewall".into(), "nat".into()],
            bandwidth_mbps: 10.0,
            request_size_bits: 8000.0,
            traffic: TrafficPattern::constant(5.0, 60.0),
        }
    }

    #[test]
    fn builtin_has_seven_vnfs() {
        let c = Catalog::builtin();
        assert_eq!(c.len(), 7);
        for v in c.iter() {
            assert!((0.01..=0.1).contains(&v.cpu_per_request), "{}", v.name);
            assert!((1.0..=10.0).contains(&v.base_service_time_ms), "{}", v.name);
            assert_eq!(v.bandwidth_scale, 1.0);
        }
        let mut cpus: Vec<f64> = c.iter().map(|v| v.cpu_per_request).collect();
        cpus.sort_by(f64::total_cmp);
        cpus.dedup();
        assert_eq!(cpus.len(), 7);
    }

    #[test]
    fn empty_document_is_empty_catalog() {
        assert!(load_catalog("").unwrap().is_empty());
        assert!(load_catalog("{}").unwrap().is_empty());
        assert!(load_catalog(r#"{"vnfs": []}"#).unwrap().is_empty());
    }

    #[test]
    fn duplicate_vnf_type() {
        let doc = r#"{"vnfs": [
            {"name": "firewall", "cpu_per_request": 0.01, "base_service_time_ms": 1, "memory_mb": 1},
            {"name": "firewall", "cpu_per_request": 0.02, "base_service_time_ms": 2, "memory_mb": 1}
        ]}"#;
        assert!(matches!(load_catalog(doc), Err(CatalogError::DuplicateVnfType(n)) if n == "firewall"));
    }

    #[test]
    fn invalid_profile_and_parse_errors() {
        let doc = r#"{"vnfs": [{"name": "x", "cpu_per_request": 0.01, "base_service_time_ms": 0, "memory_mb": 1}]}"#;
        assert!(matches!(load_catalog(doc), Err(CatalogError::InvalidProfile { .. })));
        assert!(matches!(load_catalog("{not json"), Err(CatalogError::Parse(_))));
        let doc = r#"{"vnfs": [], "extra": 1}"#;
        assert!(matches!(load_catalog(doc), Err(CatalogError::Parse(_))));
    }

    #[test]
    fn generate_counts() {
        let ts: Vec<_> = ["a", "b", "c", "d"].iter().map(|i| template(i)).collect();
        assert_eq!(generate_sfcrs(&ts, 1, 0).len(), 4);
        let g = generate_sfcrs(&ts, 8, 0);
        assert_eq!(g.len(), 32);
        assert_eq!(g[0].id, "a-0");
        assert_eq!(g[7].id, "a-7");
        assert_eq!(g[8].id, "b-0");
        assert!(generate_sfcrs(&ts, 0, 0).is_empty());
    }

    #[test]
    fn traffic_pattern_rates() {
        let p = TrafficPattern {
            segments: vec![
                TrafficSegment { start_s: 0.0, end_s: 10.0, rps: 2.0 },
                TrafficSegment { start_s: 10.0, end_s: 20.0, rps: 7.0 },
            ],
        };
        p.validate().unwrap();
        assert_eq!(p.rate_at(0.0), 2.0);
        assert_eq!(p.rate_at(10.0), 7.0);
        assert_eq!(p.rate_at(20.0), 0.0);
        assert_eq!(p.peak(), 7.0);
        let gap = TrafficPattern {
            segments: vec![
                TrafficSegment { start_s: 0.0, end_s: 10.0, rps: 2.0 },
                TrafficSegment { start_s: 11.0, end_s: 20.0, rps: 7.0 },
            ],
        };
        assert!(gap.validate().is_err());
    }

    #[test]
    fn request_validation() {
        let c = Catalog::builtin();
        template("x").validate(&c).unwrap();
        let mut t = template("x");
        t.chain.push("teleporter".into());
        assert!(matches!(t.validate(&c), Err(CatalogError::UnknownVnfType { .. })));
        let mut t = template("x");
        t.chain.clear();
        assert!(t.validate(&c).is_err());
        let mut t = template("x");
        t.bandwidth_mbps = 0.0;
        assert!(t.validate(&c).is_err());
        let dup = vec![template("x"), template("x")];
        assert!(matches!(validate_sfcrs(&dup, &c), Err(CatalogError::DuplicateSfcr(_))));
    }

    proptest! {
        #[test]
        fn generated_size_and_unique_ids(n in 1usize..6, d in 0usize..10, seed in any::<u64>()) {
            let ts: Vec<_> = (0..n).map(|i| template(&format!("t{i}"))).collect();
            let g = generate_sfcrs(&ts, d, seed);
            prop_assert_eq!(g.len(), n * d);
            let ids: std::collections::BTreeSet<_> = g.iter().map(|s| s.id.clone()).collect();
            prop_assert_eq!(ids.len(), g.len());
            prop_assert_eq!(g, generate_sfcrs(&ts, d, seed));
        }
    }
}
