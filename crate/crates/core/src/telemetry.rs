//! Telemetry frames and post-hoc aggregation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BIN_WIDTH_MS: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TelemetryError {
    #[error("unknown sfc {0:?}")]
    UnknownSfc(String),
    #[error("unknown host {0:?}")]
    UnknownHost(String),
    #[error("no latency samples")]
    NoSamples,
    #[error("bin width must be positive")]
    InvalidBinWidth,
}

/// One sample tick of the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub timestamp_s: f64,
    /// Host id to CPU utilization in [0, 1].
    pub host_cpu: BTreeMap<String, f64>,
    /// Link id to Mbps in use, both directions.
    pub link_bw: BTreeMap<String, f64>,
    /// Accepted SFC id to round-trip latency in ms.
    pub sfc_latency: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower_ms: f64,
    pub count: usize,
}

/// Sparse histogram: only non-empty bins, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyHistogram {
    pub bin_width_ms: f64,
    pub bins: Vec<Bin>,
    pub total: usize,
}

pub fn bin_latencies(
    frames: &[TelemetryFrame],
    sfc_id: &str,
    bin_width_ms: f64,
) -> Result<LatencyHistogram, TelemetryError> {
    if !(bin_width_ms > 0.0) || !bin_width_ms.is_finite() {
        return Err(TelemetryError::InvalidBinWidth);
    }
    let samples: Vec<f64> = frames.iter().filter_map(|f| f.sfc_latency.get(sfc_id).copied()).collect();
    if samples.is_empty() && !frames.is_empty() {
        return Err(TelemetryError::UnknownSfc(sfc_id.to_string()));
    }
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for s in &samples {
        *counts.entry((s / bin_width_ms).floor() as i64).or_default() += 1;
    }
    Ok(LatencyHistogram {
        bin_width_ms,
        bins: counts.into_iter().map(|(k, count)| Bin { lower_ms: k as f64 * bin_width_ms, count }).collect(),
        total: samples.len(),
    })
}

/// `(timestamp, utilization)` for `host_id`, one point per frame.
pub fn cpu_series(frames: &[TelemetryFrame], host_id: &str) -> Result<Vec<(f64, f64)>, TelemetryError> {
    frames
        .iter()
        .map(|f| {
            f.host_cpu
                .get(host_id)
                .map(|&u| (f.timestamp_s, u))
                .ok_or_else(|| TelemetryError::UnknownHost(host_id.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| if v.is_empty() { Err(TelemetryError::UnknownHost(host_id.to_string())) } else { Ok(v) })
}

/// Mean over every (frame, accepted sfc) sample. Frames are visited in
/// timestamp order, so the result does not depend on their input order.
pub fn mean_latency<S: AsRef<str>>(frames: &[TelemetryFrame], accepted: &[S]) -> Result<f64, TelemetryError> {
    let mut ordered: Vec<&TelemetryFrame> = frames.iter().collect();
    ordered.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
    let mut ids: Vec<&str> = accepted.iter().map(AsRef::as_ref).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut sum = 0.0;
    let mut n = 0usize;
    for f in ordered {
        for id in &ids {
            if let Some(l) = f.sfc_latency.get(*id) {
                sum += l;
                n += 1;
            }
        }
    }
    if n == 0 {
        Err(TelemetryError::NoSamples)
    } else {
        Ok(sum / n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame(t: f64, lat: &[(&str, f64)], cpu: &[(&str, f64)]) -> TelemetryFrame {
        TelemetryFrame {
            timestamp_s: t,
            host_cpu: cpu.iter().map(|(h, u)| (h.to_string(), *u)).collect(),
            link_bw: BTreeMap::new(),
            sfc_latency: lat.iter().map(|(s, l)| (s.to_string(), *l)).collect(),
        }
    }

    #[test]
    fn direct_binning() {
        let frames: Vec<_> =
            [10.0, 12.0, 25.0].iter().enumerate().map(|(i, &l)| frame(i as f64, &[("a", l)], &[])).collect();
        let h = bin_latencies(&frames, "a", 10.0).unwrap();
        assert_eq!(h.total, 3);
        assert_eq!(h.bins, vec![Bin { lower_ms: 10.0, count: 2 }, Bin { lower_ms: 20.0, count: 1 }]);
    }

    #[test]
    fn binning_edge_cases() {
        let h = bin_latencies(&[], "a", 10.0).unwrap();
        assert_eq!(h.total, 0);
        assert!(h.bins.is_empty());
        let frames = vec![frame(0.0, &[("a", 1.0)], &[])];
        assert_eq!(bin_latencies(&frames, "b", 10.0), Err(TelemetryError::UnknownSfc("b".into())));
        assert_eq!(bin_latencies(&frames, "a", 0.0), Err(TelemetryError::InvalidBinWidth));
    }

    #[test]
    fn cpu_projection() {
        let frames: Vec<_> = (0..60).map(|i| frame(i as f64, &[], &[("h1", 0.0), ("h2", i as f64 / 100.0)])).collect();
        let s = cpu_series(&frames, "h1").unwrap();
        assert_eq!(s.len(), 60);
        assert!(s.iter().all(|&(_, u)| u == 0.0));
        let s2 = cpu_series(&frames, "h2").unwrap();
        for (p, f) in s2.iter().zip(&frames) {
            assert_eq!(*p, (f.timestamp_s, f.host_cpu["h2"]));
        }
        assert_eq!(cpu_series(&frames, "h9"), Err(TelemetryError::UnknownHost("h9".into())));
        assert!(cpu_series(&[], "h1").is_err());
    }

    #[test]
    fn means() {
        let frames: Vec<_> = (0..5).map(|i| frame(i as f64, &[("a", 100.0)], &[])).collect();
        assert_eq!(mean_latency(&frames, &["a"]).unwrap(), 100.0);
        let frames: Vec<_> = (0..5).map(|i| frame(i as f64, &[("a", 100.0), ("b", 200.0)], &[])).collect();
        assert_eq!(mean_latency(&frames, &["a", "b"]).unwrap(), 150.0);
        let none: [&str; 0] = [];
        assert_eq!(mean_latency(&frames, &none), Err(TelemetryError::NoSamples));
    }

    proptest! {
        #[test]
        fn histogram_conserves_counts(samples in prop::collection::vec(0.0f64..5000.0, 0..200), width in 0.5f64..300.0) {
            let frames: Vec<_> = samples.iter().enumerate().map(|(i, &l)| frame(i as f64, &[("s", l)], &[])).collect();
            let h = bin_latencies(&frames, "s", width).unwrap();
            prop_assert_eq!(h.total, samples.len());
            prop_assert_eq!(h.bins.iter().map(|b| b.count).sum::<usize>(), samples.len());
            for b in &h.bins {
                let k = (b.lower_ms / width).round();
                prop_assert_eq!(b.lower_ms, k * width);
            }
        }

        #[test]
        fn mean_is_order_invariant(lat in prop::collection::vec((1.0f64..1000.0, 1.0f64..1000.0), 1..40), rot in 0usize..40) {
            let frames: Vec<_> = lat.iter().enumerate().map(|(i, &(a, b))| frame(i as f64, &[("a", a), ("b", b)], &[])).collect();
            let mut shuffled = frames.clone();
            shuffled.rotate_left(rot % frames.len());
            shuffled.reverse();
            prop_assert_eq!(mean_latency(&frames, &["a", "b"]).unwrap(), mean_latency(&shuffled, &["b", "a"]).unwrap());
        }

        #[test]
        fn cpu_series_reconstructs_frames(us in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..30)) {
            let frames: Vec<_> = us.iter().enumerate().map(|(i, &(a, b))| frame(i as f64, &[], &[("h1", a), ("h2", b)])).collect();
            let s1 = cpu_series(&frames, "h1").unwrap();
            let s2 = cpu_series(&frames, "h2").unwrap();
            for (i, f) in frames.iter().enumerate() {
                let rebuilt: BTreeMap<String, f64> = [("h1".to_string(), s1[i].1), ("h2".to_string(), s2[i].1)].into();
                prop_assert_eq!(&rebuilt, &f.host_cpu);
                prop_assert_eq!(s1[i].0, f.timestamp_s);
            }
        }
    }
}
