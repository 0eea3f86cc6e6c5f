//! Core domain types: transfer parameters, endpoint profiles, log entries.
//!
//! All rates are carried in Mbps. Disk rates arrive from logs in MB/s and are
//! converted once (factor 8) when a profile is constructed, so every
//! comparison downstream happens in one unit.

use serde::{Deserialize, Serialize};

/// Factor converting MB/s to Mbps.
pub const MBS_TO_MBPS: f64 = 8.0;

/// A transfer parameter setting: concurrency (parallel file transfers),
/// per-file parallel streams, and command pipelining depth.
///
/// Field order matters: the derived `Ord` is the lexicographic (cc, p, pp)
/// order used everywhere ties between equal-throughput candidates are broken.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ParamTriple {
    pub cc: u32,
    pub p: u32,
    pub pp: u32,
}

impl ParamTriple {
    pub fn new(cc: u32, p: u32, pp: u32) -> Self {
        ParamTriple { cc, p, pp }
    }

    /// True when every component is at least 1 and at most its bound.
    pub fn within(&self, bounds: &ParamBounds) -> bool {
        (1..=bounds.cc).contains(&self.cc)
            && (1..=bounds.p).contains(&self.p)
            && (1..=bounds.pp).contains(&self.pp)
    }

    /// Components as floats in field order (cc, p, pp).
    pub fn as_f64(&self) -> [f64; 3] {
        [self.cc as f64, self.p as f64, self.pp as f64]
    }

    /// Components as the `[p, cc, pp]` coordinate vector used by surface
    /// evaluation and regression (their axis convention).
    pub fn surface_point(&self) -> [f64; 3] {
        [self.p as f64, self.cc as f64, self.pp as f64]
    }
}

impl std::fmt::Display for ParamTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(cc={}, p={}, pp={})", self.cc, self.p, self.pp)
    }
}

/// Upper bounds of the searchable parameter lattice; every axis starts at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub cc: u32,
    pub p: u32,
    pub pp: u32,
}

impl Default for ParamBounds {
    fn default() -> Self {
        ParamBounds {
            cc: 16,
            p: 16,
            pp: 32,
        }
    }
}

impl ParamBounds {
    /// Number of lattice points.
    pub fn volume(&self) -> u64 {
        self.cc as u64 * self.p as u64 * self.pp as u64
    }

    /// Iterate the full lattice in (cc, p, pp) lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = ParamTriple> + '_ {
        let (cc_max, p_max, pp_max) = (self.cc, self.p, self.pp);
        (1..=cc_max).flat_map(move |cc| {
            (1..=p_max)
                .flat_map(move |p| (1..=pp_max).map(move |pp| ParamTriple { cc, p, pp }))
        })
    }
}

/// Static description of an end-to-end network path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkProfile {
    pub source_id: String,
    pub dest_id: String,
    /// Link bandwidth, Mbps.
    pub bandwidth_mbps: f64,
    /// Round-trip time, milliseconds.
    pub rtt_ms: f64,
    /// TCP buffer size, bytes.
    pub tcp_buffer_bytes: u64,
    /// Source disk read rate, Mbps (already converted from MB/s).
    pub disk_read_mbps: f64,
    /// Destination disk write rate, Mbps (already converted from MB/s).
    pub disk_write_mbps: f64,
}

/// Shape of the dataset being moved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub avg_file_bytes: u64,
    pub num_files: u64,
    pub total_bytes: u64,
}

/// One historical transfer observation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferLogEntry {
    pub timestamp: f64,
    pub network: NetworkProfile,
    pub dataset: DatasetProfile,
    pub params: ParamTriple,
    pub throughput_mbps: f64,
    /// Aggregate outgoing rate of other transfers sharing an endpoint, Mbps.
    pub contending_out_mbps: f64,
    pub contending_streams: u32,
}

impl TransferLogEntry {
    /// Wall-clock span of the transfer implied by volume and rate, seconds.
    pub fn duration_s(&self) -> f64 {
        if self.throughput_mbps <= 0.0 {
            return 0.0;
        }
        self.dataset.total_bytes as f64 * 8.0 / 1e6 / self.throughput_mbps
    }

    /// External load intensity observed around this entry.
    pub fn load_intensity(&self) -> LoadIntensity {
        LoadIntensity::from_rates(self.network.bandwidth_mbps, self.contending_out_mbps)
    }
}

/// Fraction of link bandwidth left over by known contending traffic,
/// clamped to `[0, 1]`. 1.0 means an idle network, 0.0 a saturated one.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LoadIntensity(f64);

impl LoadIntensity {
    pub fn new(value: f64) -> Self {
        LoadIntensity(value.clamp(0.0, 1.0))
    }

    /// `(bandwidth - contending_out) / bandwidth`, clamped to `[0, 1]`.
    pub fn from_rates(bandwidth_mbps: f64, contending_out_mbps: f64) -> Self {
        assert!(bandwidth_mbps > 0.0, "bandwidth must be positive");
        LoadIntensity::new((bandwidth_mbps - contending_out_mbps) / bandwidth_mbps)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Hard ceiling on end-to-end throughput: the slowest of link bandwidth,
/// source disk read, and destination disk write, all in Mbps.
pub fn max_achievable(net: &NetworkProfile) -> f64 {
    net.bandwidth_mbps
        .min(net.disk_read_mbps)
        .min(net.disk_write_mbps)
}
