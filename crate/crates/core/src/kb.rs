//! The knowledge base: orchestrates the offline pipeline (ingest → load
//! tagging → clustering → per-band surface fitting → maxima → sampling
//! regions), persists the result as versioned JSON, supports additive
//! updates, and answers online queries without refitting.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{
    raw_features, select_k, ClusterMethod, FeatureBounds, FeatureVector,
};
use crate::error::{Error, Result};
use crate::maxima::surface_argmax;
use crate::model::{
    DatasetProfile, NetworkProfile, ParamBounds, ParamTriple, TransferLogEntry,
};
use crate::numfmt;
use crate::regions::{
    sampling_region, SamplingRegion, DEFAULT_KEEP, DEFAULT_RADIUS, DEFAULT_SAMPLES,
};
use crate::surface::{
    fit_band_model, Argmax, BicubicGridSurface, ConfidencePoint, LatticeObservation, LoadBand,
    SplineFamily, SurfaceModel, ThroughputSurface, DEFAULT_Z, LOAD_BANDS,
};

/// Serialized knowledge-base format version.
pub const FORMAT_VERSION: u32 = 1;

/// Multiplier on a cluster's mean radius beyond which a new entry is
/// considered outside the cluster's regime.
const FAR_RADIUS_FACTOR: f64 = 2.0;
/// Floor on the far-entry threshold, so zero-radius clusters (a single
/// repeated profile) tolerate small feature drift.
const FAR_RADIUS_FLOOR: f64 = 0.05;
/// A spawned cluster must improve the CH score by this factor over merging
/// into existing clusters (the 20% degradation trigger, read in reverse).
const SPAWN_CH_FACTOR: f64 = 1.2;

/// Build-time knobs, persisted so updates refit identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbConfig {
    pub seed: u64,
    /// Candidate cluster-count range for CH selection.
    pub m_range: (usize, usize),
    pub method: ClusterMethod,
    /// Confidence half-width in standard deviations.
    pub z: f64,
    /// Chebyshev radius of maxima neighborhoods.
    pub region_radius: u32,
    /// Lattice draws when searching for separation points (γ).
    pub region_samples: usize,
    /// Separation points kept per region (λ).
    pub region_keep: usize,
    /// Parameter lattice bounds (β per axis).
    pub bounds: ParamBounds,
}

impl Default for KbConfig {
    fn default() -> Self {
        KbConfig {
            seed: 0,
            m_range: (2, 8),
            method: ClusterMethod::KmeansPp,
            z: DEFAULT_Z,
            region_radius: DEFAULT_RADIUS,
            region_samples: DEFAULT_SAMPLES,
            region_keep: DEFAULT_KEEP,
            bounds: ParamBounds::default(),
        }
    }
}

/// One ingested log file: a content-derived id plus its parsed entries.
#[derive(Debug, Clone)]
pub struct LogBatch {
    pub id: String,
    pub entries: Vec<TransferLogEntry>,
}

/// Content-addressed batch id: SHA-256 of the raw file bytes, hex-encoded.
pub fn batch_id(content: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(content);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// One transfer-characteristic cluster with its per-band surfaces.
#[derive(Debug, Clone)]
pub struct KbCluster {
    pub centroid: FeatureVector,
    /// Mean normalized feature distance of member entries to the centroid.
    pub radius: f64,
    /// Member entry count.
    pub size: u64,
    /// One surface per non-empty load band, ascending by load tag.
    pub surfaces: Vec<ThroughputSurface>,
}

/// The persisted product of offline analysis.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub version: u32,
    pub normalization: FeatureBounds,
    /// Clusters in canonical order (centroids sorted lexicographically).
    pub clusters: Vec<KbCluster>,
    /// Largest entry timestamp seen at build/update time (not wall clock, so
    /// rebuilds are reproducible).
    pub built_at: f64,
    /// Ids of every ingested batch, in ingestion order.
    pub batches: Vec<String>,
    pub config: KbConfig,
}

/// Deterministic per-cluster RNG seed for region sampling, derived from the
/// centroid value (not its index) so cluster insertion never reshuffles
/// other clusters' regions.
fn region_seed(seed: u64, centroid: &FeatureVector) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in centroid.0 {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed
}

/// Group (params → throughput samples) per load band.
fn bucket_by_band(entries: &[&TransferLogEntry]) -> BTreeMap<usize, Vec<(ParamTriple, f64)>> {
    let mut bands: BTreeMap<usize, Vec<(ParamTriple, f64)>> = BTreeMap::new();
    for entry in entries {
        let band = LoadBand::from_intensity(entry.load_intensity());
        bands
            .entry(band.index())
            .or_default()
            .push((entry.params, entry.throughput_mbps));
    }
    bands
}

/// Fit every non-empty band of one cluster and precompute argmaxes.
fn fit_cluster_surfaces(
    cluster_id: u32,
    entries: &[&TransferLogEntry],
    config: &KbConfig,
) -> Result<Vec<ThroughputSurface>> {
    let mut surfaces = Vec::new();
    for (band_idx, samples) in bucket_by_band(entries) {
        let observations = crate::surface::summarize_samples(&samples);
        let band = LoadBand::new(band_idx as u8);
        surfaces.push(band_surface(cluster_id, band, &observations, &config.bounds)?);
    }
    Ok(surfaces)
}

/// Fit one band surface from per-lattice-point observations.
fn band_surface(
    cluster_id: u32,
    band: LoadBand,
    observations: &[LatticeObservation],
    bounds: &ParamBounds,
) -> Result<ThroughputSurface> {
    let fitted = fit_band_model(observations)?;
    let mut surface = ThroughputSurface {
        cluster_id,
        band,
        load_tag: band.midpoint(),
        model: fitted.model,
        confidence: fitted.confidence,
        argmax: None,
        region: None,
        low_confidence: fitted.low_confidence,
        fill_fraction: fitted.fill_fraction,
        hull: fitted.hull,
    };
    let argmax: Argmax = surface_argmax(&surface, bounds);
    surface.argmax = Some(argmax);
    Ok(surface)
}

/// Compute the cluster's sampling region and duplicate it onto each band
/// surface.
fn attach_region(
    surfaces: &mut [ThroughputSurface],
    centroid: &FeatureVector,
    config: &KbConfig,
) -> Result<()> {
    let region: SamplingRegion = sampling_region(
        surfaces,
        &config.bounds,
        config.region_radius,
        config.region_samples,
        config.region_keep,
        region_seed(config.seed, centroid),
    )?;
    for s in surfaces.iter_mut() {
        s.region = Some(region.clone());
    }
    Ok(())
}

impl KnowledgeBase {
    /// Run the full offline pipeline over parsed log batches.
    pub fn build(batches: &[LogBatch], config: &KbConfig) -> Result<KnowledgeBase> {
        let entries: Vec<&TransferLogEntry> =
            batches.iter().flat_map(|b| b.entries.iter()).collect();
        if entries.is_empty() {
            return Err(Error::Kb("no log entries to build from".into()));
        }

        let raw: Vec<[f64; 5]> = entries
            .iter()
            .map(|e| raw_features(&e.network, &e.dataset))
            .collect();
        let normalization = FeatureBounds::fit(&raw)?;
        let points: Vec<FeatureVector> =
            raw.iter().map(|r| normalization.normalize(r)).collect();

        // Cluster; corpora too small or too uniform for CH selection fall
        // back to a single cluster.
        let distinct = {
            let mut bits: Vec<[u64; 5]> = points
                .iter()
                .map(|p| {
                    [
                        p.0[0].to_bits(),
                        p.0[1].to_bits(),
                        p.0[2].to_bits(),
                        p.0[3].to_bits(),
                        p.0[4].to_bits(),
                    ]
                })
                .collect();
            bits.sort();
            bits.dedup();
            bits.len()
        };
        let (assignments, centroids) = if distinct < 2 || points.len() < 3 {
            let mut mean = [0.0; 5];
            for p in &points {
                for i in 0..5 {
                    mean[i] += p.0[i];
                }
            }
            for v in &mut mean {
                *v /= points.len() as f64;
            }
            (vec![0usize; points.len()], vec![FeatureVector(mean)])
        } else {
            let selected = select_k(&points, config.m_range, config.method, config.seed)?;
            (selected.clustering.assignments, selected.clustering.centroids)
        };

        // Canonical cluster order: centroids sorted lexicographically.
        let mut order: Vec<usize> = (0..centroids.len()).collect();
        order.sort_by(|&a, &b| {
            centroids[a]
                .0
                .iter()
                .zip(&centroids[b].0)
                .find_map(|(x, y)| {
                    let ord = x.total_cmp(y);
                    (ord != std::cmp::Ordering::Equal).then_some(ord)
                })
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut clusters = Vec::with_capacity(centroids.len());
        for (new_label, &old_label) in order.iter().enumerate() {
            let centroid = centroids[old_label];
            let members: Vec<&TransferLogEntry> = entries
                .iter()
                .zip(&assignments)
                .filter(|(_, &a)| a == old_label)
                .map(|(e, _)| *e)
                .collect();
            let member_points: Vec<&FeatureVector> = points
                .iter()
                .zip(&assignments)
                .filter(|(_, &a)| a == old_label)
                .map(|(p, _)| p)
                .collect();
            let radius = member_points.iter().map(|p| p.dist(&centroid)).sum::<f64>()
                / member_points.len() as f64;

            let mut surfaces = fit_cluster_surfaces(new_label as u32, &members, config)?;
            attach_region(&mut surfaces, &centroid, config)?;
            clusters.push(KbCluster {
                centroid,
                radius,
                size: members.len() as u64,
                surfaces,
            });
        }

        let built_at = entries
            .iter()
            .map(|e| e.timestamp)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(KnowledgeBase {
            version: FORMAT_VERSION,
            normalization,
            clusters,
            built_at,
            batches: batches.iter().map(|b| b.id.clone()).collect(),
            config: config.clone(),
        })
    }

    /// Nearest cluster by normalized feature distance; ties break to the
    /// lowest cluster index. Returns the index and the cluster, whose
    /// surfaces are already sorted ascending by load tag.
    pub fn query(
        &self,
        net: &NetworkProfile,
        data: &DatasetProfile,
    ) -> Result<(usize, &KbCluster)> {
        if self.clusters.is_empty() {
            return Err(Error::Kb("knowledge base has no clusters".into()));
        }
        let probe = self.normalization.normalize(&raw_features(net, data));
        let mut best = 0usize;
        let mut best_d2 = f64::INFINITY;
        for (i, cluster) in self.clusters.iter().enumerate() {
            let d2 = probe.dist2(&cluster.centroid);
            if d2 < best_d2 {
                best = i;
                best_d2 = d2;
            }
        }
        Ok((best, &self.clusters[best]))
    }

    /// Fold new batches into the knowledge base without re-reading old logs.
    ///
    /// Normalization bounds and existing centroids are frozen. Each new
    /// entry joins its nearest cluster; entries far outside every cluster's
    /// radius propose one spawned cluster, accepted only when the CH score
    /// of the spawned arrangement beats merging by [`SPAWN_CH_FACTOR`].
    /// Only clusters that received entries are refit; every other cluster's
    /// serialized form is preserved byte-identically.
    pub fn update(&self, new_batches: &[LogBatch]) -> Result<KnowledgeBase> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Kb(format!(
                "format version mismatch: kb has {}, this build supports {FORMAT_VERSION}",
                self.version
            )));
        }
        let batches: Vec<&LogBatch> =
            new_batches.iter().filter(|b| !b.entries.is_empty()).collect();
        if batches.is_empty() {
            return Ok(self.clone());
        }
        let entries: Vec<&TransferLogEntry> =
            batches.iter().flat_map(|b| b.entries.iter()).collect();
        let points: Vec<FeatureVector> = entries
            .iter()
            .map(|e| self.normalization.normalize(&raw_features(&e.network, &e.dataset)))
            .collect();

        // Assign to nearest frozen centroid; collect far entries.
        let mut assigned: Vec<usize> = Vec::with_capacity(points.len());
        let mut is_far: Vec<bool> = Vec::with_capacity(points.len());
        for p in &points {
            let mut best = 0usize;
            let mut best_d2 = f64::INFINITY;
            for (i, cluster) in self.clusters.iter().enumerate() {
                let d2 = p.dist2(&cluster.centroid);
                if d2 < best_d2 {
                    best = i;
                    best_d2 = d2;
                }
            }
            let threshold =
                (FAR_RADIUS_FACTOR * self.clusters[best].radius).max(FAR_RADIUS_FLOOR);
            assigned.push(best);
            is_far.push(best_d2.sqrt() > threshold);
        }

        // Spawn decision on the centroid summary.
        let far_points: Vec<FeatureVector> = points
            .iter()
            .zip(&is_far)
            .filter(|(_, &far)| far)
            .map(|(p, _)| *p)
            .collect();
        let spawn = if far_points.is_empty() {
            None
        } else {
            let mut mean = [0.0; 5];
            for p in &far_points {
                for i in 0..5 {
                    mean[i] += p.0[i];
                }
            }
            for v in &mut mean {
                *v /= far_points.len() as f64;
            }
            let candidate = FeatureVector(mean);
            let ch_merge = self.summary_ch(&points, &assigned, None);
            let spawn_assigned: Vec<usize> = assigned
                .iter()
                .zip(&is_far)
                .map(|(&a, &far)| if far { self.clusters.len() } else { a })
                .collect();
            let ch_spawn = self.summary_ch(&points, &spawn_assigned, Some(&candidate));
            (ch_spawn > SPAWN_CH_FACTOR * ch_merge).then_some(candidate)
        };

        let (final_assigned, spawn_centroid) = match spawn {
            Some(candidate) => (
                assigned
                    .iter()
                    .zip(&is_far)
                    .map(|(&a, &far)| if far { self.clusters.len() } else { a })
                    .collect::<Vec<usize>>(),
                Some(candidate),
            ),
            None => (assigned, None),
        };

        // Rebuild affected clusters.
        let mut clusters: Vec<KbCluster> = Vec::with_capacity(self.clusters.len() + 1);
        for (idx, cluster) in self.clusters.iter().enumerate() {
            let member_entries: Vec<&TransferLogEntry> = entries
                .iter()
                .zip(&final_assigned)
                .filter(|(_, &a)| a == idx)
                .map(|(e, _)| *e)
                .collect();
            if member_entries.is_empty() {
                clusters.push(cluster.clone());
                continue;
            }
            let member_points: Vec<&FeatureVector> = points
                .iter()
                .zip(&final_assigned)
                .filter(|(_, &a)| a == idx)
                .map(|(p, _)| p)
                .collect();
            clusters.push(self.merge_into_cluster(
                cluster,
                idx as u32,
                &member_entries,
                &member_points,
            )?);
        }
        if let Some(centroid) = spawn_centroid {
            let label = self.clusters.len();
            let member_entries: Vec<&TransferLogEntry> = entries
                .iter()
                .zip(&final_assigned)
                .filter(|(_, &a)| a == label)
                .map(|(e, _)| *e)
                .collect();
            let member_points: Vec<&FeatureVector> = points
                .iter()
                .zip(&final_assigned)
                .filter(|(_, &a)| a == label)
                .map(|(p, _)| p)
                .collect();
            let radius = member_points.iter().map(|p| p.dist(&centroid)).sum::<f64>()
                / member_points.len() as f64;
            let mut surfaces =
                fit_cluster_surfaces(label as u32, &member_entries, &self.config)?;
            attach_region(&mut surfaces, &centroid, &self.config)?;
            clusters.push(KbCluster {
                centroid,
                radius,
                size: member_entries.len() as u64,
                surfaces,
            });
        }

        // Restore canonical centroid order and in-memory ids.
        clusters.sort_by(|a, b| {
            a.centroid
                .0
                .iter()
                .zip(&b.centroid.0)
                .find_map(|(x, y)| {
                    let ord = x.total_cmp(y);
                    (ord != std::cmp::Ordering::Equal).then_some(ord)
                })
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for (i, cluster) in clusters.iter_mut().enumerate() {
            for s in &mut cluster.surfaces {
                s.cluster_id = i as u32;
            }
        }

        let built_at = entries
            .iter()
            .map(|e| e.timestamp)
            .fold(self.built_at, f64::max);
        let mut all_batches = self.batches.clone();
        all_batches.extend(batches.iter().map(|b| b.id.clone()));
        Ok(KnowledgeBase {
            version: self.version,
            normalization: self.normalization.clone(),
            clusters,
            built_at,
            batches: all_batches,
            config: self.config.clone(),
        })
    }

    /// CH score of an arrangement described by cluster summaries: existing
    /// clusters contribute their whole mass at their centroid (zero spread),
    /// new points contribute individually. `extra_centroid` appends a
    /// candidate cluster. With a single effective cluster the score is 0.
    fn summary_ch(
        &self,
        new_points: &[FeatureVector],
        assigned: &[usize],
        extra_centroid: Option<&FeatureVector>,
    ) -> f64 {
        let mut centroids: Vec<FeatureVector> =
            self.clusters.iter().map(|c| c.centroid).collect();
        if let Some(c) = extra_centroid {
            centroids.push(*c);
        }
        let m = centroids.len();
        if m < 2 {
            return 0.0;
        }
        let mut mass: Vec<f64> = self.clusters.iter().map(|c| c.size as f64).collect();
        mass.resize(m, 0.0);
        for &a in assigned {
            mass[a] += 1.0;
        }

        let total: f64 = mass.iter().sum();
        let mut grand = [0.0; 5];
        for (c, &w) in centroids.iter().zip(&mass) {
            // Existing mass sits exactly at its centroid; adding new points
            // below shifts the grand mean accordingly.
            for i in 0..5 {
                grand[i] += w * c.0[i];
            }
        }
        // Correct the grand mean: new points are at their own positions, not
        // their assigned centroid.
        for (p, &a) in new_points.iter().zip(assigned) {
            for i in 0..5 {
                grand[i] += p.0[i] - centroids[a].0[i];
            }
        }
        for v in &mut grand {
            *v /= total;
        }
        let grand = FeatureVector(grand);

        let within: f64 = new_points
            .iter()
            .zip(assigned)
            .map(|(p, &a)| p.dist2(&centroids[a]))
            .sum();
        let between: f64 = centroids
            .iter()
            .zip(&mass)
            .map(|(c, &w)| w * c.dist2(&grand))
            .sum();
        if within <= 0.0 {
            return f64::INFINITY;
        }
        let n = total;
        (between / (m as f64 - 1.0)) / (within / (n - m as f64))
    }

    /// Refit the bands of one cluster that received new entries, pooling new
    /// samples with the stored per-point summaries; untouched bands keep
    /// their surfaces (only the shared region is recomputed).
    fn merge_into_cluster(
        &self,
        cluster: &KbCluster,
        cluster_id: u32,
        new_entries: &[&TransferLogEntry],
        new_points: &[&FeatureVector],
    ) -> Result<KbCluster> {
        let new_by_band = bucket_by_band(new_entries);
        let mut surfaces: Vec<ThroughputSurface> = Vec::new();
        let mut handled: Vec<usize> = Vec::new();

        for surface in &cluster.surfaces {
            let band_idx = surface.band.index();
            match new_by_band.get(&band_idx) {
                None => surfaces.push(surface.clone()),
                Some(samples) => {
                    handled.push(band_idx);
                    let fresh = crate::surface::summarize_samples(samples);
                    let merged = pool_observations(&surface.confidence, &fresh);
                    surfaces.push(band_surface(
                        cluster_id,
                        surface.band,
                        &merged,
                        &self.config.bounds,
                    )?);
                }
            }
        }
        for (&band_idx, samples) in &new_by_band {
            if handled.contains(&band_idx)
                || cluster.surfaces.iter().any(|s| s.band.index() == band_idx)
            {
                continue;
            }
            let observations = crate::surface::summarize_samples(samples);
            surfaces.push(band_surface(
                cluster_id,
                LoadBand::new(band_idx as u8),
                &observations,
                &self.config.bounds,
            )?);
        }
        surfaces.sort_by_key(|s| s.band.index());
        attach_region(&mut surfaces, &cluster.centroid, &self.config)?;

        let new_count = new_entries.len() as u64;
        let dist_sum: f64 = new_points.iter().map(|p| p.dist(&cluster.centroid)).sum();
        let size = cluster.size + new_count;
        let radius =
            (cluster.size as f64 * cluster.radius + dist_sum) / size as f64;
        Ok(KbCluster {
            centroid: cluster.centroid,
            radius,
            size,
            surfaces,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let repr = KbRepr::from_kb(self);
        let mut text = serde_json::to_string_pretty(&repr)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<KnowledgeBase> {
        let repr: KbRepr = serde_json::from_str(text)?;
        repr.into_kb()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<KnowledgeBase> {
        let text = fs::read_to_string(path)?;
        KnowledgeBase::from_json(&text)
    }
}

/// Pool stored per-point summaries (observed points only — synthetic fills
/// are recomputed) with fresh observations, by exact population pooling:
/// the result matches a from-scratch fit over the union of samples.
fn pool_observations(
    stored: &[ConfidencePoint],
    fresh: &[LatticeObservation],
) -> Vec<LatticeObservation> {
    let mut merged: BTreeMap<ParamTriple, (f64, f64, u32)> = BTreeMap::new();
    for c in stored {
        if !c.synthetic && c.n > 0 {
            merged.insert(c.params, (c.mean, c.std, c.n));
        }
    }
    for obs in fresh {
        match merged.get_mut(&obs.params) {
            None => {
                merged.insert(obs.params, (obs.mean, obs.std, obs.n));
            }
            Some(slot) => {
                let (mu1, s1, n1) = *slot;
                let (w1, w2) = (n1 as f64, obs.n as f64);
                let n = w1 + w2;
                let mean = (w1 * mu1 + w2 * obs.mean) / n;
                let ex2 = (w1 * (s1 * s1 + mu1 * mu1)
                    + w2 * (obs.std * obs.std + obs.mean * obs.mean))
                    / n;
                let var = (ex2 - mean * mean).max(0.0);
                *slot = (mean, var.sqrt(), n1 + obs.n);
            }
        }
    }
    merged
        .into_iter()
        .map(|(params, (mean, std, n))| LatticeObservation { params, mean, std, n })
        .collect()
}

// ---------------------------------------------------------------------------
// Serialized representation. Every float in the pinned schema is a decimal
// string at 17 significant digits so round-trips are bit-exact; derived data
// (pipelining curve, spline coefficient blocks) is rebuilt on load.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct KbRepr {
    version: u32,
    normalization: NormalizationRepr,
    clusters: Vec<ClusterRepr>,
    #[serde(with = "crate::numfmt")]
    built_at: f64,
    batches: Vec<String>,
    config: KbConfig,
}

#[derive(Serialize, Deserialize)]
struct NormalizationRepr {
    #[serde(with = "crate::numfmt::vec")]
    min: Vec<f64>,
    #[serde(with = "crate::numfmt::vec")]
    max: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ClusterRepr {
    #[serde(with = "crate::numfmt::vec")]
    centroid: Vec<f64>,
    #[serde(with = "crate::numfmt")]
    radius: f64,
    size: u64,
    bands: Vec<BandRepr>,
}

#[derive(Serialize, Deserialize)]
struct BandRepr {
    #[serde(with = "crate::numfmt::pair")]
    i_s_range: (f64, f64),
    surface: SurfaceRepr,
}

#[derive(Serialize, Deserialize)]
struct SurfaceRepr {
    kind: String,
    #[serde(with = "crate::numfmt::vec")]
    pp_knots: Vec<f64>,
    sheets: Vec<SheetRepr>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    regression: Option<crate::surface::RegressionModel>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    value: Option<String>,
    confidence: Vec<ConfidencePoint>,
    argmax: Option<Argmax>,
    region: Option<SamplingRegion>,
    low_confidence: bool,
    #[serde(with = "crate::numfmt")]
    fill_fraction: f64,
    hull: crate::surface::Hull,
}

#[derive(Serialize, Deserialize)]
struct SheetRepr {
    #[serde(with = "crate::numfmt")]
    pp: f64,
    #[serde(with = "crate::numfmt::vec")]
    p_axis: Vec<f64>,
    #[serde(with = "crate::numfmt::vec")]
    cc_axis: Vec<f64>,
    #[serde(with = "crate::numfmt::vec2")]
    values: Vec<Vec<f64>>,
}

impl KbRepr {
    fn from_kb(kb: &KnowledgeBase) -> KbRepr {
        KbRepr {
            version: kb.version,
            normalization: NormalizationRepr {
                min: kb.normalization.min.to_vec(),
                max: kb.normalization.max.to_vec(),
            },
            clusters: kb
                .clusters
                .iter()
                .map(|c| ClusterRepr {
                    centroid: c.centroid.0.to_vec(),
                    radius: c.radius,
                    size: c.size,
                    bands: c
                        .surfaces
                        .iter()
                        .map(|s| BandRepr {
                            i_s_range: s.band.range(),
                            surface: surface_to_repr(s),
                        })
                        .collect(),
                })
                .collect(),
            built_at: kb.built_at,
            batches: kb.batches.clone(),
            config: kb.config.clone(),
        }
    }

    fn into_kb(self) -> Result<KnowledgeBase> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Kb(format!(
                "format version mismatch: file has {}, this build supports {FORMAT_VERSION}",
                self.version
            )));
        }
        let to_array = |v: Vec<f64>, what: &'static str| -> Result<[f64; 5]> {
            v.try_into()
                .map_err(|_| Error::Kb(format!("{what} must have 5 components")))
        };
        let normalization = FeatureBounds {
            min: to_array(self.normalization.min, "normalization.min")?,
            max: to_array(self.normalization.max, "normalization.max")?,
        };
        let mut clusters = Vec::with_capacity(self.clusters.len());
        for (idx, c) in self.clusters.into_iter().enumerate() {
            let centroid = FeatureVector(to_array(c.centroid, "centroid")?);
            let mut surfaces = Vec::with_capacity(c.bands.len());
            for band_repr in c.bands {
                let band_idx = (band_repr.i_s_range.0 * LOAD_BANDS as f64).round();
                if !(0.0..LOAD_BANDS as f64).contains(&band_idx) {
                    return Err(Error::Kb(format!(
                        "band range {:?} does not map to a load band",
                        band_repr.i_s_range
                    )));
                }
                let band = LoadBand::new(band_idx as u8);
                surfaces.push(surface_from_repr(idx as u32, band, band_repr.surface)?);
            }
            clusters.push(KbCluster {
                centroid,
                radius: c.radius,
                size: c.size,
                surfaces,
            });
        }
        Ok(KnowledgeBase {
            version: self.version,
            normalization,
            clusters,
            built_at: self.built_at,
            batches: self.batches,
            config: self.config,
        })
    }
}

fn surface_to_repr(s: &ThroughputSurface) -> SurfaceRepr {
    let (pp_knots, sheets, regression, value) = match &s.model {
        SurfaceModel::Spline(fam) => (
            fam.pp_knots().to_vec(),
            fam.pp_knots()
                .iter()
                .zip(fam.sheets())
                .map(|(&pp, sheet)| SheetRepr {
                    pp,
                    p_axis: sheet.x_knots().to_vec(),
                    cc_axis: sheet.y_knots().to_vec(),
                    values: sheet.values().to_vec(),
                })
                .collect(),
            None,
            None,
        ),
        SurfaceModel::Regression(m) => (Vec::new(), Vec::new(), Some(m.clone()), None),
        SurfaceModel::Constant(v) => {
            (Vec::new(), Vec::new(), None, Some(numfmt::to_string(*v)))
        }
    };
    SurfaceRepr {
        kind: s.model.kind_name().to_owned(),
        pp_knots,
        sheets,
        regression,
        value,
        confidence: s.confidence.clone(),
        argmax: s.argmax,
        region: s.region.clone(),
        low_confidence: s.low_confidence,
        fill_fraction: s.fill_fraction,
        hull: s.hull,
    }
}

fn surface_from_repr(
    cluster_id: u32,
    band: LoadBand,
    repr: SurfaceRepr,
) -> Result<ThroughputSurface> {
    let model = match repr.kind.as_str() {
        "spline" => {
            let mut sheets = Vec::with_capacity(repr.sheets.len());
            for sheet in repr.sheets {
                sheets.push(BicubicGridSurface::fit(
                    sheet.p_axis,
                    sheet.cc_axis,
                    sheet.values,
                )?);
            }
            SurfaceModel::Spline(SplineFamily::from_sheets(repr.pp_knots, sheets)?)
        }
        "quadratic" | "cubic" => SurfaceModel::Regression(repr.regression.ok_or_else(|| {
            Error::Kb(format!("surface kind {:?} without regression payload", repr.kind))
        })?),
        "constant" => {
            let text = repr
                .value
                .ok_or_else(|| Error::Kb("constant surface without value".into()))?;
            let v = numfmt::parse(&text)
                .map_err(|e| Error::Kb(format!("bad constant value {text:?}: {e}")))?;
            SurfaceModel::Constant(v)
        }
        other => return Err(Error::Kb(format!("unknown surface kind {other:?}"))),
    };
    Ok(ThroughputSurface {
        cluster_id,
        band,
        load_tag: band.midpoint(),
        model,
        confidence: repr.confidence,
        argmax: repr.argmax,
        region: repr.region,
        low_confidence: repr.low_confidence,
        fill_fraction: repr.fill_fraction,
        hull: repr.hull,
    })
}
