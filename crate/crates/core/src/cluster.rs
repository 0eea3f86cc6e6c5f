//! Clustering of transfer-characteristic feature vectors: k-means++ and
//! agglomerative centroid-linkage, with cluster-count selection by the
//! Calinski–Harabasz index.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DatasetProfile, NetworkProfile};

/// Lloyd iteration cap per k-means run.
pub const LLOYD_CAP: usize = 100;
/// k-means++ restarts per candidate cluster count in [`select_k`].
pub const DEFAULT_RESTARTS: usize = 8;

/// Normalized transfer characteristics, each component in [0, 1]:
/// `[bandwidth, rtt, log10(avg_file_size), log10(num_files), tcp_buffer]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; 5]);

impl FeatureVector {
    pub fn dist2(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &FeatureVector) -> f64 {
        self.dist2(other).sqrt()
    }

    fn bits(&self) -> [u64; 5] {
        [
            self.0[0].to_bits(),
            self.0[1].to_bits(),
            self.0[2].to_bits(),
            self.0[3].to_bits(),
            self.0[4].to_bits(),
        ]
    }
}

/// Raw (unnormalized) feature values for one transfer:
/// `[bw_mbps, rtt_ms, log10(avg_file_bytes), log10(num_files), tcp_buf_bytes]`.
///
/// File size and count are log-scaled because they span orders of magnitude.
pub fn raw_features(net: &NetworkProfile, data: &DatasetProfile) -> [f64; 5] {
    [
        net.bandwidth_mbps,
        net.rtt_ms,
        (data.avg_file_bytes as f64).log10(),
        (data.num_files as f64).log10(),
        net.tcp_buffer_bytes as f64,
    ]
}

/// Per-component min/max over a corpus, freezing the normalization map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds {
    pub min: [f64; 5],
    pub max: [f64; 5],
}

impl FeatureBounds {
    pub fn fit(raw: &[[f64; 5]]) -> Result<FeatureBounds> {
        if raw.is_empty() {
            return Err(Error::invalid("feature bounds", "empty corpus"));
        }
        let mut min = raw[0];
        let mut max = raw[0];
        for row in raw {
            for i in 0..5 {
                min[i] = min[i].min(row[i]);
                max[i] = max[i].max(row[i]);
            }
        }
        Ok(FeatureBounds { min, max })
    }

    /// Min-max normalize. A constant component maps to 0.5; values outside
    /// the fitted range (possible when bounds are frozen and new data
    /// arrives) are clamped to [0, 1].
    pub fn normalize(&self, raw: &[f64; 5]) -> FeatureVector {
        let mut out = [0.0; 5];
        for i in 0..5 {
            let span = self.max[i] - self.min[i];
            out[i] = if span <= 0.0 {
                0.5
            } else {
                ((raw[i] - self.min[i]) / span).clamp(0.0, 1.0)
            };
        }
        FeatureVector(out)
    }
}

/// A partition of the input points.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<FeatureVector>,
    /// Point count per cluster; always positive, sums to the input length.
    pub sizes: Vec<usize>,
}

impl Clustering {
    fn from_assignments(points: &[FeatureVector], assignments: Vec<usize>, centroids: Vec<FeatureVector>) -> Clustering {
        let mut sizes = vec![0usize; centroids.len()];
        for &a in &assignments {
            sizes[a] += 1;
        }
        debug_assert!(assignments.len() == points.len());
        assert!(sizes.iter().all(|&s| s > 0), "clustering produced an empty cluster");
        Clustering { assignments, centroids, sizes }
    }
}

/// Which clustering algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    KmeansPp,
    Hac,
}

impl FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeanspp" | "kmeans-pp" | "kmeans" => Ok(ClusterMethod::KmeansPp),
            "hac" => Ok(ClusterMethod::Hac),
            other => Err(Error::invalid(
                "cluster method",
                format!("expected kmeanspp or hac, got {other:?}"),
            )),
        }
    }
}

/// Distinct points with multiplicities, in a canonical (bit-pattern) order
/// independent of input order. `index_of[i]` maps input point `i` to its
/// distinct representative.
struct Deduped {
    distinct: Vec<FeatureVector>,
    weights: Vec<f64>,
    index_of: Vec<usize>,
}

fn dedupe(points: &[FeatureVector]) -> Deduped {
    let mut by_bits: BTreeMap<[u64; 5], usize> = BTreeMap::new();
    for p in points {
        *by_bits.entry(p.bits()).or_insert(0) += 1;
    }
    let mut distinct = Vec::with_capacity(by_bits.len());
    let mut weights = Vec::with_capacity(by_bits.len());
    let mut slot_of: BTreeMap<[u64; 5], usize> = BTreeMap::new();
    for (bits, count) in &by_bits {
        slot_of.insert(*bits, distinct.len());
        distinct.push(FeatureVector([
            f64::from_bits(bits[0]),
            f64::from_bits(bits[1]),
            f64::from_bits(bits[2]),
            f64::from_bits(bits[3]),
            f64::from_bits(bits[4]),
        ]));
        weights.push(*count as f64);
    }
    let index_of = points.iter().map(|p| slot_of[&p.bits()]).collect();
    Deduped { distinct, weights, index_of }
}

/// Nearest centroid by squared Euclidean distance; ties go to the lowest
/// centroid index.
fn nearest(point: &FeatureVector, centroids: &[FeatureVector]) -> usize {
    let mut best = 0;
    let mut best_d2 = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d2 = point.dist2(c);
        if d2 < best_d2 {
            best = i;
            best_d2 = d2;
        }
    }
    best
}

/// Weighted Lloyd refinement with empty-cluster repair. Returns assignments
/// over the distinct points, final centroids, and the post-assignment
/// objective after each iteration.
fn lloyd(
    distinct: &[FeatureVector],
    weights: &[f64],
    mut centroids: Vec<FeatureVector>,
) -> (Vec<usize>, Vec<FeatureVector>, Vec<f64>) {
    let m = centroids.len();
    let objective = |assign: &[usize], cents: &[FeatureVector]| -> f64 {
        distinct
            .iter()
            .zip(assign)
            .zip(weights)
            .map(|((p, &a), w)| w * p.dist2(&cents[a]))
            .sum()
    };

    let mut assignments: Vec<usize> = distinct.iter().map(|p| nearest(p, &centroids)).collect();
    let mut history = vec![objective(&assignments, &centroids)];

    for _ in 0..LLOYD_CAP {
        // Update step: weighted means of the assigned points.
        let mut sums = vec![[0.0; 5]; m];
        let mut mass = vec![0.0; m];
        for ((p, &a), w) in distinct.iter().zip(&assignments).zip(weights) {
            for i in 0..5 {
                sums[a][i] += w * p.0[i];
            }
            mass[a] += w;
        }
        let mut had_empty = false;
        for k in 0..m {
            if mass[k] > 0.0 {
                let mut c = sums[k];
                for v in &mut c {
                    *v /= mass[k];
                }
                centroids[k] = FeatureVector(c);
            } else {
                had_empty = true;
            }
        }
        if had_empty {
            // Reseed each empty cluster at the point farthest from its
            // current centroid; such a point coincides with no centroid, so
            // the next assignment is guaranteed to claim it.
            let mut used: Vec<usize> = Vec::new();
            for k in 0..m {
                if mass[k] > 0.0 {
                    continue;
                }
                let mut far_idx = None;
                let mut far_d2 = 0.0;
                for (i, (p, &a)) in distinct.iter().zip(&assignments).enumerate() {
                    if used.contains(&i) {
                        continue;
                    }
                    let d2 = p.dist2(&centroids[a]);
                    if d2 > far_d2 {
                        far_d2 = d2;
                        far_idx = Some(i);
                    }
                }
                if let Some(i) = far_idx {
                    centroids[k] = distinct[i];
                    used.push(i);
                }
            }
        }

        // Assignment step.
        let new_assignments: Vec<usize> =
            distinct.iter().map(|p| nearest(p, &centroids)).collect();
        let changed = new_assignments != assignments;
        assignments = new_assignments;
        history.push(objective(&assignments, &centroids));
        if !changed && !had_empty {
            break;
        }
    }
    (assignments, centroids, history)
}

/// D²-weighted seeding followed by Lloyd refinement.
///
/// Distinct points are clustered with multiplicity weights, so duplicate
/// entries influence centroids but cannot split across clusters. All
/// identical points with `m = 1` collapse to a single effective cluster.
pub fn kmeans_pp(points: &[FeatureVector], m: usize, seed: u64) -> Result<Clustering> {
    if m == 0 {
        return Err(Error::Cluster("cluster count must be ≥ 1".into()));
    }
    let dd = dedupe(points);
    if m > dd.distinct.len() {
        return Err(Error::Cluster(format!(
            "requested {m} clusters but only {} distinct points",
            dd.distinct.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Seeding: first centroid by multiplicity, the rest by weight × D².
    let mut centroids: Vec<FeatureVector> = Vec::with_capacity(m);
    let first = WeightedIndex::new(&dd.weights)
        .map_err(|e| Error::Cluster(format!("seeding weights: {e}")))?
        .sample(&mut rng);
    centroids.push(dd.distinct[first]);
    while centroids.len() < m {
        let d2: Vec<f64> = dd
            .distinct
            .iter()
            .zip(&dd.weights)
            .map(|(p, w)| {
                let nearest_d2 = centroids
                    .iter()
                    .map(|c| p.dist2(c))
                    .fold(f64::INFINITY, f64::min);
                w * nearest_d2
            })
            .collect();
        let pick = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(&mut rng),
            // All mass at zero: every distinct point coincides with a
            // centroid, impossible while centroids < m ≤ distinct — but if
            // float underflow ever gets here, take the first unchosen point.
            Err(_) => (0..dd.distinct.len())
                .find(|&i| centroids.iter().all(|c| c.0 != dd.distinct[i].0))
                .expect("m ≤ distinct points"),
        };
        centroids.push(dd.distinct[pick]);
    }

    let (distinct_assign, centroids, _history) = lloyd(&dd.distinct, &dd.weights, centroids);
    let assignments: Vec<usize> = dd.index_of.iter().map(|&di| distinct_assign[di]).collect();
    Ok(Clustering::from_assignments(points, assignments, centroids))
}

/// One active cluster during agglomeration.
struct Agglomerate {
    centroid: [f64; 5],
    members: Vec<usize>,
}

/// Run centroid-linkage agglomeration from singletons down to `m` clusters.
/// Returns the final clusters (ordered by smallest member index) and the
/// merge distances in merge order.
fn hac_run(points: &[FeatureVector], m: usize) -> (Vec<Agglomerate>, Vec<f64>) {
    let mut active: Vec<Agglomerate> = points
        .iter()
        .enumerate()
        .map(|(i, p)| Agglomerate { centroid: p.0, members: vec![i] })
        .collect();
    let mut merge_distances = Vec::new();

    while active.len() > m {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..active.len() {
            for j in (i + 1)..active.len() {
                let d2: f64 = active[i]
                    .centroid
                    .iter()
                    .zip(&active[j].centroid)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let better = match best {
                    None => true,
                    Some((_, _, bd2)) => d2 < bd2,
                };
                if better {
                    best = Some((i, j, d2));
                }
            }
        }
        let (i, j, d2) = best.expect("at least two active clusters");
        merge_distances.push(d2.sqrt());
        let b = active.swap_remove(j);
        let a = &mut active[i];
        let (na, nb) = (a.members.len() as f64, b.members.len() as f64);
        for k in 0..5 {
            a.centroid[k] = (na * a.centroid[k] + nb * b.centroid[k]) / (na + nb);
        }
        a.members.extend(b.members);
    }

    active.sort_by_key(|c| *c.members.iter().min().expect("non-empty cluster"));
    (active, merge_distances)
}

/// Agglomerative clustering: repeatedly merge the two clusters whose
/// centroids are closest until `m` clusters remain. Merged centroids are the
/// member means, so duplicates carry their natural weight.
pub fn hac_upgma(points: &[FeatureVector], m: usize) -> Result<Clustering> {
    if m == 0 {
        return Err(Error::Cluster("cluster count must be ≥ 1".into()));
    }
    if m > points.len() {
        return Err(Error::Cluster(format!(
            "requested {m} clusters from {} points",
            points.len()
        )));
    }
    let (active, _) = hac_run(points, m);
    let mut assignments = vec![0usize; points.len()];
    let mut centroids = Vec::with_capacity(active.len());
    for (label, cluster) in active.iter().enumerate() {
        for &i in &cluster.members {
            assignments[i] = label;
        }
        centroids.push(FeatureVector(cluster.centroid));
    }
    Ok(Clustering::from_assignments(points, assignments, centroids))
}

/// Within-cluster dispersion W: Σ ‖x − c_assigned(x)‖².
pub fn within_dispersion(points: &[FeatureVector], clustering: &Clustering) -> f64 {
    points
        .iter()
        .zip(&clustering.assignments)
        .map(|(p, &a)| p.dist2(&clustering.centroids[a]))
        .sum()
}

/// Calinski–Harabasz score in the standard corrected form
/// `(B/(m−1)) / (W/(n−m))`; larger is better. A perfect partition (W = 0)
/// is scored +∞ so it always wins.
pub fn ch_index(points: &[FeatureVector], clustering: &Clustering) -> Result<f64> {
    let n = points.len();
    let m = clustering.centroids.len();
    if m < 2 || m > n.saturating_sub(1) {
        return Err(Error::Cluster(format!(
            "CH index needs 2 ≤ m ≤ n−1, got m={m}, n={n}"
        )));
    }
    let mut grand = [0.0; 5];
    for p in points {
        for i in 0..5 {
            grand[i] += p.0[i];
        }
    }
    for v in &mut grand {
        *v /= n as f64;
    }
    let grand = FeatureVector(grand);

    let within = within_dispersion(points, clustering);
    let between: f64 = clustering
        .centroids
        .iter()
        .zip(&clustering.sizes)
        .map(|(c, &size)| size as f64 * c.dist2(&grand))
        .sum();

    if within <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (m - 1) as f64) / (within / (n - m) as f64))
}

/// The chosen cluster count with its clustering and the full score curve.
#[derive(Debug, Clone)]
pub struct SelectedClustering {
    pub m: usize,
    pub clustering: Clustering,
    /// `(m, CH(m))` for every evaluated count, ascending in m.
    pub ch_curve: Vec<(usize, f64)>,
}

fn derive_seed(seed: u64, m: usize, restart: usize) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [m as u64, restart as u64] {
        h ^= v
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(h << 6)
            .wrapping_add(h >> 2);
    }
    h
}

/// Evaluate CH over `m_range` and return the count with the largest score
/// (ties to the smaller count). k-means++ runs [`DEFAULT_RESTARTS`] restarts
/// per count, keeping the lowest within-cluster dispersion.
///
/// The range is clamped to what the corpus supports: at most one cluster per
/// distinct point and m ≤ n−1 (the CH domain).
pub fn select_k(
    points: &[FeatureVector],
    m_range: (usize, usize),
    method: ClusterMethod,
    seed: u64,
) -> Result<SelectedClustering> {
    let n = points.len();
    let distinct = dedupe(points).distinct.len();
    let lo = m_range.0.max(2);
    let hi = m_range.1.min(distinct).min(n.saturating_sub(1));
    if lo > hi {
        return Err(Error::Cluster(format!(
            "no feasible cluster count in [{}, {}] for {n} points ({distinct} distinct)",
            m_range.0, m_range.1
        )));
    }

    let mut ch_curve = Vec::with_capacity(hi - lo + 1);
    let mut best: Option<(usize, f64, Clustering)> = None;
    for m in lo..=hi {
        let clustering = match method {
            ClusterMethod::KmeansPp => {
                let mut run_best: Option<(f64, Clustering)> = None;
                for restart in 0..DEFAULT_RESTARTS {
                    let c = kmeans_pp(points, m, derive_seed(seed, m, restart))?;
                    let w = within_dispersion(points, &c);
                    if run_best.as_ref().is_none_or(|(bw, _)| w < *bw) {
                        run_best = Some((w, c));
                    }
                }
                run_best.expect("at least one restart").1
            }
            ClusterMethod::Hac => hac_upgma(points, m)?,
        };
        let score = ch_index(points, &clustering)?;
        ch_curve.push((m, score));
        let better = match &best {
            None => true,
            Some((_, best_score, _)) => score > *best_score,
        };
        if better {
            best = Some((m, score, clustering));
        }
    }
    let (m, _, clustering) = best.expect("range verified non-empty");
    Ok(SelectedClustering { m, clustering, ch_curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::gaussian_blobs;

    fn fv(x: f64) -> FeatureVector {
        FeatureVector([x, 0.0, 0.0, 0.0, 0.0])
    }

    /// Group original indices by cluster label, sorted for comparison.
    fn groups(c: &Clustering) -> Vec<Vec<usize>> {
        let mut by_label = vec![Vec::new(); c.centroids.len()];
        for (i, &a) in c.assignments.iter().enumerate() {
            by_label[a].push(i);
        }
        by_label.sort();
        by_label
    }

    #[test]
    fn kmeans_two_identical_pairs_split_cleanly() {
        let points = vec![fv(0.1), fv(0.1), fv(0.9), fv(0.9)];
        let c = kmeans_pp(&points, 2, 5).unwrap();
        assert_eq!(groups(&c), vec![vec![0, 1], vec![2, 3]]);
        let mut centroid_x: Vec<f64> = c.centroids.iter().map(|c| c.0[0]).collect();
        centroid_x.sort_by(f64::total_cmp);
        assert_eq!(centroid_x, vec![0.1, 0.9]);
        assert_eq!(c.sizes.iter().sum::<usize>(), 4);
    }

    #[test]
    fn kmeans_single_cluster_centroid_is_corpus_mean() {
        let points = vec![fv(0.0), fv(0.2), fv(0.7)];
        let c = kmeans_pp(&points, 1, 9).unwrap();
        assert_eq!(c.centroids.len(), 1);
        assert!((c.centroids[0].0[0] - 0.3).abs() < 1e-12);
        assert_eq!(c.assignments, vec![0, 0, 0]);
    }

    #[test]
    fn kmeans_recovers_three_tight_blobs() {
        let data = gaussian_blobs(3, 10, 0.01, 0.5, 17).unwrap();
        let c = kmeans_pp(&data.points, 3, 99).unwrap();
        // Check assignment matches ground truth up to label permutation:
        // every blob maps to exactly one cluster label.
        let mut label_map = [usize::MAX; 3];
        for (i, &truth) in data.labels.iter().enumerate() {
            let got = c.assignments[i];
            if label_map[truth] == usize::MAX {
                label_map[truth] = got;
            }
            assert_eq!(label_map[truth], got, "blob {truth} split across clusters");
        }
        let mut seen = label_map.to_vec();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2], "two blobs merged into one cluster");
    }

    #[test]
    fn kmeans_more_clusters_than_distinct_points_errors() {
        let points = vec![fv(0.5), fv(0.5), fv(0.5)];
        assert!(kmeans_pp(&points, 2, 0).is_err());
        // All identical with m = 1 is the degenerate single-cluster case.
        let c = kmeans_pp(&points, 1, 0).unwrap();
        assert_eq!(c.centroids[0], fv(0.5));
    }

    #[test]
    fn lloyd_objective_never_increases() {
        let data = gaussian_blobs(4, 25, 0.08, 0.25, 23).unwrap();
        let dd = dedupe(&data.points);
        // Deliberately poor seeding: first four distinct points.
        let seeds: Vec<FeatureVector> = dd.distinct[..4].to_vec();
        let (_, _, history) = lloyd(&dd.distinct, &dd.weights, seeds);
        for pair in history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "objective rose: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn hac_collinear_points_merge_nearest_first() {
        let points = vec![fv(0.0), fv(0.01), fv(0.10), fv(0.11)];
        let c = hac_upgma(&points, 2).unwrap();
        assert_eq!(groups(&c), vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(c.centroids[0].0[0], 0.005);
        assert_eq!(c.centroids[1].0[0], 0.10500000000000001);
    }

    #[test]
    fn hac_extreme_counts() {
        let points = vec![fv(0.0), fv(0.3), fv(0.9)];
        let singletons = hac_upgma(&points, 3).unwrap();
        assert_eq!(singletons.assignments, vec![0, 1, 2]);
        let one = hac_upgma(&points, 1).unwrap();
        assert_eq!(one.assignments, vec![0, 0, 0]);
        assert!((one.centroids[0].0[0] - 0.4).abs() < 1e-12);
        assert!(hac_upgma(&points, 4).is_err());
    }

    #[test]
    fn hac_merge_distances_non_decreasing_on_test_corpora() {
        let points = vec![fv(0.0), fv(0.01), fv(0.10), fv(0.11)];
        let (_, distances) = hac_run(&points, 1);
        for pair in distances.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        let data = gaussian_blobs(3, 8, 0.01, 0.5, 31).unwrap();
        let (_, distances) = hac_run(&data.points, 1);
        for pair in distances.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12);
        }
    }

    #[test]
    fn ch_peaks_at_true_blob_count() {
        let data = gaussian_blobs(3, 12, 0.02, 0.5, 41).unwrap();
        let score = |m: usize| {
            let c = kmeans_pp(&data.points, m, 7).unwrap();
            ch_index(&data.points, &c).unwrap()
        };
        let (two, three, four) = (score(2), score(3), score(4));
        assert!(three > two, "CH(3)={three} vs CH(2)={two}");
        assert!(three > four, "CH(3)={three} vs CH(4)={four}");
    }

    #[test]
    fn ch_perfect_partition_is_infinite() {
        let points = vec![fv(0.2), fv(0.2), fv(0.8)];
        let clustering = Clustering {
            assignments: vec![0, 0, 1],
            centroids: vec![fv(0.2), fv(0.8)],
            sizes: vec![2, 1],
        };
        assert_eq!(ch_index(&points, &clustering).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ch_rejects_out_of_range_counts() {
        let points = vec![fv(0.1), fv(0.5), fv(0.9)];
        let one = hac_upgma(&points, 1).unwrap();
        assert!(ch_index(&points, &one).is_err());
        let three = hac_upgma(&points, 3).unwrap();
        assert!(ch_index(&points, &three).is_err());
    }

    #[test]
    fn select_k_recovers_blob_counts() {
        let three = gaussian_blobs(3, 15, 0.02, 0.45, 57).unwrap();
        let sel = select_k(&three.points, (2, 6), ClusterMethod::KmeansPp, 3).unwrap();
        assert_eq!(sel.m, 3);
        assert_eq!(sel.ch_curve.len(), 5);

        let two = gaussian_blobs(2, 15, 0.02, 0.5, 58).unwrap();
        let sel = select_k(&two.points, (2, 5), ClusterMethod::KmeansPp, 3).unwrap();
        assert_eq!(sel.m, 2);
    }

    #[test]
    fn select_k_degenerate_range_returns_fixed_count() {
        let data = gaussian_blobs(3, 10, 0.02, 0.45, 61).unwrap();
        let sel = select_k(&data.points, (2, 2), ClusterMethod::KmeansPp, 5).unwrap();
        assert_eq!(sel.m, 2);
        assert_eq!(sel.ch_curve.len(), 1);
    }

    #[test]
    fn select_k_clamps_to_distinct_point_count() {
        // Three distinct profiles, heavily repeated: the perfect partition at
        // m = 3 scores +∞ and wins.
        let mut points = Vec::new();
        for _ in 0..20 {
            points.push(fv(0.1));
            points.push(fv(0.5));
            points.push(fv(0.9));
        }
        let sel = select_k(&points, (2, 8), ClusterMethod::KmeansPp, 11).unwrap();
        assert_eq!(sel.m, 3);
        assert_eq!(sel.ch_curve.last().unwrap().0, 3);
        assert_eq!(sel.ch_curve.last().unwrap().1, f64::INFINITY);
    }

    #[test]
    fn select_k_is_deterministic() {
        let data = gaussian_blobs(4, 12, 0.03, 0.35, 71).unwrap();
        let a = select_k(&data.points, (2, 6), ClusterMethod::KmeansPp, 13).unwrap();
        let b = select_k(&data.points, (2, 6), ClusterMethod::KmeansPp, 13).unwrap();
        assert_eq!(a.m, b.m);
        assert_eq!(a.clustering.assignments, b.clustering.assignments);
        for (x, y) in a.clustering.centroids.iter().zip(&b.clustering.centroids) {
            assert_eq!(x.bits(), y.bits());
        }
    }

    #[test]
    fn normalization_handles_constant_components_and_clamps() {
        let raw = vec![
            [100.0, 10.0, 6.0, 1.0, 4096.0],
            [200.0, 10.0, 7.0, 2.0, 8192.0],
        ];
        let bounds = FeatureBounds::fit(&raw).unwrap();
        let mid = bounds.normalize(&[150.0, 10.0, 6.5, 1.5, 6144.0]);
        assert_eq!(mid.0, [0.5, 0.5, 0.5, 0.5, 0.5]);
        let clamped = bounds.normalize(&[500.0, 10.0, 5.0, 3.0, 0.0]);
        assert_eq!(clamped.0, [1.0, 0.5, 0.0, 1.0, 0.0]);
        assert!(FeatureBounds::fit(&[]).is_err());
    }

    #[test]
    fn raw_features_log_scale_file_fields() {
        let net = NetworkProfile {
            source_id: "s".into(),
            dest_id: "d".into(),
            bandwidth_mbps: 10_000.0,
            rtt_ms: 40.0,
            tcp_buffer_bytes: 4 << 20,
            disk_read_mbps: 9_600.0,
            disk_write_mbps: 9_600.0,
        };
        let data = DatasetProfile {
            avg_file_bytes: 1_000_000,
            num_files: 100,
            total_bytes: 100_000_000,
        };
        let f = raw_features(&net, &data);
        assert_eq!(f, [10_000.0, 40.0, 6.0, 2.0, (4 << 20) as f64]);
    }
}
