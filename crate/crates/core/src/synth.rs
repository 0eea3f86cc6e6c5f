//! Synthetic data generators used by validation suites: labeled Gaussian
//! blobs in feature space with known ground-truth structure.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cluster::FeatureVector;
use crate::error::{Error, Result};

/// Points with ground-truth blob labels.
#[derive(Debug, Clone)]
pub struct LabeledPoints {
    pub points: Vec<FeatureVector>,
    pub labels: Vec<usize>,
}

/// Draw `k` blob centers uniformly in `[0, 1]^5` with pairwise distance at
/// least `min_separation`, then `per_blob` points around each center with
/// isotropic Gaussian `spread`, clamped to the unit cube.
pub fn gaussian_blobs(
    k: usize,
    per_blob: usize,
    spread: f64,
    min_separation: f64,
    seed: u64,
) -> Result<LabeledPoints> {
    if k == 0 || per_blob == 0 {
        return Err(Error::invalid("blob generator", "k and per_blob must be ≥ 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centers: Vec<[f64; 5]> = Vec::with_capacity(k);
    let mut attempts = 0usize;
    while centers.len() < k {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::invalid(
                "blob generator",
                format!("cannot place {k} centers separated by {min_separation} in the unit cube"),
            ));
        }
        let mut c = [0.0; 5];
        for v in &mut c {
            *v = rng.gen_range(0.0..1.0);
        }
        let far_enough = centers
            .iter()
            .all(|other| dist(&c, other) >= min_separation);
        if far_enough {
            centers.push(c);
        }
    }

    let noise = Normal::new(0.0, spread)
        .map_err(|e| Error::invalid("blob generator", format!("bad spread: {e}")))?;
    let mut points = Vec::with_capacity(k * per_blob);
    let mut labels = Vec::with_capacity(k * per_blob);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..per_blob {
            let mut x = [0.0; 5];
            for (xi, ci) in x.iter_mut().zip(center) {
                *xi = (ci + noise.sample(&mut rng)).clamp(0.0, 1.0);
            }
            points.push(FeatureVector(x));
            labels.push(label);
        }
    }
    Ok(LabeledPoints { points, labels })
}

fn dist(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_counts_and_labels_line_up() {
        let data = gaussian_blobs(3, 10, 0.02, 0.4, 7).unwrap();
        assert_eq!(data.points.len(), 30);
        assert_eq!(data.labels.len(), 30);
        assert_eq!(data.labels.iter().filter(|&&l| l == 2).count(), 10);
        for p in &data.points {
            assert!(p.0.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn blob_generation_is_deterministic_per_seed() {
        let a = gaussian_blobs(4, 5, 0.05, 0.3, 42).unwrap();
        let b = gaussian_blobs(4, 5, 0.05, 0.3, 42).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.0, y.0);
        }
        let c = gaussian_blobs(4, 5, 0.05, 0.3, 43).unwrap();
        assert!(a.points.iter().zip(&c.points).any(|(x, y)| x.0 != y.0));
    }

    #[test]
    fn centers_respect_min_separation() {
        // Spread 0 puts every point exactly on its center.
        let data = gaussian_blobs(3, 1, 0.0, 0.5, 11).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert!(dist(&data.points[i].0, &data.points[j].0) >= 0.5);
            }
        }
    }
}
