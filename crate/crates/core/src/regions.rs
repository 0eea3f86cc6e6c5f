//! Suitable sampling regions: where online probes are most informative.
//!
//! The region unions Chebyshev balls around every surface's precomputed
//! argmax with the lattice points that best separate the surfaces from one
//! another (largest minimum pairwise prediction gap).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ParamBounds, ParamTriple};
use crate::surface::ThroughputSurface;

/// Default Chebyshev radius of a maxima neighborhood, lattice units.
pub const DEFAULT_RADIUS: u32 = 2;
/// Default number of uniform lattice probes scored for separation.
pub const DEFAULT_SAMPLES: usize = 256;
/// Default number of separation points kept.
pub const DEFAULT_KEEP: usize = 8;

/// Chebyshev ball on the parameter lattice around one surface's argmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximaBall {
    #[serde(flatten)]
    pub center: ParamTriple,
    pub radius: u32,
}

/// A lattice point scored by the smallest pairwise gap between surface
/// predictions there: large scores disambiguate surfaces well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationPoint {
    #[serde(flatten)]
    pub params: ParamTriple,
    #[serde(with = "crate::numfmt")]
    pub delta_min: f64,
}

/// Union of maxima neighborhoods and separation points for one cluster's
/// surface family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingRegion {
    pub maxima_balls: Vec<MaximaBall>,
    pub separation_points: Vec<SeparationPoint>,
    /// False when fewer than two surfaces exist, making pairwise separation
    /// undefined (the separation list is then empty).
    pub separation_defined: bool,
}

/// One Chebyshev ball per surface argmax, duplicates merged, in surface
/// order. Errors if any surface is missing its precomputed argmax.
pub fn maxima_neighborhoods(
    surfaces: &[ThroughputSurface],
    radius: u32,
) -> Result<Vec<MaximaBall>> {
    let mut balls: Vec<MaximaBall> = Vec::new();
    for s in surfaces {
        let argmax = s.argmax.as_ref().ok_or_else(|| {
            Error::invalid("sampling region", "surface missing precomputed argmax")
        })?;
        let ball = MaximaBall {
            center: argmax.params,
            radius,
        };
        if !balls.iter().any(|b| b.center == ball.center) {
            balls.push(ball);
        }
    }
    Ok(balls)
}

/// Score `gamma` uniform lattice draws by their minimum pairwise prediction
/// gap over all surface pairs and keep the `keep` best, scores descending.
/// Ties and the draw order are fixed by the seed, so the result is
/// deterministic. Requires at least two surfaces and `1 < keep < gamma`.
pub fn maxmin_separation(
    surfaces: &[ThroughputSurface],
    bounds: &ParamBounds,
    gamma: usize,
    keep: usize,
    seed: u64,
) -> Result<Vec<SeparationPoint>> {
    if surfaces.len() < 2 {
        return Err(Error::invalid(
            "separation points",
            "need at least two surfaces for pairwise separation",
        ));
    }
    if keep <= 1 || keep >= gamma {
        return Err(Error::invalid(
            "separation points",
            format!("selection count must satisfy 1 < keep < gamma, got keep={keep} gamma={gamma}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws: Vec<ParamTriple> = (0..gamma)
        .map(|_| {
            ParamTriple::new(
                rng.gen_range(1..=bounds.cc),
                rng.gen_range(1..=bounds.p),
                rng.gen_range(1..=bounds.pp),
            )
        })
        .collect();
    draws.sort_unstable();
    draws.dedup();
    let mut scored: Vec<SeparationPoint> = draws
        .into_iter()
        .map(|params| {
            let point = params.surface_point();
            let predictions: Vec<f64> =
                surfaces.iter().map(|s| s.eval(point).value).collect();
            let mut delta_min = f64::INFINITY;
            for i in 0..predictions.len() {
                for j in i + 1..predictions.len() {
                    delta_min = delta_min.min((predictions[i] - predictions[j]).abs());
                }
            }
            SeparationPoint { params, delta_min }
        })
        .collect();
    // Descending score; equal scores ordered by ascending (cc, p, pp).
    scored.sort_by(|a, b| {
        b.delta_min
            .partial_cmp(&a.delta_min)
            .unwrap()
            .then_with(|| a.params.cmp(&b.params))
    });
    scored.truncate(keep);
    Ok(scored)
}

/// The full sampling region for one cluster's surfaces. With a single
/// surface the separation half is undefined and flagged off.
pub fn sampling_region(
    surfaces: &[ThroughputSurface],
    bounds: &ParamBounds,
    radius: u32,
    gamma: usize,
    keep: usize,
    seed: u64,
) -> Result<SamplingRegion> {
    let maxima_balls = maxima_neighborhoods(surfaces, radius)?;
    if surfaces.len() < 2 {
        return Ok(SamplingRegion {
            maxima_balls,
            separation_points: Vec::new(),
            separation_defined: false,
        });
    }
    let separation_points = maxmin_separation(surfaces, bounds, gamma, keep, seed)?;
    Ok(SamplingRegion {
        maxima_balls,
        separation_points,
        separation_defined: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{Argmax, Hull, LoadBand, SurfaceModel, ThroughputSurface};

    fn flat_surface(value: f64, argmax: Option<ParamTriple>) -> ThroughputSurface {
        ThroughputSurface {
            cluster_id: 0,
            band: LoadBand::new(2),
            load_tag: LoadBand::new(2).midpoint(),
            model: SurfaceModel::Constant(value),
            confidence: Vec::new(),
            argmax: argmax.map(|params| Argmax {
                params,
                value,
            }),
            region: None,
            low_confidence: false,
            fill_fraction: 0.0,
            hull: Hull {
                p: (1.0, 16.0),
                cc: (1.0, 16.0),
                pp: (1.0, 32.0),
            },
        }
    }

    fn bounds() -> ParamBounds {
        ParamBounds::default()
    }

    #[test]
    fn one_ball_per_distinct_argmax() {
        let a = flat_surface(10.0, Some(ParamTriple::new(2, 3, 4)));
        let b = flat_surface(20.0, Some(ParamTriple::new(2, 3, 4)));
        let c = flat_surface(30.0, Some(ParamTriple::new(5, 6, 7)));
        // Identical argmaxes merge into one ball; distinct ones stay.
        let balls = maxima_neighborhoods(&[a.clone(), b.clone()], 2).unwrap();
        assert_eq!(balls.len(), 1);
        assert_eq!(balls[0].center, ParamTriple::new(2, 3, 4));
        assert_eq!(balls[0].radius, 2);
        let balls = maxima_neighborhoods(&[a, b, c], 2).unwrap();
        assert_eq!(balls.len(), 2);
    }

    #[test]
    fn missing_argmax_is_an_error() {
        let s = flat_surface(10.0, None);
        assert!(maxima_neighborhoods(&[s], 2).is_err());
    }

    #[test]
    fn constant_offset_surfaces_score_the_offset_everywhere() {
        let a = flat_surface(100.0, Some(ParamTriple::new(1, 1, 1)));
        let b = flat_surface(130.0, Some(ParamTriple::new(1, 1, 1)));
        let pts = maxmin_separation(&[a, b], &bounds(), 64, 8, 7).unwrap();
        assert_eq!(pts.len(), 8);
        for pt in &pts {
            assert!((pt.delta_min - 30.0).abs() <= 1e-12);
        }
        // Determinism: same seed, same points.
        let a = flat_surface(100.0, Some(ParamTriple::new(1, 1, 1)));
        let b = flat_surface(130.0, Some(ParamTriple::new(1, 1, 1)));
        let again = maxmin_separation(&[a, b], &bounds(), 64, 8, 7).unwrap();
        assert_eq!(pts, again);
    }

    #[test]
    fn identical_surfaces_still_return_points_scored_zero() {
        let a = flat_surface(100.0, Some(ParamTriple::new(1, 1, 1)));
        let b = flat_surface(100.0, Some(ParamTriple::new(1, 1, 1)));
        let pts = maxmin_separation(&[a, b], &bounds(), 64, 8, 3).unwrap();
        assert_eq!(pts.len(), 8);
        assert!(pts.iter().all(|p| p.delta_min == 0.0));
    }

    #[test]
    fn separation_is_invariant_under_surface_order() {
        let a = flat_surface(100.0, Some(ParamTriple::new(1, 1, 1)));
        let b = flat_surface(150.0, Some(ParamTriple::new(1, 1, 1)));
        let c = flat_surface(175.0, Some(ParamTriple::new(1, 1, 1)));
        let fwd = maxmin_separation(&[a.clone(), b.clone(), c.clone()], &bounds(), 32, 4, 9)
            .unwrap();
        let rev = maxmin_separation(&[c, b, a], &bounds(), 32, 4, 9).unwrap();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn scores_kept_are_the_largest_of_the_sample() {
        // Two planes crossing along p = cc: delta shrinks near the crossing,
        // so kept points must carry the top scores of the full draw.
        use crate::surface::{fit_band_model, LatticeObservation};
        let mut obs_a = Vec::new();
        let mut obs_b = Vec::new();
        for p in [1u32, 4, 8, 12, 16] {
            for cc in [1u32, 4, 8, 12, 16] {
                for pp in [1u32, 8, 16] {
                    let base = LatticeObservation {
                        params: ParamTriple::new(cc, p, pp),
                        mean: 10.0 * p as f64 + 2.0 * pp as f64 + 100.0,
                        std: 0.0,
                        n: 1,
                    };
                    obs_a.push(base);
                    obs_b.push(LatticeObservation {
                        mean: 10.0 * cc as f64 + 2.0 * pp as f64 + 100.0,
                        ..base
                    });
                }
            }
        }
        let make = |observations: &[LatticeObservation]| {
            let fit = fit_band_model(observations).unwrap();
            ThroughputSurface {
                cluster_id: 0,
                band: LoadBand::new(1),
                load_tag: LoadBand::new(1).midpoint(),
                model: fit.model,
                confidence: fit.confidence,
                argmax: None,
                region: None,
                low_confidence: false,
                fill_fraction: fit.fill_fraction,
                hull: fit.hull,
            }
        };
        let surfaces = [make(&obs_a), make(&obs_b)];
        let kept = maxmin_separation(&surfaces, &bounds(), 256, 8, 11).unwrap();
        // Recompute every draw's score independently and check the kept set
        // is exactly the top of the full descending sort.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut draws: Vec<ParamTriple> = (0..256)
            .map(|_| {
                ParamTriple::new(
                    rng.gen_range(1..=16u32),
                    rng.gen_range(1..=16u32),
                    rng.gen_range(1..=32u32),
                )
            })
            .collect();
        draws.sort_unstable();
        draws.dedup();
        let mut all: Vec<(f64, ParamTriple)> = draws
            .into_iter()
            .map(|t| {
                let pt = t.surface_point();
                let d = (surfaces[0].eval(pt).value - surfaces[1].eval(pt).value).abs();
                (d, t)
            })
            .collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));
        for (kept_pt, (score, params)) in kept.iter().zip(&all) {
            assert_eq!(kept_pt.params, *params);
            assert!((kept_pt.delta_min - score).abs() <= 1e-12);
        }
        // Points on the crossing locus (p == cc) score ~0 and never win.
        assert!(kept.iter().all(|pt| pt.params.p != pt.params.cc));
        assert!(kept[0].delta_min > 20.0);
    }

    #[test]
    fn single_surface_region_is_maxima_only_with_flag() {
        let s = flat_surface(10.0, Some(ParamTriple::new(4, 4, 4)));
        let region = sampling_region(&[s], &bounds(), 2, 256, 8, 1).unwrap();
        assert!(!region.separation_defined);
        assert!(region.separation_points.is_empty());
        assert_eq!(region.maxima_balls.len(), 1);
    }

    #[test]
    fn union_cardinality_is_bounded() {
        let a = flat_surface(100.0, Some(ParamTriple::new(1, 2, 3)));
        let b = flat_surface(120.0, Some(ParamTriple::new(4, 5, 6)));
        let region = sampling_region(&[a, b], &bounds(), 2, 256, 8, 5).unwrap();
        assert!(region.separation_defined);
        assert!(region.maxima_balls.len() <= 2);
        assert_eq!(region.separation_points.len(), 8);
    }

    #[test]
    fn invalid_keep_count_is_rejected() {
        let a = flat_surface(1.0, Some(ParamTriple::new(1, 1, 1)));
        let b = flat_surface(2.0, Some(ParamTriple::new(1, 1, 1)));
        assert!(maxmin_separation(&[a.clone(), b.clone()], &bounds(), 8, 1, 0).is_err());
        assert!(maxmin_separation(&[a, b], &bounds(), 8, 8, 0).is_err());
    }
}
