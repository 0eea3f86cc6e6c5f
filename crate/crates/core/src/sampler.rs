//! Online adaptive sampling: pick transfer parameters by probing sample
//! chunks against the candidate surface family, narrow the family with
//! confidence-bound tests, and re-tune mid-transfer when the load shifts.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{DatasetProfile, ParamTriple};
use crate::surface::{ThroughputSurface, DEFAULT_Z};

/// Fraction of the dataset used to size one sample chunk.
pub const SAMPLE_FRACTION_DENOM: u64 = 20;
/// Upper bound on a sample chunk: 256 MB.
pub const SAMPLE_CAP_BYTES: u64 = 256_000_000;
/// Moving-average window for mid-transfer deviation detection.
pub const DEFAULT_WINDOW: usize = 3;

/// Tuning knobs of the sampling loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Confidence-band half-width in standard deviations.
    pub z: f64,
    /// Chunks averaged before a deviation can trigger re-selection.
    pub window: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { z: DEFAULT_Z, window: DEFAULT_WINDOW }
    }
}

/// Cut the dataset into uniform chunks of
/// `s_chunk = max(min(5% of total, 256 MB), avg_file_size)`; the final chunk
/// carries the remainder. Every chunk is individually observable, so the
/// monitoring loop keeps getting throughput readings through the bulk phase.
pub fn plan_chunks(dataset: &DatasetProfile) -> Vec<u64> {
    let total = dataset.total_bytes;
    if total == 0 {
        return Vec::new();
    }
    let s_chunk = (total / SAMPLE_FRACTION_DENOM)
        .min(SAMPLE_CAP_BYTES)
        .max(dataset.avg_file_bytes)
        .max(1);
    let full = total / s_chunk;
    let remainder = total % s_chunk;
    let mut chunks = vec![s_chunk; full as usize];
    if remainder > 0 {
        chunks.push(remainder);
    }
    chunks
}

/// Outcome of transferring one chunk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkResult {
    pub achieved_mbps: f64,
    /// Wall time including any parameter-change (slow-start) cost.
    pub elapsed_s: f64,
}

/// The data mover under the sampler's control. The backend is the only
/// source of observed throughput; parameter-change costs surface as elapsed
/// time.
pub trait TransferBackend {
    fn transfer(&mut self, chunk_bytes: u64, params: ParamTriple) -> Result<ChunkResult>;
}

/// What a transcript row records about its chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChunkEvent {
    /// Probe transfer during the narrowing phase.
    Sample,
    /// Bulk transfer under the converged parameters.
    Converged,
    /// First bulk transfer after a mid-transfer parameter change.
    Retune,
}

impl ChunkEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChunkEvent::Sample => "sample",
            ChunkEvent::Converged => "converged",
            ChunkEvent::Retune => "retune",
        }
    }
}

impl fmt::Display for ChunkEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One transferred chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptRow {
    pub chunk_idx: usize,
    pub params: ParamTriple,
    pub predicted_mbps: f64,
    pub achieved_mbps: f64,
    pub elapsed_s: f64,
    pub event: ChunkEvent,
}

/// Append-only record of a whole transfer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub rows: Vec<TranscriptRow>,
    /// The narrowing exhausted every surface and pinned the nearest one.
    pub pinned_fallback: bool,
    /// The backend failed twice on one chunk; rows hold the partial record.
    pub aborted: bool,
}

impl Transcript {
    /// Number of probe transfers before convergence.
    pub fn sample_count(&self) -> usize {
        self.rows.iter().filter(|r| r.event == ChunkEvent::Sample).count()
    }

    /// Rows that changed parameters mid-bulk.
    pub fn retune_count(&self) -> usize {
        self.rows.iter().filter(|r| r.event == ChunkEvent::Retune).count()
    }
}

fn argmax_params(surface: &ThroughputSurface) -> Result<ParamTriple> {
    surface
        .argmax
        .as_ref()
        .map(|a| a.params)
        .ok_or_else(|| Error::invalid("adaptive sampling", "surface missing precomputed argmax"))
}

/// Surface whose prediction at `params` is nearest to `achieved`; ties go to
/// the lower (heavier-load) index.
fn nearest_surface(surfaces: &[ThroughputSurface], params: ParamTriple, achieved: f64) -> usize {
    let mut best = 0;
    let mut best_err = f64::INFINITY;
    for (i, s) in surfaces.iter().enumerate() {
        let err = (s.predict(params) - achieved).abs();
        if err < best_err {
            best = i;
            best_err = err;
        }
    }
    best
}

/// Run the adaptive transfer. `surfaces` must be sorted ascending by load
/// tag (lightest load last) with precomputed argmaxes.
///
/// Phase 1 probes the median surface's optimum, narrowing [lo, hi] on each
/// out-of-band observation (above the band → the real load is lighter →
/// drop the heavier half, and vice versa). If the window empties, the
/// surface nearest the last observation is pinned. Phase 2 transfers the
/// rest under the chosen optimum while watching a moving average; when it
/// leaves the pinned surface's band, the surface is re-selected by the most
/// recent observation and parameters change at the next chunk.
pub fn adaptive_sampling(
    surfaces: &[ThroughputSurface],
    dataset: &DatasetProfile,
    backend: &mut dyn TransferBackend,
    config: &SamplerConfig,
) -> Result<Transcript> {
    if surfaces.is_empty() {
        return Err(Error::invalid("adaptive sampling", "no candidate surfaces"));
    }
    if surfaces
        .windows(2)
        .any(|pair| pair[0].load_tag.value() > pair[1].load_tag.value())
    {
        return Err(Error::invalid(
            "adaptive sampling",
            "surfaces must be sorted ascending by load tag",
        ));
    }
    // Negated on purpose: `!(z > 0.0)` also rejects NaN, `z <= 0.0` would not.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(config.z > 0.0) || config.window == 0 {
        return Err(Error::invalid("adaptive sampling", "z must be > 0 and window ≥ 1"));
    }
    let chunks = plan_chunks(dataset);
    if chunks.is_empty() {
        return Err(Error::invalid("adaptive sampling", "dataset is empty"));
    }

    let mut transcript = Transcript::default();
    let mut lo = 0usize;
    let mut hi = surfaces.len() - 1;
    let mut converged = false;
    let mut current = (lo + hi) / 2;
    let mut params = argmax_params(&surfaces[current])?;
    let mut window: VecDeque<f64> = VecDeque::with_capacity(config.window);
    let mut next_bulk_event = ChunkEvent::Converged;

    for (chunk_idx, &chunk_bytes) in chunks.iter().enumerate() {
        let event = if converged { next_bulk_event } else { ChunkEvent::Sample };
        next_bulk_event = ChunkEvent::Converged;
        if !converged {
            current = (lo + hi) / 2;
            params = argmax_params(&surfaces[current])?;
        }
        let predicted = surfaces[current].predict(params);

        let result = match backend.transfer(chunk_bytes, params) {
            Ok(r) => r,
            Err(_) => match backend.transfer(chunk_bytes, params) {
                Ok(r) => r,
                Err(_) => {
                    transcript.aborted = true;
                    return Ok(transcript);
                }
            },
        };
        let achieved = result.achieved_mbps;
        transcript.rows.push(TranscriptRow {
            chunk_idx,
            params,
            predicted_mbps: predicted,
            achieved_mbps: achieved,
            elapsed_s: result.elapsed_s,
            event,
        });

        if !converged {
            if surfaces[current].within_confidence(params, achieved, config.z) {
                converged = true;
                window.push_back(achieved);
                continue;
            }
            let exhausted = match surfaces[current].band_position(params, achieved, config.z) {
                std::cmp::Ordering::Greater => {
                    // Achieved more than this band allows: load is lighter.
                    lo = current + 1;
                    lo > hi
                }
                _ => {
                    // Achieved less: load is heavier.
                    if current == 0 {
                        true
                    } else {
                        hi = current - 1;
                        lo > hi
                    }
                }
            };
            if exhausted {
                current = nearest_surface(surfaces, params, achieved);
                params = argmax_params(&surfaces[current])?;
                transcript.pinned_fallback = true;
                converged = true;
                window.clear();
            }
        } else {
            window.push_back(achieved);
            if window.len() > config.window {
                window.pop_front();
            }
            if window.len() == config.window {
                let mean = window.iter().sum::<f64>() / window.len() as f64;
                if !surfaces[current].within_confidence(params, mean, config.z) {
                    let recent = *window.back().expect("window is full");
                    let reselected = nearest_surface(surfaces, params, recent);
                    window.clear();
                    if reselected != current {
                        current = reselected;
                        params = argmax_params(&surfaces[current])?;
                        next_bulk_event = ChunkEvent::Retune;
                    }
                }
            }
        }
    }
    Ok(transcript)
}

/// Relative prediction error and its complement:
/// `(|achieved − predicted|/predicted · 100, 100 − min(100, error))`.
pub fn accuracy(predicted: f64, achieved: f64) -> Result<(f64, f64)> {
    // Negated on purpose: rejects NaN as well as non-positive rates.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(predicted > 0.0) {
        return Err(Error::invalid(
            "accuracy",
            format!("predicted rate must be > 0, got {predicted}"),
        ));
    }
    let error_pct = (achieved - predicted).abs() / predicted * 100.0;
    Ok((error_pct, 100.0 - error_pct.min(100.0)))
}

/// Write the pinned transcript CSV:
/// `chunk_idx, cc, p, pp, predicted_mbps, achieved_mbps, elapsed_s, event`.
pub fn write_transcript_csv<W: Write>(transcript: &Transcript, writer: W) -> Result<()> {
    let mut csv_writer = csv::Writer::from_writer(writer);
    csv_writer.write_record([
        "chunk_idx",
        "cc",
        "p",
        "pp",
        "predicted_mbps",
        "achieved_mbps",
        "elapsed_s",
        "event",
    ])?;
    for row in &transcript.rows {
        csv_writer.write_record([
            row.chunk_idx.to_string(),
            row.params.cc.to_string(),
            row.params.p.to_string(),
            row.params.pp.to_string(),
            row.predicted_mbps.to_string(),
            row.achieved_mbps.to_string(),
            row.elapsed_s.to_string(),
            row.event.to_string(),
        ])?;
    }
    csv_writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{Argmax, ConfidencePoint, Hull, LoadBand, SurfaceModel};

    const MB: u64 = 1_000_000;

    fn dataset(total: u64, avg: u64) -> DatasetProfile {
        DatasetProfile {
            avg_file_bytes: avg,
            num_files: (total / avg).max(1),
            total_bytes: total,
        }
    }

    /// Flat surface predicting `mu` everywhere, in the given band.
    fn flat_surface(band: u8, mu: f64, argmax: ParamTriple) -> ThroughputSurface {
        ThroughputSurface {
            cluster_id: 0,
            band: LoadBand::new(band),
            load_tag: LoadBand::new(band).midpoint(),
            model: SurfaceModel::Constant(mu),
            confidence: vec![ConfidencePoint {
                params: argmax,
                mean: mu,
                std: 0.0,
                n: 3,
                synthetic: false,
            }],
            argmax: Some(Argmax { params: argmax, value: mu }),
            region: None,
            low_confidence: false,
            fill_fraction: 0.0,
            hull: Hull::from_axes(&[argmax.p], &[argmax.cc], &[argmax.pp]),
        }
    }

    /// Backend that plays back a script of achieved rates (last repeats).
    struct ScriptedBackend {
        script: Vec<f64>,
        calls: usize,
    }

    impl ScriptedBackend {
        fn new(script: Vec<f64>) -> Self {
            ScriptedBackend { script, calls: 0 }
        }
    }

    impl TransferBackend for ScriptedBackend {
        fn transfer(&mut self, _chunk_bytes: u64, _params: ParamTriple) -> Result<ChunkResult> {
            let idx = self.calls.min(self.script.len() - 1);
            self.calls += 1;
            Ok(ChunkResult { achieved_mbps: self.script[idx], elapsed_s: 1.0 })
        }
    }

    /// Backend that fails the first `failures` calls, then plays a script.
    struct FlakyBackend {
        failures: usize,
        inner: ScriptedBackend,
    }

    impl TransferBackend for FlakyBackend {
        fn transfer(&mut self, chunk_bytes: u64, params: ParamTriple) -> Result<ChunkResult> {
            if self.failures > 0 {
                self.failures -= 1;
                return Err(Error::Backend("connection reset".into()));
            }
            self.inner.transfer(chunk_bytes, params)
        }
    }

    #[test]
    fn chunk_plan_caps_at_256_mb() {
        // 10 GB (10 × 1024 MB): 5% would be 512 MB, capped at 256 MB.
        let plan = plan_chunks(&dataset(10 * 1024 * MB, 10 * MB));
        assert_eq!(plan[0], 256 * MB);
        assert_eq!(plan.len(), 40);
        assert_eq!(plan.iter().sum::<u64>(), 10 * 1024 * MB);
    }

    #[test]
    fn chunk_plan_takes_five_percent_when_under_cap() {
        // 1 GB (1024 MB) → 51.2 MB sample chunks.
        let plan = plan_chunks(&dataset(1024 * MB, MB));
        assert_eq!(plan[0], 51_200_000);
        assert_eq!(plan.iter().sum::<u64>(), 1024 * MB);
    }

    #[test]
    fn chunk_plan_floors_at_average_file_size() {
        let plan = plan_chunks(&dataset(1000 * MB, 100 * MB));
        assert_eq!(plan[0], 100 * MB);
        assert_eq!(plan.len(), 10);
    }

    #[test]
    fn chunk_plan_single_chunk_for_tiny_dataset() {
        let plan = plan_chunks(&dataset(10 * MB, 10 * MB));
        assert_eq!(plan, vec![10 * MB]);
    }

    #[test]
    fn chunk_plan_conserves_bytes_with_remainder() {
        let total = 1_000_000_007;
        let plan = plan_chunks(&dataset(total, MB));
        assert_eq!(plan.iter().sum::<u64>(), total);
        assert_eq!(*plan.last().unwrap(), 7);
        assert!(plan[..plan.len() - 1].iter().all(|&c| c == 50 * MB));
    }

    fn three_surfaces() -> Vec<ThroughputSurface> {
        vec![
            flat_surface(1, 100.0, ParamTriple::new(8, 8, 4)),
            flat_surface(4, 500.0, ParamTriple::new(6, 4, 8)),
            flat_surface(8, 900.0, ParamTriple::new(4, 2, 16)),
        ]
    }

    #[test]
    fn matching_load_converges_after_one_sample() {
        let surfaces = three_surfaces();
        // Median surface is index 1 (μ = 500); the backend agrees.
        let mut backend = ScriptedBackend::new(vec![505.0]);
        let ds = dataset(1024 * MB, MB); // 20 chunks
        let t = adaptive_sampling(&surfaces, &ds, &mut backend, &SamplerConfig::default()).unwrap();
        assert_eq!(t.rows.len(), 20);
        assert_eq!(t.sample_count(), 1);
        assert_eq!(t.rows[0].event, ChunkEvent::Sample);
        assert_eq!(t.rows[0].params, ParamTriple::new(6, 4, 8));
        assert!(t.rows[1..].iter().all(|r| r.event == ChunkEvent::Converged));
        assert!(t.rows.iter().all(|r| r.params == ParamTriple::new(6, 4, 8)));
        assert!(!t.pinned_fallback);
        assert!(!t.aborted);
    }

    #[test]
    fn narrowing_is_logarithmic_in_family_size() {
        // 8 surfaces, true load in the lightest band: ≤ ⌈log₂ 8⌉ + 1 = 4 probes.
        let surfaces: Vec<ThroughputSurface> = (0..8)
            .map(|i| flat_surface(i as u8, 100.0 * (i + 1) as f64, ParamTriple::new(i + 1, 1, 1)))
            .collect();
        let mut backend = ScriptedBackend::new(vec![800.0]);
        let ds = dataset(1024 * MB, MB);
        let t = adaptive_sampling(&surfaces, &ds, &mut backend, &SamplerConfig::default()).unwrap();
        assert!(t.sample_count() <= 4, "took {} probes", t.sample_count());
        assert!(!t.pinned_fallback);
        let bulk_params = t.rows.last().unwrap().params;
        assert_eq!(bulk_params, ParamTriple::new(8, 1, 1));
    }

    #[test]
    fn probes_heavier_bands_downward() {
        let surfaces = three_surfaces();
        // Achieved sits in the heaviest band (μ = 100).
        let mut backend = ScriptedBackend::new(vec![98.0]);
        let ds = dataset(1024 * MB, MB);
        let t = adaptive_sampling(&surfaces, &ds, &mut backend, &SamplerConfig::default()).unwrap();
        assert_eq!(t.sample_count(), 2);
        assert_eq!(t.rows.last().unwrap().params, ParamTriple::new(8, 8, 4));
        assert!(!t.pinned_fallback);
    }

    #[test]
    fn exhausted_window_pins_nearest_surface() {
        let surfaces = three_surfaces();
        // Faster than every band: narrowing runs off the light end, then
        // pins the nearest surface (μ = 900).
        let mut backend = ScriptedBackend::new(vec![5_000.0]);
        let ds = dataset(1024 * MB, MB);
        let t = adaptive_sampling(&surfaces, &ds, &mut backend, &SamplerConfig::default()).unwrap();
        assert!(t.pinned_fallback);
        assert_eq!(t.rows.last().unwrap().params, ParamTriple::new(4, 2, 16));
        assert!(t.rows.last().unwrap().event == ChunkEvent::Converged);
    }

    #[test]
    fn load_shift_retunes_within_window() {
        let surfaces = three_surfaces();
        // Converge on μ = 500, then the load lightens: achieved jumps to 900.
        let mut script = vec![500.0, 500.0, 500.0, 500.0];
        script.extend(vec![900.0; 16]);
        let mut backend = ScriptedBackend::new(script);
        let ds = dataset(1024 * MB, MB);
        let t = adaptive_sampling(&surfaces, &ds, &mut backend, &SamplerConfig::default()).unwrap();
        let shift_at = 4; // first chunk transferred at 900
        let retune_idx = t
            .rows
            .iter()
            .position(|r| r.event == ChunkEvent::Retune)
            .expect("re-selection should fire");
        assert!(
            retune_idx <= shift_at + DEFAULT_WINDOW,
            "retune at {retune_idx}, shift at {shift_at}"
        );
        assert_eq!(t.rows[retune_idx].params, ParamTriple::new(4, 2, 16));
        // Once re-tuned, parameters hold steady.
        assert!(t.rows[retune_idx..].iter().all(|r| r.params == ParamTriple::new(4, 2, 16)));
        assert_eq!(t.retune_count(), 1);
    }

    #[test]
    fn parameter_changes_are_exactly_reselections_plus_initial() {
        let surfaces = three_surfaces();
        let mut script = vec![500.0, 500.0, 500.0, 500.0];
        script.extend(vec![900.0; 16]);
        let mut backend = ScriptedBackend::new(script);
        let ds = dataset(1024 * MB, MB);
        let t = adaptive_sampling(&surfaces, &ds, &mut backend, &SamplerConfig::default()).unwrap();
        let mut changes = 0;
        for pair in t.rows.windows(2) {
            if pair[1].params != pair[0].params {
                changes += 1;
            }
        }
        assert_eq!(changes, t.retune_count());
    }

    #[test]
    fn single_noisy_chunk_does_not_retune() {
        let surfaces = three_surfaces();
        // One outlier inside a steady stream: the 3-chunk mean stays in band.
        let mut script = vec![500.0, 500.0, 500.0, 540.0];
        script.extend(vec![500.0; 16]);
        let mut backend = ScriptedBackend::new(script);
        let ds = dataset(1024 * MB, MB);
        let t = adaptive_sampling(&surfaces, &ds, &mut backend, &SamplerConfig::default()).unwrap();
        assert_eq!(t.retune_count(), 0);
    }

    #[test]
    fn backend_failure_retries_once_then_aborts() {
        let surfaces = three_surfaces();
        let ds = dataset(1024 * MB, MB);

        // One failure: the retry succeeds, the transfer completes.
        let mut flaky = FlakyBackend {
            failures: 1,
            inner: ScriptedBackend::new(vec![500.0]),
        };
        let t = adaptive_sampling(&surfaces, &ds, &mut flaky, &SamplerConfig::default()).unwrap();
        assert!(!t.aborted);
        assert_eq!(t.rows.len(), 20);

        // Two consecutive failures: abort with a partial transcript.
        let mut dead = FlakyBackend {
            failures: 2,
            inner: ScriptedBackend::new(vec![500.0]),
        };
        let t = adaptive_sampling(&surfaces, &ds, &mut dead, &SamplerConfig::default()).unwrap();
        assert!(t.aborted);
        assert!(t.rows.is_empty());
    }

    #[test]
    fn rejects_unsorted_or_empty_families() {
        let ds = dataset(1024 * MB, MB);
        let mut backend = ScriptedBackend::new(vec![500.0]);
        let mut surfaces = three_surfaces();
        surfaces.reverse();
        assert!(adaptive_sampling(&surfaces, &ds, &mut backend, &SamplerConfig::default()).is_err());
        assert!(adaptive_sampling(&[], &ds, &mut backend, &SamplerConfig::default()).is_err());

        let mut missing = three_surfaces();
        missing[1].argmax = None;
        assert!(adaptive_sampling(&missing, &ds, &mut backend, &SamplerConfig::default()).is_err());
    }

    #[test]
    fn accuracy_formula() {
        assert_eq!(accuracy(1000.0, 930.0).unwrap(), (7.000000000000001, 92.999999999999999f64));
        let (err, acc) = accuracy(500.0, 500.0).unwrap();
        assert_eq!((err, acc), (0.0, 100.0));
        let (err, acc) = accuracy(800.0, 0.0).unwrap();
        assert_eq!((err, acc), (100.0, 0.0));
        assert!(accuracy(0.0, 100.0).is_err());
        assert!(accuracy(-5.0, 100.0).is_err());
    }

    #[test]
    fn transcript_csv_has_pinned_columns() {
        let transcript = Transcript {
            rows: vec![
                TranscriptRow {
                    chunk_idx: 0,
                    params: ParamTriple::new(6, 4, 8),
                    predicted_mbps: 500.0,
                    achieved_mbps: 505.5,
                    elapsed_s: 1.25,
                    event: ChunkEvent::Sample,
                },
                TranscriptRow {
                    chunk_idx: 1,
                    params: ParamTriple::new(6, 4, 8),
                    predicted_mbps: 500.0,
                    achieved_mbps: 498.0,
                    elapsed_s: 1.0,
                    event: ChunkEvent::Converged,
                },
            ],
            pinned_fallback: false,
            aborted: false,
        };
        let mut buf = Vec::new();
        write_transcript_csv(&transcript, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let expected = "chunk_idx,cc,p,pp,predicted_mbps,achieved_mbps,elapsed_s,event\n\
                        0,6,4,8,500,505.5,1.25,sample\n\
                        1,6,4,8,500,498,1,converged\n";
        assert_eq!(text, expected);
    }
}
