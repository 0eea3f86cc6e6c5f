//! Deterministic transfer simulator with analytically known mean-throughput
//! surfaces. Serves as the only in-tree transfer backend and as the
//! synthetic-log generator, so every end-to-end check has an exact oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    max_achievable, DatasetProfile, NetworkProfile, ParamBounds, ParamTriple, TransferLogEntry,
};
use crate::sampler::{ChunkResult, TransferBackend};

/// Slow-start cost in round trips per newly opened stream.
pub const SLOW_START_ROUND_TRIPS: f64 = 10.0;

/// Lower bound on the stream-saturation constant, so even huge TCP buffers
/// leave a visible concurrency effect.
const K_HALF_FLOOR: f64 = 0.05;

/// A simulated network plus a piecewise-constant external-load schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub network: NetworkProfile,
    /// `[time_s, external intensity]` steps; intensity holds until the next
    /// step. First time must be 0, times strictly increasing, intensity in
    /// [0, 1].
    pub schedule: Vec<(f64, f64)>,
    /// Multiplicative Gaussian noise fraction on every observed throughput.
    pub noise: f64,
    pub seed: u64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        let net = &self.network;
        for (what, value) in [
            ("bandwidth_mbps", net.bandwidth_mbps),
            ("rtt_ms", net.rtt_ms),
            ("disk_read_mbps", net.disk_read_mbps),
            ("disk_write_mbps", net.disk_write_mbps),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid("scenario", format!("{what} must be > 0, got {value}")));
            }
        }
        if net.tcp_buffer_bytes == 0 {
            return Err(Error::invalid("scenario", "tcp_buffer_bytes must be ≥ 1"));
        }
        if self.schedule.is_empty() {
            return Err(Error::invalid("scenario", "schedule must have at least one step"));
        }
        if self.schedule[0].0 != 0.0 {
            return Err(Error::invalid(
                "scenario",
                format!("schedule must start at t=0, got t={}", self.schedule[0].0),
            ));
        }
        for pair in self.schedule.windows(2) {
            // Negated on purpose: also catches NaN timestamps.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::invalid(
                    "scenario",
                    format!("schedule times must increase strictly: {} then {}", pair[0].0, pair[1].0),
                ));
            }
        }
        for &(t, i) in &self.schedule {
            if !(0.0..=1.0).contains(&i) || !t.is_finite() {
                return Err(Error::invalid(
                    "scenario",
                    format!("external intensity must be in [0, 1], got {i} at t={t}"),
                ));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid("scenario", format!("noise must be ≥ 0, got {}", self.noise)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<SimScenario> {
        let scenario: SimScenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Deterministic throughput model:
///
/// th̄(θ, t) = min( bw·(1 − I_ext(t)) · U(cc·p) · P(pp), disk_read, disk_write )
///
/// with U(k) = k/(k + K_half) a saturating stream-utilization curve
/// (K_half = BDP/tcp_buffer) and P(pp) = pp/(pp + D) a pipelining
/// efficiency with D = BDP/avg_file_bits (≈ 1 for large files). Observed
/// samples add multiplicative Gaussian noise and clamp to the physical
/// maximum.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: SimScenario,
    rng: ChaCha8Rng,
}

impl Simulator {
    pub fn new(scenario: SimScenario) -> Result<Simulator> {
        scenario.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        Ok(Simulator { scenario, rng })
    }

    pub fn scenario(&self) -> &SimScenario {
        &self.scenario
    }

    /// External load intensity at time `t` (piecewise-constant schedule).
    pub fn external_intensity(&self, t: f64) -> f64 {
        let mut current = self.scenario.schedule[0].1;
        for &(step_t, i) in &self.scenario.schedule {
            if step_t <= t {
                current = i;
            } else {
                break;
            }
        }
        current
    }

    /// Half-saturation constant of the stream-utilization curve: the ratio
    /// of bandwidth-delay product to TCP buffer size. Buffer-starved paths
    /// (large ratio) need many streams; well-tuned paths saturate early.
    pub fn k_half(&self) -> f64 {
        let net = &self.scenario.network;
        let bdp_bits = net.bandwidth_mbps * 1e6 * (net.rtt_ms / 1e3);
        let buffer_bits = (net.tcp_buffer_bytes * 8) as f64;
        (bdp_bits / buffer_bits).max(K_HALF_FLOOR)
    }

    /// Pipelining half-saturation: BDP measured in average files.
    fn pipelining_demand(&self, dataset: &DatasetProfile) -> f64 {
        let net = &self.scenario.network;
        let bdp_bits = net.bandwidth_mbps * 1e6 * (net.rtt_ms / 1e3);
        let file_bits = (dataset.avg_file_bytes * 8) as f64;
        bdp_bits / file_bits
    }

    /// Noiseless mean throughput in Mbps.
    pub fn mean_throughput(&self, params: ParamTriple, dataset: &DatasetProfile, t: f64) -> f64 {
        let net = &self.scenario.network;
        let i_ext = self.external_intensity(t);
        let k = (params.cc * params.p) as f64;
        let utilization = k / (k + self.k_half());
        let demand = self.pipelining_demand(dataset);
        let pipelining = params.pp as f64 / (params.pp as f64 + demand);
        let network_term = net.bandwidth_mbps * (1.0 - i_ext) * utilization * pipelining;
        network_term.min(net.disk_read_mbps).min(net.disk_write_mbps)
    }

    /// One noisy observation. Consumes RNG state: identical call sequences
    /// on identical seeds produce identical outputs.
    pub fn sample_throughput(
        &mut self,
        params: ParamTriple,
        dataset: &DatasetProfile,
        t: f64,
    ) -> f64 {
        let mean = self.mean_throughput(params, dataset, t);
        let z: f64 = StandardNormal.sample(&mut self.rng);
        let noisy = mean * (1.0 + self.scenario.noise * z);
        noisy.clamp(0.0, max_achievable(&self.scenario.network))
    }

    /// Exhaustive noiseless optimum over the lattice at time `t`; ties go to
    /// the lexicographically smallest (cc, p, pp).
    pub fn oracle_optimum(
        &self,
        dataset: &DatasetProfile,
        t: f64,
        bounds: &ParamBounds,
    ) -> (ParamTriple, f64) {
        let mut best_params = ParamTriple::new(1, 1, 1);
        let mut best = f64::NEG_INFINITY;
        for params in bounds.iter() {
            let th = self.mean_throughput(params, dataset, t);
            if th > best {
                best = th;
                best_params = params;
            }
        }
        (best_params, best)
    }
}

/// Which lattice points a synthetic corpus covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCoverage {
    pub cc_values: Vec<u32>,
    pub p_values: Vec<u32>,
    pub pp_values: Vec<u32>,
}

impl LatticeCoverage {
    /// Every (cc, p) pair in bounds, at the given pipelining knots.
    pub fn full(bounds: &ParamBounds, pp_values: Vec<u32>) -> LatticeCoverage {
        LatticeCoverage {
            cc_values: (1..=bounds.cc).collect(),
            p_values: (1..=bounds.p).collect(),
            pp_values,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cc_values.is_empty() || self.p_values.is_empty() || self.pp_values.is_empty() {
            return Err(Error::invalid("lattice coverage", "each axis needs at least one value"));
        }
        if self.cc_values.iter().chain(&self.p_values).chain(&self.pp_values).any(|&v| v == 0) {
            return Err(Error::invalid("lattice coverage", "parameter values must be ≥ 1"));
        }
        Ok(())
    }
}

/// Generate a synthetic transfer-log corpus: for every dataset, schedule
/// step, and covered lattice point, `repeats` noisy observations taken at
/// the step's start time. Iteration order (dataset, step, cc, p, pp,
/// repeat) is fixed, so a given scenario seed yields a bit-identical corpus.
pub fn generate_corpus(
    scenario: &SimScenario,
    datasets: &[DatasetProfile],
    coverage: &LatticeCoverage,
    repeats: u32,
) -> Result<Vec<TransferLogEntry>> {
    coverage.validate()?;
    if repeats == 0 {
        return Err(Error::invalid("corpus", "repeats must be ≥ 1"));
    }
    if datasets.is_empty() {
        return Err(Error::invalid("corpus", "at least one dataset required"));
    }
    let mut sim = Simulator::new(scenario.clone())?;
    let bw = scenario.network.bandwidth_mbps;
    let mut entries = Vec::new();
    for dataset in datasets {
        for &(t, i_ext) in &scenario.schedule {
            for &cc in &coverage.cc_values {
                for &p in &coverage.p_values {
                    for &pp in &coverage.pp_values {
                        let params = ParamTriple::new(cc, p, pp);
                        for _ in 0..repeats {
                            let throughput = sim.sample_throughput(params, dataset, t);
                            entries.push(TransferLogEntry {
                                timestamp: t,
                                network: scenario.network.clone(),
                                dataset: *dataset,
                                params,
                                throughput_mbps: throughput,
                                contending_out_mbps: bw * i_ext,
                                contending_streams: (i_ext * 10.0).round() as u32,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(entries)
}

/// Transfer backend driven by the simulator: keeps a clock, charges
/// slow-start time when (cc, p) changes, and reports noisy throughput.
#[derive(Debug, Clone)]
pub struct SimBackend {
    sim: Simulator,
    dataset: DatasetProfile,
    clock_s: f64,
    prev_params: Option<ParamTriple>,
}

impl SimBackend {
    pub fn new(scenario: SimScenario, dataset: DatasetProfile) -> Result<SimBackend> {
        Ok(SimBackend {
            sim: Simulator::new(scenario)?,
            dataset,
            clock_s: 0.0,
            prev_params: None,
        })
    }

    /// Simulated seconds elapsed since the transfer began.
    pub fn clock(&self) -> f64 {
        self.clock_s
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    /// Extra seconds charged when switching from `prev` to `next`:
    /// [`SLOW_START_ROUND_TRIPS`] round trips per newly opened stream, at
    /// least one stream's worth whenever (cc, p) changes (process restart).
    /// Pipelining-only changes are free.
    fn change_penalty_s(&self, next: ParamTriple) -> f64 {
        let Some(prev) = self.prev_params else {
            return 0.0;
        };
        if prev.cc == next.cc && prev.p == next.p {
            return 0.0;
        }
        let opened = f64::from(next.cc * next.p) - f64::from(prev.cc * prev.p);
        let rtt_s = self.sim.scenario.network.rtt_ms / 1e3;
        SLOW_START_ROUND_TRIPS * rtt_s * opened.max(1.0)
    }
}

impl TransferBackend for SimBackend {
    fn transfer(&mut self, chunk_bytes: u64, params: ParamTriple) -> Result<ChunkResult> {
        let penalty_s = self.change_penalty_s(params);
        let achieved = self.sim.sample_throughput(params, &self.dataset, self.clock_s + penalty_s);
        // A fully loaded network can sample at 0 Mbps; floor the rate for
        // the elapsed-time computation so the clock still advances.
        let rate = achieved.max(1e-6);
        let transfer_s = (chunk_bytes as f64) * 8.0 / 1e6 / rate;
        self.clock_s += penalty_s + transfer_s;
        self.prev_params = Some(params);
        Ok(ChunkResult { achieved_mbps: achieved, elapsed_s: penalty_s + transfer_s })
    }
}
