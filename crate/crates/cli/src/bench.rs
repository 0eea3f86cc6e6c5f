//! Benchmark harness: a (file-size class × load level) matrix of tuned
//! transfers scored against the simulator's exhaustive optimum, a static
//! mid-lattice baseline, and a knowledge-base staleness sweep under
//! drifting load. Emits one CSV; `report` renders it.

use anyhow::{Context, Result};
use std::fmt::Write as _;

use xfertune_core::kb::{KbConfig, KnowledgeBase, LogBatch};
use xfertune_core::model::{DatasetProfile, NetworkProfile, ParamTriple};
use xfertune_core::sampler::{
    accuracy, adaptive_sampling, plan_chunks, ChunkEvent, SamplerConfig, TransferBackend,
};
use xfertune_core::sim::{generate_corpus, LatticeCoverage, SimBackend, SimScenario, Simulator};

/// External load levels for the two matrix columns.
const OFF_PEAK: f64 = 0.10;
const PEAK: f64 = 0.70;
/// Mid load level used to train the staleness band and drift from.
const MID_LOAD: f64 = 0.45;
/// Per-day external-load drift applied in the staleness sweep.
const DRIFT_PER_DAY: f64 = 0.004;
/// Day offsets evaluated in the staleness sweep.
const STALENESS_DAYS: [u32; 3] = [1, 5, 10];
/// The fixed baseline everyone gets without tuning: mid-lattice parameters.
const STATIC_PARAMS: ParamTriple = ParamTriple {
    cc: 8,
    p: 8,
    pp: 16,
};
/// Unique network variants in the profile pool.
const POOL: usize = 10;
/// Variants used for training; the rest are held out for evaluation.
const TRAIN: usize = 7;

pub struct BenchConfig {
    pub seeds: usize,
    pub base_seed: u64,
}

struct SizeClass {
    name: &'static str,
    dataset: DatasetProfile,
}

fn size_classes() -> Vec<SizeClass> {
    let total = 10u64 << 30;
    [("small", 4u64 << 20), ("medium", 64u64 << 20), ("large", 1u64 << 30)]
        .into_iter()
        .map(|(name, avg)| SizeClass {
            name,
            dataset: DatasetProfile {
                avg_file_bytes: avg,
                num_files: total / avg,
                total_bytes: total,
            },
        })
        .collect()
}

/// Deterministic seed mixing (order-sensitive hash combine).
fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base;
    for &p in parts {
        h ^= p
            .wrapping_add(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(h << 6)
            .wrapping_add(h >> 2);
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    }
    h
}

/// The variant pool: networks spread around a 10 Gbps / 40 ms path.
fn network_pool() -> Vec<NetworkProfile> {
    (0..POOL)
        .map(|i| {
            let scale = 0.90 + 0.02 * i as f64;
            let bw = 10_000.0 * scale;
            NetworkProfile {
                source_id: format!("bench-src-{i}"),
                dest_id: format!("bench-dst-{i}"),
                bandwidth_mbps: bw,
                rtt_ms: 40.0 * (1.10 - 0.02 * i as f64),
                tcp_buffer_bytes: 4 << 20,
                disk_read_mbps: bw * 1.1,
                disk_write_mbps: bw * 1.1,
            }
        })
        .collect()
}

/// Deterministic 70/30 split of the pool indices.
fn split_pool(base_seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..POOL).collect();
    // Fisher-Yates driven by the mixed seed stream.
    for i in (1..order.len()).rev() {
        let j = (mix_seed(base_seed, &[7, i as u64]) % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    let train = order[..TRAIN].to_vec();
    let test = order[TRAIN..].to_vec();
    (train, test)
}

fn training_coverage() -> LatticeCoverage {
    LatticeCoverage {
        cc_values: vec![1, 2, 4, 8, 16],
        p_values: vec![1, 2, 4, 8, 16],
        pp_values: vec![2, 8, 32],
    }
}

fn build_kb(
    nets: &[NetworkProfile],
    classes: &[SizeClass],
    base_seed: u64,
) -> Result<KnowledgeBase> {
    let mut batches = Vec::new();
    for (ni, net) in nets.iter().enumerate() {
        for (ci, class) in classes.iter().enumerate() {
            let scenario = SimScenario {
                network: net.clone(),
                schedule: vec![(0.0, OFF_PEAK), (10_000.0, MID_LOAD), (20_000.0, PEAK)],
                noise: 0.03,
                seed: mix_seed(base_seed, &[1, ni as u64, ci as u64]),
            };
            let entries =
                generate_corpus(&scenario, &[class.dataset], &training_coverage(), 2)?;
            batches.push(LogBatch {
                id: format!("bench-train-{ni}-{ci}"),
                entries,
            });
        }
    }
    let config = KbConfig {
        seed: base_seed,
        ..KbConfig::default()
    };
    Ok(KnowledgeBase::build(&batches, &config)?)
}

/// Mean, guarding the empty case.
fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

struct CellOutcome {
    ratio_adaptive: f64,
    ratio_static: f64,
    samples_mean: f64,
    accuracy_mean: f64,
}

/// Run one benchmark cell: `seeds` tuned transfers (plus static baselines)
/// on held-out networks at a fixed external load.
fn run_cell(
    kb: &KnowledgeBase,
    test_nets: &[NetworkProfile],
    dataset: &DatasetProfile,
    i_ext: f64,
    noise: f64,
    seeds: usize,
    cell_seed: u64,
) -> Result<CellOutcome> {
    let mut ratios_adaptive = Vec::with_capacity(seeds);
    let mut ratios_static = Vec::with_capacity(seeds);
    let mut sample_counts = Vec::with_capacity(seeds);
    let mut accuracies = Vec::with_capacity(seeds);

    for s in 0..seeds {
        let net = &test_nets[s % test_nets.len()];
        let scenario = SimScenario {
            network: net.clone(),
            schedule: vec![(0.0, i_ext)],
            noise,
            seed: mix_seed(cell_seed, &[s as u64]),
        };
        let sim = Simulator::new(scenario.clone())?;
        let (_, oracle_rate) = sim.oracle_optimum(dataset, 0.0, &kb.config.bounds);

        // Tuned transfer.
        let (_, cluster) = kb.query(net, dataset)?;
        let mut backend = SimBackend::new(scenario.clone(), *dataset)?;
        let transcript = adaptive_sampling(
            &cluster.surfaces,
            dataset,
            &mut backend,
            &SamplerConfig {
                z: kb.config.z,
                ..SamplerConfig::default()
            },
        )?;
        let bulk: Vec<&xfertune_core::sampler::TranscriptRow> = transcript
            .rows
            .iter()
            .filter(|r| r.event != ChunkEvent::Sample)
            .collect();
        let bulk_rates: Vec<f64> = bulk.iter().map(|r| r.achieved_mbps).collect();
        ratios_adaptive.push(mean(&bulk_rates) / oracle_rate);
        sample_counts.push(transcript.sample_count() as f64);
        let row_accuracies: Vec<f64> = bulk
            .iter()
            .filter_map(|r| accuracy(r.predicted_mbps, r.achieved_mbps).ok())
            .map(|(_, acc)| acc)
            .collect();
        accuracies.push(mean(&row_accuracies));

        // Static baseline: same link and chunking, fixed parameters.
        let mut baseline = SimBackend::new(scenario, *dataset)?;
        let mut static_rates = Vec::new();
        for chunk in plan_chunks(dataset) {
            let result = baseline
                .transfer(chunk, STATIC_PARAMS)
                .context("static baseline transfer")?;
            static_rates.push(result.achieved_mbps);
        }
        ratios_static.push(mean(&static_rates) / oracle_rate);
    }

    Ok(CellOutcome {
        ratio_adaptive: mean(&ratios_adaptive),
        ratio_static: mean(&ratios_static),
        samples_mean: mean(&sample_counts),
        accuracy_mean: mean(&accuracies),
    })
}

struct Row {
    section: &'static str,
    size_class: &'static str,
    load: String,
    day_offset: u32,
    seeds: usize,
    outcome: CellOutcome,
}

/// Run the full benchmark and return the report CSV.
pub fn run_bench(config: &BenchConfig) -> Result<String> {
    let classes = size_classes();
    let pool = network_pool();
    let (train_idx, test_idx) = split_pool(config.base_seed);
    let train_nets: Vec<NetworkProfile> = train_idx.iter().map(|&i| pool[i].clone()).collect();
    let test_nets: Vec<NetworkProfile> = test_idx.iter().map(|&i| pool[i].clone()).collect();

    let kb = build_kb(&train_nets, &classes, config.base_seed)?;

    // Cell specs: the 3×2 matrix, then the staleness sweep on the medium
    // class with per-day load drift.
    struct Spec {
        section: &'static str,
        class_idx: usize,
        load_label: String,
        i_ext: f64,
        noise: f64,
        day_offset: u32,
    }
    let mut specs = Vec::new();
    for (ci, _) in classes.iter().enumerate() {
        for (label, i_ext) in [("off_peak", OFF_PEAK), ("peak", PEAK)] {
            specs.push(Spec {
                section: "matrix",
                class_idx: ci,
                load_label: label.to_owned(),
                i_ext,
                noise: 0.05,
                day_offset: 0,
            });
        }
    }
    for day in STALENESS_DAYS {
        specs.push(Spec {
            section: "staleness",
            class_idx: 1,
            load_label: format!("{:.3}", MID_LOAD + DRIFT_PER_DAY * day as f64),
            i_ext: MID_LOAD + DRIFT_PER_DAY * day as f64,
            noise: 0.02,
            day_offset: day,
        });
    }

    // Cells are independent; run them on scoped threads and collect in
    // spec order so the report is deterministic.
    let kb_ref = &kb;
    let test_ref = &test_nets;
    let classes_ref = &classes;
    let seeds = config.seeds;
    let base_seed = config.base_seed;
    let outcomes: Vec<Result<CellOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                scope.spawn(move || {
                    run_cell(
                        kb_ref,
                        test_ref,
                        &classes_ref[spec.class_idx].dataset,
                        spec.i_ext,
                        spec.noise,
                        seeds,
                        mix_seed(base_seed, &[2, i as u64]),
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench cell thread panicked"))
            .collect()
    });

    let mut rows = Vec::with_capacity(specs.len());
    for (spec, outcome) in specs.iter().zip(outcomes) {
        rows.push(Row {
            section: spec.section,
            size_class: classes[spec.class_idx].name,
            load: spec.load_label.clone(),
            day_offset: spec.day_offset,
            seeds,
            outcome: outcome?,
        });
    }

    let mut csv = String::new();
    writeln!(
        csv,
        "# split=70/30 pool={POOL} train_networks={TRAIN} test_networks={} \
         size_classes={} base_seed={} seeds_per_cell={}",
        POOL - TRAIN,
        classes.len(),
        config.base_seed,
        config.seeds
    )?;
    writeln!(
        csv,
        "section,size_class,load,day_offset,seeds,ratio_adaptive,ratio_static,samples_mean,accuracy"
    )?;
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{},{},{:.4},{:.4},{:.2},{:.2}",
            row.section,
            row.size_class,
            row.load,
            row.day_offset,
            row.seeds,
            row.outcome.ratio_adaptive,
            row.outcome.ratio_static,
            row.outcome.samples_mean,
            row.outcome.accuracy_mean
        )?;
    }
    Ok(csv)
}
