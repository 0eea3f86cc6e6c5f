//! Command-line harness: ingest and validate transfer logs, generate
//! synthetic corpora, build/update/query the knowledge base, run tuned
//! transfers against the simulator, and produce benchmark reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
//! invalid inputs).

pub mod bench;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use xfertune_core::cluster::ClusterMethod;
use xfertune_core::ingest::{parse_log, write_jsonl, LogFormat, ParseOutcome};
use xfertune_core::kb::{batch_id, KbConfig, KnowledgeBase, LogBatch};
use xfertune_core::model::{DatasetProfile, NetworkProfile, ParamBounds};
use xfertune_core::sampler::{adaptive_sampling, write_transcript_csv, SamplerConfig};
use xfertune_core::sim::{generate_corpus, LatticeCoverage, SimBackend, SimScenario};

#[derive(Parser)]
#[command(
    name = "xfertune",
    version,
    about = "Transfer-parameter auto-tuning from historical logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate transfer logs, reporting rejected lines.
    Ingest(IngestArgs),
    /// Generate a synthetic transfer-log corpus from a simulator scenario.
    Simgen(SimgenArgs),
    /// Build a knowledge base from transfer logs (offline analysis).
    Analyze(AnalyzeArgs),
    /// Fold new log batches into an existing knowledge base.
    Update(UpdateArgs),
    /// Look up the cluster and surfaces for a transfer profile.
    Query(QueryArgs),
    /// Run an adaptively tuned transfer and write its transcript.
    Transfer(TransferArgs),
    /// Run the benchmark matrix and staleness sweep, writing a CSV report.
    Bench(BenchArgs),
    /// Render a benchmark CSV as a Markdown summary.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Log files to parse; `.csv` parses as CSV, anything else as JSONL.
    #[arg(long, required = true, num_args = 1..)]
    logs: Vec<PathBuf>,
    /// Write all accepted entries as normalized JSONL.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimgenArgs {
    /// Scenario JSON: {network, schedule: [[t, i_ext]..], noise, seed}.
    #[arg(long)]
    scenario: PathBuf,
    /// Repeated observations per lattice point and schedule step.
    #[arg(long, default_value_t = 3)]
    repeats: u32,
    /// JSON array of dataset profiles (default: one 10 GiB medium-file set).
    #[arg(long)]
    datasets: Option<PathBuf>,
    /// Lattice coverage JSON {cc_values, p_values, pp_values}
    /// (default: full cc/p axes with pp in {1,2,4,8,16,32}).
    #[arg(long)]
    coverage: Option<PathBuf>,
    /// Output JSONL corpus path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Transfer-log files (JSONL or CSV); each file becomes one batch.
    #[arg(long, required = true, num_args = 1..)]
    logs: Vec<PathBuf>,
    /// Knowledge-base JSON output path.
    #[arg(long)]
    out: PathBuf,
    /// Master RNG seed for clustering and region sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Candidate cluster-count range, as `lo,hi`.
    #[arg(long, value_parser = parse_usize_pair, default_value = "2,8")]
    m_range: (usize, usize),
    /// Clustering method: `kmeanspp` or `hac`.
    #[arg(long, value_parser = parse_method, default_value = "kmeanspp")]
    method: ClusterMethod,
    /// Confidence half-width in standard deviations.
    #[arg(long, default_value_t = 1.96)]
    z: f64,
}

#[derive(Args)]
struct UpdateArgs {
    /// Existing knowledge-base JSON.
    #[arg(long)]
    kb: PathBuf,
    /// New transfer-log files to fold in.
    #[arg(long, required = true, num_args = 1..)]
    logs: Vec<PathBuf>,
    /// Output path (default: rewrite --kb in place).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    /// Knowledge-base JSON.
    #[arg(long)]
    kb: PathBuf,
    /// Transfer profile JSON: {"network": {...}, "dataset": {...}}.
    #[arg(long)]
    profile: PathBuf,
}

#[derive(Args)]
struct TransferArgs {
    /// Knowledge-base JSON.
    #[arg(long)]
    kb: PathBuf,
    /// Transfer profile JSON; its `network` describes the live link.
    #[arg(long)]
    profile: PathBuf,
    /// Dataset JSON describing the bytes to move.
    #[arg(long)]
    dataset: PathBuf,
    /// Transfer backend (only the simulator ships in-tree).
    #[arg(long, value_enum, default_value_t = Backend::Sim)]
    backend: Backend,
    /// Simulator RNG seed.
    #[arg(long, default_value_t = 0)]
    sim_seed: u64,
    /// External-load schedule JSON: [[t_seconds, i_ext], ...].
    #[arg(long)]
    sim_load: PathBuf,
    /// Multiplicative throughput noise σ for the simulated link.
    #[arg(long, default_value_t = 0.02)]
    sim_noise: f64,
    /// Deviation-test window (consecutive chunks).
    #[arg(long, default_value_t = 3)]
    window: usize,
    /// Transcript CSV output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Report CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Seeds (= tuned transfers) per benchmark cell.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Base seed for profile pools, corpora, and live links.
    #[arg(long, default_value_t = 1_000)]
    base_seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Benchmark CSV produced by `bench`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Markdown output path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Sim,
}

fn parse_usize_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got {s:?}"))?;
    let lo = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Ok((lo, hi))
}

fn parse_method(s: &str) -> std::result::Result<ClusterMethod, String> {
    ClusterMethod::from_str(s).map_err(|e| e.to_string())
}

/// Parse `argv` and execute. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Simgen(args) => cmd_simgen(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Update(args) => cmd_update(args),
        Command::Query(args) => cmd_query(args),
        Command::Transfer(args) => cmd_transfer(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Report(args) => cmd_report(args),
    }
}

/// Write a multi-line payload to stdout, treating a closed pipe as success
/// so `xfertune query … | head` exits cleanly instead of panicking.
fn print_payload(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(err) if err.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        result => result.context("writing to stdout"),
    }
}

/// Write via a sibling temp file and rename, so readers never observe a
/// partially written file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp.{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming into place: {}", path.display()))?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} {}", path.display()))
}

/// What a tuning decision is about: the link plus the dataset moving on it.
/// `dataset` may be omitted in files used only for `transfer`, which takes
/// the dataset separately.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferProfile {
    pub network: NetworkProfile,
    #[serde(default)]
    pub dataset: Option<DatasetProfile>,
}

fn parse_batches(paths: &[PathBuf]) -> Result<(Vec<LogBatch>, usize)> {
    let mut batches = Vec::with_capacity(paths.len());
    let mut rejected = 0usize;
    for path in paths {
        let bytes =
            fs::read(path).with_context(|| format!("reading log {}", path.display()))?;
        let outcome: ParseOutcome = parse_log(path, LogFormat::from_path(path))?;
        for rejection in &outcome.rejections {
            eprintln!("{}: {rejection}", path.display());
        }
        rejected += outcome.rejections.len();
        batches.push(LogBatch {
            id: batch_id(&bytes),
            entries: outcome.entries,
        });
    }
    Ok((batches, rejected))
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let mut all = Vec::new();
    let mut total_rejected = 0usize;
    for path in &args.logs {
        let outcome = parse_log(path, LogFormat::from_path(path))?;
        for rejection in &outcome.rejections {
            eprintln!("{}: {rejection}", path.display());
        }
        println!(
            "{}: {} entries, {} rejected",
            path.display(),
            outcome.entries.len(),
            outcome.rejections.len()
        );
        total_rejected += outcome.rejections.len();
        all.extend(outcome.entries);
    }
    println!("total: {} entries, {} rejected", all.len(), total_rejected);
    if let Some(out) = &args.out {
        let mut buf = Vec::new();
        write_jsonl(&all, &mut buf)?;
        write_atomic(out, &buf)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn default_dataset() -> DatasetProfile {
    let avg = 64u64 << 20;
    DatasetProfile {
        avg_file_bytes: avg,
        num_files: 160,
        total_bytes: 160 * avg,
    }
}

fn cmd_simgen(args: SimgenArgs) -> Result<()> {
    let text = fs::read_to_string(&args.scenario)
        .with_context(|| format!("reading scenario {}", args.scenario.display()))?;
    let scenario = SimScenario::from_json(&text)?;
    let datasets: Vec<DatasetProfile> = match &args.datasets {
        Some(path) => read_json(path, "datasets")?,
        None => vec![default_dataset()],
    };
    let coverage: LatticeCoverage = match &args.coverage {
        Some(path) => read_json(path, "coverage")?,
        None => LatticeCoverage::full(&ParamBounds::default(), vec![1, 2, 4, 8, 16, 32]),
    };
    let entries = generate_corpus(&scenario, &datasets, &coverage, args.repeats)?;
    let mut buf = Vec::new();
    write_jsonl(&entries, &mut buf)?;
    write_atomic(&args.out, &buf)?;
    println!("wrote {} entries to {}", entries.len(), args.out.display());
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let (batches, rejected) = parse_batches(&args.logs)?;
    if rejected > 0 {
        eprintln!("warning: {rejected} rejected log lines (listed above)");
    }
    let config = KbConfig {
        seed: args.seed,
        m_range: args.m_range,
        method: args.method,
        z: args.z,
        ..KbConfig::default()
    };
    let kb = KnowledgeBase::build(&batches, &config)?;
    write_atomic(&args.out, kb.to_json()?.as_bytes())?;
    let surfaces: usize = kb.clusters.iter().map(|c| c.surfaces.len()).sum();
    println!(
        "knowledge base: {} clusters, {} surfaces, built_at {} → {}",
        kb.clusters.len(),
        surfaces,
        kb.built_at,
        args.out.display()
    );
    Ok(())
}

fn cmd_update(args: UpdateArgs) -> Result<()> {
    let kb = KnowledgeBase::load(&args.kb)?;
    let (batches, rejected) = parse_batches(&args.logs)?;
    if rejected > 0 {
        eprintln!("warning: {rejected} rejected log lines (listed above)");
    }
    let updated = kb.update(&batches)?;
    let out = args.out.as_ref().unwrap_or(&args.kb);
    write_atomic(out, updated.to_json()?.as_bytes())?;
    println!(
        "knowledge base: {} clusters ({} before), {} batches → {}",
        updated.clusters.len(),
        kb.clusters.len(),
        updated.batches.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct QueryReply {
    cluster_id: usize,
    centroid: [f64; 5],
    radius: f64,
    size: u64,
    surfaces: Vec<SurfaceSummary>,
}

#[derive(Serialize)]
struct SurfaceSummary {
    band: usize,
    i_s_range: (f64, f64),
    load_tag: f64,
    kind: &'static str,
    low_confidence: bool,
    argmax: Option<ArgmaxSummary>,
}

#[derive(Serialize)]
struct ArgmaxSummary {
    cc: u32,
    p: u32,
    pp: u32,
    predicted_mbps: f64,
}

fn cmd_query(args: QueryArgs) -> Result<()> {
    let kb = KnowledgeBase::load(&args.kb)?;
    let profile: TransferProfile = read_json(&args.profile, "profile")?;
    let dataset = profile
        .dataset
        .context("profile file must include a `dataset` for query")?;
    let (cluster_id, cluster) = kb.query(&profile.network, &dataset)?;
    let reply = QueryReply {
        cluster_id,
        centroid: cluster.centroid.0,
        radius: cluster.radius,
        size: cluster.size,
        surfaces: cluster
            .surfaces
            .iter()
            .map(|s| SurfaceSummary {
                band: s.band.index(),
                i_s_range: s.band.range(),
                load_tag: s.load_tag.value(),
                kind: s.model.kind_name(),
                low_confidence: s.low_confidence,
                argmax: s.argmax.map(|a| ArgmaxSummary {
                    cc: a.params.cc,
                    p: a.params.p,
                    pp: a.params.pp,
                    predicted_mbps: a.value,
                }),
            })
            .collect(),
    };
    let mut payload = serde_json::to_string_pretty(&reply)?;
    payload.push('\n');
    print_payload(&payload)
}

fn cmd_transfer(args: TransferArgs) -> Result<()> {
    let Backend::Sim = args.backend;
    let kb = KnowledgeBase::load(&args.kb)?;
    let profile: TransferProfile = read_json(&args.profile, "profile")?;
    let dataset: DatasetProfile = read_json(&args.dataset, "dataset")?;
    let schedule: Vec<(f64, f64)> = read_json(&args.sim_load, "load schedule")?;

    let (_, cluster) = kb.query(&profile.network, &dataset)?;
    let scenario = SimScenario {
        network: profile.network.clone(),
        schedule,
        noise: args.sim_noise,
        seed: args.sim_seed,
    };
    let mut backend = SimBackend::new(scenario, dataset)?;
    let sampler_config = SamplerConfig {
        z: kb.config.z,
        window: args.window,
    };
    let transcript =
        adaptive_sampling(&cluster.surfaces, &dataset, &mut backend, &sampler_config)?;

    let mut buf = Vec::new();
    write_transcript_csv(&transcript, &mut buf)?;
    write_atomic(&args.out, &buf)?;

    let bulk: Vec<f64> = transcript
        .rows
        .iter()
        .filter(|r| r.event != xfertune_core::sampler::ChunkEvent::Sample)
        .map(|r| r.achieved_mbps)
        .collect();
    let mean = if bulk.is_empty() {
        0.0
    } else {
        bulk.iter().sum::<f64>() / bulk.len() as f64
    };
    println!(
        "{} chunks ({} samples, {} retunes), bulk mean {:.1} Mbps → {}",
        transcript.rows.len(),
        transcript.sample_count(),
        transcript.retune_count(),
        mean,
        args.out.display()
    );
    if transcript.pinned_fallback {
        println!("note: no load band matched; pinned to the nearest surface");
    }
    if transcript.aborted {
        println!("note: transfer aborted early after repeated backend failures");
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let csv_text = bench::run_bench(&bench::BenchConfig {
        seeds: args.seeds,
        base_seed: args.base_seed,
    })?;
    write_atomic(&args.out, csv_text.as_bytes())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading report {}", args.input.display()))?;
    let markdown = report::render_markdown(&text)?;
    match &args.out {
        Some(path) => {
            write_atomic(path, markdown.as_bytes())?;
            println!("wrote {}", path.display());
        }
        None => print_payload(&markdown)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usize_pair_parses_and_rejects() {
        assert_eq!(parse_usize_pair("2,8").unwrap(), (2, 8));
        assert_eq!(parse_usize_pair(" 3 , 5 ").unwrap(), (3, 5));
        assert!(parse_usize_pair("7").is_err());
        assert!(parse_usize_pair("a,b").is_err());
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        assert_eq!(run(["xfertune", "frobnicate"]), 1);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(run(["xfertune", "--help"]), 0);
    }

    #[test]
    fn missing_file_is_a_data_error() {
        assert_eq!(
            run(["xfertune", "ingest", "--logs", "/nonexistent/x.jsonl"]),
            2
        );
    }
}
