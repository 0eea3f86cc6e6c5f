//! Render a benchmark CSV as a Markdown summary: one table for the
//! throughput matrix, one for the staleness sweep.

use anyhow::{bail, Context, Result};
use std::fmt::Write as _;

const EXPECTED_HEADER: [&str; 9] = [
    "section",
    "size_class",
    "load",
    "day_offset",
    "seeds",
    "ratio_adaptive",
    "ratio_static",
    "samples_mean",
    "accuracy",
];

#[derive(Debug, Clone, serde::Deserialize)]
struct BenchRow {
    section: String,
    size_class: String,
    load: String,
    day_offset: u32,
    seeds: usize,
    ratio_adaptive: f64,
    ratio_static: f64,
    samples_mean: f64,
    accuracy: f64,
}

pub fn render_markdown(csv_text: &str) -> Result<String> {
    let preamble: Vec<&str> = csv_text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim())
        .collect();

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(csv_text.as_bytes());
    let header = reader.headers().context("reading CSV header")?.clone();
    if header.iter().ne(EXPECTED_HEADER) {
        bail!(
            "unexpected report columns {:?}; expected {:?}",
            header.iter().collect::<Vec<_>>(),
            EXPECTED_HEADER
        );
    }
    let mut matrix = Vec::new();
    let mut staleness = Vec::new();
    for record in reader.deserialize() {
        let row: BenchRow = record.context("parsing report row")?;
        match row.section.as_str() {
            "matrix" => matrix.push(row),
            "staleness" => staleness.push(row),
            other => bail!("unknown report section {other:?}"),
        }
    }

    let mut md = String::new();
    writeln!(md, "# Transfer tuning benchmark\n")?;
    for line in &preamble {
        writeln!(md, "> {line}")?;
    }
    if !preamble.is_empty() {
        writeln!(md)?;
    }

    if !matrix.is_empty() {
        writeln!(md, "## Throughput matrix\n")?;
        writeln!(
            md,
            "| size class | load | seeds | adaptive / oracle | static / oracle | samples | accuracy |"
        )?;
        writeln!(md, "|---|---|---:|---:|---:|---:|---:|")?;
        for r in &matrix {
            writeln!(
                md,
                "| {} | {} | {} | {:.3} | {:.3} | {:.2} | {:.1} |",
                r.size_class,
                r.load,
                r.seeds,
                r.ratio_adaptive,
                r.ratio_static,
                r.samples_mean,
                r.accuracy
            )?;
        }
        writeln!(md)?;
    }

    if !staleness.is_empty() {
        writeln!(md, "## Staleness sweep\n")?;
        writeln!(
            md,
            "| day offset | drifted load | seeds | accuracy | adaptive / oracle |"
        )?;
        writeln!(md, "|---:|---|---:|---:|---:|")?;
        for r in &staleness {
            writeln!(
                md,
                "| {} | {} | {} | {:.1} | {:.3} |",
                r.day_offset, r.load, r.seeds, r.accuracy, r.ratio_adaptive
            )?;
        }
        writeln!(md)?;
    }

    Ok(md)
}
