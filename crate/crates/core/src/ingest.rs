//! Transfer-log ingestion: parse JSONL/CSV history files, validate records,
//! aggregate contending traffic, and group repeated-parameter observations.
//!
//! The log schema is shared with the corpus emitter: one record per
//! completed transfer, disk rates in MB/s (converted to Mbps in memory).

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    DatasetProfile, LoadIntensity, NetworkProfile, ParamTriple, TransferLogEntry, MBS_TO_MBPS,
};
use crate::surface::grid::mean_std;

/// On-disk file format of a transfer log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Jsonl,
    Csv,
}

impl FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(LogFormat::Jsonl),
            "csv" => Ok(LogFormat::Csv),
            other => Err(Error::invalid(
                "log format",
                format!("expected jsonl or csv, got {other:?}"),
            )),
        }
    }
}

impl LogFormat {
    /// Guess the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => LogFormat::Csv,
            _ => LogFormat::Jsonl,
        }
    }
}

/// A record that failed validation, with enough context to find and fix it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    /// 1-based line number (JSONL) or data-row number (CSV, excluding header).
    pub line: usize,
    /// Name of the offending field.
    pub field: String,
    /// Human-readable constraint that failed.
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: field {}: {}", self.line, self.field, self.reason)
    }
}

/// Result of parsing one log file: valid entries plus a rejection report.
#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub entries: Vec<TransferLogEntry>,
    pub rejections: Vec<Rejection>,
}

/// The 17 log fields, in emission order. Disk rates are MB/s on disk.
#[derive(Debug, Clone, Serialize)]
struct LogRecord {
    ts: f64,
    src: String,
    dst: String,
    bw_mbps: f64,
    rtt_ms: f64,
    tcp_buf_bytes: u64,
    disk_read_mbs: f64,
    disk_write_mbs: f64,
    avg_file_bytes: u64,
    num_files: u64,
    total_bytes: u64,
    cc: u32,
    p: u32,
    pp: u32,
    throughput_mbps: f64,
    contending_out_mbps: f64,
    contending_streams: u32,
}

impl LogRecord {
    fn from_entry(entry: &TransferLogEntry) -> Self {
        LogRecord {
            ts: entry.timestamp,
            src: entry.network.source_id.clone(),
            dst: entry.network.dest_id.clone(),
            bw_mbps: entry.network.bandwidth_mbps,
            rtt_ms: entry.network.rtt_ms,
            tcp_buf_bytes: entry.network.tcp_buffer_bytes,
            disk_read_mbs: entry.network.disk_read_mbps / MBS_TO_MBPS,
            disk_write_mbs: entry.network.disk_write_mbps / MBS_TO_MBPS,
            avg_file_bytes: entry.dataset.avg_file_bytes,
            num_files: entry.dataset.num_files,
            total_bytes: entry.dataset.total_bytes,
            cc: entry.params.cc,
            p: entry.params.p,
            pp: entry.params.pp,
            throughput_mbps: entry.throughput_mbps,
            contending_out_mbps: entry.contending_out_mbps,
            contending_streams: entry.contending_streams,
        }
    }
}

/// Parse a log file in the given format, validating every record.
///
/// Invalid records are reported per line, never silently dropped; only I/O
/// failures abort the parse.
pub fn parse_log(path: &Path, format: LogFormat) -> Result<ParseOutcome> {
    let file = File::open(path)?;
    match format {
        LogFormat::Jsonl => parse_jsonl(BufReader::new(file)),
        LogFormat::Csv => parse_csv(file),
    }
}

/// Parse JSONL (one object per line; blank lines ignored).
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<ParseOutcome> {
    let mut outcome = ParseOutcome::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(map)) => match record_from_fields(line_no, &map) {
                Ok(entry) => outcome.entries.push(entry),
                Err(rejection) => outcome.rejections.push(rejection),
            },
            Ok(_) => outcome.rejections.push(Rejection {
                line: line_no,
                field: "(record)".into(),
                reason: "expected a JSON object".into(),
            }),
            Err(e) => outcome.rejections.push(Rejection {
                line: line_no,
                field: "(record)".into(),
                reason: format!("invalid JSON: {e}"),
            }),
        }
    }
    Ok(outcome)
}

/// Parse CSV with a header row using the same field names as JSONL.
pub fn parse_csv<R: Read>(reader: R) -> Result<ParseOutcome> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = match csv_reader.headers() {
        Ok(h) => h.iter().map(str::to_owned).collect(),
        // An empty file has no header row and therefore no records.
        Err(_) => return Ok(ParseOutcome::default()),
    };

    let mut outcome = ParseOutcome::default();
    for (idx, row) in csv_reader.records().enumerate() {
        let line_no = idx + 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                outcome.rejections.push(Rejection {
                    line: line_no,
                    field: "(record)".into(),
                    reason: format!("invalid CSV row: {e}"),
                });
                continue;
            }
        };
        // Re-key by header so CSV rows flow through the same extractor as
        // JSONL objects; numeric-looking cells become JSON numbers.
        let mut map = serde_json::Map::new();
        for (name, cell) in headers.iter().zip(row.iter()) {
            let value = match serde_json::from_str::<Value>(cell) {
                Ok(v @ Value::Number(_)) => v,
                _ => Value::String(cell.to_owned()),
            };
            map.insert(name.clone(), value);
        }
        match record_from_fields(line_no, &map) {
            Ok(entry) => outcome.entries.push(entry),
            Err(rejection) => outcome.rejections.push(rejection),
        }
    }
    Ok(outcome)
}

/// Write entries as JSONL with the shared field names (disk rates in MB/s).
pub fn write_jsonl<W: Write>(entries: &[TransferLogEntry], mut writer: W) -> Result<()> {
    for entry in entries {
        let record = LogRecord::from_entry(entry);
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

struct Fields<'a> {
    line: usize,
    map: &'a serde_json::Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn reject(&self, field: &str, reason: impl Into<String>) -> Rejection {
        Rejection { line: self.line, field: field.to_owned(), reason: reason.into() }
    }

    fn raw(&self, field: &str) -> std::result::Result<&'a Value, Rejection> {
        self.map.get(field).ok_or_else(|| self.reject(field, "missing required field"))
    }

    fn f64(&self, field: &str) -> std::result::Result<f64, Rejection> {
        let v = self.raw(field)?;
        let x = v.as_f64().ok_or_else(|| self.reject(field, "expected a number"))?;
        if !x.is_finite() {
            return Err(self.reject(field, "must be finite"));
        }
        Ok(x)
    }

    fn u64(&self, field: &str) -> std::result::Result<u64, Rejection> {
        let v = self.raw(field)?;
        v.as_u64().ok_or_else(|| self.reject(field, "expected a non-negative integer"))
    }

    fn u32(&self, field: &str) -> std::result::Result<u32, Rejection> {
        let x = self.u64(field)?;
        u32::try_from(x).map_err(|_| self.reject(field, "value out of range for u32"))
    }

    fn string(&self, field: &str) -> std::result::Result<String, Rejection> {
        let v = self.raw(field)?;
        v.as_str()
            .map(str::to_owned)
            .ok_or_else(|| self.reject(field, "expected a string"))
    }
}

fn record_from_fields(
    line: usize,
    map: &serde_json::Map<String, Value>,
) -> std::result::Result<TransferLogEntry, Rejection> {
    let f = Fields { line, map };

    let ts = f.f64("ts")?;
    let src = f.string("src")?;
    let dst = f.string("dst")?;
    let bw_mbps = f.f64("bw_mbps")?;
    let rtt_ms = f.f64("rtt_ms")?;
    let tcp_buf_bytes = f.u64("tcp_buf_bytes")?;
    let disk_read_mbs = f.f64("disk_read_mbs")?;
    let disk_write_mbs = f.f64("disk_write_mbs")?;
    let avg_file_bytes = f.u64("avg_file_bytes")?;
    let num_files = f.u64("num_files")?;
    let total_bytes = f.u64("total_bytes")?;
    let cc = f.u32("cc")?;
    let p = f.u32("p")?;
    let pp = f.u32("pp")?;
    let throughput_mbps = f.f64("throughput_mbps")?;
    let contending_out_mbps = f.f64("contending_out_mbps")?;
    let contending_streams = f.u32("contending_streams")?;

    let positive = |field: &str, x: f64, what: &str| {
        if x > 0.0 {
            Ok(())
        } else {
            Err(f.reject(field, format!("{what} > 0 violated (got {x})")))
        }
    };
    positive("bw_mbps", bw_mbps, "bandwidth")?;
    positive("rtt_ms", rtt_ms, "rtt")?;
    positive("disk_read_mbs", disk_read_mbs, "disk read rate")?;
    positive("disk_write_mbs", disk_write_mbs, "disk write rate")?;
    if tcp_buf_bytes == 0 {
        return Err(f.reject("tcp_buf_bytes", "tcp buffer ≥ 1 violated (got 0)"));
    }
    if avg_file_bytes == 0 {
        return Err(f.reject("avg_file_bytes", "average file size > 0 violated (got 0)"));
    }
    if num_files == 0 {
        return Err(f.reject("num_files", "num_files ≥ 1 violated (got 0)"));
    }
    if total_bytes == 0 {
        return Err(f.reject("total_bytes", "total size > 0 violated (got 0)"));
    }
    for (field, value) in [("cc", cc), ("p", p), ("pp", pp)] {
        if value == 0 {
            return Err(f.reject(field, format!("{field} ≥ 1 violated (got 0)")));
        }
    }
    if throughput_mbps < 0.0 {
        return Err(f.reject(
            "throughput_mbps",
            format!("throughput ≥ 0 violated (got {throughput_mbps})"),
        ));
    }
    if contending_out_mbps < 0.0 {
        return Err(f.reject(
            "contending_out_mbps",
            format!("contending rate ≥ 0 violated (got {contending_out_mbps})"),
        ));
    }

    Ok(TransferLogEntry {
        timestamp: ts,
        network: NetworkProfile {
            source_id: src,
            dest_id: dst,
            bandwidth_mbps: bw_mbps,
            rtt_ms,
            tcp_buffer_bytes: tcp_buf_bytes,
            disk_read_mbps: disk_read_mbs * MBS_TO_MBPS,
            disk_write_mbps: disk_write_mbs * MBS_TO_MBPS,
        },
        dataset: DatasetProfile { avg_file_bytes, num_files, total_bytes },
        params: ParamTriple::new(cc, p, pp),
        throughput_mbps,
        contending_out_mbps,
        contending_streams,
    })
}

/// External load intensity of one log entry (clamped to [0, 1]).
pub fn load_intensity(entry: &TransferLogEntry) -> LoadIntensity {
    entry.load_intensity()
}

/// Sum of throughputs of entries whose active interval `[ts, ts + duration]`
/// overlaps the closed `window`. Partial overlaps count in full — no
/// prorating, which conservatively overestimates contention.
pub fn aggregate_contending(entries: &[TransferLogEntry], window: (f64, f64)) -> f64 {
    let (start, end) = window;
    entries
        .iter()
        .filter(|e| {
            let a = e.timestamp;
            let b = e.timestamp + e.duration_s();
            a <= end && b >= start
        })
        .map(|e| e.throughput_mbps)
        .sum()
}

/// Grouping key: transfer characteristics quantized to 6 significant digits
/// plus the exact parameter triple.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupKey {
    pub bw_mbps: f64,
    pub rtt_ms: f64,
    pub tcp_buf_bytes: f64,
    pub avg_file_bytes: f64,
    pub num_files: f64,
    pub params: ParamTriple,
}

impl GroupKey {
    fn of(entry: &TransferLogEntry) -> Self {
        GroupKey {
            bw_mbps: quantize(entry.network.bandwidth_mbps),
            rtt_ms: quantize(entry.network.rtt_ms),
            tcp_buf_bytes: quantize(entry.network.tcp_buffer_bytes as f64),
            avg_file_bytes: quantize(entry.dataset.avg_file_bytes as f64),
            num_files: quantize(entry.dataset.num_files as f64),
            params: entry.params,
        }
    }

    /// Total-order key: all features are non-negative, so their IEEE bit
    /// patterns sort numerically.
    fn ord_key(&self) -> ([u64; 5], ParamTriple) {
        (
            [
                self.bw_mbps.to_bits(),
                self.rtt_ms.to_bits(),
                self.tcp_buf_bytes.to_bits(),
                self.avg_file_bytes.to_bits(),
                self.num_files.to_bits(),
            ],
            self.params,
        )
    }
}

/// Round to 6 significant decimal digits.
pub(crate) fn quantize(x: f64) -> f64 {
    format!("{x:.5e}").parse().expect("scientific notation round-trip")
}

/// Repeated observations of one (transfer characteristics, parameters) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationGroup {
    pub key: GroupKey,
    pub samples: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// True when the group holds a single sample (σ = 0 is degenerate).
    pub low_confidence: bool,
}

/// Partition entries by grouping key and summarize each group with the
/// population mean and standard deviation.
pub fn group_observations(entries: &[TransferLogEntry]) -> Vec<ObservationGroup> {
    let mut buckets: BTreeMap<([u64; 5], ParamTriple), (GroupKey, Vec<f64>)> = BTreeMap::new();
    for entry in entries {
        let key = GroupKey::of(entry);
        buckets
            .entry(key.ord_key())
            .or_insert_with(|| (key, Vec::new()))
            .1
            .push(entry.throughput_mbps);
    }
    buckets
        .into_values()
        .map(|(key, samples)| {
            let (mean, std) = mean_std(&samples);
            let low_confidence = samples.len() == 1;
            ObservationGroup { key, samples, mean, std, low_confidence }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn entry(ts: f64, throughput: f64, total_bytes: u64) -> TransferLogEntry {
        TransferLogEntry {
            timestamp: ts,
            network: NetworkProfile {
                source_id: "src-a".into(),
                dest_id: "dst-b".into(),
                bandwidth_mbps: 10_000.0,
                rtt_ms: 40.0,
                tcp_buffer_bytes: 4 << 20,
                disk_read_mbps: 9_600.0,
                disk_write_mbps: 9_600.0,
            },
            dataset: DatasetProfile {
                avg_file_bytes: 100 << 20,
                num_files: 10,
                total_bytes,
            },
            params: ParamTriple::new(4, 4, 8),
            throughput_mbps: throughput,
            contending_out_mbps: 0.0,
            contending_streams: 0,
        }
    }

    fn record_line(ts: f64, throughput: f64) -> String {
        format!(
            "{{\"ts\": {ts}, \"src\": \"a\", \"dst\": \"b\", \"bw_mbps\": 10000, \
             \"rtt_ms\": 40, \"tcp_buf_bytes\": 4194304, \"disk_read_mbs\": 1200, \
             \"disk_write_mbs\": 1200, \"avg_file_bytes\": 104857600, \"num_files\": 10, \
             \"total_bytes\": 1048576000, \"cc\": 4, \"p\": 4, \"pp\": 8, \
             \"throughput_mbps\": {throughput}, \"contending_out_mbps\": 0, \
             \"contending_streams\": 0}}"
        )
    }

    #[test]
    fn jsonl_three_well_formed_lines_parse_cleanly() {
        let text = format!(
            "{}\n{}\n{}\n",
            record_line(1.0, 100.0),
            record_line(2.0, 200.0),
            record_line(3.0, 300.0)
        );
        let out = parse_jsonl(Cursor::new(text)).unwrap();
        assert_eq!(out.entries.len(), 3);
        assert!(out.rejections.is_empty());
        assert_eq!(out.entries[1].throughput_mbps, 200.0);
        // MB/s -> Mbps conversion happens at parse time.
        assert_eq!(out.entries[0].network.disk_read_mbps, 9_600.0);
    }

    #[test]
    fn jsonl_negative_throughput_rejected_with_line_and_field() {
        let text = format!(
            "{}\n{}\n{}\n",
            record_line(1.0, 100.0),
            record_line(2.0, -5.0),
            record_line(3.0, 300.0)
        );
        let out = parse_jsonl(Cursor::new(text)).unwrap();
        assert_eq!(out.entries.len(), 2);
        assert_eq!(out.rejections.len(), 1);
        let r = &out.rejections[0];
        assert_eq!(r.line, 2);
        assert_eq!(r.field, "throughput_mbps");
        assert!(r.reason.contains("throughput ≥ 0"), "reason: {}", r.reason);
    }

    #[test]
    fn jsonl_empty_file_yields_empty_outcome() {
        let out = parse_jsonl(Cursor::new("")).unwrap();
        assert!(out.entries.is_empty());
        assert!(out.rejections.is_empty());
    }

    #[test]
    fn jsonl_missing_field_and_malformed_line_are_rejected() {
        let mut line = record_line(1.0, 100.0);
        line = line.replace("\"rtt_ms\": 40, ", "");
        let text = format!("{line}\nnot json\n");
        let out = parse_jsonl(Cursor::new(text)).unwrap();
        assert!(out.entries.is_empty());
        assert_eq!(out.rejections.len(), 2);
        assert_eq!(out.rejections[0].field, "rtt_ms");
        assert_eq!(out.rejections[0].reason, "missing required field");
        assert_eq!(out.rejections[1].line, 2);
        assert_eq!(out.rejections[1].field, "(record)");
    }

    #[test]
    fn jsonl_unknown_fields_are_ignored() {
        let line = record_line(1.0, 100.0).replace("{\"ts\"", "{\"extra\": true, \"ts\"");
        let out = parse_jsonl(Cursor::new(line)).unwrap();
        assert_eq!(out.entries.len(), 1);
        assert!(out.rejections.is_empty());
    }

    #[test]
    fn csv_parses_same_records_as_jsonl() {
        let header = "ts,src,dst,bw_mbps,rtt_ms,tcp_buf_bytes,disk_read_mbs,disk_write_mbs,\
                      avg_file_bytes,num_files,total_bytes,cc,p,pp,throughput_mbps,\
                      contending_out_mbps,contending_streams";
        let row = "1.5,a,b,10000,40,4194304,1200,1200,104857600,10,1048576000,4,4,8,250,125,2";
        let bad = "2.5,a,b,0,40,4194304,1200,1200,104857600,10,1048576000,4,4,8,250,125,2";
        let text = format!("{header}\n{row}\n{bad}\n");
        let out = parse_csv(Cursor::new(text)).unwrap();
        assert_eq!(out.entries.len(), 1);
        let e = &out.entries[0];
        assert_eq!(e.timestamp, 1.5);
        assert_eq!(e.params, ParamTriple::new(4, 4, 8));
        assert_eq!(e.contending_out_mbps, 125.0);
        assert_eq!(out.rejections.len(), 1);
        assert_eq!(out.rejections[0].line, 2);
        assert_eq!(out.rejections[0].field, "bw_mbps");
    }

    #[test]
    fn write_jsonl_round_trips_exactly() {
        let entries = vec![entry(1.25, 123.456, 1 << 30), entry(2.5, 987.0, 2 << 30)];
        let mut buf = Vec::new();
        write_jsonl(&entries, &mut buf).unwrap();
        let out = parse_jsonl(Cursor::new(buf)).unwrap();
        assert!(out.rejections.is_empty());
        assert_eq!(out.entries.len(), 2);
        for (a, b) in entries.iter().zip(&out.entries) {
            assert_eq!(a.timestamp, b.timestamp);
            assert_eq!(a.network.bandwidth_mbps, b.network.bandwidth_mbps);
            assert_eq!(a.network.disk_read_mbps, b.network.disk_read_mbps);
            assert_eq!(a.dataset.total_bytes, b.dataset.total_bytes);
            assert_eq!(a.params, b.params);
            assert_eq!(a.throughput_mbps, b.throughput_mbps);
        }
    }

    #[test]
    fn load_intensity_matches_formula() {
        let mut e = entry(0.0, 100.0, 1 << 30);
        e.network.bandwidth_mbps = 1_000.0;
        e.contending_out_mbps = 250.0;
        assert_eq!(load_intensity(&e).value(), 0.75);
        e.contending_out_mbps = 0.0;
        assert_eq!(load_intensity(&e).value(), 1.0);
        e.contending_out_mbps = 1_000.0;
        assert_eq!(load_intensity(&e).value(), 0.0);
    }

    #[test]
    fn aggregate_contending_sums_overlapping_entries() {
        // 1 GiB at 100 Mbps runs ~85.9 s; at 150 Mbps ~57.3 s.
        let entries = vec![entry(0.0, 100.0, 1 << 30), entry(10.0, 150.0, 1 << 30)];
        assert_eq!(aggregate_contending(&entries, (20.0, 30.0)), 250.0);
        assert_eq!(aggregate_contending(&entries, (1_000.0, 2_000.0)), 0.0);
    }

    #[test]
    fn aggregate_contending_counts_partial_overlap_in_full() {
        // Entry active on [0, ~85.9]; window [80, 160] overlaps only the tail.
        let entries = vec![entry(0.0, 100.0, 1 << 30)];
        assert_eq!(aggregate_contending(&entries, (80.0, 160.0)), 100.0);
        // Touching at a single closed-interval point still counts.
        let touch_start = entries[0].timestamp + entries[0].duration_s();
        assert_eq!(aggregate_contending(&entries, (touch_start, touch_start + 5.0)), 100.0);
    }

    #[test]
    fn group_observations_summarizes_repeats() {
        let entries = vec![
            entry(0.0, 5.0, 1 << 30),
            entry(1.0, 5.0, 1 << 30),
            entry(2.0, 5.0, 1 << 30),
        ];
        let groups = group_observations(&entries);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].mean, 5.0);
        assert_eq!(groups[0].std, 0.0);
        assert!(!groups[0].low_confidence);
        assert_eq!(groups[0].samples, vec![5.0, 5.0, 5.0]);
    }

    #[test]
    fn group_observations_population_std() {
        let entries = vec![entry(0.0, 4.0, 1 << 30), entry(1.0, 6.0, 1 << 30)];
        let groups = group_observations(&entries);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].mean, 5.0);
        assert_eq!(groups[0].std, 1.0);
    }

    #[test]
    fn group_observations_single_sample_flagged() {
        let groups = group_observations(&[entry(0.0, 7.0, 1 << 30)]);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].mean, 7.0);
        assert_eq!(groups[0].std, 0.0);
        assert!(groups[0].low_confidence);
    }

    #[test]
    fn group_observations_is_a_partition() {
        let mut entries = Vec::new();
        for i in 0..12 {
            let mut e = entry(i as f64, 100.0 + i as f64, 1 << 30);
            e.params = ParamTriple::new(1 + (i % 3), 2, 4);
            if i % 2 == 0 {
                e.network.bandwidth_mbps = 5_000.0;
            }
            entries.push(e);
        }
        let groups = group_observations(&entries);
        let total: usize = groups.iter().map(|g| g.samples.len()).sum();
        assert_eq!(total, entries.len());
        // 3 param values x 2 bandwidths.
        assert_eq!(groups.len(), 6);
    }

    #[test]
    fn grouping_quantizes_features_to_six_significant_digits() {
        let mut a = entry(0.0, 10.0, 1 << 30);
        let mut b = entry(1.0, 20.0, 1 << 30);
        a.network.bandwidth_mbps = 1_000.0000001;
        b.network.bandwidth_mbps = 1_000.0000002;
        assert_eq!(group_observations(&[a.clone(), b.clone()]).len(), 1);
        b.network.bandwidth_mbps = 1_001.0;
        assert_eq!(group_observations(&[a, b]).len(), 2);
    }

    #[test]
    fn recomputing_summary_from_samples_is_bit_exact() {
        let entries = vec![
            entry(0.0, 3.5, 1 << 30),
            entry(1.0, 4.25, 1 << 30),
            entry(2.0, 9.75, 1 << 30),
        ];
        let groups = group_observations(&entries);
        let (mean, std) = mean_std(&groups[0].samples);
        assert_eq!(mean.to_bits(), groups[0].mean.to_bits());
        assert_eq!(std.to_bits(), groups[0].std.to_bits());
    }
}
