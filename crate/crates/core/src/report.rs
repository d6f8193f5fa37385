//! Latency, sustained bandwidth and cost summaries of a run, plus the JSON,
//! flat CSV and plot-data exports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::backends::BackendStats;
use crate::cost::CostReport;
use crate::driver::Measurement;
use crate::units::{Micros, BYTES_PER_GB, MICROS_PER_SECOND};
use crate::workload::Op;

pub const REPORT_SCHEMA: &str = "coldbench-report/1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no measurements to summarize")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("report encoding: {0}")]
    Json(#[from] serde_json::Error),
    #[error("report encoding: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Nearest-rank percentile of an ascending slice: the smallest value with
/// at least `p`% of samples at or below it.
pub fn nearest_rank(sorted: &[Micros], p: f64) -> Option<Micros> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: u64,
    pub mean_us: f64,
    pub p50_us: Micros,
    pub p95_us: Micros,
    pub p99_us: Micros,
    pub max_us: Micros,
}

impl LatencyStats {
    pub fn from_latencies(mut xs: Vec<Micros>) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        xs.sort_unstable();
        let sum: u128 = xs.iter().map(|&x| u128::from(x)).sum();
        let pick = |p| nearest_rank(&xs, p).expect("non-empty");
        Some(Self {
            count: xs.len() as u64,
            mean_us: sum as f64 / xs.len() as f64,
            p50_us: pick(50.0),
            p95_us: pick(95.0),
            p99_us: pick(99.0),
            max_us: *xs.last().expect("non-empty"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub all: LatencyStats,
    pub by_op: BTreeMap<String, LatencyStats>,
    pub by_priority: BTreeMap<String, LatencyStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheSummary {
    pub hits: u64,
    pub misses: u64,
    pub hit_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema: String,
    pub backend: String,
    pub seed: u64,
    pub measurements: u64,
    pub failed: u64,
    /// Successful requests only.
    pub latency: LatencySummary,
    pub first_issue_us: Micros,
    pub last_completion_us: Micros,
    pub get_bytes: u64,
    pub put_bytes: u64,
    /// GET bytes over the run window, in bytes per second.
    pub sustained_bandwidth_bytes_per_s: f64,
    pub cache: CacheSummary,
    pub mount_count: u64,
    pub backend_stats: BackendStats,
    pub cost: CostReport,
    pub config: Value,
}

impl BenchReport {
    /// Bandwidth in GB (2^30 bytes) per second.
    pub fn bandwidth_gb_per_s(&self) -> f64 {
        self.sustained_bandwidth_bytes_per_s / BYTES_PER_GB as f64
    }

    /// One line for the terminal.
    pub fn headline(&self) -> String {
        format!(
            "{}: {} requests ({} failed), p99 {:.3} s, bandwidth {:.2} MiB/s, total cost {}",
            self.backend,
            self.measurements,
            self.failed,
            self.latency.all.p99_us as f64 / MICROS_PER_SECOND as f64,
            self.sustained_bandwidth_bytes_per_s / (1u64 << 20) as f64,
            self.cost.total
        )
    }
}

/// Inputs besides the measurements themselves.
#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub backend: String,
    pub seed: u64,
    pub stats: BackendStats,
    pub cost: CostReport,
    pub config: Value,
}

fn stats_by<K: Fn(&Measurement) -> String>(
    ok: &[&Measurement],
    key: K,
) -> BTreeMap<String, LatencyStats> {
    let mut groups: BTreeMap<String, Vec<Micros>> = BTreeMap::new();
    for m in ok {
        groups.entry(key(m)).or_default().push(m.latency());
    }
    groups
        .into_iter()
        .filter_map(|(k, xs)| LatencyStats::from_latencies(xs).map(|s| (k, s)))
        .collect()
}

/// Pure function of its inputs. Fails when there is no successful request.
pub fn summarize(
    measurements: &[Measurement],
    ctx: &RunContext,
) -> Result<BenchReport, ReportError> {
    let ok: Vec<&Measurement> = measurements.iter().filter(|m| m.ok).collect();
    let all = LatencyStats::from_latencies(ok.iter().map(|m| m.latency()).collect())
        .ok_or(ReportError::Empty)?;
    let first_issue = ok.iter().map(|m| m.issue_time).min().expect("non-empty");
    let last_completion = ok
        .iter()
        .map(|m| m.completion_time)
        .max()
        .expect("non-empty");
    let bytes_of = |op| {
        ok.iter()
            .filter(|m| m.op == op)
            .map(|m| m.bytes)
            .sum::<u64>()
    };
    let get_bytes = bytes_of(Op::Get);
    let window = last_completion - first_issue;
    let bandwidth = if window == 0 {
        0.0
    } else {
        get_bytes as f64 / (window as f64 / MICROS_PER_SECOND as f64)
    };
    let s = &ctx.stats;
    let lookups = s.cache_hits + s.cache_misses;
    Ok(BenchReport {
        schema: REPORT_SCHEMA.to_owned(),
        backend: ctx.backend.clone(),
        seed: ctx.seed,
        measurements: measurements.len() as u64,
        failed: (measurements.len() - ok.len()) as u64,
        latency: LatencySummary {
            all,
            by_op: stats_by(&ok, |m| m.op.to_string()),
            by_priority: stats_by(&ok, |m| m.priority.clone()),
        },
        first_issue_us: first_issue,
        last_completion_us: last_completion,
        get_bytes,
        put_bytes: bytes_of(Op::Put),
        sustained_bandwidth_bytes_per_s: bandwidth,
        cache: CacheSummary {
            hits: s.cache_hits,
            misses: s.cache_misses,
            hit_rate: if lookups == 0 {
                0.0
            } else {
                s.cache_hits as f64 / lookups as f64
            },
        },
        mount_count: s.tape_mounts,
        backend_stats: s.clone(),
        cost: ctx.cost.clone(),
        config: ctx.config.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    PlotData,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "plot-data" => Ok(Format::PlotData),
            other => Err(format!("unknown format {other:?} (json, csv, plot-data)")),
        }
    }
}

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const LATENCY_CDF_CSV: &str = "latency_cdf.csv";
pub const BANDWIDTH_CSV: &str = "bandwidth_timeline.csv";
pub const COST_BREAKDOWN_CSV: &str = "cost_breakdown.csv";

pub fn to_json(report: &BenchReport) -> Result<String, ReportError> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// Every scalar leaf of the JSON form as a dotted key.
pub fn flatten(report: &BenchReport) -> Result<Vec<(String, String)>, ReportError> {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let join = |k: &str| {
            if prefix.is_empty() {
                k.to_owned()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(map) => map.iter().for_each(|(k, v)| walk(&join(k), v, out)),
            Value::Array(items) => items
                .iter()
                .enumerate()
                .for_each(|(i, v)| walk(&join(&i.to_string()), v, out)),
            Value::String(s) => out.push((prefix.to_owned(), s.clone())),
            Value::Null => out.push((prefix.to_owned(), String::new())),
            other => out.push((prefix.to_owned(), other.to_string())),
        }
    }
    let mut out = Vec::new();
    walk("", &serde_json::to_value(report)?, &mut out);
    Ok(out)
}

/// Rows of the cost-breakdown bar: storage versus access share in percent.
pub fn cost_breakdown_rows(cost: &CostReport) -> Vec<(String, f64)> {
    if cost.total.cents() == 0 {
        return vec![("storage".into(), 0.0), ("retrieval".into(), 0.0)];
    }
    let storage = 100.0 * cost.storage_fraction();
    vec![
        ("storage".into(), storage),
        ("retrieval".into(), 100.0 - storage),
    ]
}

/// `(latency µs, cumulative fraction)` for every successful request.
pub fn latency_cdf(measurements: &[Measurement]) -> Vec<(Micros, f64)> {
    let mut xs: Vec<Micros> = measurements
        .iter()
        .filter(|m| m.ok)
        .map(Measurement::latency)
        .collect();
    xs.sort_unstable();
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x, (i + 1) as f64 / n))
        .collect()
}

/// GET bytes per second in fixed windows, attributed to the completion
/// window. Returns `(window end µs, bytes/s)`.
pub fn bandwidth_timeline(measurements: &[Measurement], window_us: Micros) -> Vec<(Micros, f64)> {
    let gets: Vec<&Measurement> = measurements
        .iter()
        .filter(|m| m.ok && m.op == Op::Get)
        .collect();
    let Some(start) = gets.iter().map(|m| m.issue_time).min() else {
        return Vec::new();
    };
    let end = gets
        .iter()
        .map(|m| m.completion_time)
        .max()
        .expect("non-empty");
    let window_us = window_us.max(1);
    let slots = ((end - start) / window_us + 1) as usize;
    let mut bytes = vec![0u64; slots];
    for m in gets {
        bytes[((m.completion_time - start) / window_us) as usize] += m.bytes;
    }
    let secs = window_us as f64 / MICROS_PER_SECOND as f64;
    bytes
        .into_iter()
        .enumerate()
        .map(|(i, b)| (start + (i as u64 + 1) * window_us, b as f64 / secs))
        .collect()
}

fn write_pairs<A: ToString, B: ToString>(
    path: &Path,
    header: [&str; 2],
    rows: &[(A, B)],
) -> Result<(), ReportError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes the report in `format` under `dir` and returns the files written.
/// Plot data needs the measurements; the timeline uses `window_us` buckets.
pub fn emit(
    report: &BenchReport,
    measurements: &[Measurement],
    format: Format,
    dir: &Path,
    window_us: Micros,
) -> Result<Vec<std::path::PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    match format {
        Format::Json => {
            let path = dir.join(REPORT_JSON);
            std::fs::write(&path, to_json(report)?).map_err(io_err(&path))?;
            Ok(vec![path])
        }
        Format::Csv => {
            let path = dir.join(REPORT_CSV);
            write_pairs(&path, ["key", "value"], &flatten(report)?)?;
            Ok(vec![path])
        }
        Format::PlotData => {
            let cdf = dir.join(LATENCY_CDF_CSV);
            write_pairs(&cdf, ["latency_us", "fraction"], &latency_cdf(measurements))?;
            let bw = dir.join(BANDWIDTH_CSV);
            write_pairs(
                &bw,
                ["time_us", "bytes_per_s"],
                &bandwidth_timeline(measurements, window_us),
            )?;
            let cost = dir.join(COST_BREAKDOWN_CSV);
            write_pairs(
                &cost,
                ["component", "percent"],
                &cost_breakdown_rows(&report.cost),
            )?;
            Ok(vec![cdf, bw, cost])
        }
    }
}
