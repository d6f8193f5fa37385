//! Request stream generation.
//!
//! Reads pick a mission by Zipf rank, then a file inside the mission with a
//! recency bias: a `temporal_window` share of reads goes to the newest tenth
//! of the mission's readable files. A `never_read_fraction` of the static set
//! is reserved up front and never targeted. Writes ingest dynamic-set files,
//! each exactly once, and make them readable from then on.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{DatasetManifest, FileId, FileRecord, FileSet};
use crate::sim::RngStream;
use crate::units::{Micros, MIB, MICROS_PER_SECOND};
use crate::zipf::Zipf;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("invalid workload spec: {0}")]
    Spec(String),
    #[error("manifest has no files")]
    EmptyManifest,
    #[error("no readable files: {0}")]
    NoReadableFiles(String),
    #[error("unknown workload preset {0:?}")]
    UnknownPreset(String),
    #[error("malformed request stream line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("request stream I/O: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Get,
    Put,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Get => "get",
            Op::Put => "put",
        })
    }
}

impl FromStr for Op {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "get" => Ok(Op::Get),
            "put" => Ok(Op::Put),
            other => Err(format!("unknown op {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Arrival {
    /// Next request issues `think_time_us` after the previous one completes.
    Closed { think_time_us: Micros },
    /// Poisson arrivals, independent of completions.
    Open { rate_per_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSize {
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadSpec {
    pub request_count: u64,
    pub read_fraction: f64,
    pub batch_fraction: f64,
    pub batch_size: BatchSize,
    pub priority_weights: BTreeMap<String, f64>,
    /// Zipf exponent over mission ranks.
    pub access_skew_s: f64,
    /// Share of reads that target the newest decile of a mission's files.
    pub temporal_window: f64,
    pub never_read_fraction: f64,
    pub arrival: Arrival,
    /// Restrict reads to files strictly smaller than this.
    pub max_file_size: Option<u64>,
    /// Restrict reads to files at least this large.
    pub min_file_size: Option<u64>,
    pub seed: u64,
}

pub const PRIORITY_LOW: &str = "low";
pub const PRIORITY_NORMAL: &str = "normal";
pub const PRIORITY_URGENT: &str = "urgent";

pub fn default_priorities() -> BTreeMap<String, f64> {
    BTreeMap::from([
        (PRIORITY_LOW.to_owned(), 0.2),
        (PRIORITY_NORMAL.to_owned(), 0.7),
        (PRIORITY_URGENT.to_owned(), 0.1),
    ])
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            request_count: 1000,
            read_fraction: 0.9,
            batch_fraction: 0.0,
            batch_size: BatchSize { min: 2, max: 16 },
            priority_weights: default_priorities(),
            access_skew_s: 1.0,
            temporal_window: 0.5,
            never_read_fraction: 0.0,
            arrival: Arrival::Closed { think_time_us: 0 },
            max_file_size: None,
            min_file_size: None,
            seed: 0,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        let bad = |m: String| Err(WorkloadError::Spec(m));
        for (name, v) in [
            ("read_fraction", self.read_fraction),
            ("batch_fraction", self.batch_fraction),
            ("temporal_window", self.temporal_window),
            ("never_read_fraction", self.never_read_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.batch_size.min < 2 || self.batch_size.max < self.batch_size.min {
            return bad(format!(
                "batch size range must satisfy 2 <= min <= max, got {}..{}",
                self.batch_size.min, self.batch_size.max
            ));
        }
        if self
            .priority_weights
            .values()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return bad("priority weights must be finite and >= 0".into());
        }
        let weight_sum: f64 = self.priority_weights.values().sum();
        if weight_sum.is_nan() || weight_sum <= 0.0 {
            return bad("priority weights must have a positive sum".into());
        }
        if self.access_skew_s.is_nan() || self.access_skew_s < 0.0 {
            return bad(format!(
                "access_skew_s must be >= 0, got {}",
                self.access_skew_s
            ));
        }
        if let Arrival::Open { rate_per_s } = self.arrival {
            if !(rate_per_s.is_finite() && rate_per_s > 0.0) {
                return bad(format!("open arrival rate must be > 0, got {rate_per_s}"));
            }
        }
        if self.never_read_fraction >= 1.0 && self.read_fraction > 0.0 {
            return bad("never_read_fraction = 1 leaves nothing to read".into());
        }
        Ok(())
    }

    fn admits(&self, f: &FileRecord) -> bool {
        self.max_file_size.is_none_or(|max| f.size_bytes < max)
            && self.min_file_size.is_none_or(|min| f.size_bytes >= min)
    }
}

/// Workload mixes targeting one known bottleneck each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChokePoint {
    /// Heavily skewed mission popularity, single GETs.
    Skew,
    /// Every request is a large batch GET.
    Batch,
    /// Mixed priority classes with rare urgent requests.
    Priority,
    /// Reads restricted to files below 8 MiB.
    SmallFile,
}

pub const SMALL_FILE_LIMIT: u64 = 8 * MIB;

impl ChokePoint {
    pub const ALL: [ChokePoint; 4] = [
        ChokePoint::Skew,
        ChokePoint::Batch,
        ChokePoint::Priority,
        ChokePoint::SmallFile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChokePoint::Skew => "cp1-skew",
            ChokePoint::Batch => "cp2-batch",
            ChokePoint::Priority => "cp3-priority",
            ChokePoint::SmallFile => "cp4-smallfile",
        }
    }

    pub fn apply(self, spec: &mut WorkloadSpec) {
        match self {
            ChokePoint::Skew => {
                spec.access_skew_s = 2.0;
                spec.read_fraction = 1.0;
                spec.batch_fraction = 0.0;
            }
            ChokePoint::Batch => {
                spec.read_fraction = 1.0;
                spec.batch_fraction = 1.0;
                spec.batch_size = BatchSize {
                    min: 100,
                    max: 1000,
                };
            }
            ChokePoint::Priority => {
                spec.priority_weights = BTreeMap::from([
                    (PRIORITY_LOW.to_owned(), 0.3),
                    (PRIORITY_NORMAL.to_owned(), 0.65),
                    (PRIORITY_URGENT.to_owned(), 0.05),
                ]);
            }
            ChokePoint::SmallFile => {
                spec.read_fraction = 1.0;
                spec.batch_fraction = 0.0;
                spec.max_file_size = Some(SMALL_FILE_LIMIT);
            }
        }
    }

    pub fn spec(self, base: WorkloadSpec) -> WorkloadSpec {
        let mut spec = base;
        self.apply(&mut spec);
        spec
    }
}

impl FromStr for ChokePoint {
    type Err = WorkloadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChokePoint::ALL
            .into_iter()
            .find(|cp| cp.name() == s)
            .ok_or_else(|| WorkloadError::UnknownPreset(s.to_owned()))
    }
}

impl fmt::Display for ChokePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Looks up a choke-point preset and applies it to `base`.
pub fn preset(name: &str, base: WorkloadSpec) -> Result<WorkloadSpec, WorkloadError> {
    Ok(name.parse::<ChokePoint>()?.spec(base))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub request_id: u64,
    pub op: Op,
    pub file_ids: Vec<FileId>,
    pub priority: String,
    /// Microseconds from stream start for open arrivals, the request's
    /// ordinal for closed ones.
    pub issue_offset: u64,
}

impl Request {
    pub fn is_batch(&self) -> bool {
        self.file_ids.len() > 1
    }
}

/// Files reserved as never read for this manifest and spec. Shared by every
/// session so the reservation holds for the run as a whole.
pub fn never_read_pool(manifest: &DatasetManifest, spec: &WorkloadSpec) -> HashSet<FileId> {
    let mut ids: Vec<FileId> = manifest.static_files().map(|f| f.file_id).collect();
    let reserve = ((spec.never_read_fraction * ids.len() as f64).ceil() as usize).min(ids.len());
    let mut rng = RngStream::new(spec.seed, "workload/never-read").rng();
    ids.shuffle(&mut rng);
    ids.truncate(reserve);
    ids.into_iter().collect()
}

struct Generator<'a> {
    spec: &'a WorkloadSpec,
    rng: ChaCha8Rng,
    /// Readable files per mission, in ingestion order.
    pools: Vec<Vec<FileId>>,
    missions: Option<Zipf>,
    mission_index: Vec<usize>,
    pending_puts: std::vec::IntoIter<&'a FileRecord>,
    priorities: Vec<&'a str>,
    priority_index: WeightedIndex<f64>,
    arrival_gap: Option<Exp<f64>>,
    clock: f64,
    next_id: u64,
}

impl<'a> Generator<'a> {
    fn new(
        manifest: &'a DatasetManifest,
        spec: &'a WorkloadSpec,
        stream: RngStream,
        dynamic: Vec<&'a FileRecord>,
    ) -> Result<Self, WorkloadError> {
        spec.validate()?;
        if manifest.records.is_empty() {
            return Err(WorkloadError::EmptyManifest);
        }
        let reserved = never_read_pool(manifest, spec);
        let mission_slots = manifest
            .records
            .iter()
            .map(|r| r.mission as usize + 1)
            .max()
            .unwrap_or(1);
        let mut pools = vec![Vec::new(); mission_slots];
        for f in manifest.static_files() {
            if !reserved.contains(&f.file_id) && spec.admits(f) {
                pools[f.mission as usize].push(f.file_id);
            }
        }
        let priorities: Vec<&str> = spec.priority_weights.keys().map(String::as_str).collect();
        let priority_index = WeightedIndex::new(spec.priority_weights.values().copied())
            .map_err(|e| WorkloadError::Spec(e.to_string()))?;
        let arrival_gap = match spec.arrival {
            Arrival::Open { rate_per_s } => Some(
                Exp::new(rate_per_s / MICROS_PER_SECOND as f64)
                    .map_err(|e| WorkloadError::Spec(e.to_string()))?,
            ),
            Arrival::Closed { .. } => None,
        };
        let mut g = Self {
            spec,
            rng: stream.rng(),
            pools,
            missions: None,
            mission_index: Vec::new(),
            pending_puts: dynamic.into_iter(),
            priorities,
            priority_index,
            arrival_gap,
            clock: 0.0,
            next_id: 0,
        };
        g.rebuild_missions();
        Ok(g)
    }

    fn rebuild_missions(&mut self) {
        self.mission_index = (0..self.pools.len())
            .filter(|&m| !self.pools[m].is_empty())
            .collect();
        self.missions = Zipf::from_ranks(
            self.mission_index.iter().map(|&m| (m + 1) as f64),
            self.spec.access_skew_s,
        );
    }

    fn has_readable(&self) -> bool {
        self.missions.is_some()
    }

    fn issue_offset(&mut self) -> u64 {
        match &self.arrival_gap {
            Some(gap) => {
                self.clock += gap.sample(&mut self.rng);
                self.clock.round() as u64
            }
            None => self.next_id,
        }
    }

    fn priority(&mut self) -> String {
        self.priorities[self.priority_index.sample(&mut self.rng)].to_owned()
    }

    fn finish(&mut self, op: Op, file_ids: Vec<FileId>) -> Request {
        let priority = self.priority();
        let issue_offset = self.issue_offset();
        let request_id = self.next_id;
        self.next_id += 1;
        Request {
            request_id,
            op,
            file_ids,
            priority,
            issue_offset,
        }
    }

    fn read(&mut self) -> Result<Request, WorkloadError> {
        let zipf = self.missions.as_ref().ok_or_else(|| {
            WorkloadError::NoReadableFiles(
                "every file is reserved, filtered out, or not yet ingested".into(),
            )
        })?;
        let mission = self.mission_index[zipf.sample(&mut self.rng)];
        let batch = self.rng.random_bool(self.spec.batch_fraction);
        let pool_len = self.pools[mission].len();
        let start = self.pick_in_pool(pool_len);
        let files = if batch {
            let BatchSize { min, max } = self.spec.batch_size;
            let want = (self.rng.random_range(min..=max) as usize).min(pool_len);
            let start = start.min(pool_len - want);
            self.pools[mission][start..start + want].to_vec()
        } else {
            vec![self.pools[mission][start]]
        };
        Ok(self.finish(Op::Get, files))
    }

    /// Index into a pool of `len` files with the recency bias applied.
    fn pick_in_pool(&mut self, len: usize) -> usize {
        let newest = len.div_ceil(10);
        let older = len - newest;
        if older == 0 || self.rng.random_bool(self.spec.temporal_window) {
            older + self.rng.random_range(0..newest)
        } else {
            self.rng.random_range(0..older)
        }
    }

    fn write(&mut self) -> Option<Request> {
        let file = self.pending_puts.next()?;
        if self.spec.admits(file) {
            let pool = &mut self.pools[file.mission as usize];
            pool.push(file.file_id);
            if pool.len() == 1 {
                self.rebuild_missions();
            }
        }
        Some(self.finish(Op::Put, vec![file.file_id]))
    }

    /// A read, or a write when no file is readable yet.
    fn read_or_write(&mut self) -> Result<Request, WorkloadError> {
        if !self.has_readable() {
            if let Some(put) = self.write() {
                return Ok(put);
            }
        }
        self.read()
    }
}

fn session_dynamic(
    manifest: &DatasetManifest,
    session: usize,
    sessions: usize,
) -> Vec<&FileRecord> {
    manifest
        .dynamic_files()
        .enumerate()
        .filter(|(i, _)| i % sessions == session)
        .map(|(_, f)| f)
        .collect()
}

/// Generates `request_count` requests; each is a read with probability
/// `read_fraction`, otherwise a PUT of the next not-yet-ingested dynamic
/// file (or a read once the dynamic set is exhausted).
pub fn generate_workload(
    manifest: &DatasetManifest,
    spec: &WorkloadSpec,
) -> Result<Vec<Request>, WorkloadError> {
    session_workload(manifest, spec, 0, 1)
}

/// Stream for one of `sessions` client sessions. Sessions draw from their
/// own RNG sub-stream and ingest disjoint slices of the dynamic set.
pub fn session_workload(
    manifest: &DatasetManifest,
    spec: &WorkloadSpec,
    session: usize,
    sessions: usize,
) -> Result<Vec<Request>, WorkloadError> {
    let stream = RngStream::new(spec.seed, "workload").substream(session);
    let dynamic = session_dynamic(manifest, session, sessions.max(1));
    let mut g = Generator::new(manifest, spec, stream, dynamic)?;
    let mut out = Vec::with_capacity(spec.request_count as usize);
    for _ in 0..spec.request_count {
        let is_read = g.rng.random_bool(spec.read_fraction);
        let req = if is_read {
            g.read_or_write()?
        } else {
            match g.write() {
                Some(put) => put,
                None => g.read()?,
            }
        };
        out.push(req);
    }
    Ok(out)
}

/// Stream in which every dynamic file is PUT exactly once, spread evenly at
/// the configured write share. The stream grows beyond `request_count` when
/// that is needed to fit all PUTs.
pub fn interleave_ingest(
    manifest: &DatasetManifest,
    spec: &WorkloadSpec,
) -> Result<Vec<Request>, WorkloadError> {
    session_ingest(manifest, spec, 0, 1)
}

pub fn session_ingest(
    manifest: &DatasetManifest,
    spec: &WorkloadSpec,
    session: usize,
    sessions: usize,
) -> Result<Vec<Request>, WorkloadError> {
    let dynamic = session_dynamic(manifest, session, sessions.max(1));
    let writes = dynamic.len() as u64;
    let write_share = 1.0 - spec.read_fraction;
    if writes > 0 && write_share <= 0.0 {
        tracing::warn!(
            dynamic_files = writes,
            "write share is 0; dynamic-set files will not be ingested"
        );
        let stream = RngStream::new(spec.seed, "workload").substream(session);
        let mut g = Generator::new(manifest, spec, stream, Vec::new())?;
        return (0..spec.request_count).map(|_| g.read()).collect();
    }
    let total = if writes == 0 {
        spec.request_count
    } else {
        spec.request_count
            .max((writes as f64 / write_share).ceil() as u64)
            .max(writes)
    };
    let stream = RngStream::new(spec.seed, "workload").substream(session);
    let mut g = Generator::new(manifest, spec, stream, dynamic)?;
    let mut out = Vec::with_capacity(total as usize);
    for i in 0..total {
        let is_write = (i + 1) * writes / total > i * writes / total;
        // A read slot with nothing readable yet pulls a PUT forward, which
        // turns a later write slot into a read.
        let req = if is_write {
            match g.write() {
                Some(put) => put,
                None => g.read()?,
            }
        } else {
            g.read_or_write()?
        };
        out.push(req);
    }
    Ok(out)
}

const STREAM_HEADER: [&str; 5] = [
    "request_id",
    "op",
    "priority",
    "issue_offset_us",
    "file_ids",
];

/// Writes a stream as CSV; batch file ids are `;`-separated.
pub fn write_requests<W: Write>(writer: W, requests: &[Request]) -> Result<(), WorkloadError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(STREAM_HEADER)?;
    for r in requests {
        let ids = r
            .file_ids
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.request_id.to_string(),
            r.op.to_string(),
            r.priority.clone(),
            r.issue_offset.to_string(),
            ids,
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_requests<R: Read>(reader: R) -> Result<Vec<Request>, WorkloadError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let parse = |reason: String| WorkloadError::Parse { line, reason };
        if rec.len() != STREAM_HEADER.len() {
            return Err(parse(format!("expected 5 fields, got {}", rec.len())));
        }
        let file_ids = rec[4]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<FileId>().map_err(|e| parse(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(Request {
            request_id: rec[0].parse().map_err(|e| parse(format!("{e}")))?,
            op: rec[1].parse().map_err(parse)?,
            priority: rec[2].to_owned(),
            issue_offset: rec[3].parse().map_err(|e| parse(format!("{e}")))?,
            file_ids,
        });
    }
    Ok(out)
}

/// Number of dynamic files `manifest` holds that `requests` never PUT.
pub fn unused_dynamic(manifest: &DatasetManifest, requests: &[Request]) -> usize {
    let put: HashSet<FileId> = requests
        .iter()
        .filter(|r| r.op == Op::Put)
        .flat_map(|r| r.file_ids.iter().copied())
        .collect();
    manifest
        .records
        .iter()
        .filter(|f| f.set == FileSet::Dynamic && !put.contains(&f.file_id))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_dataset, DatasetSpec, FileSizeDistribution};

    fn manifest(files: u64, static_fraction: f64, missions: u32) -> DatasetManifest {
        let mut spec = DatasetSpec::new(files, FileSizeDistribution::dsda_main(), 11);
        spec.static_fraction = static_fraction;
        spec.mission_count = missions;
        generate_dataset(&spec).unwrap()
    }

    #[test]
    fn all_single_gets() {
        let m = manifest(500, 1.0, 3);
        let spec = WorkloadSpec {
            read_fraction: 1.0,
            batch_fraction: 0.0,
            request_count: 300,
            ..Default::default()
        };
        let reqs = generate_workload(&m, &spec).unwrap();
        assert_eq!(reqs.len(), 300);
        assert!(reqs
            .iter()
            .all(|r| r.op == Op::Get && r.file_ids.len() == 1));
    }

    #[test]
    fn nothing_readable_is_rejected() {
        let m = manifest(50, 1.0, 1);
        let spec = WorkloadSpec {
            never_read_fraction: 1.0,
            read_fraction: 0.5,
            ..Default::default()
        };
        assert!(matches!(
            generate_workload(&m, &spec),
            Err(WorkloadError::Spec(_))
        ));
    }

    #[test]
    fn filters_can_empty_the_pool() {
        let m = generate_dataset(&DatasetSpec::new(
            20,
            FileSizeDistribution::Fixed { bytes: 100 },
            1,
        ))
        .unwrap();
        let spec = WorkloadSpec {
            min_file_size: Some(1000),
            read_fraction: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            generate_workload(&m, &spec),
            Err(WorkloadError::NoReadableFiles(_))
        ));
    }

    #[test]
    fn invalid_specs_rejected() {
        let cases = [
            WorkloadSpec {
                read_fraction: 1.5,
                ..Default::default()
            },
            WorkloadSpec {
                batch_size: BatchSize { min: 1, max: 4 },
                ..Default::default()
            },
            WorkloadSpec {
                batch_size: BatchSize { min: 5, max: 4 },
                ..Default::default()
            },
            WorkloadSpec {
                priority_weights: BTreeMap::from([("a".into(), 0.0)]),
                ..Default::default()
            },
            WorkloadSpec {
                access_skew_s: -1.0,
                ..Default::default()
            },
            WorkloadSpec {
                arrival: Arrival::Open { rate_per_s: 0.0 },
                ..Default::default()
            },
        ];
        for spec in cases {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
    }

    #[test]
    fn presets_by_name() {
        for cp in ChokePoint::ALL {
            assert_eq!(cp.name().parse::<ChokePoint>().unwrap(), cp);
            cp.spec(WorkloadSpec::default()).validate().unwrap();
        }
        assert!(matches!(
            preset("cp9-nope", WorkloadSpec::default()),
            Err(WorkloadError::UnknownPreset(_))
        ));
    }

    #[test]
    fn batch_preset_issues_only_batches() {
        let m = manifest(3000, 1.0, 2);
        let spec = preset(
            "cp2-batch",
            WorkloadSpec {
                request_count: 50,
                ..Default::default()
            },
        )
        .unwrap();
        let reqs = generate_workload(&m, &spec).unwrap();
        assert!(reqs
            .iter()
            .all(|r| r.op == Op::Get && r.file_ids.len() >= 100));
        for r in &reqs {
            let unique: HashSet<_> = r.file_ids.iter().collect();
            assert_eq!(unique.len(), r.file_ids.len());
        }
    }

    #[test]
    fn small_file_preset_targets_small_files() {
        let m = manifest(2000, 1.0, 4);
        let spec = preset(
            "cp4-smallfile",
            WorkloadSpec {
                request_count: 2000,
                ..Default::default()
            },
        )
        .unwrap();
        let sizes: BTreeMap<FileId, u64> = m
            .records
            .iter()
            .map(|r| (r.file_id, r.size_bytes))
            .collect();
        let reqs = generate_workload(&m, &spec).unwrap();
        assert!(reqs
            .iter()
            .flat_map(|r| &r.file_ids)
            .all(|id| sizes[id] < SMALL_FILE_LIMIT));
    }

    #[test]
    fn extreme_skew_hits_one_mission() {
        let m = manifest(1000, 1.0, 5);
        let mut spec = preset(
            "cp1-skew",
            WorkloadSpec {
                request_count: 1000,
                ..Default::default()
            },
        )
        .unwrap();
        spec.access_skew_s = f64::INFINITY;
        let mission: BTreeMap<FileId, u32> =
            m.records.iter().map(|r| (r.file_id, r.mission)).collect();
        let reqs = generate_workload(&m, &spec).unwrap();
        let first = mission[&reqs[0].file_ids[0]];
        assert_eq!(first, 0);
        assert!(reqs.iter().all(|r| mission[&r.file_ids[0]] == first));
    }

    #[test]
    fn puts_cover_dynamic_set_before_reads() {
        let m = manifest(100, 0.9, 2);
        let spec = WorkloadSpec {
            read_fraction: 0.7,
            request_count: 20,
            ..Default::default()
        };
        let reqs = interleave_ingest(&m, &spec).unwrap();
        let puts: Vec<FileId> = reqs
            .iter()
            .filter(|r| r.op == Op::Put)
            .map(|r| r.file_ids[0])
            .collect();
        assert_eq!(puts.len(), 10);
        let unique: HashSet<_> = puts.iter().collect();
        assert_eq!(unique.len(), 10);
        assert_eq!(unused_dynamic(&m, &reqs), 0);
        // causality: a dynamic file is read only after its PUT
        let mut ingested = HashSet::new();
        for r in &reqs {
            match r.op {
                Op::Put => {
                    ingested.insert(r.file_ids[0]);
                }
                Op::Get => {
                    for id in &r.file_ids {
                        if id.0 >= 90 {
                            assert!(ingested.contains(id));
                        }
                    }
                }
            }
        }
        assert_eq!(reqs, interleave_ingest(&m, &spec).unwrap());
    }

    #[test]
    fn zero_write_share_leaves_dynamic_unused() {
        let m = manifest(100, 0.9, 2);
        let spec = WorkloadSpec {
            read_fraction: 1.0,
            request_count: 20,
            ..Default::default()
        };
        let reqs = interleave_ingest(&m, &spec).unwrap();
        assert_eq!(reqs.len(), 20);
        assert_eq!(unused_dynamic(&m, &reqs), 10);
    }

    #[test]
    fn sessions_ingest_disjoint_dynamic_files() {
        let m = manifest(100, 0.8, 2);
        let spec = WorkloadSpec {
            read_fraction: 0.5,
            request_count: 40,
            ..Default::default()
        };
        let mut seen = HashSet::new();
        for s in 0..3 {
            for r in session_ingest(&m, &spec, s, 3).unwrap() {
                if r.op == Op::Put {
                    assert!(seen.insert(r.file_ids[0]));
                }
            }
        }
        assert_eq!(seen.len(), 20);
    }

    #[test]
    fn open_arrivals_are_increasing() {
        let m = manifest(100, 1.0, 2);
        let spec = WorkloadSpec {
            arrival: Arrival::Open { rate_per_s: 10.0 },
            request_count: 200,
            ..Default::default()
        };
        let reqs = generate_workload(&m, &spec).unwrap();
        assert!(reqs
            .windows(2)
            .all(|w| w[0].issue_offset <= w[1].issue_offset));
        // mean gap ~ 100 ms
        let mean = reqs.last().unwrap().issue_offset as f64 / 200.0;
        assert!((mean - 100_000.0).abs() < 20_000.0, "{mean}");
    }

    #[test]
    fn malformed_stream_lines_rejected() {
        let text = "request_id,op,priority,issue_offset_us,file_ids\n1,del,low,0,f1\n";
        assert!(matches!(
            read_requests(text.as_bytes()),
            Err(WorkloadError::Parse { line: 2, .. })
        ));
    }
}
