//! Dataset generator.
//!
//! Produces file populations (id, size, mission, static/dynamic set) whose
//! sizes follow a user-defined, typically heavily skewed, distribution. Only
//! metadata is generated; [`materialize_payloads`] can write real files with
//! seeded bytes when a backend needs them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::RngStream;
use crate::units::{GIB, KIB, MIB};
use crate::zipf::Zipf;

pub const MANIFEST_FORMAT: &str = "coldbench-manifest/1";
pub const MANIFEST_CSV: &str = "manifest.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Upper bound used for an open-ended top bucket unless configured.
pub const DEFAULT_OPEN_TOP_CAP: u64 = 4 * GIB;
/// Smallest size drawn from a histogram bucket that starts at zero.
pub const MIN_FILE_SIZE: u64 = KIB;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("malformed distribution: {0}")]
    Distribution(String),
    #[error("invalid dataset spec: {0}")]
    Spec(String),
    #[error("unknown dataset preset {0:?}")]
    UnknownPreset(String),
    #[error("manifest I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("manifest JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest is inconsistent: {0}")]
    Inconsistent(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatagenError + '_ {
    move |source| DatagenError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Half-open size range `[lo, hi)`; `hi = None` means open-ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBucket {
    pub lo: u64,
    pub hi: Option<u64>,
    pub weight: f64,
}

impl SizeBucket {
    pub fn mib(lo: u64, hi: Option<u64>, weight: f64) -> Self {
        Self {
            lo: lo * MIB,
            hi: hi.map(|h| h * MIB),
            weight,
        }
    }

    /// Effective sampling range after applying the minimum size and the
    /// open-top cap.
    pub fn range(&self, open_top_cap: u64) -> (u64, u64) {
        (self.lo.max(MIN_FILE_SIZE), self.hi.unwrap_or(open_top_cap))
    }

    pub fn contains(&self, size: u64) -> bool {
        size >= self.lo && self.hi.is_none_or(|hi| size < hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FileSizeDistribution {
    /// Bucket picked by weight, size log-uniform inside the bucket.
    Histogram {
        buckets: Vec<SizeBucket>,
        #[serde(default = "default_open_top_cap")]
        open_top_cap: u64,
    },
    /// `ln(bytes) ~ Normal(mu, sigma)`.
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    Fixed {
        bytes: u64,
    },
}

fn default_open_top_cap() -> u64 {
    DEFAULT_OPEN_TOP_CAP
}

impl FileSizeDistribution {
    /// File sizes of the main product library of a national earth
    /// observation archive, in ten power-of-two MiB buckets.
    pub fn dsda_main() -> Self {
        const COUNTS: [f64; 10] = [
            77_540_744.0,
            4_719_466.0,
            2_387_125.0,
            2_095_864.0,
            2_748_315.0,
            1_616_620.0,
            1_991_281.0,
            993_066.0,
            1_586_496.0,
            184_138.0,
        ];
        let edges = [0, 8, 16, 32, 64, 128, 256, 512, 1024, 2048];
        let buckets = edges
            .iter()
            .enumerate()
            .map(|(i, &lo)| SizeBucket::mib(lo, edges.get(i + 1).copied(), COUNTS[i]))
            .collect();
        FileSizeDistribution::Histogram {
            buckets,
            open_top_cap: DEFAULT_OPEN_TOP_CAP,
        }
    }

    pub fn preset(name: &str) -> Result<Self, DatagenError> {
        match name {
            "dsda-main" => Ok(Self::dsda_main()),
            _ => Err(DatagenError::UnknownPreset(name.to_owned())),
        }
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |m: String| Err(DatagenError::Distribution(m));
        match self {
            FileSizeDistribution::Fixed { bytes } => {
                if *bytes == 0 {
                    return bad("fixed size must be >= 1 byte".into());
                }
            }
            FileSizeDistribution::Lognormal { mu, sigma } => {
                if !mu.is_finite() || !sigma.is_finite() || *sigma < 0.0 {
                    return bad(format!(
                        "lognormal needs finite mu and sigma >= 0, got ({mu}, {sigma})"
                    ));
                }
            }
            FileSizeDistribution::Histogram {
                buckets,
                open_top_cap,
            } => {
                if buckets.is_empty() {
                    return bad("histogram has no buckets".into());
                }
                for (i, b) in buckets.iter().enumerate() {
                    if !(b.weight.is_finite() && b.weight > 0.0) {
                        return bad(format!("bucket {i} weight must be > 0, got {}", b.weight));
                    }
                    match b.hi {
                        Some(hi) if hi <= b.lo => {
                            return bad(format!("bucket {i} is empty: [{}, {hi})", b.lo))
                        }
                        None if i + 1 != buckets.len() => {
                            return bad(format!(
                                "only the last bucket may be open-ended (bucket {i})"
                            ))
                        }
                        _ => {}
                    }
                    if let Some(next) = buckets.get(i + 1) {
                        if b.hi.is_some_and(|hi| next.lo < hi) {
                            return bad(format!(
                                "buckets {i} and {} overlap or are unordered",
                                i + 1
                            ));
                        }
                    }
                    let (lo, hi) = b.range(*open_top_cap);
                    if hi <= lo {
                        return bad(format!("bucket {i} has no sizes above {MIN_FILE_SIZE} bytes / below the open-top cap"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn buckets(&self) -> Option<&[SizeBucket]> {
        match self {
            FileSizeDistribution::Histogram { buckets, .. } => Some(buckets),
            _ => None,
        }
    }

    /// Bucket probabilities (`weight / total`).
    pub fn bucket_probabilities(&self) -> Option<Vec<f64>> {
        let buckets = self.buckets()?;
        let total: f64 = buckets.iter().map(|b| b.weight).sum();
        Some(buckets.iter().map(|b| b.weight / total).collect())
    }

    pub fn bucket_of(&self, size: u64) -> Option<usize> {
        self.buckets()?.iter().position(|b| b.contains(size))
    }

    pub fn sampler(&self) -> Result<SizeSampler, DatagenError> {
        self.validate()?;
        let kind = match self {
            FileSizeDistribution::Fixed { bytes } => SamplerKind::Fixed(*bytes),
            FileSizeDistribution::Lognormal { mu, sigma } => SamplerKind::Lognormal(
                LogNormal::new(*mu, *sigma)
                    .map_err(|e| DatagenError::Distribution(e.to_string()))?,
            ),
            FileSizeDistribution::Histogram {
                buckets,
                open_top_cap,
            } => SamplerKind::Histogram {
                index: WeightedIndex::new(buckets.iter().map(|b| b.weight))
                    .map_err(|e| DatagenError::Distribution(e.to_string()))?,
                ranges: buckets.iter().map(|b| b.range(*open_top_cap)).collect(),
            },
        };
        Ok(SizeSampler { kind })
    }
}

/// Prepared sampler for a validated distribution.
#[derive(Debug, Clone)]
pub struct SizeSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Fixed(u64),
    Lognormal(LogNormal<f64>),
    Histogram {
        index: WeightedIndex<f64>,
        ranges: Vec<(u64, u64)>,
    },
}

impl SizeSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.kind {
            SamplerKind::Fixed(bytes) => *bytes,
            SamplerKind::Lognormal(dist) => {
                let x = dist.sample(rng).round();
                if x < 1.0 {
                    1
                } else if x >= u64::MAX as f64 {
                    u64::MAX
                } else {
                    x as u64
                }
            }
            SamplerKind::Histogram { index, ranges } => {
                let (lo, hi) = ranges[index.sample(rng)];
                log_uniform(rng, lo, hi)
            }
        }
    }
}

/// Integer drawn log-uniformly from `[lo, hi)`.
fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: u64, hi: u64) -> u64 {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let u: f64 = rng.random();
    let x = (a + u * (b - a)).exp().floor() as u64;
    x.clamp(lo, hi - 1)
}

/// Draws a single file size.
pub fn sample_file_size(dist: &FileSizeDistribution, rng: &RngStream) -> Result<u64, DatagenError> {
    Ok(dist.sampler()?.sample(&mut rng.rng()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FileId(pub u64);

impl std::fmt::Display for FileId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "f{:010}", self.0)
    }
}

impl std::str::FromStr for FileId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('f').unwrap_or(s).parse().map(FileId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileSet {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    #[serde(with = "file_id_text")]
    pub file_id: FileId,
    pub size_bytes: u64,
    pub mission: u32,
    pub set: FileSet,
}

mod file_id_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::FileId;

    pub fn serialize<S: Serializer>(id: &FileId, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(id)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<FileId, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub total_files: u64,
    pub static_fraction: f64,
    pub distribution: FileSizeDistribution,
    pub mission_count: u32,
    pub mission_skew_s: f64,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(total_files: u64, distribution: FileSizeDistribution, seed: u64) -> Self {
        Self {
            total_files,
            static_fraction: 1.0,
            distribution,
            mission_count: 1,
            mission_skew_s: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.total_files == 0 {
            return Err(DatagenError::Spec("total_files must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.static_fraction) {
            return Err(DatagenError::Spec(format!(
                "static_fraction must lie in [0, 1], got {}",
                self.static_fraction
            )));
        }
        if self.mission_count == 0 {
            return Err(DatagenError::Spec("mission_count must be >= 1".into()));
        }
        if self.mission_skew_s.is_nan() || self.mission_skew_s < 0.0 {
            return Err(DatagenError::Spec(format!(
                "mission_skew_s must be >= 0, got {}",
                self.mission_skew_s
            )));
        }
        self.distribution.validate()
    }

    pub fn static_count(&self) -> u64 {
        ((self.static_fraction * self.total_files as f64).ceil() as u64).min(self.total_files)
    }

    /// Expected number of files per histogram bucket.
    pub fn expected_bucket_counts(&self) -> Option<Vec<f64>> {
        let probs = self.distribution.bucket_probabilities()?;
        Some(probs.iter().map(|p| p * self.total_files as f64).collect())
    }
}

/// A spec producing `target_file_count` files with the same bucket
/// proportions as `dist`.
pub fn scale_distribution(
    dist: &FileSizeDistribution,
    target_file_count: u64,
) -> Result<DatasetSpec, DatagenError> {
    dist.validate()?;
    let non_empty = dist.buckets().map_or(1, |b| b.len()) as u64;
    if target_file_count < non_empty {
        return Err(DatagenError::Spec(format!(
            "cannot scale {non_empty} buckets down to {target_file_count} files"
        )));
    }
    Ok(DatasetSpec::new(target_file_count, dist.clone(), 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSummary {
    pub file_count: u64,
    pub static_count: u64,
    pub dynamic_count: u64,
    pub total_bytes: u64,
    pub mean_size: f64,
    pub max_size: u64,
    /// Files per histogram bucket; empty for parametric distributions.
    pub bucket_counts: Vec<u64>,
    pub mission_counts: Vec<u64>,
}

impl ManifestSummary {
    pub fn compute(spec: &DatasetSpec, records: &[FileRecord]) -> Self {
        let total_bytes: u64 = records.iter().map(|r| r.size_bytes).sum();
        let n = records.len() as u64;
        let mut bucket_counts = vec![0; spec.distribution.buckets().map_or(0, |b| b.len())];
        let mut mission_counts = vec![0; spec.mission_count as usize];
        for r in records {
            if let Some(b) = spec.distribution.bucket_of(r.size_bytes) {
                bucket_counts[b] += 1;
            }
            if let Some(m) = mission_counts.get_mut(r.mission as usize) {
                *m += 1;
            }
        }
        let static_count = records.iter().filter(|r| r.set == FileSet::Static).count() as u64;
        Self {
            file_count: n,
            static_count,
            dynamic_count: n - static_count,
            total_bytes,
            mean_size: if n == 0 {
                0.0
            } else {
                total_bytes as f64 / n as f64
            },
            max_size: records.iter().map(|r| r.size_bytes).max().unwrap_or(0),
            bucket_counts,
            mission_counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub spec: DatasetSpec,
    pub records: Vec<FileRecord>,
    pub summary: ManifestSummary,
}

/// Header written next to the record CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestHeader {
    format: String,
    records: String,
    spec: DatasetSpec,
    summary: ManifestSummary,
}

impl DatasetManifest {
    pub fn static_files(&self) -> impl Iterator<Item = &FileRecord> {
        self.records.iter().filter(|r| r.set == FileSet::Static)
    }

    pub fn dynamic_files(&self) -> impl Iterator<Item = &FileRecord> {
        self.records.iter().filter(|r| r.set == FileSet::Dynamic)
    }

    pub fn write(&self, dir: &Path) -> Result<(), DatagenError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv_path = dir.join(MANIFEST_CSV);
        let mut w = csv::Writer::from_path(&csv_path)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush().map_err(io_err(&csv_path))?;
        let header = ManifestHeader {
            format: MANIFEST_FORMAT.to_owned(),
            records: MANIFEST_CSV.to_owned(),
            spec: self.spec.clone(),
            summary: self.summary.clone(),
        };
        let json_path = dir.join(MANIFEST_JSON);
        let text = serde_json::to_string_pretty(&header)?;
        std::fs::write(&json_path, text + "\n").map_err(io_err(&json_path))
    }

    pub fn read(dir: &Path) -> Result<Self, DatagenError> {
        let json_path = dir.join(MANIFEST_JSON);
        let text = std::fs::read_to_string(&json_path).map_err(io_err(&json_path))?;
        let header: ManifestHeader = serde_json::from_str(&text)?;
        if header.format != MANIFEST_FORMAT {
            return Err(DatagenError::Inconsistent(format!(
                "unsupported manifest format {:?}",
                header.format
            )));
        }
        let mut r = csv::Reader::from_path(dir.join(&header.records))?;
        let records = r.deserialize().collect::<Result<Vec<FileRecord>, _>>()?;
        let summary = ManifestSummary::compute(&header.spec, &records);
        if summary != header.summary {
            return Err(DatagenError::Inconsistent(
                "summary does not match records".into(),
            ));
        }
        Ok(Self {
            spec: header.spec,
            records,
            summary,
        })
    }
}

/// Generates the file population described by `spec`.
///
/// The first `ceil(static_fraction * total)` records form the static set.
/// Missions are drawn from Zipf(`mission_skew_s`) over `mission_count`.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<DatasetManifest, DatagenError> {
    spec.validate()?;
    let root = RngStream::new(spec.seed, "datagen");
    let mut size_rng = root.substream("size").rng();
    let mut mission_rng = root.substream("mission").rng();
    let sizes = spec.distribution.sampler()?;
    let missions = Zipf::new(spec.mission_count as usize, spec.mission_skew_s)
        .ok_or_else(|| DatagenError::Spec("invalid mission Zipf parameters".into()))?;
    let static_count = spec.static_count();
    let records: Vec<FileRecord> = (0..spec.total_files)
        .map(|i| FileRecord {
            file_id: FileId(i),
            size_bytes: sizes.sample(&mut size_rng),
            mission: missions.sample(&mut mission_rng) as u32,
            set: if i < static_count {
                FileSet::Static
            } else {
                FileSet::Dynamic
            },
        })
        .collect();
    let summary = ManifestSummary::compute(spec, &records);
    Ok(DatasetManifest {
        spec: spec.clone(),
        records,
        summary,
    })
}

/// Writes every file of the manifest under `dir`, filled with seeded
/// pseudo-random bytes. Refuses manifests larger than `max_total_bytes`.
pub fn materialize_payloads(
    manifest: &DatasetManifest,
    dir: &Path,
    max_total_bytes: u64,
) -> Result<(), DatagenError> {
    if manifest.summary.total_bytes > max_total_bytes {
        return Err(DatagenError::Spec(format!(
            "manifest holds {} bytes, above the {max_total_bytes}-byte payload limit",
            manifest.summary.total_bytes
        )));
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut rng = RngStream::new(manifest.spec.seed, "payload").rng();
    let mut buf = vec![0u8; 64 * KIB as usize];
    for r in &manifest.records {
        let path = dir.join(r.file_id.to_string());
        let mut out = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        let mut left = r.size_bytes;
        while left > 0 {
            let n = left.min(buf.len() as u64) as usize;
            rng.fill_bytes(&mut buf[..n]);
            out.write_all(&buf[..n]).map_err(io_err(&path))?;
            left -= n as u64;
        }
        out.flush().map_err(io_err(&path))?;
    }
    Ok(())
}
