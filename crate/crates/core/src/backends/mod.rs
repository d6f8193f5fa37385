//! Simulated cold storage systems behind one GET/PUT interface.
//!
//! Backends are passive: the driver submits requests at a virtual time and
//! then repeatedly asks for [`StorageApi::next_wakeup`] and calls
//! [`StorageApi::advance`] to collect completions. Each backend keeps its own
//! typed [`EventQueue`](crate::sim::EventQueue), so composed backends
//! (cache over tape, hybrid over cache/tape and cloud) stay deterministic.

mod cache;
mod cloud;
mod hybrid;
mod join;
mod tape;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CacheBackend, CacheConfig, CachePolicy, WriteMode};
pub use cloud::{CloudBackend, CloudTierConfig, CostLedger, LatencyModel};
pub use hybrid::{HybridBackend, HybridConfig, LocalConfig, ScrubTarget};
pub use tape::{TapeAssignment, TapeBackend, TapeConfig, TapeScheduler, UnloadPolicy};

use crate::cost::{CostError, CostReport, PricingCatalog};
use crate::datagen::{FileId, FileRecord};
use crate::units::Micros;

/// Caller-chosen request identifier echoed back in the completion.
pub type Tag = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("unknown file {0}")]
    UnknownFile(FileId),
    #[error("file {0} already stored")]
    DuplicateFile(FileId),
    #[error("backend already preloaded")]
    AlreadyPreloaded,
    #[error("file {file} ({size} bytes) exceeds cache capacity {capacity} and bypass is off")]
    FileTooLarge {
        file: FileId,
        size: u64,
        capacity: u64,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("{0} is not supported by this backend")]
    Unsupported(&'static str),
    #[error("invalid backend config: {0}")]
    Config(String),
}

/// A finished request.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub tag: Tag,
    pub at: Micros,
    /// Bytes moved: the stored size for GETs, the written size for PUTs.
    pub bytes: u64,
    /// Cloud charges attributable to this request, in cents.
    pub cost_delta_cents: f64,
}

/// Outcome of a full read-back for integrity checking.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScrubReport {
    pub files: u64,
    pub bytes: u64,
    pub duration_us: Micros,
    pub retrieval_cost_cents: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendStats {
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub destaged: u64,
    pub tape_mounts: u64,
    pub tape_unmounts: u64,
    /// Largest number of tapes mounted at the same instant.
    pub max_tapes_mounted: u64,
    pub cloud_gets: u64,
    pub cloud_fallbacks: u64,
    pub scrubs: u64,
    pub scrub_bytes: u64,
}

impl BackendStats {
    pub fn merge(&mut self, other: &BackendStats) {
        self.cache_hits += other.cache_hits;
        self.cache_misses += other.cache_misses;
        self.destaged += other.destaged;
        self.tape_mounts += other.tape_mounts;
        self.tape_unmounts += other.tape_unmounts;
        self.max_tapes_mounted = self.max_tapes_mounted.max(other.max_tapes_mounted);
        self.cloud_gets += other.cloud_gets;
        self.cloud_fallbacks += other.cloud_fallbacks;
        self.scrubs += other.scrubs;
        self.scrub_bytes += other.scrub_bytes;
    }
}

/// The GET/PUT surface every simulated system exposes.
///
/// Requests must be submitted in non-decreasing time order, and the caller
/// must have drained every wakeup at or before `now` first.
pub trait StorageApi {
    fn name(&self) -> &str;

    /// Makes `files` resident without charging time or retrieval cost.
    fn preload(&mut self, files: &[FileRecord]) -> Result<(), BackendError>;

    fn get(
        &mut self,
        now: Micros,
        tag: Tag,
        file: FileId,
        priority: &str,
    ) -> Result<(), BackendError> {
        self.batch_get(now, tag, &[file], priority)
    }

    /// Completes once, when the last file of the batch is delivered.
    fn batch_get(
        &mut self,
        now: Micros,
        tag: Tag,
        files: &[FileId],
        priority: &str,
    ) -> Result<(), BackendError>;

    fn put(
        &mut self,
        now: Micros,
        tag: Tag,
        file: &FileRecord,
        priority: &str,
    ) -> Result<(), BackendError>;

    fn next_wakeup(&mut self) -> Option<Micros>;

    /// Processes internal events due at or before `now`.
    fn advance(&mut self, now: Micros) -> Vec<Completion>;

    fn stats(&self) -> BackendStats;

    /// Charges accrued up to `now` (storage integrated over virtual time).
    fn cost_report(&self, now: Micros) -> Result<CostReport, CostError>;

    /// Reads the whole archive back for verification.
    fn scrub(&mut self, _now: Micros) -> Result<ScrubReport, BackendError> {
        Err(BackendError::Unsupported("scrub"))
    }

    /// Size of a stored file, if known.
    fn size_of(&self, file: FileId) -> Option<u64>;
}

/// Backend section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendConfig {
    Tape(TapeConfig),
    #[serde(rename = "cache+tape")]
    CacheTape {
        #[serde(default)]
        cache: CacheConfig,
        #[serde(default)]
        tape: TapeConfig,
    },
    Cloud(CloudTierConfig),
    Hybrid(HybridConfig),
}

impl BackendConfig {
    /// Parses the short forms `tape`, `cache+tape`, `cloud:<tier>` and
    /// `hybrid` with default settings.
    pub fn from_short(spec: &str, catalog: &PricingCatalog) -> Result<Self, BackendError> {
        let cloud = |tier: &str| {
            catalog
                .tier(tier)
                .map(|p| CloudTierConfig::for_pricing(p.clone()))
                .map_err(|e| BackendError::Config(e.to_string()))
        };
        match spec {
            "tape" => Ok(BackendConfig::Tape(TapeConfig::default())),
            "cache+tape" => Ok(BackendConfig::CacheTape {
                cache: CacheConfig::default(),
                tape: TapeConfig::default(),
            }),
            "hybrid" => Ok(BackendConfig::Hybrid(HybridConfig::new(
                LocalConfig::default(),
                vec![cloud("archive")?],
            ))),
            other => match other.strip_prefix("cloud:") {
                Some(tier) => Ok(BackendConfig::Cloud(cloud(tier)?)),
                None => Err(BackendError::Config(format!(
                    "unknown backend {other:?} (expected tape, cache+tape, cloud:<tier> or hybrid)"
                ))),
            },
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        match self {
            BackendConfig::Tape(t) => t.validate(),
            BackendConfig::CacheTape { cache, tape } => {
                cache.validate()?;
                tape.validate()
            }
            BackendConfig::Cloud(c) => c.validate(),
            BackendConfig::Hybrid(h) => h.validate(),
        }
    }

    /// Instantiates the backend; `seed` feeds its random streams.
    pub fn build(&self, seed: u64) -> Result<Box<dyn StorageApi>, BackendError> {
        self.validate()?;
        Ok(match self {
            BackendConfig::Tape(t) => Box::new(TapeBackend::new(t.clone(), seed)?),
            BackendConfig::CacheTape { cache, tape } => Box::new(CacheBackend::new(
                cache.clone(),
                Box::new(TapeBackend::new(tape.clone(), seed)?),
            )?),
            BackendConfig::Cloud(c) => Box::new(CloudBackend::new(c.clone(), seed)?),
            BackendConfig::Hybrid(h) => Box::new(HybridBackend::new(h.clone(), seed)?),
        })
    }
}
