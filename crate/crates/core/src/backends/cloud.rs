//! Cloud object-storage tier with per-request latency and a cost ledger.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::{BackendError, BackendStats, Completion, ScrubReport, StorageApi, Tag};
use crate::cost::{CostError, CostReport, Money, NominalLatency, TierPricing};
use crate::datagen::{FileId, FileRecord};
use crate::sim::{EventQueue, RngStream};
use crate::units::{
    millis, transfer_time, Micros, BYTES_PER_GB, MICROS_PER_HOUR, MICROS_PER_MONTH,
};

/// First-byte latency of a GET.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum LatencyModel {
    /// Always the tier's nominal latency.
    Constant,
    /// Log-normal with the nominal latency as its median.
    LogNormal { sigma: f64 },
    /// Offline tier: uniform rehydration delay, then the transfer.
    Rehydration { min_us: Micros, max_us: Micros },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudTierConfig {
    pub pricing: TierPricing,
    pub latency_model: LatencyModel,
    /// Shared link cap in MiB/s; unlimited when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_mb_s: Option<f64>,
}

impl CloudTierConfig {
    /// Default latency model for the tier's latency class.
    pub fn for_pricing(pricing: TierPricing) -> Self {
        let latency_model = match pricing.nominal_latency {
            NominalLatency::Hours => LatencyModel::Rehydration {
                min_us: MICROS_PER_HOUR,
                max_us: 15 * MICROS_PER_HOUR,
            },
            NominalLatency::Millis(_) => LatencyModel::Constant,
        };
        Self {
            pricing,
            latency_model,
            bandwidth_mb_s: None,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        let err = |m: String| {
            Err(BackendError::Config(format!(
                "cloud {}: {m}",
                self.pricing.tier_name
            )))
        };
        if let Err(e) = self.pricing.validate() {
            return err(e.to_string());
        }
        match (self.latency_model, self.pricing.nominal_latency) {
            (LatencyModel::Rehydration { min_us, max_us }, NominalLatency::Hours) => {
                if min_us > max_us {
                    return err("rehydration min exceeds max".into());
                }
            }
            (LatencyModel::Rehydration { .. }, NominalLatency::Millis(_)) => {
                return err("rehydration model on an online tier".into())
            }
            (_, NominalLatency::Hours) => {
                return err("offline tier needs the rehydration model".into())
            }
            (LatencyModel::LogNormal { sigma }, _) if !(sigma.is_finite() && sigma >= 0.0) => {
                return err(format!("lognormal sigma {sigma} must be >= 0"))
            }
            _ => {}
        }
        if let Some(bw) = self.bandwidth_mb_s {
            if !(bw.is_finite() && bw > 0.0) {
                return err(format!("bandwidth {bw} must be > 0"));
            }
        }
        Ok(())
    }

    fn nominal_us(&self) -> Micros {
        match self.pricing.nominal_latency {
            NominalLatency::Millis(ms) => millis(ms),
            NominalLatency::Hours => 0,
        }
    }
}

/// Accrued usage of one cloud tier. Storage is integrated over virtual time
/// in byte-microseconds so it stays exact over long runs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostLedger {
    stored_bytes: u64,
    byte_us: u128,
    last_update: Micros,
    pub read_bytes: u64,
    pub get_requests: u64,
}

impl CostLedger {
    fn settle(&mut self, now: Micros) {
        if now > self.last_update {
            self.byte_us += u128::from(self.stored_bytes) * u128::from(now - self.last_update);
            self.last_update = now;
        }
    }

    pub fn store(&mut self, now: Micros, bytes: u64) {
        self.settle(now);
        self.stored_bytes += bytes;
    }

    pub fn read(&mut self, bytes: u64) {
        self.read_bytes += bytes;
        self.get_requests += 1;
    }

    pub fn stored_bytes(&self) -> u64 {
        self.stored_bytes
    }

    /// GB-months stored up to `now`.
    pub fn gb_months(&self, now: Micros) -> f64 {
        let mut byte_us = self.byte_us;
        if now > self.last_update {
            byte_us += u128::from(self.stored_bytes) * u128::from(now - self.last_update);
        }
        byte_us as f64 / (BYTES_PER_GB as f64 * MICROS_PER_MONTH as f64)
    }

    /// Same component rounding as [`crate::cost::total_cost`].
    pub fn report(&self, pricing: &TierPricing, now: Micros) -> Result<CostReport, CostError> {
        let storage = pricing.storage_per_gb_month * self.gb_months(now);
        let retrieval = pricing.retrieval_per_gb * (self.read_bytes as f64 / BYTES_PER_GB as f64);
        let requests = pricing.per_get() * self.get_requests as f64;
        CostReport::from_components(
            Money::from_dollars(storage)?,
            Money::from_dollars(retrieval)?,
            Money::from_dollars(requests)?,
            Money::ZERO,
        )
    }
}

pub(crate) fn get_cost_cents(pricing: &TierPricing, bytes: u64) -> f64 {
    100.0 * (pricing.retrieval_per_gb * bytes as f64 / BYTES_PER_GB as f64 + pricing.per_get())
}

#[derive(Debug)]
struct Done {
    tag: Tag,
    bytes: u64,
    cost_cents: f64,
}

pub struct CloudBackend {
    cfg: CloudTierConfig,
    files: HashMap<FileId, u64>,
    ledger: CostLedger,
    events: EventQueue<Done>,
    link_free_at: Micros,
    rng: ChaCha8Rng,
    lognormal: Option<LogNormal<f64>>,
    stats: BackendStats,
    name: String,
}

impl CloudBackend {
    pub fn new(cfg: CloudTierConfig, seed: u64) -> Result<Self, BackendError> {
        cfg.validate()?;
        let lognormal = match cfg.latency_model {
            LatencyModel::LogNormal { sigma } => Some(
                LogNormal::new((cfg.nominal_us().max(1) as f64).ln(), sigma)
                    .map_err(|e| BackendError::Config(e.to_string()))?,
            ),
            _ => None,
        };
        let name = format!("cloud:{}", cfg.pricing.tier_name);
        let rng = RngStream::new(seed, format!("backend/{name}")).rng();
        Ok(Self {
            cfg,
            files: HashMap::new(),
            ledger: CostLedger::default(),
            events: EventQueue::new(),
            link_free_at: 0,
            rng,
            lognormal,
            stats: BackendStats::default(),
            name,
        })
    }

    pub fn config(&self) -> &CloudTierConfig {
        &self.cfg
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn contains(&self, file: FileId) -> bool {
        self.files.contains_key(&file)
    }

    fn first_byte(&mut self) -> Micros {
        match self.cfg.latency_model {
            LatencyModel::Constant => self.cfg.nominal_us(),
            LatencyModel::LogNormal { .. } => {
                let d = self.lognormal.expect("built with the model");
                d.sample(&mut self.rng).round() as Micros
            }
            LatencyModel::Rehydration { min_us, max_us } => self.rng.random_range(min_us..=max_us),
        }
    }

    /// Moves `bytes` once the first byte is available, sharing the link.
    fn transfer_done(&mut self, ready: Micros, bytes: u64) -> Micros {
        match self.cfg.bandwidth_mb_s {
            None => ready,
            Some(bw) => {
                let start = ready.max(self.link_free_at);
                self.link_free_at = start + transfer_time(bytes, bw);
                self.link_free_at
            }
        }
    }

    /// Stores a copy without a completion, as a replica upload would.
    pub(crate) fn store(&mut self, now: Micros, file: &FileRecord) -> Result<(), BackendError> {
        if self.files.contains_key(&file.file_id) {
            return Err(BackendError::DuplicateFile(file.file_id));
        }
        self.files.insert(file.file_id, file.size_bytes);
        self.ledger.store(now, file.size_bytes);
        Ok(())
    }
}

impl StorageApi for CloudBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn preload(&mut self, files: &[FileRecord]) -> Result<(), BackendError> {
        for f in files {
            self.store(0, f)?;
        }
        Ok(())
    }

    fn batch_get(
        &mut self,
        now: Micros,
        tag: Tag,
        files: &[FileId],
        _priority: &str,
    ) -> Result<(), BackendError> {
        if files.is_empty() {
            return Err(BackendError::EmptyBatch);
        }
        let sizes = files
            .iter()
            .map(|f| {
                self.files
                    .get(f)
                    .copied()
                    .ok_or(BackendError::UnknownFile(*f))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut at = now;
        let mut bytes = 0;
        let mut cost_cents = 0.0;
        for size in sizes {
            let ready = now + self.first_byte();
            at = at.max(self.transfer_done(ready, size));
            bytes += size;
            cost_cents += get_cost_cents(&self.cfg.pricing, size);
            self.ledger.read(size);
            self.stats.cloud_gets += 1;
        }
        self.events
            .schedule(
                at,
                Done {
                    tag,
                    bytes,
                    cost_cents,
                },
            )
            .expect("completion not in the past");
        Ok(())
    }

    fn put(
        &mut self,
        now: Micros,
        tag: Tag,
        file: &FileRecord,
        _priority: &str,
    ) -> Result<(), BackendError> {
        self.store(now, file)?;
        let ready = now + self.cfg.nominal_us();
        let at = self.transfer_done(ready, file.size_bytes);
        self.events
            .schedule(
                at,
                Done {
                    tag,
                    bytes: file.size_bytes,
                    cost_cents: 0.0,
                },
            )
            .expect("completion not in the past");
        Ok(())
    }

    fn next_wakeup(&mut self) -> Option<Micros> {
        self.events.peek_time()
    }

    fn advance(&mut self, now: Micros) -> Vec<Completion> {
        let mut out = Vec::new();
        while let Some(ev) = self.events.pop_until(now) {
            out.push(Completion {
                tag: ev.action.tag,
                at: ev.fire_at,
                bytes: ev.action.bytes,
                cost_delta_cents: ev.action.cost_cents,
            });
        }
        out
    }

    fn stats(&self) -> BackendStats {
        self.stats.clone()
    }

    fn cost_report(&self, now: Micros) -> Result<CostReport, CostError> {
        self.ledger.report(&self.cfg.pricing, now)
    }

    /// Reads every stored object back, paying retrieval and request charges.
    fn scrub(&mut self, now: Micros) -> Result<ScrubReport, BackendError> {
        let mut ids: Vec<_> = self.files.keys().copied().collect();
        ids.sort_unstable();
        let mut report = ScrubReport::default();
        let mut end = now;
        for id in ids {
            let size = self.files[&id];
            let ready = now + self.first_byte();
            end = end.max(self.transfer_done(ready, size));
            self.ledger.read(size);
            report.files += 1;
            report.bytes += size;
        }
        report.duration_us = end - now;
        report.retrieval_cost_cents =
            100.0 * self.cfg.pricing.retrieval_per_gb * report.bytes as f64 / BYTES_PER_GB as f64;
        self.stats.scrubs += 1;
        self.stats.scrub_bytes += report.bytes;
        Ok(report)
    }

    fn size_of(&self, file: FileId) -> Option<u64> {
        self.files.get(&file).copied()
    }
}
