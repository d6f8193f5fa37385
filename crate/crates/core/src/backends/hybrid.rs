//! Two-tier archive: a local cache+tape copy serves all reads, one or more
//! cloud copies exist for disaster recovery.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::cache::{CacheBackend, CacheConfig};
use super::cloud::{CloudBackend, CloudTierConfig};
use super::join::{Joiner, TagMap};
use super::tape::{TapeBackend, TapeConfig};
use super::{BackendError, BackendStats, Completion, ScrubReport, StorageApi, Tag};
use crate::cost::{CostError, CostReport};
use crate::datagen::{FileId, FileRecord};
use crate::sim::EventQueue;
use crate::units::Micros;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalConfig {
    pub tape: TapeConfig,
    /// Disk cache in front of the tape library; none reads tape directly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<CacheConfig>,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            tape: TapeConfig::default(),
            cache: Some(CacheConfig::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScrubTarget {
    #[default]
    Local,
    Cloud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    #[serde(default)]
    pub local: LocalConfig,
    pub cloud_copies: Vec<CloudTierConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scrub_interval_us: Option<Micros>,
    #[serde(default)]
    pub scrub_target: ScrubTarget,
}

impl HybridConfig {
    pub fn new(local: LocalConfig, cloud_copies: Vec<CloudTierConfig>) -> Self {
        Self {
            local,
            cloud_copies,
            scrub_interval_us: None,
            scrub_target: ScrubTarget::Local,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.cloud_copies.is_empty() {
            return Err(BackendError::Config(
                "hybrid: at least one cloud copy required".into(),
            ));
        }
        if self.scrub_interval_us == Some(0) {
            return Err(BackendError::Config(
                "hybrid: scrub interval must be > 0".into(),
            ));
        }
        self.local.tape.validate()?;
        if let Some(c) = &self.local.cache {
            c.validate()?;
        }
        self.cloud_copies
            .iter()
            .try_for_each(CloudTierConfig::validate)
    }
}

#[derive(Debug)]
enum Route {
    Local(Tag),
    Fallback(Tag),
}

#[derive(Debug)]
struct ScrubDue;

pub struct HybridBackend {
    cfg: HybridConfig,
    local: Box<dyn StorageApi>,
    clouds: Vec<CloudBackend>,
    lost: HashSet<FileId>,
    local_routes: TagMap<Route>,
    cloud_routes: TagMap<Route>,
    joiner: Joiner,
    scrubs: EventQueue<ScrubDue>,
    scrub_log: Vec<(Micros, ScrubReport)>,
    stats: BackendStats,
}

impl HybridBackend {
    pub fn new(cfg: HybridConfig, seed: u64) -> Result<Self, BackendError> {
        cfg.validate()?;
        let tape: Box<dyn StorageApi> = Box::new(TapeBackend::new(cfg.local.tape.clone(), seed)?);
        let local: Box<dyn StorageApi> = match &cfg.local.cache {
            Some(c) => Box::new(CacheBackend::new(c.clone(), tape)?),
            None => tape,
        };
        let clouds = cfg
            .cloud_copies
            .iter()
            .map(|c| CloudBackend::new(c.clone(), seed))
            .collect::<Result<Vec<_>, _>>()?;
        let mut scrubs = EventQueue::new();
        if let Some(every) = cfg.scrub_interval_us {
            scrubs.schedule_in(every, ScrubDue);
        }
        Ok(Self {
            cfg,
            local,
            clouds,
            lost: HashSet::new(),
            local_routes: TagMap::default(),
            cloud_routes: TagMap::default(),
            joiner: Joiner::default(),
            scrubs,
            scrub_log: Vec::new(),
            stats: BackendStats::default(),
        })
    }

    /// Marks the local copy of `file` as destroyed; later reads fall back to
    /// the first cloud copy.
    pub fn inject_local_loss(&mut self, file: FileId) -> Result<(), BackendError> {
        if self.local.size_of(file).is_none() {
            return Err(BackendError::UnknownFile(file));
        }
        self.lost.insert(file);
        Ok(())
    }

    pub fn clouds(&self) -> &[CloudBackend] {
        &self.clouds
    }

    /// Scrubs performed so far with their start times.
    pub fn scrub_log(&self) -> &[(Micros, ScrubReport)] {
        &self.scrub_log
    }

    /// Scrubs `target` regardless of the configured default.
    pub fn scrub_on(
        &mut self,
        now: Micros,
        target: ScrubTarget,
    ) -> Result<ScrubReport, BackendError> {
        let report = match target {
            ScrubTarget::Local => self.local.scrub(now)?,
            ScrubTarget::Cloud => self.clouds[0].scrub(now)?,
        };
        self.scrub_log.push((now, report.clone()));
        Ok(report)
    }

    fn finish(&mut self, tag: Tag, c: &Completion) -> Option<Completion> {
        self.joiner
            .finish_part(tag, c.at, c.bytes, c.cost_delta_cents)
    }
}

impl StorageApi for HybridBackend {
    fn name(&self) -> &str {
        "hybrid"
    }

    fn preload(&mut self, files: &[FileRecord]) -> Result<(), BackendError> {
        self.local.preload(files)?;
        for c in &mut self.clouds {
            c.preload(files)?;
        }
        Ok(())
    }

    fn batch_get(
        &mut self,
        now: Micros,
        tag: Tag,
        files: &[FileId],
        priority: &str,
    ) -> Result<(), BackendError> {
        if files.is_empty() {
            return Err(BackendError::EmptyBatch);
        }
        let (lost, local): (Vec<FileId>, Vec<FileId>) =
            files.iter().partition(|f| self.lost.contains(f));
        for f in &local {
            if self.local.size_of(*f).is_none() {
                return Err(BackendError::UnknownFile(*f));
            }
        }
        for f in &lost {
            if !self.clouds[0].contains(*f) {
                return Err(BackendError::UnknownFile(*f));
            }
        }
        if !local.is_empty() {
            self.local
                .batch_get(now, self.local_routes.peek_next(), &local, priority)?;
            self.local_routes.insert(Route::Local(tag));
        }
        if !lost.is_empty() {
            self.clouds[0].batch_get(now, self.cloud_routes.peek_next(), &lost, priority)?;
            self.cloud_routes.insert(Route::Fallback(tag));
            self.stats.cloud_fallbacks += lost.len() as u64;
        }
        self.joiner.open(
            tag,
            usize::from(!local.is_empty()) + usize::from(!lost.is_empty()),
        );
        Ok(())
    }

    fn put(
        &mut self,
        now: Micros,
        tag: Tag,
        file: &FileRecord,
        priority: &str,
    ) -> Result<(), BackendError> {
        if self.size_of(file.file_id).is_some() {
            return Err(BackendError::DuplicateFile(file.file_id));
        }
        self.local
            .put(now, self.local_routes.peek_next(), file, priority)?;
        self.local_routes.insert(Route::Local(tag));
        self.joiner.open(tag, 1);
        for c in &mut self.clouds {
            c.store(now, file)?;
        }
        Ok(())
    }

    fn next_wakeup(&mut self) -> Option<Micros> {
        let mut t = [self.local.next_wakeup(), self.scrubs.peek_time()]
            .into_iter()
            .flatten()
            .min();
        for c in &mut self.clouds {
            if let Some(ct) = c.next_wakeup() {
                t = Some(t.map_or(ct, |x| x.min(ct)));
            }
        }
        t
    }

    fn advance(&mut self, now: Micros) -> Vec<Completion> {
        let mut out = Vec::new();
        for c in self.local.advance(now) {
            if let Some(Route::Local(tag)) = self.local_routes.take(c.tag) {
                out.extend(self.finish(tag, &c));
            }
        }
        for i in 0..self.clouds.len() {
            for c in self.clouds[i].advance(now) {
                if i == 0 {
                    if let Some(Route::Fallback(tag)) = self.cloud_routes.take(c.tag) {
                        out.extend(self.finish(tag, &c));
                    }
                }
            }
        }
        while let Some(ev) = self.scrubs.pop_until(now) {
            let target = self.cfg.scrub_target;
            if let Err(e) = self.scrub_on(ev.fire_at, target) {
                tracing::warn!("periodic scrub failed: {e}");
            }
            if let Some(every) = self.cfg.scrub_interval_us {
                self.scrubs.schedule_in(every, ScrubDue);
            }
        }
        out.sort_by_key(|c| (c.at, c.tag));
        out
    }

    fn stats(&self) -> BackendStats {
        let mut s = self.local.stats();
        for c in &self.clouds {
            s.merge(&c.stats());
        }
        s.merge(&self.stats);
        s
    }

    fn cost_report(&self, now: Micros) -> Result<CostReport, CostError> {
        self.clouds
            .iter()
            .try_fold(CostReport::default(), |acc, c| {
                acc.checked_sum(&c.cost_report(now)?)
            })
    }

    fn scrub(&mut self, now: Micros) -> Result<ScrubReport, BackendError> {
        self.scrub_on(now, self.cfg.scrub_target)
    }

    fn size_of(&self, file: FileId) -> Option<u64> {
        self.local
            .size_of(file)
            .or_else(|| self.clouds[0].size_of(file))
    }
}
