//! Disk cache in front of a slower store; doubles as a burst buffer for
//! incoming writes.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::join::{Joiner, TagMap};
use super::{BackendError, BackendStats, Completion, ScrubReport, StorageApi, Tag};
use crate::cost::{CostError, CostReport};
use crate::datagen::{FileId, FileRecord};
use crate::sim::EventQueue;
use crate::units::{millis, transfer_time, Micros, TIB};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    Lru,
    Fifo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WriteMode {
    /// PUTs are acknowledged once on disk and destaged in the background.
    BurstBuffer,
    /// PUTs go straight to the backing store.
    WriteThrough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CacheConfig {
    pub capacity_bytes: u64,
    pub policy: CachePolicy,
    pub write_mode: WriteMode,
    /// Serve files larger than the cache from the backing store instead of
    /// rejecting them.
    pub bypass_oversize: bool,
    pub disk_latency_us: Micros,
    /// MiB/s.
    pub disk_rate_mb_s: f64,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            capacity_bytes: TIB,
            policy: CachePolicy::Lru,
            write_mode: WriteMode::BurstBuffer,
            bypass_oversize: true,
            disk_latency_us: millis(10.0),
            disk_rate_mb_s: 150.0,
        }
    }
}

impl CacheConfig {
    /// Cache sized at `1 / ratio` of an archive of `archive_bytes`.
    pub fn with_ratio(archive_bytes: u64, ratio: u64) -> Self {
        Self {
            capacity_bytes: archive_bytes / ratio.max(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !(self.disk_rate_mb_s.is_finite() && self.disk_rate_mb_s > 0.0) {
            return Err(BackendError::Config(
                "cache: disk_rate_mb_s must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn disk_time(&self, bytes: u64) -> Micros {
        self.disk_latency_us + transfer_time(bytes, self.disk_rate_mb_s)
    }
}

#[derive(Debug)]
enum Event {
    DiskDone { tag: Tag, bytes: u64 },
}

#[derive(Debug)]
enum Inner {
    /// Misses of a caller request; admitted when the backing store delivers.
    Fill { tag: Tag, files: Vec<FileId> },
    /// Background copy of a burst-buffered write.
    Destage,
    /// Oversize or write-through PUT forwarded as is.
    Forward { tag: Tag },
}

pub struct CacheBackend {
    cfg: CacheConfig,
    backing: Box<dyn StorageApi>,
    events: EventQueue<Event>,
    resident: HashMap<FileId, (u64, u64)>,
    /// Eviction order: stamp -> file.
    order: BTreeMap<u64, FileId>,
    stamp: u64,
    used: u64,
    sizes: HashMap<FileId, u64>,
    inner: TagMap<Inner>,
    joiner: Joiner,
    completed: Vec<Completion>,
    stats: BackendStats,
    name: String,
}

impl CacheBackend {
    pub fn new(cfg: CacheConfig, backing: Box<dyn StorageApi>) -> Result<Self, BackendError> {
        cfg.validate()?;
        let name = format!("cache+{}", backing.name());
        Ok(Self {
            cfg,
            backing,
            events: EventQueue::new(),
            resident: HashMap::new(),
            order: BTreeMap::new(),
            stamp: 0,
            used: 0,
            sizes: HashMap::new(),
            inner: TagMap::default(),
            joiner: Joiner::default(),
            completed: Vec::new(),
            stats: BackendStats::default(),
            name,
        })
    }

    pub fn resident_bytes(&self) -> u64 {
        self.used
    }

    pub fn contains(&self, file: FileId) -> bool {
        self.resident.contains_key(&file)
    }

    pub fn hit_rate(&self) -> f64 {
        let total = self.stats.cache_hits + self.stats.cache_misses;
        if total == 0 {
            0.0
        } else {
            self.stats.cache_hits as f64 / total as f64
        }
    }

    fn touch(&mut self, file: FileId) {
        if self.cfg.policy == CachePolicy::Fifo {
            return;
        }
        if let Some((_, stamp)) = self.resident.get_mut(&file) {
            self.order.remove(stamp);
            self.stamp += 1;
            *stamp = self.stamp;
            self.order.insert(self.stamp, file);
        }
    }

    /// Inserts `file`, evicting in policy order. Returns false when the file
    /// cannot fit at all.
    fn admit(&mut self, file: FileId, size: u64) -> bool {
        if size > self.cfg.capacity_bytes {
            return false;
        }
        if self.resident.contains_key(&file) {
            self.touch(file);
            return true;
        }
        while self.used + size > self.cfg.capacity_bytes {
            let (_, victim) = self.order.pop_first().expect("used > 0 implies entries");
            let (vsize, _) = self
                .resident
                .remove(&victim)
                .expect("ordered entry is resident");
            self.used -= vsize;
        }
        self.stamp += 1;
        self.resident.insert(file, (size, self.stamp));
        self.order.insert(self.stamp, file);
        self.used += size;
        true
    }

    fn handle_backing(&mut self, c: Completion) {
        match self.inner.take(c.tag) {
            Some(Inner::Fill { tag, files }) => {
                for f in files {
                    if let Some(size) = self.backing.size_of(f) {
                        self.admit(f, size);
                    }
                }
                if let Some(done) = self
                    .joiner
                    .finish_part(tag, c.at, c.bytes, c.cost_delta_cents)
                {
                    self.completed.push(done);
                }
            }
            Some(Inner::Destage) => self.stats.destaged += 1,
            Some(Inner::Forward { tag }) => self.completed.push(Completion { tag, ..c }),
            None => {}
        }
    }
}

impl StorageApi for CacheBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn preload(&mut self, files: &[FileRecord]) -> Result<(), BackendError> {
        self.backing.preload(files)?;
        for f in files {
            self.sizes.insert(f.file_id, f.size_bytes);
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
        let (hits, misses): (Vec<FileId>, Vec<FileId>) =
            files.iter().partition(|f| self.resident.contains_key(f));
        let fill_tag = self.inner.peek_next();
        if !misses.is_empty() {
            for f in &misses {
                let size = self
                    .backing
                    .size_of(*f)
                    .ok_or(BackendError::UnknownFile(*f))?;
                if size > self.cfg.capacity_bytes && !self.cfg.bypass_oversize {
                    return Err(BackendError::FileTooLarge {
                        file: *f,
                        size,
                        capacity: self.cfg.capacity_bytes,
                    });
                }
            }
            self.backing.batch_get(now, fill_tag, &misses, priority)?;
            self.inner.insert(Inner::Fill {
                tag,
                files: misses.clone(),
            });
        }
        self.stats.cache_hits += hits.len() as u64;
        self.stats.cache_misses += misses.len() as u64;
        let parts = usize::from(!hits.is_empty()) + usize::from(!misses.is_empty());
        self.joiner.open(tag, parts);
        if !hits.is_empty() {
            let mut bytes = 0;
            let mut busy = 0;
            for f in &hits {
                let size = self.resident[f].0;
                bytes += size;
                busy += self.cfg.disk_time(size);
                self.touch(*f);
            }
            self.events
                .schedule(now + busy, Event::DiskDone { tag, bytes })
                .expect("disk completion lies in the future");
        }
        Ok(())
    }

    fn put(
        &mut self,
        now: Micros,
        tag: Tag,
        file: &FileRecord,
        priority: &str,
    ) -> Result<(), BackendError> {
        if self.sizes.contains_key(&file.file_id) {
            return Err(BackendError::DuplicateFile(file.file_id));
        }
        let oversize = file.size_bytes > self.cfg.capacity_bytes;
        if oversize && !self.cfg.bypass_oversize {
            return Err(BackendError::FileTooLarge {
                file: file.file_id,
                size: file.size_bytes,
                capacity: self.cfg.capacity_bytes,
            });
        }
        if self.cfg.write_mode == WriteMode::WriteThrough || oversize {
            let inner = self.inner.peek_next();
            self.backing.put(now, inner, file, priority)?;
            self.inner.insert(Inner::Forward { tag });
        } else {
            let inner = self.inner.peek_next();
            self.backing.put(now, inner, file, priority)?;
            self.inner.insert(Inner::Destage);
            self.admit(file.file_id, file.size_bytes);
            self.joiner.open(tag, 1);
            self.events
                .schedule(
                    now + self.cfg.disk_time(file.size_bytes),
                    Event::DiskDone {
                        tag,
                        bytes: file.size_bytes,
                    },
                )
                .expect("disk completion lies in the future");
        }
        self.sizes.insert(file.file_id, file.size_bytes);
        Ok(())
    }

    fn next_wakeup(&mut self) -> Option<Micros> {
        match (self.events.peek_time(), self.backing.next_wakeup()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn advance(&mut self, now: Micros) -> Vec<Completion> {
        for c in self.backing.advance(now) {
            self.handle_backing(c);
        }
        while let Some(ev) = self.events.pop_until(now) {
            let Event::DiskDone { tag, bytes } = ev.action;
            if let Some(done) = self.joiner.finish_part(tag, ev.fire_at, bytes, 0.0) {
                self.completed.push(done);
            }
        }
        std::mem::take(&mut self.completed)
    }

    fn stats(&self) -> BackendStats {
        let mut s = self.backing.stats();
        s.merge(&self.stats);
        s
    }

    fn cost_report(&self, now: Micros) -> Result<CostReport, CostError> {
        self.backing.cost_report(now)
    }

    fn scrub(&mut self, now: Micros) -> Result<ScrubReport, BackendError> {
        self.backing.scrub(now)
    }

    fn size_of(&self, file: FileId) -> Option<u64> {
        self.sizes
            .get(&file)
            .copied()
            .or_else(|| self.backing.size_of(file))
    }
}
