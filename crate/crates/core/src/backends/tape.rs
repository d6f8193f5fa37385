//! Robotic tape library.
//!
//! Service time of one file on a drive: robot exchange + load/thread when the
//! tape is not already mounted on that drive, a locate proportional to the
//! distance between head and file position, then transfer at the drive rate.
//! File positions are uniform on the tape (the library holds far more data
//! than any one manifest), so a cold read pays on average half the maximum
//! locate time.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::join::Joiner;
use super::{BackendError, BackendStats, Completion, ScrubReport, StorageApi, Tag};
use crate::cost::{CostError, CostReport};
use crate::datagen::{FileId, FileRecord};
use crate::sim::{EventQueue, RngStream};
use crate::units::{seconds, transfer_time, Micros, TIB};
use crate::workload::{PRIORITY_LOW, PRIORITY_NORMAL, PRIORITY_URGENT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum UnloadPolicy {
    /// Unload as soon as the drive has nothing queued for its tape.
    Immediate,
    /// Keep the tape mounted until the drive has been idle this long.
    Lazy { idle_timeout_us: Micros },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TapeScheduler {
    Fifo,
    /// Strict priority, FIFO within a class. Low classes may starve.
    Priority,
    /// Prefer queued requests for the tape already in the drive.
    TapeBatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TapeAssignment {
    /// Files of one mission fill that mission's tapes in order.
    MissionContiguous,
    /// Files land on a uniformly chosen tape.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TapeConfig {
    pub drive_count: u32,
    pub robot_exchange_us: Micros,
    pub load_thread_us: Micros,
    pub max_seek_us: Micros,
    /// MiB/s.
    pub transfer_rate_mb_s: f64,
    pub unload_policy: UnloadPolicy,
    pub scheduler: TapeScheduler,
    pub tape_capacity_bytes: u64,
    pub assignment: TapeAssignment,
    /// Priority classes from most to least urgent; unknown classes rank last.
    pub priority_order: Vec<String>,
}

impl Default for TapeConfig {
    fn default() -> Self {
        Self {
            drive_count: 4,
            robot_exchange_us: seconds(15.0),
            load_thread_us: seconds(20.0),
            max_seek_us: seconds(60.0),
            transfer_rate_mb_s: 250.0,
            unload_policy: UnloadPolicy::Lazy {
                idle_timeout_us: seconds(300.0),
            },
            scheduler: TapeScheduler::Fifo,
            tape_capacity_bytes: 12 * TIB,
            assignment: TapeAssignment::MissionContiguous,
            priority_order: vec![
                PRIORITY_URGENT.to_owned(),
                PRIORITY_NORMAL.to_owned(),
                PRIORITY_LOW.to_owned(),
            ],
        }
    }
}

impl TapeConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::Config(format!("tape: {m}")));
        if self.drive_count == 0 {
            return bad("drive_count must be >= 1");
        }
        if self.robot_exchange_us == 0 || self.load_thread_us == 0 || self.max_seek_us == 0 {
            return bad("exchange, load and seek durations must be > 0");
        }
        if !(self.transfer_rate_mb_s.is_finite() && self.transfer_rate_mb_s > 0.0) {
            return bad("transfer_rate_mb_s must be > 0");
        }
        if self.tape_capacity_bytes == 0 {
            return bad("tape_capacity_bytes must be > 0");
        }
        if let UnloadPolicy::Lazy { idle_timeout_us: 0 } = self.unload_policy {
            return bad("lazy unload idle timeout must be > 0");
        }
        Ok(())
    }

    fn priority_rank(&self, class: &str) -> usize {
        self.priority_order
            .iter()
            .position(|c| c == class)
            .unwrap_or(self.priority_order.len())
    }

    /// Full service time of a read on a cold drive (no tape mounted).
    pub fn cold_service_time(&self, size: u64, position: f64) -> Micros {
        self.robot_exchange_us
            + self.load_thread_us
            + (position * self.max_seek_us as f64).round() as Micros
            + transfer_time(size, self.transfer_rate_mb_s)
    }
}

#[derive(Debug, Clone, Copy)]
struct Location {
    tape: u32,
    /// Fraction of the tape length, in [0, 1).
    position: f64,
    size: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Drive {
    mounted: Option<u32>,
    head: f64,
    busy: bool,
    /// Bumped on every state change; stale unload timers compare against it.
    epoch: u64,
}

#[derive(Debug, Clone)]
struct Job {
    tag: Tag,
    loc: Location,
}

type JobKey = (usize, u64);

/// Pending jobs: one ordered queue per tape plus an index of the queue heads,
/// so a drive finds its next job without scanning everything queued.
#[derive(Debug, Default)]
struct JobQueue {
    per_tape: HashMap<u32, BTreeMap<JobKey, Job>>,
    heads: BTreeSet<(JobKey, u32)>,
}

impl JobQueue {
    fn push(&mut self, key: JobKey, job: Job) {
        let tape = job.loc.tape;
        let q = self.per_tape.entry(tape).or_default();
        let old = q.first_key_value().map(|(k, _)| *k);
        q.insert(key, job);
        if old.is_none_or(|o| key < o) {
            if let Some(o) = old {
                self.heads.remove(&(o, tape));
            }
            self.heads.insert((key, tape));
        }
    }

    fn pop(&mut self, tape: u32) -> Option<Job> {
        let q = self.per_tape.get_mut(&tape)?;
        let (key, job) = q.pop_first()?;
        self.heads.remove(&(key, tape));
        match q.first_key_value() {
            Some((next, _)) => {
                self.heads.insert((*next, tape));
            }
            None => {
                self.per_tape.remove(&tape);
            }
        }
        Some(job)
    }

    fn has(&self, tape: u32) -> bool {
        self.per_tape.contains_key(&tape)
    }

    /// Tapes with pending work, most eligible head first.
    fn tapes(&self) -> impl Iterator<Item = u32> + '_ {
        self.heads.iter().map(|(_, t)| *t)
    }
}

#[derive(Debug, Clone)]
enum Event {
    JobDone { drive: usize, job: Job },
    Unload { drive: usize, epoch: u64 },
}

pub struct TapeBackend {
    cfg: TapeConfig,
    events: EventQueue<Event>,
    files: HashMap<FileId, Location>,
    /// Bytes written per tape.
    tape_used: Vec<u64>,
    mission_tape: HashMap<u32, u32>,
    drives: Vec<Drive>,
    tape_drive: HashMap<u32, usize>,
    queue: JobQueue,
    next_seq: u64,
    joiner: Joiner,
    completed: Vec<Completion>,
    rng: rand_chacha::ChaCha8Rng,
    stats: BackendStats,
    preloaded: bool,
}

impl TapeBackend {
    pub fn new(cfg: TapeConfig, seed: u64) -> Result<Self, BackendError> {
        cfg.validate()?;
        let drives = vec![Drive::default(); cfg.drive_count as usize];
        Ok(Self {
            cfg,
            events: EventQueue::new(),
            files: HashMap::new(),
            tape_used: Vec::new(),
            mission_tape: HashMap::new(),
            drives,
            tape_drive: HashMap::new(),
            queue: JobQueue::default(),
            next_seq: 0,
            joiner: Joiner::default(),
            completed: Vec::new(),
            rng: RngStream::new(seed, "backend/tape").rng(),
            stats: BackendStats::default(),
            preloaded: false,
        })
    }

    pub fn config(&self) -> &TapeConfig {
        &self.cfg
    }

    /// Tape holding `file` and the file's position on it.
    pub fn location(&self, file: FileId) -> Option<(u32, f64)> {
        self.files.get(&file).map(|l| (l.tape, l.position))
    }

    pub fn tape_count(&self) -> usize {
        self.tape_used.len()
    }

    pub fn mounted_tapes(&self) -> usize {
        self.drives.iter().filter(|d| d.mounted.is_some()).count()
    }

    fn new_tape(&mut self) -> u32 {
        self.tape_used.push(0);
        (self.tape_used.len() - 1) as u32
    }

    fn fits(&self, tape: u32, size: u64) -> bool {
        let used = self.tape_used[tape as usize];
        used == 0 || used + size <= self.cfg.tape_capacity_bytes
    }

    fn place(&mut self, file: &FileRecord, random_tapes: Option<u32>) -> Result<(), BackendError> {
        if self.files.contains_key(&file.file_id) {
            return Err(BackendError::DuplicateFile(file.file_id));
        }
        let size = file.size_bytes;
        let tape = match random_tapes {
            Some(n) => {
                let start = self.rng.random_range(0..n);
                (0..n)
                    .map(|i| (start + i) % n)
                    .find(|&t| self.fits(t, size))
                    .unwrap_or_else(|| self.new_tape())
            }
            None => match self.mission_tape.get(&file.mission) {
                Some(&t) if self.fits(t, size) => t,
                _ => {
                    let t = self.new_tape();
                    self.mission_tape.insert(file.mission, t);
                    t
                }
            },
        };
        self.tape_used[tape as usize] += size;
        let position = self.rng.random::<f64>();
        self.files.insert(
            file.file_id,
            Location {
                tape,
                position,
                size,
            },
        );
        Ok(())
    }

    fn enqueue(&mut self, tag: Tag, file: FileId, priority: &str) -> Result<(), BackendError> {
        let loc = *self
            .files
            .get(&file)
            .ok_or(BackendError::UnknownFile(file))?;
        let job = Job { tag, loc };
        let rank = match self.cfg.scheduler {
            TapeScheduler::Priority => self.cfg.priority_rank(priority),
            TapeScheduler::Fifo | TapeScheduler::TapeBatched => 0,
        };
        self.queue.push((rank, self.next_seq), job);
        self.next_seq += 1;
        Ok(())
    }

    /// Tape `drive` should serve next. A tape mounted on another drive is
    /// never eligible.
    fn pick(&self, drive: usize) -> Option<u32> {
        if self.cfg.scheduler == TapeScheduler::TapeBatched {
            if let Some(t) = self.drives[drive].mounted.filter(|&t| self.queue.has(t)) {
                return Some(t);
            }
        }
        self.queue
            .tapes()
            .find(|t| self.tape_drive.get(t).is_none_or(|&d| d == drive))
    }

    fn dispatch(&mut self, now: Micros) {
        for d in 0..self.drives.len() {
            if self.drives[d].busy {
                continue;
            }
            let Some(tape) = self.pick(d) else { continue };
            let job = self.queue.pop(tape).expect("picked tape has work");
            let service = self.start(d, &job);
            self.events
                .schedule(now + service, Event::JobDone { drive: d, job })
                .expect("completion lies in the future");
        }
    }

    fn start(&mut self, d: usize, job: &Job) -> Micros {
        let cfg = &self.cfg;
        let drive = &mut self.drives[d];
        let mut t = 0;
        if drive.mounted != Some(job.loc.tape) {
            if let Some(old) = drive.mounted.take() {
                self.tape_drive.remove(&old);
                self.stats.tape_unmounts += 1;
            }
            drive.mounted = Some(job.loc.tape);
            drive.head = 0.0;
            self.tape_drive.insert(job.loc.tape, d);
            self.stats.tape_mounts += 1;
            t += cfg.robot_exchange_us + cfg.load_thread_us;
        }
        t += ((job.loc.position - drive.head).abs() * cfg.max_seek_us as f64).round() as Micros;
        t += transfer_time(job.loc.size, cfg.transfer_rate_mb_s);
        drive.head = job.loc.position;
        drive.busy = true;
        drive.epoch += 1;
        let mounted = self.drives.iter().filter(|d| d.mounted.is_some()).count() as u64;
        self.stats.max_tapes_mounted = self.stats.max_tapes_mounted.max(mounted);
        t
    }

    fn unmount(&mut self, d: usize) {
        let drive = &mut self.drives[d];
        if let Some(tape) = drive.mounted.take() {
            self.tape_drive.remove(&tape);
            self.stats.tape_unmounts += 1;
        }
        drive.epoch += 1;
    }

    fn handle(&mut self, now: Micros, event: Event) {
        match event {
            Event::JobDone { drive, job } => {
                self.drives[drive].busy = false;
                self.drives[drive].epoch += 1;
                if let Some(c) = self.joiner.finish_part(job.tag, now, job.loc.size, 0.0) {
                    self.completed.push(c);
                }
                self.dispatch(now);
                if !self.drives[drive].busy && self.drives[drive].mounted.is_some() {
                    match self.cfg.unload_policy {
                        UnloadPolicy::Immediate => self.unmount(drive),
                        UnloadPolicy::Lazy { idle_timeout_us } => {
                            let epoch = self.drives[drive].epoch;
                            self.events
                                .schedule(now + idle_timeout_us, Event::Unload { drive, epoch })
                                .expect("timer lies in the future");
                        }
                    }
                }
            }
            Event::Unload { drive, epoch } => {
                if self.drives[drive].epoch == epoch && !self.drives[drive].busy {
                    self.unmount(drive);
                    // The freed drive may now serve jobs for tapes that were
                    // waiting on it.
                    self.dispatch(now);
                }
            }
        }
    }
}

impl StorageApi for TapeBackend {
    fn name(&self) -> &str {
        "tape"
    }

    fn preload(&mut self, files: &[FileRecord]) -> Result<(), BackendError> {
        if self.preloaded {
            return Err(BackendError::AlreadyPreloaded);
        }
        self.preloaded = true;
        let random_tapes = match self.cfg.assignment {
            TapeAssignment::MissionContiguous => None,
            TapeAssignment::Random => {
                let bytes: u64 = files.iter().map(|f| f.size_bytes).sum();
                let missions = files.iter().map(|f| f.mission).max().map_or(1, |m| m + 1);
                let by_size = bytes.div_ceil(self.cfg.tape_capacity_bytes) as u32;
                let n = by_size.max(missions).max(1);
                while self.tape_used.len() < n as usize {
                    self.new_tape();
                }
                Some(n)
            }
        };
        files.iter().try_for_each(|f| self.place(f, random_tapes))
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
        if let Some(missing) = files.iter().find(|f| !self.files.contains_key(f)) {
            return Err(BackendError::UnknownFile(*missing));
        }
        self.joiner.open(tag, files.len());
        for f in files {
            self.enqueue(tag, *f, priority)?;
        }
        self.dispatch(now);
        Ok(())
    }

    fn put(
        &mut self,
        now: Micros,
        tag: Tag,
        file: &FileRecord,
        priority: &str,
    ) -> Result<(), BackendError> {
        self.place(file, None)?;
        self.joiner.open(tag, 1);
        self.enqueue(tag, file.file_id, priority)?;
        self.dispatch(now);
        Ok(())
    }

    fn next_wakeup(&mut self) -> Option<Micros> {
        self.events.peek_time()
    }

    fn advance(&mut self, now: Micros) -> Vec<Completion> {
        while let Some(ev) = self.events.pop_until(now) {
            self.handle(ev.fire_at, ev.action);
        }
        std::mem::take(&mut self.completed)
    }

    fn stats(&self) -> BackendStats {
        self.stats.clone()
    }

    fn cost_report(&self, _now: Micros) -> Result<CostReport, CostError> {
        Ok(CostReport::default())
    }

    /// Reads every tape end to end, spread over all drives. Drive time used by
    /// the scrub is not taken away from foreground requests.
    fn scrub(&mut self, _now: Micros) -> Result<ScrubReport, BackendError> {
        let mut per_tape = vec![0u64; self.tape_used.len()];
        for loc in self.files.values() {
            per_tape[loc.tape as usize] += loc.size;
        }
        let busy: Micros = per_tape
            .iter()
            .filter(|&&b| b > 0)
            .map(|&b| {
                self.cfg.robot_exchange_us
                    + self.cfg.load_thread_us
                    + self.cfg.max_seek_us
                    + transfer_time(b, self.cfg.transfer_rate_mb_s)
            })
            .sum();
        let bytes: u64 = per_tape.iter().sum();
        self.stats.scrubs += 1;
        self.stats.scrub_bytes += bytes;
        Ok(ScrubReport {
            files: self.files.len() as u64,
            bytes,
            duration_us: busy.div_ceil(self.cfg.drive_count as u64),
            retrieval_cost_cents: 0.0,
        })
    }

    fn size_of(&self, file: FileId) -> Option<u64> {
        self.files.get(&file).map(|l| l.size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::FileSet;
    use crate::units::{MIB, MICROS_PER_SECOND};

    fn rec(id: u64, size: u64, mission: u32) -> FileRecord {
        FileRecord {
            file_id: FileId(id),
            size_bytes: size,
            mission,
            set: FileSet::Static,
        }
    }

    fn drain(b: &mut TapeBackend) -> Vec<Completion> {
        let mut out = Vec::new();
        while let Some(t) = b.next_wakeup() {
            out.extend(b.advance(t));
        }
        out
    }

    /// Advances only until the next completion, leaving later timers pending.
    fn next_done(b: &mut TapeBackend) -> Completion {
        loop {
            let t = b.next_wakeup().expect("a request is in flight");
            if let Some(c) = b.advance(t).into_iter().next() {
                return c;
            }
        }
    }

    #[test]
    fn cold_read_pays_exchange_load_seek_and_transfer() {
        let mut b = TapeBackend::new(TapeConfig::default(), 1).unwrap();
        b.preload(&[rec(0, 1000 * MIB, 0)]).unwrap();
        let (_, pos) = b.location(FileId(0)).unwrap();
        b.get(0, 7, FileId(0), "normal").unwrap();
        let done = drain(&mut b);
        assert_eq!(done.len(), 1);
        let seek = (pos * 60.0 * MICROS_PER_SECOND as f64).round() as Micros;
        // 15 s + 20 s + seek + 1000 MiB / 250 MiB/s
        assert_eq!(done[0].at, 39 * MICROS_PER_SECOND + seek);
        assert_eq!(done[0].bytes, 1000 * MIB);
        assert_eq!(done[0].tag, 7);
        assert_eq!(b.stats().tape_mounts, 1);
    }

    #[test]
    fn warm_mount_skips_exchange_and_load() {
        let mut b = TapeBackend::new(TapeConfig::default(), 1).unwrap();
        b.preload(&[rec(0, MIB, 0), rec(1, MIB, 0)]).unwrap();
        b.get(0, 0, FileId(0), "normal").unwrap();
        let first = next_done(&mut b).at;
        b.get(first, 1, FileId(1), "normal").unwrap();
        let t = b.next_wakeup().unwrap();
        let second = b.advance(t)[0].at - first;
        let (_, p0) = b.location(FileId(0)).unwrap();
        let (_, p1) = b.location(FileId(1)).unwrap();
        let seek = ((p1 - p0).abs() * 60e6).round() as Micros;
        assert_eq!(second, seek + transfer_time(MIB, 250.0));
        assert_eq!(b.stats().tape_mounts, 1);
    }

    #[test]
    fn small_files_on_distinct_tapes_are_orders_of_magnitude_slower() {
        // Capacity of one file per tape: 1000 x 1 MiB lands on 1000 tapes.
        let cfg = TapeConfig {
            drive_count: 1,
            tape_capacity_bytes: MIB,
            unload_policy: UnloadPolicy::Immediate,
            ..TapeConfig::default()
        };
        let small: Vec<FileRecord> = (0..1000).map(|i| rec(i, MIB, 0)).collect();
        let mut b = TapeBackend::new(cfg.clone(), 3).unwrap();
        b.preload(&small).unwrap();
        assert_eq!(b.tape_count(), 1000);
        let ids: Vec<FileId> = small.iter().map(|f| f.file_id).collect();
        b.batch_get(0, 0, &ids, "normal").unwrap();
        let small_time = drain(&mut b)[0].at;
        // closed form: each file pays exchange+load+seek(pos)+transfer
        let expected: Micros = ids
            .iter()
            .map(|id| cfg.cold_service_time(MIB, b.location(*id).unwrap().1))
            .sum();
        assert_eq!(small_time, expected);

        let mut big = TapeBackend::new(cfg, 3).unwrap();
        big.preload(&[rec(0, 1000 * MIB, 0)]).unwrap();
        big.get(0, 0, FileId(0), "normal").unwrap();
        let big_time = drain(&mut big)[0].at;
        let per_byte_ratio = small_time as f64 / big_time as f64;
        assert!(per_byte_ratio > 100.0, "{per_byte_ratio}");
    }

    #[test]
    fn mounted_tapes_never_exceed_drives() {
        let cfg = TapeConfig {
            drive_count: 2,
            tape_capacity_bytes: 10 * MIB,
            ..TapeConfig::default()
        };
        let files: Vec<FileRecord> = (0..40).map(|i| rec(i, 4 * MIB, (i % 7) as u32)).collect();
        let mut b = TapeBackend::new(cfg, 5).unwrap();
        b.preload(&files).unwrap();
        for (i, f) in files.iter().enumerate() {
            b.get(0, i as Tag, f.file_id, "normal").unwrap();
        }
        let mut n = 0;
        while let Some(t) = b.next_wakeup() {
            n += b.advance(t).len();
            assert!(b.mounted_tapes() <= 2);
        }
        assert_eq!(n, 40);
        assert!(b.stats().max_tapes_mounted <= 2);
    }

    #[test]
    fn tape_batched_mounts_no_more_than_fifo() {
        let files: Vec<FileRecord> = (0..30).map(|i| rec(i, MIB, (i % 3) as u32)).collect();
        let mut mounts = Vec::new();
        for scheduler in [TapeScheduler::Fifo, TapeScheduler::TapeBatched] {
            let cfg = TapeConfig {
                drive_count: 1,
                scheduler,
                ..TapeConfig::default()
            };
            let mut b = TapeBackend::new(cfg, 9).unwrap();
            b.preload(&files).unwrap();
            for f in &files {
                b.get(0, f.file_id.0, f.file_id, "normal").unwrap();
            }
            assert_eq!(drain(&mut b).len(), 30);
            mounts.push(b.stats().tape_mounts);
        }
        assert_eq!(mounts[1], 3);
        assert!(mounts[1] <= mounts[0], "{mounts:?}");
    }

    #[test]
    fn priority_scheduler_serves_urgent_first() {
        let cfg = TapeConfig {
            drive_count: 1,
            scheduler: TapeScheduler::Priority,
            ..TapeConfig::default()
        };
        let files: Vec<FileRecord> = (0..4).map(|i| rec(i, MIB, i as u32)).collect();
        let mut b = TapeBackend::new(cfg, 2).unwrap();
        b.preload(&files).unwrap();
        b.get(0, 0, FileId(0), "low").unwrap();
        b.get(0, 1, FileId(1), "low").unwrap();
        b.get(0, 2, FileId(2), "urgent").unwrap();
        b.get(0, 3, FileId(3), "normal").unwrap();
        let order: Vec<Tag> = drain(&mut b).iter().map(|c| c.tag).collect();
        // tag 0 was dispatched on arrival; the rest follow class order
        assert_eq!(order, vec![0, 2, 3, 1]);
    }

    #[test]
    fn lazy_unload_fires_after_idle_timeout() {
        let mut b = TapeBackend::new(TapeConfig::default(), 1).unwrap();
        b.preload(&[rec(0, MIB, 0)]).unwrap();
        b.get(0, 0, FileId(0), "normal").unwrap();
        let t = b.next_wakeup().unwrap();
        b.advance(t);
        assert_eq!(b.mounted_tapes(), 1);
        assert_eq!(b.next_wakeup(), Some(t + seconds(300.0)));
        drain(&mut b);
        assert_eq!(b.mounted_tapes(), 0);
        assert_eq!(b.stats().tape_unmounts, 1);
    }

    #[test]
    fn errors() {
        let mut b = TapeBackend::new(TapeConfig::default(), 1).unwrap();
        b.preload(&[rec(0, MIB, 0)]).unwrap();
        assert_eq!(b.preload(&[]), Err(BackendError::AlreadyPreloaded));
        assert_eq!(
            b.get(0, 0, FileId(9), "low"),
            Err(BackendError::UnknownFile(FileId(9)))
        );
        assert_eq!(b.batch_get(0, 0, &[], "low"), Err(BackendError::EmptyBatch));
        assert_eq!(
            b.put(0, 1, &rec(0, MIB, 0), "low"),
            Err(BackendError::DuplicateFile(FileId(0)))
        );
        let bad = TapeConfig {
            drive_count: 0,
            ..TapeConfig::default()
        };
        assert!(TapeBackend::new(bad, 1).is_err());
    }

    #[test]
    fn put_then_get() {
        let mut b = TapeBackend::new(TapeConfig::default(), 1).unwrap();
        b.preload(&[]).unwrap();
        b.put(0, 0, &rec(5, 2 * MIB, 1), "normal").unwrap();
        let done = next_done(&mut b);
        assert_eq!(done.bytes, 2 * MIB);
        b.get(done.at, 1, FileId(5), "normal").unwrap();
        assert_eq!(drain(&mut b)[0].bytes, 2 * MIB);
    }
}
