//! Replays per-session request streams against a backend under the virtual
//! clock and records one measurement per request.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, Completion, StorageApi, Tag};
use crate::datagen::{DatasetManifest, FileId, FileRecord};
use crate::sim::EventQueue;
use crate::units::Micros;
use crate::workload::{
    session_ingest, session_workload, Arrival, Op, Request, WorkloadError, WorkloadSpec,
};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("session_count must be >= 1")]
    NoSessions,
    #[error("preload failed: {0}")]
    Preload(#[from] BackendError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("measurement output: {0}")]
    Csv(#[from] csv::Error),
    #[error("measurement output: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub session_count: usize,
    /// Leading requests of each session that run but are not measured.
    pub warmup_requests: u64,
    /// PUT every dynamic-set file exactly once instead of drawing writes
    /// independently per request.
    pub ingest_all_dynamic: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            session_count: 1,
            warmup_requests: 0,
            ingest_all_dynamic: false,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        if self.session_count == 0 {
            return Err(DriverError::NoSessions);
        }
        Ok(())
    }
}

/// Per-session request streams for `spec`.
pub fn plan_sessions(
    manifest: &DatasetManifest,
    spec: &WorkloadSpec,
    sessions: &SessionConfig,
) -> Result<Vec<Vec<Request>>, DriverError> {
    sessions.validate()?;
    let n = sessions.session_count;
    (0..n)
        .map(|s| {
            let stream = if sessions.ingest_all_dynamic {
                session_ingest(manifest, spec, s, n)
            } else {
                session_workload(manifest, spec, s, n)
            };
            stream.map_err(DriverError::from)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub session: usize,
    pub request_id: u64,
    pub op: Op,
    pub priority: String,
    #[serde(with = "id_list")]
    pub file_ids: Vec<FileId>,
    pub issue_time: Micros,
    pub completion_time: Micros,
    pub bytes: u64,
    pub cost_delta_cents: f64,
    pub ok: bool,
    pub error: String,
}

impl Measurement {
    pub fn latency(&self) -> Micros {
        self.completion_time - self.issue_time
    }
}

mod id_list {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::datagen::FileId;

    pub fn serialize<S: Serializer>(ids: &[FileId], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<String> = ids.iter().map(ToString::to_string).collect();
        s.serialize_str(&text.join(";"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<FileId>, D::Error> {
        let text = String::deserialize(d)?;
        if text.is_empty() {
            return Ok(Vec::new());
        }
        text.split(';')
            .map(|t| t.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// One backend-level event for the optional trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time_us: Micros,
    pub backend: String,
    pub op: Op,
    #[serde(with = "id_list")]
    pub file_id: Vec<FileId>,
    pub latency_us: Micros,
    pub cost_cents: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub measurements: Vec<Measurement>,
    pub trace: Vec<TraceRow>,
    /// Virtual time of the last completion.
    pub end_time: Micros,
}

/// Makes the static set resident. Free of time and retrieval charges.
pub fn preload(
    backend: &mut dyn StorageApi,
    manifest: &DatasetManifest,
) -> Result<(), DriverError> {
    let files: Vec<FileRecord> = manifest.static_files().cloned().collect();
    backend.preload(&files)?;
    Ok(())
}

#[derive(Debug)]
struct Issue {
    session: usize,
    index: usize,
}

struct InFlight {
    session: usize,
    index: usize,
    issued: Micros,
}

/// Runs every session to completion.
///
/// Closed sessions issue their next request `think_time_us` after the
/// previous completes; open sessions issue at the stream's offsets. Backend
/// completions are processed before issues at the same instant. A request the
/// backend rejects becomes a failed measurement.
pub fn run_benchmark(
    backend: &mut dyn StorageApi,
    manifest: &DatasetManifest,
    streams: &[Vec<Request>],
    arrival: Arrival,
    warmup_requests: u64,
) -> RunLog {
    let records: HashMap<FileId, &FileRecord> =
        manifest.records.iter().map(|r| (r.file_id, r)).collect();
    let backend_name = backend.name().to_owned();
    let mut issues: EventQueue<Issue> = EventQueue::new();
    for (session, stream) in streams.iter().enumerate() {
        match arrival {
            Arrival::Closed { .. } => {
                if !stream.is_empty() {
                    issues
                        .schedule(0, Issue { session, index: 0 })
                        .expect("t=0 is now");
                }
            }
            Arrival::Open { .. } => {
                for (index, r) in stream.iter().enumerate() {
                    issues
                        .schedule(r.issue_offset, Issue { session, index })
                        .expect("offsets are non-negative");
                }
            }
        }
    }
    let think = match arrival {
        Arrival::Closed { think_time_us } => Some(think_time_us),
        Arrival::Open { .. } => None,
    };

    let mut log = RunLog::default();
    let mut in_flight: HashMap<Tag, InFlight> = HashMap::new();
    let mut next_tag: Tag = 0;

    let record = |log: &mut RunLog,
                  session: usize,
                  index: usize,
                  issued: Micros,
                  outcome: Result<&Completion, String>| {
        let req = &streams[session][index];
        let (done, bytes, cost, err) = match outcome {
            Ok(c) => (c.at, c.bytes, c.cost_delta_cents, None),
            Err(e) => (issued, 0, 0.0, Some(e)),
        };
        log.end_time = log.end_time.max(done);
        if err.is_none() {
            log.trace.push(TraceRow {
                time_us: done,
                backend: backend_name.clone(),
                op: req.op,
                file_id: req.file_ids.clone(),
                latency_us: done - issued,
                cost_cents: cost,
            });
        }
        if (index as u64) < warmup_requests {
            return;
        }
        log.measurements.push(Measurement {
            session,
            request_id: req.request_id,
            op: req.op,
            priority: req.priority.clone(),
            file_ids: req.file_ids.clone(),
            issue_time: issued,
            completion_time: done,
            bytes,
            cost_delta_cents: cost,
            ok: err.is_none(),
            error: err.unwrap_or_default(),
        });
    };

    loop {
        let t_issue = issues.peek_time();
        let t_backend = if in_flight.is_empty() && t_issue.is_none() {
            None
        } else {
            backend.next_wakeup()
        };
        let backend_first = match (t_backend, t_issue) {
            (None, None) => break,
            (Some(tb), Some(ti)) => tb <= ti,
            (Some(_), None) => true,
            (None, Some(_)) => false,
        };
        match (t_backend, t_issue) {
            (Some(tb), _) if backend_first => {
                for c in backend.advance(tb) {
                    let Some(f) = in_flight.remove(&c.tag) else {
                        continue;
                    };
                    record(&mut log, f.session, f.index, f.issued, Ok(&c));
                    if let Some(think) = think {
                        schedule_next(&mut issues, streams, f.session, f.index, c.at + think);
                    }
                }
            }
            (_, Some(ti)) => {
                let ev = issues.pop_until(ti).expect("peeked");
                let Issue { session, index } = ev.action;
                let req = &streams[session][index];
                let tag = next_tag;
                next_tag += 1;
                let submitted = match req.op {
                    Op::Get => backend.batch_get(ti, tag, &req.file_ids, &req.priority),
                    Op::Put => match req.file_ids.first().and_then(|id| records.get(id)) {
                        Some(rec) => backend.put(ti, tag, rec, &req.priority),
                        None => Err(BackendError::UnknownFile(
                            req.file_ids.first().copied().unwrap_or(FileId(u64::MAX)),
                        )),
                    },
                };
                match submitted {
                    Ok(()) => {
                        in_flight.insert(
                            tag,
                            InFlight {
                                session,
                                index,
                                issued: ti,
                            },
                        );
                    }
                    Err(e) => {
                        record(&mut log, session, index, ti, Err(e.to_string()));
                        if let Some(think) = think {
                            schedule_next(&mut issues, streams, session, index, ti + think);
                        }
                    }
                }
            }
            _ => unreachable!("one of the queues has work"),
        }
    }
    log
}

fn schedule_next(
    issues: &mut EventQueue<Issue>,
    streams: &[Vec<Request>],
    session: usize,
    index: usize,
    at: Micros,
) {
    if index + 1 < streams[session].len() {
        issues
            .schedule(
                at,
                Issue {
                    session,
                    index: index + 1,
                },
            )
            .expect("next issue is not before the completion");
    }
}

pub fn write_measurements<W: Write>(
    writer: W,
    measurements: &[Measurement],
) -> Result<(), DriverError> {
    let mut w = csv::Writer::from_writer(writer);
    for m in measurements {
        w.serialize(m)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_measurements<R: std::io::Read>(reader: R) -> Result<Vec<Measurement>, DriverError> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_trace<W: Write>(writer: W, trace: &[TraceRow]) -> Result<(), DriverError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
