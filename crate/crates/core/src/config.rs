//! The run configuration file and the generate → preload → run → summarize
//! pipeline it drives.
//!
//! ```toml
//! seed = 7
//! out = "runs/dsda"
//! catalog = "azure-2019"        # built-in name or path to a catalog file
//! backend = "cache+tape"        # or a [backend] table with `kind = ...`
//!
//! [dataset]
//! preset = "dsda-main"          # or `manifest = "dir"`, or a [dataset.distribution] table
//! files = 20000
//! static_fraction = 0.8
//! missions = 16
//!
//! [workload]
//! preset = "cp1-skew"           # keys below override the preset
//! request_count = 2000
//!
//! [sessions]
//! session_count = 4
//!
//! [report]
//! formats = ["json", "csv", "plot-data"]
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendConfig, BackendError};
use crate::cost::{CostError, PricingCatalog, DEFAULT_CATALOG};
use crate::datagen::{
    generate_dataset, DatagenError, DatasetManifest, DatasetSpec, FileSizeDistribution,
};
use crate::driver::{self, DriverError, RunLog, SessionConfig};
use crate::report::{self, BenchReport, Format, ReportError, RunContext};
use crate::units::{Micros, MICROS_PER_MINUTE};
use crate::workload::{self, Request, WorkloadError, WorkloadSpec};

pub const MEASUREMENTS_CSV: &str = "measurements.csv";
pub const TRACE_CSV: &str = "trace.csv";
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// True for problems with the configuration rather than the run itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            RunError::Config(_)
                | RunError::Datagen(
                    DatagenError::Spec(_)
                        | DatagenError::Distribution(_)
                        | DatagenError::UnknownPreset(_)
                )
                | RunError::Workload(WorkloadError::Spec(_) | WorkloadError::UnknownPreset(_))
                | RunError::Driver(DriverError::NoSessions)
                | RunError::Backend(BackendError::Config(_))
                | RunError::Cost(
                    CostError::UnknownTier(_)
                        | CostError::InvalidPricing { .. }
                        | CostError::Parse(_)
                )
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Directory holding an existing manifest; the other keys are ignored.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<FileSizeDistribution>,
    pub files: u64,
    pub static_fraction: f64,
    pub missions: u32,
    pub mission_skew_s: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            manifest: None,
            preset: None,
            distribution: None,
            files: 10_000,
            static_fraction: 1.0,
            missions: 1,
            mission_skew_s: 0.0,
        }
    }
}

impl DatasetSection {
    pub fn spec(&self, seed: u64) -> Result<DatasetSpec, RunError> {
        let distribution = match (&self.preset, &self.distribution) {
            (Some(_), Some(_)) => {
                return Err(RunError::Config(
                    "dataset: give either preset or distribution, not both".into(),
                ))
            }
            (Some(p), None) => FileSizeDistribution::preset(p)?,
            (None, Some(d)) => d.clone(),
            (None, None) => FileSizeDistribution::dsda_main(),
        };
        let spec = DatasetSpec {
            total_files: self.files,
            static_fraction: self.static_fraction,
            distribution,
            mission_count: self.missions,
            mission_skew_s: self.mission_skew_s,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A preset name plus explicit keys that override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(flatten)]
    pub overrides: toml::Table,
}

impl WorkloadSection {
    pub fn set_override(&mut self, key: &str, value: impl Into<toml::Value>) {
        self.overrides.insert(key.to_owned(), value.into());
    }

    pub fn spec(&self, seed: u64) -> Result<WorkloadSpec, RunError> {
        let mut base = WorkloadSpec::default();
        if let Some(p) = &self.preset {
            base = workload::preset(p, base)?;
        }
        let mut table =
            toml::Table::try_from(&base).map_err(|e| RunError::Config(e.to_string()))?;
        for (k, v) in &self.overrides {
            if k == "seed" {
                return Err(RunError::Config(
                    "workload: set the seed at the top level".into(),
                ));
            }
            table.insert(k.clone(), v.clone());
        }
        let mut spec: WorkloadSpec = table
            .try_into()
            .map_err(|e: toml::de::Error| RunError::Config(format!("workload: {}", e.message())))?;
        spec.seed = seed;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BackendSection {
    Short(String),
    Full(BackendConfig),
}

impl Default for BackendSection {
    fn default() -> Self {
        BackendSection::Short("tape".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub formats: Vec<String>,
    pub bandwidth_window_us: Micros,
    /// Bill storage up to this virtual time instead of the last completion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_horizon_us: Option<Micros>,
    pub trace: bool,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            formats: vec!["json".into(), "csv".into(), "plot-data".into()],
            bandwidth_window_us: MICROS_PER_MINUTE,
            cost_horizon_us: None,
            trace: true,
        }
    }
}

impl ReportSection {
    pub fn formats(&self) -> Result<Vec<Format>, RunError> {
        self.formats
            .iter()
            .map(|f| f.parse().map_err(RunError::Config))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub catalog: String,
    pub dataset: DatasetSection,
    pub workload: WorkloadSection,
    pub backend: BackendSection,
    pub sessions: SessionConfig,
    pub report: ReportSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("coldbench-out"),
            catalog: DEFAULT_CATALOG.to_owned(),
            dataset: DatasetSection::default(),
            workload: WorkloadSection::default(),
            backend: BackendSection::default(),
            sessions: SessionConfig::default(),
            report: ReportSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Everything a run depends on, fully expanded. Echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRun {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSpec>,
    pub workload: WorkloadSpec,
    pub backend: BackendConfig,
    pub sessions: SessionConfig,
    pub report: ReportSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve_path(&self.out)
    }

    pub fn pricing_catalog(&self) -> Result<PricingCatalog, RunError> {
        if let Some(c) = PricingCatalog::builtin(&self.catalog) {
            return Ok(c);
        }
        let path = self.resolve_path(Path::new(&self.catalog));
        if !path.exists() {
            return Err(RunError::Config(format!(
                "catalog {:?} is neither built in nor an existing file",
                self.catalog
            )));
        }
        Ok(PricingCatalog::load(&path)?)
    }

    pub fn backend_config(&self) -> Result<BackendConfig, RunError> {
        let cfg = match &self.backend {
            BackendSection::Short(s) => BackendConfig::from_short(s, &self.pricing_catalog()?)?,
            BackendSection::Full(b) => b.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<ResolvedRun, RunError> {
        let (manifest, dataset) = match &self.dataset.manifest {
            Some(dir) => {
                let dir = self.resolve_path(dir);
                if !dir.is_dir() {
                    return Err(RunError::Config(format!(
                        "manifest directory {} does not exist",
                        dir.display()
                    )));
                }
                (Some(dir), None)
            }
            None => (None, Some(self.dataset.spec(self.seed)?)),
        };
        self.sessions.validate()?;
        Ok(ResolvedRun {
            seed: self.seed,
            manifest,
            dataset,
            workload: self.workload.spec(self.seed)?,
            backend: self.backend_config()?,
            sessions: self.sessions.clone(),
            report: self.report.clone(),
        })
    }
}

pub struct RunArtifacts {
    pub resolved: ResolvedRun,
    pub manifest: DatasetManifest,
    pub streams: Vec<Vec<Request>>,
    pub log: RunLog,
    pub report: BenchReport,
}

/// Generates (or loads) the dataset, preloads the backend, runs every
/// session and summarizes. Deterministic for a given config.
pub fn execute(cfg: &RunConfig) -> Result<RunArtifacts, RunError> {
    let resolved = cfg.resolve()?;
    let manifest = match (&resolved.manifest, &resolved.dataset) {
        (Some(dir), _) => DatasetManifest::read(dir)?,
        (None, Some(spec)) => generate_dataset(spec)?,
        (None, None) => unreachable!("resolve yields one of the two"),
    };
    let streams = driver::plan_sessions(&manifest, &resolved.workload, &resolved.sessions)?;
    let mut backend = resolved.backend.build(resolved.seed)?;
    driver::preload(backend.as_mut(), &manifest)?;
    let log = driver::run_benchmark(
        backend.as_mut(),
        &manifest,
        &streams,
        resolved.workload.arrival,
        resolved.sessions.warmup_requests,
    );
    let horizon = resolved
        .report
        .cost_horizon_us
        .unwrap_or(log.end_time)
        .max(log.end_time);
    let ctx = RunContext {
        backend: backend.name().to_owned(),
        seed: resolved.seed,
        stats: backend.stats(),
        cost: backend.cost_report(horizon)?,
        config: serde_json::to_value(&resolved).map_err(ReportError::from)?,
    };
    let report = report::summarize(&log.measurements, &ctx)?;
    Ok(RunArtifacts {
        resolved,
        manifest,
        streams,
        log,
        report,
    })
}

/// Writes the report formats, measurement CSV, optional trace and the
/// resolved config under `dir`. Returns the files written.
pub fn write_outputs(art: &RunArtifacts, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for format in art.resolved.report.formats()? {
        written.extend(report::emit(
            &art.report,
            &art.log.measurements,
            format,
            dir,
            art.resolved.report.bandwidth_window_us,
        )?);
    }
    let path = dir.join(MEASUREMENTS_CSV);
    let file = std::fs::File::create(&path).map_err(io_err(&path))?;
    driver::write_measurements(std::io::BufWriter::new(file), &art.log.measurements)?;
    written.push(path);
    if art.resolved.report.trace {
        let path = dir.join(TRACE_CSV);
        let file = std::fs::File::create(&path).map_err(io_err(&path))?;
        driver::write_trace(std::io::BufWriter::new(file), &art.log.trace)?;
        written.push(path);
    }
    let path = dir.join(RESOLVED_CONFIG);
    let text = toml::to_string(&art.resolved).map_err(|e| RunError::Config(e.to_string()))?;
    std::fs::write(&path, text).map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}
