use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use coldbench_core::config::{execute, write_outputs, BackendSection, RunConfig};

use crate::{resolve_config_path, usage};

/// Flags take precedence over the config file, which takes precedence over
/// built-in defaults.
#[derive(Args)]
pub struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// tape, cache+tape, cloud:<tier> or hybrid.
    #[arg(long)]
    backend: Option<String>,
    /// Workload preset: cp1-skew, cp2-batch, cp3-priority, cp4-smallfile.
    #[arg(long)]
    workload: Option<String>,
    /// Existing manifest directory instead of generating a dataset.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    files: Option<u64>,
    #[arg(long)]
    requests: Option<u64>,
    #[arg(long)]
    sessions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(a: RunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(&resolve_config_path(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(b) = a.backend {
        cfg.backend = BackendSection::Short(b);
    }
    if let Some(w) = a.workload {
        cfg.workload.preset = Some(w);
    }
    if let Some(m) = a.manifest {
        cfg.dataset.manifest = Some(std::env::current_dir()?.join(m));
    }
    if let Some(n) = a.files {
        cfg.dataset.files = n;
    }
    if let Some(n) = a.requests {
        let n = i64::try_from(n).map_err(|_| usage(format!("--requests {n} is too large")))?;
        cfg.workload.set_override("request_count", n);
    }
    if let Some(n) = a.sessions {
        cfg.sessions.session_count = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let out = match a.out {
        Some(o) => o,
        None => cfg.out_dir(),
    };
    let artifacts = execute(&cfg)?;
    let written = write_outputs(&artifacts, &out)?;
    out!("{}", artifacts.report.headline());
    for w in written {
        eprintln!("wrote {}", w.display());
    }
    Ok(())
}
