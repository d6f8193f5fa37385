use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use coldbench_core::config::{RunConfig, RunError};
use coldbench_core::datagen::{generate_dataset, materialize_payloads};

use crate::{resolve_config_path, usage};

#[derive(Args)]
pub struct GenerateArgs {
    /// Run config whose [dataset] section and seed are used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Size distribution preset (dsda-main).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    files: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    static_fraction: Option<f64>,
    #[arg(long)]
    missions: Option<u32>,
    #[arg(long)]
    mission_skew: Option<f64>,
    /// Output directory; defaults to the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write payload files; refused if the dataset is larger than this.
    #[arg(long)]
    payload_bytes: Option<u64>,
}

pub fn run(a: GenerateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(&resolve_config_path(p)?)?,
        None if a.preset.is_some() || a.files.is_some() => RunConfig::default(),
        None => return Err(usage("generate needs --config or --preset/--files")),
    };
    if let Some(p) = a.preset {
        cfg.dataset.preset = Some(p);
        cfg.dataset.distribution = None;
    }
    if let Some(n) = a.files {
        cfg.dataset.files = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(f) = a.static_fraction {
        cfg.dataset.static_fraction = f;
    }
    if let Some(m) = a.missions {
        cfg.dataset.missions = m;
    }
    if let Some(s) = a.mission_skew {
        cfg.dataset.mission_skew_s = s;
    }
    let out = match a.out {
        Some(o) => o,
        None => cfg.out_dir(),
    };
    let spec = cfg.dataset.spec(cfg.seed)?;
    let manifest = generate_dataset(&spec).map_err(RunError::from)?;
    manifest.write(&out).map_err(RunError::from)?;
    if let Some(limit) = a.payload_bytes {
        materialize_payloads(&manifest, &out.join("payload"), limit).map_err(RunError::from)?;
    }
    out!("{}", serde_json::to_string_pretty(&manifest.summary)?);
    eprintln!(
        "wrote {} records to {}",
        manifest.records.len(),
        out.display()
    );
    Ok(())
}
