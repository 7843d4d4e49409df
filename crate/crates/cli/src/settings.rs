use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use advertoscope::net::{Clock, FixedClock, HttpTransport, OfflineTransport, SystemClock, Transport};
use advertoscope::pipeline::RunConfig;
use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::Cli;

/// The TOML file: every [`RunConfig`] field at top level plus CLI-only keys.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct FileConfig {
    #[serde(flatten)]
    run: RunConfig,
    data_dir: Option<PathBuf>,
}

/// Options shared by every subcommand once the config file and global
/// flags are merged.
#[derive(Debug, Clone)]
pub struct Settings {
    pub run: RunConfig,
    pub data_dir: PathBuf,
}

fn default_data_dir() -> PathBuf {
    if let Some(x) = std::env::var_os("XDG_DATA_HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(x).join("advertoscope");
    }
    match std::env::var_os("HOME").filter(|v| !v.is_empty()) {
        Some(home) => PathBuf::from(home).join(".local/share/advertoscope"),
        None => PathBuf::from(".advertoscope"),
    }
}

/// Relative paths in a config file resolve against the file's directory.
fn anchor(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl Settings {
    pub fn load(cli: &Cli) -> Result<Self> {
        let mut file = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let mut cfg: FileConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                let base = path.parent().unwrap_or(Path::new("."));
                for p in [
                    &mut cfg.run.lexicon,
                    &mut cfg.run.rules,
                    &mut cfg.run.model,
                    &mut cfg.run.cache,
                    &mut cfg.run.replay,
                    &mut cfg.run.rdap_fixtures,
                    &mut cfg.data_dir,
                ] {
                    anchor(base, p);
                }
                cfg
            }
            None => FileConfig::default(),
        };
        file.run.offline |= cli.offline;
        file.run.deterministic |= cli.deterministic;
        Ok(Self {
            run: file.run,
            data_dir: cli.data_dir.clone().or(file.data_dir).unwrap_or_else(default_data_dir),
        })
    }

    pub fn transport(&self) -> Arc<dyn Transport> {
        if self.run.offline {
            Arc::new(OfflineTransport)
        } else {
            Arc::new(HttpTransport::new(Duration::from_secs(self.run.timeout_secs.max(1))))
        }
    }

    pub fn clock(&self, now: Option<DateTime<Utc>>) -> Arc<dyn Clock> {
        match now {
            Some(t) => Arc::new(FixedClock(t)),
            None => Arc::new(SystemClock),
        }
    }
}
