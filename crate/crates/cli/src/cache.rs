use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use advertoscope::features::ReportCache;
use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use clap::{Args, Subcommand};
use serde::Serialize;

use crate::settings::Settings;

#[derive(Args, Debug)]
pub struct CacheArgs {
    /// Cache file (defaults to the configured cache or `ADVERTOSCOPE_CACHE`).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Override the configured time-to-live in days.
    #[arg(long)]
    pub ttl_days: Option<i64>,
    /// Reference time for expiry (default: now).
    #[arg(long)]
    pub now: Option<DateTime<Utc>>,
    #[command(subcommand)]
    pub command: CacheCommand,
}

#[derive(Subcommand, Debug)]
pub enum CacheCommand {
    /// Record counts per engine and how many are stale.
    Stats,
    /// Print every live record as JSON lines.
    List,
    /// Drop superseded and expired records from the file.
    Compact,
}

#[derive(Serialize)]
struct Stats {
    path: String,
    ttl_days: i64,
    records: usize,
    fresh: usize,
    stale: usize,
    skipped_lines: usize,
    per_engine: BTreeMap<String, usize>,
}

pub fn run(settings: &Settings, args: CacheArgs) -> Result<u8> {
    let path = args
        .cache
        .clone()
        .or_else(|| settings.run.cache_path())
        .context("no cache file: pass --cache or set ADVERTOSCOPE_CACHE")?;
    let ttl_days = args.ttl_days.unwrap_or(settings.run.cache_ttl_days);
    let cache = ReportCache::open(&path, chrono::Duration::days(ttl_days))
        .with_context(|| format!("opening {}", path.display()))?;
    let now = args.now.unwrap_or_else(Utc::now);
    let mut out = std::io::stdout().lock();
    match args.command {
        CacheCommand::Stats => {
            let records = cache.records();
            let fresh = records.iter().filter(|r| now - r.retrieved_at <= cache.ttl()).count();
            let mut per_engine = BTreeMap::new();
            for r in &records {
                *per_engine.entry(r.engine_id.clone()).or_insert(0) += 1;
            }
            let stats = Stats {
                path: path.display().to_string(),
                ttl_days,
                records: records.len(),
                fresh,
                stale: records.len() - fresh,
                skipped_lines: cache.skipped_lines(),
                per_engine,
            };
            serde_json::to_writer_pretty(&mut out, &stats)?;
            writeln!(out)?;
        }
        CacheCommand::List => {
            for r in cache.records() {
                serde_json::to_writer(&mut out, &r)?;
                writeln!(out)?;
            }
        }
        CacheCommand::Compact => {
            let before = cache.records().len();
            let kept = cache.compact(now).with_context(|| format!("compacting {}", path.display()))?;
            log::info!("kept {kept} of {before} records");
            writeln!(out, "{}", serde_json::json!({"kept": kept, "removed": before - kept}))?;
        }
    }
    Ok(0)
}
