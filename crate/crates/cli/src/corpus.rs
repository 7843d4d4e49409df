use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use advertoscope::corpus::{
    dhash, hamming_near_duplicates, ks_test, load_gray, registration_summary, text_length_report, third_party_stats,
    DomainRecord, ImageHash, RdapClient, RequestLog, ThirdPartyStats, TrackerList,
};
use advertoscope::net::{FixtureTransport, Transport};
use advertoscope::page::{parse_static, PageDocument, RawPage};
use advertoscope::textmetrics::text_metrics;
use anyhow::{bail, Context, Result};
use chrono::{NaiveDate, Utc};
use clap::{Args, Subcommand};
use serde::Serialize;

use crate::data;
use crate::settings::Settings;

fn write_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = std::io::stdout().lock();
    for it in items {
        serde_json::to_writer(&mut out, &it)?;
        writeln!(out)?;
    }
    Ok(())
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn parse_html_file(path: &Path) -> Result<PageDocument> {
    let html = read_text(path)?;
    let abs = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    let url = format!("file://{}", abs.display());
    let raw = RawPage::new(&url, html, Utc::now()).with_context(|| path.display().to_string())?;
    parse_static(&raw).with_context(|| path.display().to_string())
}

/// Files in `dir` (sorted, non-recursive) with one of `exts`.
fn files_with(dir: &Path, exts: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
        })
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Text file, or `-` for stdin.
    #[arg(default_value = "-")]
    pub input: PathBuf,
    /// Treat the input as HTML and measure its visible text.
    #[arg(long)]
    pub html: bool,
}

pub fn metrics(args: MetricsArgs) -> Result<u8> {
    let text = if args.html {
        let html = read_text(&args.input)?;
        let raw = RawPage::new("file:///stdin", html, Utc::now())?;
        parse_static(&raw)?.plain_text
    } else {
        read_text(&args.input)?
    };
    print_json(&text_metrics(&text)?)?;
    Ok(0)
}

#[derive(Args, Debug)]
pub struct CorpusStatsArgs {
    #[command(subcommand)]
    pub command: CorpusCommand,
}

#[derive(Subcommand, Debug)]
pub enum CorpusCommand {
    /// Median text and HTML lengths per group with pairwise KS tests. Each
    /// subdirectory of `dir` is one group of `.html` pages.
    Lengths { dir: PathBuf },
    /// Distinct third parties and trackers per HAR capture.
    ThirdParty {
        #[arg(required = true)]
        har: Vec<PathBuf>,
        /// Disconnect `services.json`, or plain lines of `domain [company]`.
        #[arg(long)]
        trackers: PathBuf,
    },
    /// Two-sample KS test over two files of numbers, one per line.
    Ks { a: PathBuf, b: PathBuf },
    /// Registrar, TLD and age shares from `rdap` output.
    Registration { records: PathBuf },
}

fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    read_text(path)?
        .lines()
        .enumerate()
        .map(|(i, l)| (i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .with_context(|| format!("{}:{}: not a number: {l:?}", path.display(), i + 1))
        })
        .collect()
}

#[derive(Serialize)]
struct SourcedStats<'a> {
    source: String,
    #[serde(flatten)]
    stats: &'a ThirdPartyStats,
}

pub fn corpus_stats(settings: &Settings, args: CorpusStatsArgs) -> Result<u8> {
    match args.command {
        CorpusCommand::Lengths { dir } => {
            let mut groups = BTreeMap::new();
            for entry in std::fs::read_dir(&dir).with_context(|| format!("listing {}", dir.display()))? {
                let path = entry?.path();
                if !path.is_dir() {
                    continue;
                }
                let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                let docs = files_with(&path, &["html", "htm"])?
                    .iter()
                    .map(|p| parse_html_file(p))
                    .collect::<Result<Vec<_>>>()?;
                if !docs.is_empty() {
                    groups.insert(name, docs);
                }
            }
            if groups.is_empty() {
                bail!("{}: no subdirectories with .html pages", dir.display());
            }
            print_json(&text_length_report(&groups)?)?;
        }
        CorpusCommand::ThirdParty { har, trackers } => {
            let psl = data::suffix_list(settings)?;
            let text = read_text(&trackers)?;
            let list = if trackers.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
                TrackerList::from_disconnect(&text, psl).with_context(|| trackers.display().to_string())?
            } else {
                TrackerList::from_lines(&text, psl)
            };
            let mut rows = Vec::with_capacity(har.len());
            for h in &har {
                let log = RequestLog::from_har(&read_text(h)?, psl).with_context(|| h.display().to_string())?;
                rows.push((h.display().to_string(), third_party_stats(&log, &list, psl)));
            }
            write_jsonl(rows.iter().map(|(source, stats)| SourcedStats { source: source.clone(), stats }))?;
        }
        CorpusCommand::Ks { a, b } => {
            print_json(&ks_test(&read_numbers(&a)?, &read_numbers(&b)?)?)?;
        }
        CorpusCommand::Registration { records } => {
            let recs = read_text(&records)?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<Result<Vec<DomainRecord>, _>>()
                .with_context(|| records.display().to_string())?;
            print_json(&registration_summary(&recs))?;
        }
    }
    Ok(0)
}

#[derive(Args, Debug)]
pub struct HashImagesArgs {
    /// Image files or directories of them (PGM; PNG/JPEG with the `images` feature).
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Maximum Hamming distance for a near duplicate.
    #[arg(long)]
    pub threshold: Option<u32>,
}

#[derive(Serialize)]
struct PairOut<'a> {
    a: &'a str,
    b: &'a str,
    distance: u32,
}

#[derive(Serialize)]
struct HashOut<'a> {
    threshold: u32,
    hashes: &'a [ImageHash],
    near_duplicates: Vec<PairOut<'a>>,
}

pub fn hash_images(settings: &Settings, args: HashImagesArgs) -> Result<u8> {
    let mut files = Vec::new();
    for p in &args.paths {
        if p.is_dir() {
            files.extend(files_with(p, &["pgm", "png", "jpg", "jpeg"])?);
        } else {
            files.push(p.clone());
        }
    }
    let hashes = files
        .iter()
        .map(|f| {
            let img = load_gray(f).with_context(|| f.display().to_string())?;
            Ok(dhash(&img, &f.display().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let threshold = args.threshold.unwrap_or(settings.run.thresholds.dhash);
    let pairs = hamming_near_duplicates(&hashes, threshold)?;
    print_json(&HashOut {
        threshold,
        hashes: &hashes,
        near_duplicates: pairs
            .iter()
            .map(|p| PairOut { a: &hashes[p.a].source, b: &hashes[p.b].source, distance: p.distance })
            .collect(),
    })?;
    Ok(0)
}

#[derive(Args, Debug)]
pub struct RdapArgs {
    /// Domains to look up.
    pub domains: Vec<String>,
    /// File with one domain per line.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Serve `<domain>.json` responses from this directory instead of the network.
    #[arg(long)]
    pub fixtures: Option<PathBuf>,
    /// Date ages are measured to (default: today).
    #[arg(long)]
    pub reference_date: Option<NaiveDate>,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Minimum delay between requests to one RDAP server.
    #[arg(long, default_value_t = 1000)]
    pub delay_ms: u64,
    /// Write the registration summary here instead of stderr.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

pub fn rdap(settings: &Settings, args: RdapArgs) -> Result<u8> {
    let mut domains = args.domains.clone();
    if let Some(f) = &args.file {
        domains.extend(
            read_text(f)?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        );
    }
    if domains.is_empty() {
        bail!("no domains given");
    }
    let transport: Arc<dyn Transport> = match (&args.fixtures, settings.run.offline) {
        (Some(dir), _) if !dir.is_dir() => bail!("{}: not a directory", dir.display()),
        (Some(dir), _) => Arc::new(FixtureTransport::new(dir)),
        (None, true) => bail!("--offline lookups need --fixtures"),
        (None, false) => settings.transport(),
    };
    let reference = args
        .reference_date
        .or(settings.run.rdap_reference_date)
        .unwrap_or_else(|| Utc::now().date_naive());
    let client = RdapClient::new(data::rdap_bootstrap(settings)?, transport, reference)
        .with_per_host_delay(Duration::from_millis(if args.fixtures.is_some() { 0 } else { args.delay_ms }));
    let records = client.lookup_batch(&domains, args.concurrency);
    write_jsonl(&records)?;
    let summary = serde_json::to_string(&registration_summary(&records))?;
    match &args.summary {
        Some(p) => std::fs::write(p, summary + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => eprintln!("{summary}"),
    }
    Ok(0)
}
