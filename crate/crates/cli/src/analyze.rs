use std::io::Write;
use std::path::PathBuf;

use advertoscope::pipeline::{group_by_domain, load_inputs, run_batch, AuditReport, BatchOutput, DomainVerdict};
use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use clap::{Args, ValueEnum};

use crate::settings::Settings;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Jsonl,
    Csv,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Directory of .html/.json pages, a single page, or a .txt list of URLs.
    pub input: PathBuf,
    /// Trained forest for the content stage. Without one, pages stop at the structure stage.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Disclaimer lexicon TSV (defaults to the bundled seed lexicon).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Selector rules TSV (defaults to the bundled rules).
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Engine report cache file.
    #[arg(long, env = "ADVERTOSCOPE_CACHE")]
    pub cache: Option<PathBuf>,
    /// Recorded engine output to replay instead of live engines.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Add the RDAP registration engine.
    #[arg(long)]
    pub rdap: bool,
    /// Directory of `<domain>.json` RDAP responses.
    #[arg(long)]
    pub rdap_fixtures: Option<PathBuf>,
    /// Minimum contrast ratio counted as legible.
    #[arg(long)]
    pub aa_threshold: Option<f64>,
    /// Longest ambiguous disclosure still classed as a banner.
    #[arg(long)]
    pub banner_max_tokens: Option<usize>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Emit one verdict per registrable domain instead of per page.
    #[arg(long)]
    pub group_by_domain: bool,
    /// Write reports here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Write the batch summary here instead of stderr.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Fix the clock used for cache freshness and report times.
    #[arg(long)]
    pub now: Option<DateTime<Utc>>,
}

const CSV_HEADER: [&str; 17] = [
    "url",
    "domain",
    "mode",
    "verdict",
    "is_candidate",
    "structure_matches",
    "content_status",
    "content_label",
    "content_probability",
    "disclosures",
    "banners",
    "disclaimers",
    "share_below_median_font",
    "share_below_aa",
    "ttr_main",
    "linsear_main",
    "linsear_disclaimer",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn json_name<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn csv_row(r: &AuditReport) -> Vec<String> {
    let s = &r.darkpatterns.summary;
    vec![
        r.url.clone(),
        opt(r.domain.as_deref()),
        json_name(&r.mode),
        r.verdict.as_str().to_string(),
        r.structure.is_candidate.to_string(),
        r.structure.matches.len().to_string(),
        json_name(&r.content.status),
        opt(r.content.label.map(|l| l.as_str())),
        opt(r.content.probability),
        s.disclosures.to_string(),
        s.banners.to_string(),
        s.disclaimers.to_string(),
        opt(s.share_below_median_font),
        opt(s.share_below_aa),
        opt(r.metrics.ttr_main),
        opt(r.metrics.linsear_main),
        opt(r.metrics.linsear_disclaimer),
    ]
}

fn render(out: &BatchOutput, format: Format, by_domain: bool) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match (format, by_domain) {
        (Format::Jsonl, false) => buf.extend_from_slice(out.to_jsonl().as_bytes()),
        (Format::Jsonl, true) => {
            for d in group_by_domain(&out.reports) {
                serde_json::to_writer(&mut buf, &d)?;
                buf.push(b'\n');
            }
        }
        (Format::Csv, false) => {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(CSV_HEADER)?;
            for r in &out.reports {
                w.write_record(csv_row(r))?;
            }
            w.flush()?;
        }
        (Format::Csv, true) => {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["domain", "pages", "verdict"])?;
            for DomainVerdict { domain, pages, verdict } in group_by_domain(&out.reports) {
                w.write_record([domain, pages.to_string(), verdict.as_str().to_string()])?;
            }
            w.flush()?;
        }
    }
    Ok(buf)
}

pub fn run(settings: &Settings, args: AnalyzeArgs) -> Result<u8> {
    let mut cfg = settings.run.clone();
    macro_rules! set {
        ($($field:ident),*) => { $( if args.$field.is_some() { cfg.$field = args.$field.clone(); } )* };
    }
    set!(model, lexicon, rules, cache, replay, rdap_fixtures, jobs);
    cfg.rdap |= args.rdap;
    if let Some(aa) = args.aa_threshold {
        cfg.thresholds.aa = aa;
    }
    if let Some(n) = args.banner_max_tokens {
        cfg.thresholds.banner_max_tokens = n;
    }

    let transport = settings.transport();
    let pipeline = cfg
        .build_pipeline(transport.clone(), settings.clock(args.now))
        .context("loading run configuration")?;
    let inputs = load_inputs(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    log::info!("analyzing {} inputs", inputs.len());
    let out = run_batch(&inputs, &pipeline, transport.as_ref(), cfg.jobs);

    let body = render(&out, args.format, args.group_by_domain)?;
    match &args.output {
        Some(p) => std::fs::write(p, &body).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(&body)?,
    }
    let summary = serde_json::to_string(&out.summary)?;
    match &args.summary {
        Some(p) => std::fs::write(p, summary + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => eprintln!("{summary}"),
    }
    Ok(out.exit_code() as u8)
}
