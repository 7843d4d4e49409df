use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AuditReport, Pipeline, Verdict};
use crate::darkpattern::lower_median;
use crate::net::Transport;
use crate::page::{ingest_snapshot, parse_static, PageDocument, RawPage, RenderedSnapshot};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "source", rename_all = "snake_case")]
pub enum InputSource {
    /// Raw HTML on disk; the page URL comes from `<link rel=canonical>` or
    /// `og:url`, else the file path.
    Html(PathBuf),
    /// A rendered snapshot document.
    Snapshot(PathBuf),
    /// Fetched through the batch transport.
    Url(String),
}

impl InputSource {
    pub fn describe(&self) -> String {
        match self {
            InputSource::Html(p) | InputSource::Snapshot(p) => p.display().to_string(),
            InputSource::Url(u) => u.clone(),
        }
    }
}

fn is_ext(p: &Path, exts: &[&str]) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

fn classify_path(p: &Path) -> Option<InputSource> {
    if is_ext(p, &["html", "htm"]) {
        Some(InputSource::Html(p.to_path_buf()))
    } else if is_ext(p, &["json"]) {
        Some(InputSource::Snapshot(p.to_path_buf()))
    } else {
        None
    }
}

/// A directory of `.html`/`.json` files (sorted by name, non-recursive), a
/// single such file, or a `.txt` list of URLs (one per line, `#` comments).
pub fn load_inputs(path: &Path) -> std::io::Result<Vec<InputSource>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        return Ok(files.iter().filter_map(|p| classify_path(p)).collect());
    }
    if is_ext(path, &["txt"]) {
        let text = std::fs::read_to_string(path)?;
        return Ok(text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| InputSource::Url(l.to_string()))
            .collect());
    }
    classify_path(path).map(|s| vec![s]).ok_or_else(|| {
        std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("{}: expected a directory, .html, .json or .txt", path.display()),
        )
    })
}

fn declared_url(html: &str) -> Option<String> {
    let doc = scraper::Html::parse_document(html);
    let sel = scraper::Selector::parse(r#"link[rel~="canonical"], meta[property="og:url"]"#).expect("static selector");
    doc.select(&sel).find_map(|e| {
        let v = e.value();
        v.attr("href").or_else(|| v.attr("content")).map(str::trim).filter(|u| url::Url::parse(u).is_ok()).map(str::to_string)
    })
}

fn file_url(path: &Path) -> String {
    let abs = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    url::Url::from_file_path(&abs)
        .map(|u| u.to_string())
        .unwrap_or_else(|_| format!("file://{}", abs.display()))
}

fn load_document(input: &InputSource, pipeline: &Pipeline, fetcher: &dyn Transport) -> Result<PageDocument, String> {
    let now = pipeline.clock.now();
    match input {
        InputSource::Html(path) => {
            let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
            let html = String::from_utf8_lossy(&bytes);
            let url = declared_url(&html).unwrap_or_else(|| file_url(path));
            let page = RawPage::new(&url, html.into_owned(), now).map_err(|e| e.to_string())?;
            parse_static(&page).map_err(|e| e.to_string())
        }
        InputSource::Snapshot(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            let snap = RenderedSnapshot::from_json(&text).map_err(|e| e.to_string())?;
            ingest_snapshot(&snap).map_err(|e| e.to_string())
        }
        InputSource::Url(u) => {
            let resp = fetcher.get(u).map_err(|e| e.to_string())?;
            if !resp.is_success() {
                return Err(format!("http status {}", resp.status));
            }
            let page = RawPage::from_bytes(u, &resp.body, now).map_err(|e| e.to_string())?;
            parse_static(&page).map_err(|e| e.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFailure {
    pub index: usize,
    pub input: String,
    pub error: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub problematic_advertorial: usize,
    pub candidate_only: usize,
    pub benign: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub inputs: usize,
    pub analyzed: usize,
    pub failed: usize,
    pub verdicts: VerdictCounts,
    pub median_visible_text_chars: Option<f64>,
    pub median_html_chars: Option<f64>,
    pub median_disclosure_position_pct: Option<f64>,
    pub failures: Vec<InputFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchOutput {
    /// Successful reports, in input order.
    pub reports: Vec<AuditReport>,
    pub summary: BatchSummary,
}

impl BatchOutput {
    /// 0 when every input was analyzed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.failed == 0 {
            0
        } else {
            2
        }
    }

    pub fn to_jsonl(&self) -> String {
        self.reports.iter().map(|r| r.to_json_line() + "\n").collect()
    }
}

fn summarize(inputs: usize, reports: &[AuditReport], failures: Vec<InputFailure>) -> BatchSummary {
    let mut verdicts = VerdictCounts::default();
    for r in reports {
        match r.verdict {
            Verdict::ProblematicAdvertorial => verdicts.problematic_advertorial += 1,
            Verdict::CandidateOnly => verdicts.candidate_only += 1,
            Verdict::Benign => verdicts.benign += 1,
        }
    }
    let text: Vec<f64> = reports.iter().map(|r| r.page.visible_text_chars as f64).collect();
    let html: Vec<f64> = reports.iter().filter(|r| r.page.html_chars > 0).map(|r| r.page.html_chars as f64).collect();
    let positions: Vec<f64> = reports
        .iter()
        .flat_map(|r| r.darkpatterns.records.iter().map(|d| d.position_pct))
        .collect();
    BatchSummary {
        inputs,
        analyzed: reports.len(),
        failed: failures.len(),
        verdicts,
        median_visible_text_chars: lower_median(&text),
        median_html_chars: lower_median(&html),
        median_disclosure_position_pct: lower_median(&positions),
        failures,
    }
}

/// Inputs are processed on the rayon pool (or a dedicated pool of `jobs`
/// threads); output order equals input order.
pub fn run_batch(
    inputs: &[InputSource],
    pipeline: &Pipeline,
    fetcher: &dyn Transport,
    jobs: Option<usize>,
) -> BatchOutput {
    let work = || -> Vec<Result<AuditReport, InputFailure>> {
        inputs
            .par_iter()
            .enumerate()
            .map(|(index, input)| {
                load_document(input, pipeline, fetcher)
                    .map(|doc| pipeline.classify_page(&doc))
                    .map_err(|error| InputFailure {
                        index,
                        input: input.describe(),
                        error,
                    })
            })
            .collect()
    };
    let results = match jobs.filter(|j| *j > 0) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    };
    let mut reports = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rep) => reports.push(rep),
            Err(f) => {
                log::warn!("{}: {}", f.input, f.error);
                failures.push(f);
            }
        }
    }
    let summary = summarize(inputs.len(), &reports, failures);
    BatchOutput { reports, summary }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainVerdict {
    pub domain: String,
    pub pages: usize,
    pub verdict: Verdict,
}

/// A domain is problematic if any of its pages is; otherwise candidate-only
/// if any page is; otherwise benign. Pages without a domain group by URL.
pub fn group_by_domain(reports: &[AuditReport]) -> Vec<DomainVerdict> {
    let mut by: BTreeMap<String, (usize, Verdict)> = BTreeMap::new();
    for r in reports {
        let key = r.domain.clone().unwrap_or_else(|| r.url.clone());
        let e = by.entry(key).or_insert((0, Verdict::Benign));
        e.0 += 1;
        e.1 = e.1.min(r.verdict);
    }
    by.into_iter()
        .map(|(domain, (pages, verdict))| DomainVerdict { domain, pages, verdict })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{FixedClock, OfflineTransport};
    use std::sync::Arc;

    fn pipeline() -> Pipeline {
        Pipeline::seeded().with_clock(Arc::new(FixedClock::epoch())).deterministic(true)
    }

    #[test]
    fn empty_batch() {
        let out = run_batch(&[], &pipeline(), &OfflineTransport, None);
        assert!(out.reports.is_empty());
        assert_eq!(out.summary.verdicts, VerdictCounts::default());
        assert_eq!(out.exit_code(), 0);
    }

    #[test]
    fn directory_inputs_and_failures() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("a.html"),
            r#"<html><head><link rel="canonical" href="https://shop.example.com/a"></head><body><div>Advertorial</div><p>Buy now.</p></body></html>"#,
        )
        .unwrap();
        std::fs::write(dir.path().join("b.html"), "<p>Just news.</p>").unwrap();
        std::fs::write(dir.path().join("c.json"), "{not json").unwrap();
        std::fs::write(dir.path().join("notes.md"), "ignored").unwrap();
        let inputs = load_inputs(dir.path()).unwrap();
        assert_eq!(inputs.len(), 3);
        let out = run_batch(&inputs, &pipeline(), &OfflineTransport, Some(2));
        assert_eq!(out.reports.len(), 2);
        assert_eq!(out.reports[0].url, "https://shop.example.com/a");
        assert_eq!(out.reports[0].verdict, Verdict::CandidateOnly);
        assert!(out.reports[1].url.starts_with("file://"));
        assert_eq!(out.summary.failed, 1);
        assert_eq!(out.summary.failures[0].index, 2);
        assert_eq!(out.exit_code(), 2);
    }

    #[test]
    fn url_lists_fail_offline() {
        let dir = tempfile::tempdir().unwrap();
        let list = dir.path().join("urls.txt");
        std::fs::write(&list, "# seeds\nhttps://a.example/\n\nhttps://b.example/\n").unwrap();
        let inputs = load_inputs(&list).unwrap();
        assert_eq!(inputs, vec![InputSource::Url("https://a.example/".into()), InputSource::Url("https://b.example/".into())]);
        let out = run_batch(&inputs, &pipeline(), &OfflineTransport, None);
        assert_eq!(out.summary.failed, 2);
    }

    #[test]
    fn domain_grouping() {
        let p = pipeline();
        let mk = |url: &str, html: &str| {
            let page = RawPage::new(url, html, chrono::DateTime::UNIX_EPOCH).unwrap();
            p.classify_page(&parse_static(&page).unwrap())
        };
        let mut reports = vec![
            mk("https://a.example.com/1", "<p>news</p>"),
            mk("https://www.example.com/2", "<div>Advertorial</div><p>x</p>"),
            mk("https://other.org/", "<p>news</p>"),
        ];
        let g = group_by_domain(&reports);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], DomainVerdict { domain: "example.com".into(), pages: 2, verdict: Verdict::CandidateOnly });
        reports[0].verdict = Verdict::ProblematicAdvertorial;
        assert_eq!(group_by_domain(&reports)[0].verdict, Verdict::ProblematicAdvertorial);
    }
}
