//! End-to-end page audit: structure stage, content stage, their conjunction,
//! and disclosure metrics for every page.

mod batch;
mod config;

use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use batch::{
    group_by_domain, load_inputs, run_batch, BatchOutput, BatchSummary, DomainVerdict, InputFailure, InputSource,
    VerdictCounts,
};
pub use config::{ConfigError, EngineEndpoint, RunConfig, Thresholds};

use crate::corpus::url_etld_plus_one;
use crate::darkpattern::{analyze_dark_patterns, DarkPatternConfig, DarkPatternReport, DarkPatternSummary};
use crate::features::{
    collect_reports, encode_and_impute, CollectOptions, EngineClient, EngineReport, ReportCache, SignalValue,
    PAGE_SIZE_SIGNAL,
};
use crate::forest::{ForestModel, Label};
use crate::net::{Clock, SystemClock};
use crate::page::{Mode, PageDocument};
use crate::structure::{structure_verdict, DisclaimerLexicon, MatchKind, RuleSet, StructureMatch, StructureVerdict};
use crate::textmetrics::text_metrics;

/// Bumped on any change to the serialized report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ProblematicAdvertorial,
    CandidateOnly,
    Benign,
}

impl Verdict {
    /// Problematic only when both stages concur.
    pub fn combine(is_candidate: bool, content: Option<Label>) -> Self {
        match (is_candidate, content) {
            (false, _) => Verdict::Benign,
            (true, Some(Label::Suspicious)) => Verdict::ProblematicAdvertorial,
            (true, _) => Verdict::CandidateOnly,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::ProblematicAdvertorial => "problematic_advertorial",
            Verdict::CandidateOnly => "candidate_only",
            Verdict::Benign => "benign",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentStatus {
    Evaluated,
    /// Structure stage did not fire; the classifier was not invoked.
    Skipped,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentVerdict {
    pub status: ContentStatus,
    pub label: Option<Label>,
    pub probability: Option<f64>,
    /// Schema features with an observed (not imputed) value.
    pub features_used: usize,
    pub features_total: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ContentVerdict {
    fn skipped() -> Self {
        Self {
            status: ContentStatus::Skipped,
            label: None,
            probability: None,
            features_used: 0,
            features_total: 0,
            reason: None,
        }
    }

    fn unavailable(reason: impl Into<String>, features_total: usize) -> Self {
        Self {
            status: ContentStatus::Unavailable,
            label: None,
            probability: None,
            features_used: 0,
            features_total,
            reason: Some(reason.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityMetrics {
    pub ttr_main: Option<f64>,
    pub ttr_disclaimer: Option<f64>,
    pub linsear_main: Option<f64>,
    pub linsear_disclaimer: Option<f64>,
    pub tokens_main: usize,
    pub tokens_disclaimer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageStats {
    pub text_elements: usize,
    pub visible_text_chars: usize,
    /// 0 for snapshot input.
    pub html_chars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub analyzed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub url: String,
    pub domain: Option<String>,
    pub mode: Mode,
    pub page: PageStats,
    pub structure: StructureVerdict,
    pub content: ContentVerdict,
    pub verdict: Verdict,
    pub darkpatterns: DarkPatternReport,
    pub metrics: ReadabilityMetrics,
    pub timestamps: Timestamps,
}

impl AuditReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextSplit {
    pub main_text: String,
    pub disclaimer_text: String,
}

/// Elements carrying any phrase match (banner or disclaimer) form the
/// disclaimer side, whole; every other visible element is main text.
pub fn split_main_vs_disclaimer(doc: &PageDocument, matches: &[StructureMatch]) -> TextSplit {
    let disclosure: std::collections::BTreeSet<usize> = matches
        .iter()
        .filter(|m| m.kind == MatchKind::Phrase)
        .map(|m| m.element_index)
        .collect();
    let mut main = Vec::new();
    let mut disclaimer = Vec::new();
    for (i, el) in doc.visible_indexed() {
        if disclosure.contains(&i) {
            disclaimer.push(el.text.as_str());
        } else {
            main.push(el.text.as_str());
        }
    }
    TextSplit {
        main_text: main.join(" "),
        disclaimer_text: disclaimer.join(" "),
    }
}

fn empty_darkpatterns() -> DarkPatternReport {
    DarkPatternReport {
        records: Vec::new(),
        page_median_font_px: None,
        summary: DarkPatternSummary {
            disclosures: 0,
            banners: 0,
            disclaimers: 0,
            share_below_median_font: None,
            share_below_aa: None,
        },
    }
}

/// Registrable domain of the page, or its host when that fails.
pub fn page_domain(doc: &PageDocument) -> Option<String> {
    url_etld_plus_one(&doc.url).map(|r| r.domain).ok().or_else(|| doc.host())
}

/// Everything needed to audit pages. The model and engines are optional;
/// without them the content stage reports `unavailable`.
pub struct Pipeline {
    pub lexicon: DisclaimerLexicon,
    pub rules: RuleSet,
    pub model: Option<ForestModel>,
    pub clients: Vec<Arc<dyn EngineClient>>,
    pub cache: Option<ReportCache>,
    pub clock: Arc<dyn Clock>,
    pub collect: CollectOptions,
    pub darkpattern: DarkPatternConfig,
    /// Zeroes report timestamps.
    pub deterministic: bool,
}

impl Pipeline {
    pub fn new(lexicon: DisclaimerLexicon, rules: RuleSet) -> Self {
        Self {
            lexicon,
            rules,
            model: None,
            clients: Vec::new(),
            cache: None,
            clock: Arc::new(SystemClock),
            collect: CollectOptions::default(),
            darkpattern: DarkPatternConfig::default(),
            deterministic: false,
        }
    }

    pub fn seeded() -> Self {
        Self::new(DisclaimerLexicon::seed(), RuleSet::seed())
    }

    pub fn with_model(mut self, model: ForestModel) -> Self {
        self.model = Some(model);
        self
    }

    pub fn with_clients(mut self, clients: Vec<Arc<dyn EngineClient>>) -> Self {
        self.clients = clients;
        self
    }

    pub fn with_cache(mut self, cache: ReportCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn offline(mut self, offline: bool) -> Self {
        self.collect.offline = offline;
        self
    }

    pub fn deterministic(mut self, on: bool) -> Self {
        self.deterministic = on;
        self
    }

    fn page_report(&self, domain: &str, doc: &PageDocument) -> EngineReport {
        let value = if doc.html_char_count > 0 {
            SignalValue::Number(doc.html_char_count as f64)
        } else {
            SignalValue::Missing
        };
        EngineReport {
            engine_id: "local".into(),
            domain: domain.to_string(),
            failure: value.is_missing().then(|| "no raw html".to_string()),
            signals: [(PAGE_SIZE_SIGNAL.to_string(), value)].into(),
            retrieved_at: self.clock.now(),
        }
    }

    /// Unavailable when no model is loaded or every signal from a
    /// non-`local.*` engine is missing.
    pub fn content_stage(&self, doc: &PageDocument) -> ContentVerdict {
        let Some(model) = &self.model else {
            return ContentVerdict::unavailable("no model loaded", 0);
        };
        let total = model.schema.len();
        let Some(domain) = page_domain(doc) else {
            return ContentVerdict::unavailable("page url has no domain", total);
        };
        let mut reports = collect_reports(&domain, &self.clients, self.cache.as_ref(), self.clock.as_ref(), &self.collect);
        reports.push(self.page_report(&domain, doc));
        let vector = match encode_and_impute(&reports, &model.schema) {
            Ok(v) => v,
            Err(e) => return ContentVerdict::unavailable(e.to_string(), total),
        };
        let remote_observed = model
            .schema
            .features
            .iter()
            .zip(&vector.missing_mask)
            .any(|(f, missing)| !missing && !f.name.starts_with("local."));
        if !remote_observed {
            let offline = if self.collect.offline { " (offline)" } else { "" };
            return ContentVerdict::unavailable(format!("no engine signals for {domain}{offline}"), total);
        }
        match model.predict(&vector) {
            Ok(p) => ContentVerdict {
                status: ContentStatus::Evaluated,
                label: Some(p.label),
                probability: Some(p.probability),
                features_used: vector.missing_mask.iter().filter(|m| !**m).count(),
                features_total: total,
                reason: None,
            },
            Err(e) => ContentVerdict::unavailable(e.to_string(), total),
        }
    }

    pub fn classify_page(&self, doc: &PageDocument) -> AuditReport {
        let structure = structure_verdict(doc, &self.lexicon, &self.rules);
        let content = if structure.is_candidate {
            self.content_stage(doc)
        } else {
            ContentVerdict::skipped()
        };
        let verdict = Verdict::combine(structure.is_candidate, content.label);
        let darkpatterns = analyze_dark_patterns(doc, &structure.matches, &self.darkpattern).unwrap_or_else(|e| {
            log::warn!("{}: {e}", doc.url);
            empty_darkpatterns()
        });
        let split = split_main_vs_disclaimer(doc, &structure.matches);
        let main = text_metrics(&split.main_text).ok();
        let disc = text_metrics(&split.disclaimer_text).ok();
        let metrics = ReadabilityMetrics {
            ttr_main: main.as_ref().map(|m| m.ttr),
            ttr_disclaimer: disc.as_ref().map(|m| m.ttr),
            linsear_main: main.as_ref().map(|m| m.linsear_write),
            linsear_disclaimer: disc.as_ref().map(|m| m.linsear_write),
            tokens_main: main.as_ref().map_or(0, |m| m.tokens),
            tokens_disclaimer: disc.as_ref().map_or(0, |m| m.tokens),
        };
        let analyzed_at = if self.deterministic {
            DateTime::<Utc>::UNIX_EPOCH
        } else {
            self.clock.now()
        };
        AuditReport {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            url: doc.url.clone(),
            domain: page_domain(doc),
            mode: doc.mode,
            page: PageStats {
                text_elements: doc.elements.len(),
                visible_text_chars: doc.plain_text.chars().count(),
                html_chars: doc.html_char_count,
            },
            structure,
            content,
            verdict,
            darkpatterns,
            metrics,
            timestamps: Timestamps { analyzed_at },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::page::{parse_static, RawPage};

    fn doc(html: &str) -> PageDocument {
        let page = RawPage::new("https://news.example.com/story", html, DateTime::<Utc>::UNIX_EPOCH).unwrap();
        parse_static(&page).unwrap()
    }

    #[test]
    fn conjunction_table() {
        assert_eq!(Verdict::combine(false, Some(Label::Suspicious)), Verdict::Benign);
        assert_eq!(Verdict::combine(true, Some(Label::Suspicious)), Verdict::ProblematicAdvertorial);
        assert_eq!(Verdict::combine(true, Some(Label::Benign)), Verdict::CandidateOnly);
        assert_eq!(Verdict::combine(true, None), Verdict::CandidateOnly);
    }

    #[test]
    fn negative_structure_skips_content() {
        let r = Pipeline::seeded().classify_page(&doc("<p>Plain news about the weather today.</p>"));
        assert_eq!(r.verdict, Verdict::Benign);
        assert_eq!(r.content.status, ContentStatus::Skipped);
        assert!(r.metrics.ttr_disclaimer.is_none());
        assert_eq!(r.domain.as_deref(), Some("example.com"));
    }

    #[test]
    fn candidate_without_model_is_candidate_only() {
        let r = Pipeline::seeded().classify_page(&doc("<div>Advertorial</div><p>Miracle cream works wonders.</p>"));
        assert!(r.structure.is_candidate);
        assert_eq!(r.content.status, ContentStatus::Unavailable);
        assert_eq!(r.verdict, Verdict::CandidateOnly);
        assert_eq!(r.darkpatterns.summary.banners, 1);
    }

    #[test]
    fn split_partitions_visible_text() {
        let d = doc("<p>Main story text here.</p><div>Advertorial</div><p>More story.</p>");
        let v = structure_verdict(&d, &DisclaimerLexicon::seed(), &RuleSet::empty());
        let s = split_main_vs_disclaimer(&d, &v.matches);
        assert_eq!(s.disclaimer_text, "Advertorial");
        assert_eq!(s.main_text, "Main story text here. More story.");
        let none = split_main_vs_disclaimer(&d, &[]);
        assert!(none.disclaimer_text.is_empty());
        assert_eq!(none.main_text, d.plain_text);
    }

    #[test]
    fn deterministic_reports_are_repeatable() {
        let d = doc("<div>Advertorial</div><p>Story.</p>");
        let p = Pipeline::seeded().deterministic(true);
        let a = p.classify_page(&d).to_json_line();
        assert_eq!(a, p.classify_page(&d).to_json_line());
        assert!(a.contains("1970-01-01T00:00:00Z"));
    }
}
