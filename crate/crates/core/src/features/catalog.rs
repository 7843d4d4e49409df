//! Signal catalog of the reputation engines and the default 45-feature schema.
//!
//! Engine identities follow the published engine list; the per-engine signal
//! choice is a reconstruction (risk scores, category verdicts, blocklist
//! flags) and is not claimed to be the original feature list.

use super::schema::{FeatureDecl, FeatureSchema, Impute};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    Number,
    Flag,
    Category(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalSpec {
    pub name: &'static str,
    pub kind: SignalKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineSpec {
    pub id: &'static str,
    pub display_name: &'static str,
    pub signals: &'static [SignalSpec],
}

impl EngineSpec {
    pub fn signal_names(&self) -> Vec<String> {
        self.signals.iter().map(|s| format!("{}.{}", self.id, s.name)).collect()
    }
}

const fn num(name: &'static str) -> SignalSpec {
    SignalSpec { name, kind: SignalKind::Number }
}

const fn flag(name: &'static str) -> SignalSpec {
    SignalSpec { name, kind: SignalKind::Flag }
}

const fn cat(name: &'static str, levels: &'static [&'static str]) -> SignalSpec {
    SignalSpec { name, kind: SignalKind::Category(levels) }
}

const VERDICT: &[&str] = &["safe", "suspicious", "malicious", "unrated"];
const RISK: &[&str] = &["low", "medium", "high", "unknown"];
const WEB_CATEGORY: &[&str] = &[
    "news", "shopping", "health", "finance", "business", "advertising", "entertainment",
    "technology", "phishing", "malware", "spam", "uncategorized",
];

pub const ENGINES: &[EngineSpec] = &[
    EngineSpec { id: "blacklist_alert", display_name: "Blacklist Alert", signals: &[num("listed_count"), flag("listed")] },
    EngineSpec { id: "cyren", display_name: "Cyren", signals: &[cat("category", WEB_CATEGORY), num("risk_score")] },
    EngineSpec { id: "fortiguard", display_name: "Fortiguard", signals: &[cat("category", WEB_CATEGORY)] },
    EngineSpec { id: "getsafeonline", display_name: "GetSafeOnline", signals: &[cat("verdict", VERDICT)] },
    EngineSpec { id: "kaspersky", display_name: "Kaspersky", signals: &[cat("verdict", VERDICT), num("detections")] },
    EngineSpec { id: "maltiverse", display_name: "Maltiverse", signals: &[cat("classification", VERDICT), num("blacklist_count")] },
    EngineSpec { id: "mywot", display_name: "MyWOT", signals: &[num("trust_score"), num("child_safety"), flag("flagged")] },
    EngineSpec { id: "norton_safeweb", display_name: "Norton SafeWeb", signals: &[cat("rating", VERDICT), num("threats")] },
    EngineSpec { id: "scamadviser", display_name: "ScamAdviser", signals: &[num("trust_score"), num("domain_age_days"), flag("high_risk")] },
    EngineSpec { id: "scamdoc", display_name: "Scamdoc", signals: &[num("trust_score"), num("reviews")] },
    EngineSpec { id: "scamguard", display_name: "ScamGuard", signals: &[flag("reported"), num("reports")] },
    EngineSpec { id: "scam_validator", display_name: "Scam Validator", signals: &[num("score"), cat("verdict", VERDICT)] },
    EngineSpec { id: "spamhaus", display_name: "Spamhaus", signals: &[flag("listed"), num("reputation")] },
    EngineSpec { id: "sucuri", display_name: "Sucuri", signals: &[cat("risk", RISK), flag("blacklisted")] },
    EngineSpec { id: "talos", display_name: "Talos Intelligence", signals: &[cat("web_reputation", &["good", "neutral", "poor", "unknown"]), num("email_volume")] },
    EngineSpec { id: "trendmicro", display_name: "Trend Micro", signals: &[cat("risk", RISK), cat("category", WEB_CATEGORY)] },
    EngineSpec { id: "urlvoid", display_name: "URLVoid", signals: &[num("detections"), num("engines")] },
    EngineSpec {
        id: "virustotal",
        display_name: "VirusTotal",
        signals: &[num("malicious"), num("suspicious"), num("harmless"), num("reputation"), cat("category", WEB_CATEGORY)],
    },
    EngineSpec { id: "zscaler", display_name: "Zscaler", signals: &[cat("category", WEB_CATEGORY), num("risk_score")] },
];

/// Signals produced locally rather than by a reputation engine.
pub const LOCAL_ENGINES: &[EngineSpec] = &[
    EngineSpec { id: "local", display_name: "Landing page crawler", signals: &[num("page_size_chars")] },
    EngineSpec {
        id: "rdap",
        display_name: "RDAP registration",
        signals: &[num("domain_age_days"), cat("registrar", REGISTRARS), flag("recent_registration")],
    },
];

pub const REGISTRARS: &[&str] = &[
    "NameCheap, Inc.", "GoDaddy.com, LLC", "Tucows Domains Inc.", "NameSilo, LLC",
    "Porkbun LLC", "Dynadot Inc", "Gandi SAS", "Hostinger Operations, UAB", "OVH sas",
    "MarkMonitor Inc.",
];

pub fn engine_spec(id: &str) -> Option<&'static EngineSpec> {
    ENGINES.iter().chain(LOCAL_ENGINES).find(|e| e.id == id)
}

fn decl(engine: &EngineSpec, s: &SignalSpec) -> FeatureDecl {
    let name = format!("{}.{}", engine.id, s.name);
    match s.kind {
        SignalKind::Number => FeatureDecl::numeric(&name, Impute::Median),
        SignalKind::Flag => FeatureDecl::numeric(&name, Impute::Mode),
        SignalKind::Category(levels) => FeatureDecl::categorical(&name, levels),
    }
}

impl FeatureSchema {
    /// The 45-feature default layout: every engine signal, then the local
    /// page size and the RDAP signals. Imputation values are unfitted.
    pub fn reconstructed() -> FeatureSchema {
        let features = ENGINES
            .iter()
            .chain(LOCAL_ENGINES)
            .flat_map(|e| e.signals.iter().map(move |s| decl(e, s)))
            .collect();
        FeatureSchema::new(features).expect("catalog names are unique")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forty_five_features_from_nineteen_engines() {
        assert_eq!(ENGINES.len(), 19);
        let s = FeatureSchema::reconstructed();
        assert_eq!(s.len(), 45);
        assert!(s.index_of("local.page_size_chars").is_some());
        assert!(s.index_of("rdap.registrar").is_some());
        assert!(engine_spec("virustotal").is_some());
    }
}
