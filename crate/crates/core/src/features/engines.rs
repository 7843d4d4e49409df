use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::catalog::{engine_spec, EngineSpec, SignalKind};
use super::{EngineReport, SignalValue};
use crate::corpus::{LookupStatus, RdapClient};
use crate::net::{Transport, TransportError};
use crate::page::RawPage;

pub const PAGE_SIZE_SIGNAL: &str = "local.page_size_chars";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("engine {0} has no endpoint configured")]
    NotConfigured(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("http status {0}")]
    Http(u16),
    #[error("no data for {0}")]
    NotFound(String),
    #[error("cannot parse engine response: {0}")]
    Parse(String),
    #[error("engine unavailable: {0}")]
    Unavailable(String),
}

/// A source of signals about a domain.
pub trait EngineClient: Send + Sync {
    fn id(&self) -> &str;
    /// Namespaced signal names this engine reports.
    fn signals(&self) -> Vec<String>;
    fn fetch(&self, domain: &str) -> Result<BTreeMap<String, SignalValue>, EngineError>;
    /// Local engines need no network, so they run in offline mode and bypass the cache.
    fn is_local(&self) -> bool {
        false
    }
}

/// Landing-page size in characters; missing when the page could not be fetched.
pub fn page_size_signal(page: Option<&RawPage>) -> SignalValue {
    match page {
        Some(p) if !p.html.is_empty() => SignalValue::Number(p.html_char_count() as f64),
        _ => SignalValue::Missing,
    }
}

pub fn local_report(domain: &str, page: Option<&RawPage>, at: DateTime<Utc>) -> EngineReport {
    let value = page_size_signal(page);
    EngineReport {
        engine_id: "local".into(),
        domain: domain.to_string(),
        failure: value.is_missing().then(|| "landing page unavailable".to_string()),
        signals: BTreeMap::from([(PAGE_SIZE_SIGNAL.to_string(), value)]),
        retrieved_at: at,
    }
}

/// Adapter for a JSON HTTP API. `endpoint` is a URL template containing
/// `{domain}`; each signal is read from the response at the JSON pointer
/// `/<signal>` unless overridden.
pub struct HttpJsonEngine {
    spec: &'static EngineSpec,
    endpoint: Option<String>,
    pointers: HashMap<String, String>,
    transport: Arc<dyn Transport>,
}

impl HttpJsonEngine {
    pub fn new(spec: &'static EngineSpec, endpoint: Option<String>, transport: Arc<dyn Transport>) -> Self {
        Self {
            spec,
            endpoint,
            pointers: HashMap::new(),
            transport,
        }
    }

    pub fn with_pointer(mut self, signal: &str, pointer: &str) -> Self {
        self.pointers.insert(signal.to_string(), pointer.to_string());
        self
    }

    fn convert(kind: SignalKind, v: &serde_json::Value) -> SignalValue {
        use serde_json::Value;
        match (kind, v) {
            (SignalKind::Number, Value::Number(n)) => n.as_f64().map_or(SignalValue::Missing, SignalValue::Number),
            (SignalKind::Number, Value::String(s)) => s.trim().parse().map_or(SignalValue::Missing, SignalValue::Number),
            (SignalKind::Flag, Value::Bool(b)) => SignalValue::Bool(*b),
            (SignalKind::Flag, Value::Number(n)) => n.as_f64().map_or(SignalValue::Missing, |x| SignalValue::Bool(x != 0.0)),
            (SignalKind::Category(_), Value::String(s)) => SignalValue::Category(s.trim().to_ascii_lowercase()),
            _ => SignalValue::Missing,
        }
    }
}

impl EngineClient for HttpJsonEngine {
    fn id(&self) -> &str {
        self.spec.id
    }

    fn signals(&self) -> Vec<String> {
        self.spec.signal_names()
    }

    fn fetch(&self, domain: &str) -> Result<BTreeMap<String, SignalValue>, EngineError> {
        let template = self
            .endpoint
            .as_deref()
            .ok_or_else(|| EngineError::NotConfigured(self.spec.id.to_string()))?;
        let url = template.replace("{domain}", domain);
        let resp = self.transport.get(&url)?;
        if resp.status == 404 {
            return Err(EngineError::NotFound(domain.to_string()));
        }
        if !resp.is_success() {
            return Err(EngineError::Http(resp.status));
        }
        let body: serde_json::Value = serde_json::from_slice(&resp.body).map_err(|e| EngineError::Parse(e.to_string()))?;
        Ok(self
            .spec
            .signals
            .iter()
            .map(|s| {
                let pointer = self.pointers.get(s.name).cloned().unwrap_or_else(|| format!("/{}", s.name));
                let value = body.pointer(&pointer).map_or(SignalValue::Missing, |v| Self::convert(s.kind, v));
                (format!("{}.{}", self.spec.id, s.name), value)
            })
            .collect())
    }
}

#[derive(Debug, Deserialize)]
struct ReplayRecord {
    engine_id: String,
    domain: String,
    signals: BTreeMap<String, SignalValue>,
}

/// Serves recorded engine output; needs no network.
#[derive(Debug, Clone)]
pub struct ReplayEngine {
    id: String,
    signals: Vec<String>,
    data: HashMap<String, BTreeMap<String, SignalValue>>,
}

impl ReplayEngine {
    /// One engine per distinct `engine_id` in line-delimited
    /// `{engine_id, domain, signals}` records, sorted by id.
    pub fn from_jsonl(src: &str) -> Result<Vec<ReplayEngine>, EngineError> {
        let mut by_engine: BTreeMap<String, ReplayEngine> = BTreeMap::new();
        for (i, line) in src.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: ReplayRecord =
                serde_json::from_str(line).map_err(|e| EngineError::Parse(format!("line {}: {e}", i + 1)))?;
            let engine = by_engine.entry(rec.engine_id.clone()).or_insert_with(|| ReplayEngine {
                id: rec.engine_id.clone(),
                signals: engine_spec(&rec.engine_id).map(EngineSpec::signal_names).unwrap_or_default(),
                data: HashMap::new(),
            });
            engine.data.insert(rec.domain, rec.signals);
        }
        for engine in by_engine.values_mut() {
            if engine_spec(&engine.id).is_none() {
                let names: BTreeSet<&String> = engine.data.values().flat_map(|m| m.keys()).collect();
                engine.signals = names.into_iter().cloned().collect();
            }
        }
        Ok(by_engine.into_values().collect())
    }

    pub fn load(path: &std::path::Path) -> Result<Vec<ReplayEngine>, EngineError> {
        let src = std::fs::read_to_string(path).map_err(|e| EngineError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&src)
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> {
        self.data.keys().map(String::as_str)
    }
}

impl EngineClient for ReplayEngine {
    fn id(&self) -> &str {
        &self.id
    }

    fn signals(&self) -> Vec<String> {
        self.signals.clone()
    }

    fn fetch(&self, domain: &str) -> Result<BTreeMap<String, SignalValue>, EngineError> {
        let recorded = self.data.get(domain).ok_or_else(|| EngineError::NotFound(domain.to_string()))?;
        let mut out: BTreeMap<String, SignalValue> =
            self.signals.iter().map(|s| (s.clone(), SignalValue::Missing)).collect();
        out.extend(recorded.iter().map(|(k, v)| (k.clone(), v.clone())));
        Ok(out)
    }

    fn is_local(&self) -> bool {
        true
    }
}

/// Domain age, registrar and recency from RDAP.
pub struct RdapEngine {
    client: Arc<RdapClient>,
    local: bool,
}

impl RdapEngine {
    pub fn new(client: Arc<RdapClient>) -> Self {
        Self { client, local: false }
    }

    /// Marks the engine as network-free, e.g. when its transport serves fixtures.
    pub fn local(mut self, local: bool) -> Self {
        self.local = local;
        self
    }
}

impl EngineClient for RdapEngine {
    fn id(&self) -> &str {
        "rdap"
    }

    fn signals(&self) -> Vec<String> {
        engine_spec("rdap").expect("rdap in catalog").signal_names()
    }

    fn fetch(&self, domain: &str) -> Result<BTreeMap<String, SignalValue>, EngineError> {
        let rec = self.client.lookup(domain);
        match &rec.status {
            LookupStatus::Ok => {}
            LookupStatus::NotFound => return Err(EngineError::NotFound(domain.to_string())),
            LookupStatus::Unavailable(why) => return Err(EngineError::Unavailable(why.clone())),
        }
        let opt = |v: Option<SignalValue>| v.unwrap_or(SignalValue::Missing);
        Ok(BTreeMap::from([
            ("rdap.domain_age_days".to_string(), opt(rec.age_days.map(|d| SignalValue::Number(d as f64)))),
            ("rdap.registrar".to_string(), opt(rec.registrar.clone().map(SignalValue::Category))),
            ("rdap.recent_registration".to_string(), opt(rec.recent.map(SignalValue::Bool))),
        ]))
    }

    fn is_local(&self) -> bool {
        self.local
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{HttpResponse, OfflineTransport};
    use std::sync::Mutex;

    struct Canned(Mutex<Vec<String>>, u16, &'static str);

    impl Transport for Canned {
        fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
            self.0.lock().unwrap().push(url.to_string());
            Ok(HttpResponse {
                status: self.1,
                body: self.2.as_bytes().to_vec(),
            })
        }
    }

    #[test]
    fn page_size_from_raw_page() {
        let html = "x".repeat(106_300);
        let page = RawPage::new("https://a.example/", html, DateTime::UNIX_EPOCH).unwrap();
        assert_eq!(page_size_signal(Some(&page)), SignalValue::Number(106_300.0));
        let news = RawPage::new("https://b.example/", "y".repeat(484_800), DateTime::UNIX_EPOCH).unwrap();
        assert_eq!(page_size_signal(Some(&news)), SignalValue::Number(484_800.0));
        assert_eq!(page_size_signal(None), SignalValue::Missing);
        assert!(RawPage::from_bytes("https://c.example/", b"", DateTime::UNIX_EPOCH).is_err());
    }

    #[test]
    fn http_adapter_reads_pointers() {
        let spec = engine_spec("virustotal").unwrap();
        let t = Arc::new(Canned(Mutex::new(vec![]), 200, r#"{"malicious": 3, "suspicious": "1", "data": {"cat": "Shopping"}, "harmless": null}"#));
        let e = HttpJsonEngine::new(spec, Some("https://api.example/v1/{domain}".into()), t.clone())
            .with_pointer("category", "/data/cat");
        let got = e.fetch("shop.example").unwrap();
        assert_eq!(t.0.lock().unwrap()[0], "https://api.example/v1/shop.example");
        assert_eq!(got["virustotal.malicious"], SignalValue::Number(3.0));
        assert_eq!(got["virustotal.suspicious"], SignalValue::Number(1.0));
        assert_eq!(got["virustotal.harmless"], SignalValue::Missing);
        assert_eq!(got["virustotal.category"], SignalValue::Category("shopping".into()));
        assert_eq!(got.len(), 5);
    }

    #[test]
    fn http_adapter_errors() {
        let spec = engine_spec("urlvoid").unwrap();
        let off = HttpJsonEngine::new(spec, None, Arc::new(OfflineTransport));
        assert!(matches!(off.fetch("a.com"), Err(EngineError::NotConfigured(_))));
        let nf = HttpJsonEngine::new(spec, Some("https://x/{domain}".into()), Arc::new(Canned(Mutex::new(vec![]), 404, "")));
        assert!(matches!(nf.fetch("a.com"), Err(EngineError::NotFound(_))));
        let offline = HttpJsonEngine::new(spec, Some("https://x/{domain}".into()), Arc::new(OfflineTransport));
        assert!(matches!(offline.fetch("a.com"), Err(EngineError::Transport(TransportError::Offline))));
    }

    #[test]
    fn replay_engines_split_by_id() {
        let src = r#"{"engine_id":"scamadviser","domain":"a.com","signals":{"scamadviser.trust_score":12}}
{"engine_id":"custom","domain":"a.com","signals":{"custom.x":true}}
{"engine_id":"scamadviser","domain":"b.com","signals":{"scamadviser.trust_score":90,"scamadviser.high_risk":false}}"#;
        let engines = ReplayEngine::from_jsonl(src).unwrap();
        let ids: Vec<_> = engines.iter().map(|e| e.id().to_string()).collect();
        assert_eq!(ids, ["custom", "scamadviser"]);
        let sa = &engines[1];
        let a = sa.fetch("a.com").unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a["scamadviser.trust_score"], SignalValue::Number(12.0));
        assert_eq!(a["scamadviser.high_risk"], SignalValue::Missing);
        assert!(sa.fetch("zzz.com").is_err());
        assert!(sa.is_local());
    }
}
