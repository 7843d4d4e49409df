use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::net::Transport;

const EMBEDDED_BOOTSTRAP: &str = include_str!("../../data/rdap_dns.json");
pub const IANA_DNS_BOOTSTRAP_URL: &str = "https://data.iana.org/rdap/dns.json";

/// Registrations after this date count as recent.
pub fn recency_boundary() -> NaiveDate {
    NaiveDate::from_ymd_opt(2023, 5, 31).expect("valid date")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RdapError {
    #[error("invalid bootstrap registry: {0}")]
    Bootstrap(String),
    #[error("cannot fetch bootstrap registry: {0}")]
    Fetch(String),
}

/// TLD to RDAP base URL map in the IANA bootstrap format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RdapBootstrap {
    #[serde(default)]
    pub publication: Option<String>,
    #[serde(default)]
    pub version: Option<String>,
    pub services: Vec<(Vec<String>, Vec<String>)>,
}

impl RdapBootstrap {
    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED_BOOTSTRAP).expect("embedded bootstrap parses")
    }

    pub fn from_json(s: &str) -> Result<Self, RdapError> {
        serde_json::from_str(s).map_err(|e| RdapError::Bootstrap(e.to_string()))
    }

    pub fn fetch(transport: &dyn Transport) -> Result<(Self, String), RdapError> {
        let resp = transport.get(IANA_DNS_BOOTSTRAP_URL).map_err(|e| RdapError::Fetch(e.to_string()))?;
        if !resp.is_success() {
            return Err(RdapError::Fetch(format!("http status {}", resp.status)));
        }
        let text = resp.text();
        Ok((Self::from_json(&text)?, text))
    }

    /// Base URL for the longest matching label suffix; HTTPS preferred.
    pub fn base_for(&self, domain: &str) -> Option<&str> {
        let domain = domain.trim_end_matches('.').to_ascii_lowercase();
        let labels: Vec<&str> = domain.split('.').collect();
        (0..labels.len()).find_map(|start| {
            let suffix = labels[start..].join(".");
            self.services
                .iter()
                .find(|(tlds, _)| tlds.iter().any(|t| t.eq_ignore_ascii_case(&suffix)))
                .and_then(|(_, urls)| {
                    urls.iter()
                        .find(|u| u.starts_with("https://"))
                        .or_else(|| urls.first())
                        .map(String::as_str)
                })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "snake_case")]
pub enum LookupStatus {
    Ok,
    NotFound,
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainRecord {
    pub domain: String,
    pub registrar: Option<String>,
    pub registration_date: Option<NaiveDate>,
    pub tld: String,
    /// Days from registration to the reference date, never negative.
    pub age_days: Option<i64>,
    /// Registered after the recency boundary.
    pub recent: Option<bool>,
    pub status: LookupStatus,
}

impl DomainRecord {
    fn unknown(domain: &str, status: LookupStatus) -> Self {
        Self {
            domain: domain.to_string(),
            registrar: None,
            registration_date: None,
            tld: tld_of(domain),
            age_days: None,
            recent: None,
            status,
        }
    }
}

fn tld_of(domain: &str) -> String {
    domain.trim_end_matches('.').rsplit('.').next().unwrap_or_default().to_ascii_lowercase()
}

fn vcard_fn(entity: &Value) -> Option<String> {
    let props = entity.get("vcardArray")?.get(1)?.as_array()?;
    props.iter().find_map(|p| {
        let p = p.as_array()?;
        (p.first()?.as_str()? == "fn").then(|| p.get(3)?.as_str().map(str::to_string))?
    })
}

fn has_role(entity: &Value, role: &str) -> bool {
    entity
        .get("roles")
        .and_then(Value::as_array)
        .is_some_and(|r| r.iter().any(|x| x.as_str() == Some(role)))
}

fn find_registrar(entities: &[Value]) -> Option<String> {
    for e in entities {
        if has_role(e, "registrar") {
            if let Some(name) = vcard_fn(e).filter(|n| !n.trim().is_empty()) {
                return Some(name.trim().to_string());
            }
            if let Some(h) = e.get("handle").and_then(Value::as_str) {
                return Some(h.to_string());
            }
        }
        if let Some(nested) = e.get("entities").and_then(Value::as_array) {
            if let Some(found) = find_registrar(nested) {
                return Some(found);
            }
        }
    }
    None
}

fn registration_date(body: &Value) -> Option<NaiveDate> {
    body.get("events")?.as_array()?.iter().find_map(|ev| {
        if ev.get("eventAction")?.as_str()? != "registration" {
            return None;
        }
        let raw = ev.get("eventDate")?.as_str()?;
        DateTime::parse_from_rfc3339(raw)
            .map(|d| d.with_timezone(&Utc).date_naive())
            .ok()
            .or_else(|| NaiveDate::parse_from_str(raw.get(..10)?, "%Y-%m-%d").ok())
    })
}

/// Builds a record from an RDAP domain object.
pub fn parse_domain_object(domain: &str, body: &Value, reference: NaiveDate) -> DomainRecord {
    let entities = body.get("entities").and_then(Value::as_array).cloned().unwrap_or_default();
    let date = registration_date(body);
    DomainRecord {
        domain: domain.to_string(),
        registrar: find_registrar(&entities),
        registration_date: date,
        tld: tld_of(domain),
        age_days: date.map(|d| (reference - d).num_days().max(0)),
        recent: date.map(|d| d > recency_boundary()),
        status: LookupStatus::Ok,
    }
}

pub struct RdapClient {
    bootstrap: RdapBootstrap,
    base_override: Option<String>,
    transport: Arc<dyn Transport>,
    reference_date: NaiveDate,
    per_host_delay: Duration,
    last_hit: Mutex<HashMap<String, Instant>>,
}

impl RdapClient {
    pub fn new(bootstrap: RdapBootstrap, transport: Arc<dyn Transport>, reference_date: NaiveDate) -> Self {
        Self {
            bootstrap,
            base_override: None,
            transport,
            reference_date,
            per_host_delay: Duration::ZERO,
            last_hit: Mutex::new(HashMap::new()),
        }
    }

    /// Sends every query to one base URL, bypassing the bootstrap.
    pub fn with_base_url(mut self, base: &str) -> Self {
        self.base_override = Some(base.to_string());
        self
    }

    pub fn with_per_host_delay(mut self, delay: Duration) -> Self {
        self.per_host_delay = delay;
        self
    }

    pub fn reference_date(&self) -> NaiveDate {
        self.reference_date
    }

    fn polite_wait(&self, url: &str) {
        if self.per_host_delay.is_zero() {
            return;
        }
        let host = url::Url::parse(url).ok().and_then(|u| u.host_str().map(str::to_string)).unwrap_or_default();
        let wait = {
            let mut last = self.last_hit.lock().expect("politeness lock");
            let now = Instant::now();
            let slot = last.get(&host).map_or(now, |t| (*t + self.per_host_delay).max(now));
            last.insert(host, slot);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }

    /// Never fails: problems are reported in `status` with unknown fields.
    pub fn lookup(&self, domain: &str) -> DomainRecord {
        let domain = domain.trim().trim_end_matches('.').to_ascii_lowercase();
        let base = match self.base_override.as_deref().or_else(|| self.bootstrap.base_for(&domain)) {
            Some(b) => b.to_string(),
            None => {
                return DomainRecord::unknown(
                    &domain,
                    LookupStatus::Unavailable(format!("no RDAP service for .{}", tld_of(&domain))),
                )
            }
        };
        let url = format!("{}/domain/{}", base.trim_end_matches('/'), domain);
        self.polite_wait(&url);
        let resp = match self.transport.get(&url) {
            Ok(r) => r,
            Err(e) => return DomainRecord::unknown(&domain, LookupStatus::Unavailable(e.to_string())),
        };
        if resp.status == 404 {
            return DomainRecord::unknown(&domain, LookupStatus::NotFound);
        }
        if !resp.is_success() {
            return DomainRecord::unknown(&domain, LookupStatus::Unavailable(format!("http status {}", resp.status)));
        }
        match serde_json::from_slice::<Value>(&resp.body) {
            Ok(body) if body.get("errorCode").is_some() => DomainRecord::unknown(&domain, LookupStatus::NotFound),
            Ok(body) => parse_domain_object(&domain, &body, self.reference_date),
            Err(e) => DomainRecord::unknown(&domain, LookupStatus::Unavailable(format!("bad RDAP json: {e}"))),
        }
    }

    /// Input order preserved; at most `concurrency` lookups in flight.
    pub fn lookup_batch(&self, domains: &[String], concurrency: usize) -> Vec<DomainRecord> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<DomainRecord>>> = domains.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|s| {
            for _ in 0..concurrency.clamp(1, domains.len().max(1)) {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(d) = domains.get(i) else { break };
                    *slots[i].lock().expect("slot lock") = Some(self.lookup(d));
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().expect("slot lock").expect("every slot filled"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareRow {
    pub key: String,
    pub count: usize,
    pub share: f64,
}

fn shares(keys: impl Iterator<Item = String>) -> Vec<ShareRow> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut total = 0usize;
    for k in keys {
        *counts.entry(k).or_default() += 1;
        total += 1;
    }
    let mut rows: Vec<ShareRow> = counts
        .into_iter()
        .map(|(key, count)| ShareRow {
            key,
            count,
            share: count as f64 / total as f64,
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.key.cmp(&b.key)));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationSummary {
    pub domains: usize,
    pub resolved: usize,
    pub registrars: Vec<ShareRow>,
    pub tlds: Vec<ShareRow>,
    /// Share of dated records registered after the recency boundary.
    pub recent_share: Option<f64>,
    pub median_age_days: Option<i64>,
}

/// Registrar shares are over resolved records; TLD shares over all.
pub fn registration_summary(records: &[DomainRecord]) -> RegistrationSummary {
    let resolved: Vec<&DomainRecord> = records.iter().filter(|r| r.status == LookupStatus::Ok).collect();
    let dated: Vec<bool> = records.iter().filter_map(|r| r.recent).collect();
    let mut ages: Vec<i64> = records.iter().filter_map(|r| r.age_days).collect();
    ages.sort_unstable();
    RegistrationSummary {
        domains: records.len(),
        resolved: resolved.len(),
        registrars: shares(resolved.iter().map(|r| r.registrar.clone().unwrap_or_else(|| "unknown".into()))),
        tlds: shares(records.iter().map(|r| r.tld.clone())),
        recent_share: (!dated.is_empty()).then(|| dated.iter().filter(|r| **r).count() as f64 / dated.len() as f64),
        median_age_days: (!ages.is_empty()).then(|| ages[(ages.len() - 1) / 2]),
    }
}
