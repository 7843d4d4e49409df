use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::psl::SuffixList;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ThirdPartyError {
    #[error("invalid HAR: {0}")]
    Har(String),
    #[error("invalid tracker list: {0}")]
    Trackers(String),
    #[error("cannot determine first party from {0:?}")]
    FirstParty(String),
}

/// Requests issued while loading one page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestLog {
    /// Registrable domain of the page itself.
    pub first_party: String,
    pub requests: Vec<String>,
}

impl RequestLog {
    /// `first_party` must already be a registrable domain.
    pub fn new(first_party: &str, requests: Vec<String>, psl: &SuffixList) -> Result<Self, ThirdPartyError> {
        let first_party = first_party.to_ascii_lowercase();
        match psl.etld_plus_one(&first_party) {
            Ok(r) if r.domain == first_party => Ok(Self { first_party, requests }),
            _ => Err(ThirdPartyError::FirstParty(first_party)),
        }
    }

    pub fn for_page(page_url: &str, requests: Vec<String>, psl: &SuffixList) -> Result<Self, ThirdPartyError> {
        let first_party = psl
            .url_etld_plus_one(page_url)
            .map_err(|_| ThirdPartyError::FirstParty(page_url.to_string()))?
            .domain;
        Ok(Self { first_party, requests })
    }

    /// Reads `log.entries[].request.url`. The page URL is the first page's
    /// title when it is a URL, otherwise the first request.
    pub fn from_har(json: &str, psl: &SuffixList) -> Result<Self, ThirdPartyError> {
        let v: Value = serde_json::from_str(json).map_err(|e| ThirdPartyError::Har(e.to_string()))?;
        let log = v.get("log").ok_or_else(|| ThirdPartyError::Har("missing log".into()))?;
        let entries = log
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| ThirdPartyError::Har("missing log.entries".into()))?;
        let requests: Vec<String> = entries
            .iter()
            .filter_map(|e| e.get("request")?.get("url")?.as_str().map(str::to_string))
            .collect();
        let page_url = log
            .get("pages")
            .and_then(Value::as_array)
            .and_then(|p| p.first())
            .and_then(|p| p.get("title"))
            .and_then(Value::as_str)
            .filter(|t| url::Url::parse(t).is_ok())
            .map(str::to_string)
            .or_else(|| requests.first().cloned())
            .ok_or_else(|| ThirdPartyError::Har("no requests".into()))?;
        Self::for_page(&page_url, requests, psl)
    }
}

/// Tracker domains (registrable) mapped to their owning company.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackerList {
    pub domains: BTreeMap<String, String>,
}

fn registrable(host: &str, psl: &SuffixList) -> Option<String> {
    psl.etld_plus_one(host).ok().map(|r| r.domain)
}

impl TrackerList {
    /// Disconnect `services.json` layout:
    /// `categories -> [ { company: { url: [domains] } } ]`.
    pub fn from_disconnect(json: &str, psl: &SuffixList) -> Result<Self, ThirdPartyError> {
        let v: Value = serde_json::from_str(json).map_err(|e| ThirdPartyError::Trackers(e.to_string()))?;
        let cats = v
            .get("categories")
            .and_then(Value::as_object)
            .ok_or_else(|| ThirdPartyError::Trackers("missing categories".into()))?;
        let mut domains = BTreeMap::new();
        for entries in cats.values() {
            for entry in entries.as_array().into_iter().flatten() {
                for (company, sites) in entry.as_object().into_iter().flatten() {
                    for (key, list) in sites.as_object().into_iter().flatten() {
                        let Some(list) = list.as_array() else { continue };
                        if !key.starts_with("http") {
                            continue;
                        }
                        for d in list.iter().filter_map(Value::as_str) {
                            if let Some(r) = registrable(d, psl) {
                                domains.entry(r).or_insert_with(|| company.clone());
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { domains })
    }

    /// One domain per line, optionally followed by whitespace and a company.
    pub fn from_lines(text: &str, psl: &SuffixList) -> Self {
        let mut domains = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut parts = line.splitn(2, char::is_whitespace);
            let host = parts.next().unwrap_or_default();
            if let Some(r) = registrable(host, psl) {
                let company = parts.next().map(str::trim).filter(|c| !c.is_empty()).unwrap_or(&r).to_string();
                domains.entry(r).or_insert(company);
            }
        }
        Self { domains }
    }

    pub fn len(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty()
    }

    pub fn company(&self, registrable: &str) -> Option<&str> {
        self.domains.get(registrable).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThirdPartyStats {
    pub first_party: String,
    pub distinct_third_parties: usize,
    pub distinct_trackers: usize,
    pub parties: BTreeSet<String>,
    pub trackers: BTreeSet<String>,
    /// Requests whose host could not be reduced to a registrable domain.
    pub unparsed: usize,
}

/// A third party is any registrable domain other than the page's own.
pub fn third_party_stats(
    log: &RequestLog,
    trackers: &TrackerList,
    psl: &SuffixList,
) -> ThirdPartyStats {
    let first_party = log.first_party.clone();
    let mut parties = BTreeSet::new();
    let mut unparsed = 0;
    for req in &log.requests {
        match url_etld_plus_one_with(req, psl) {
            Some(d) if d != first_party => {
                parties.insert(d);
            }
            Some(_) => {}
            None => unparsed += 1,
        }
    }
    let trackers: BTreeSet<String> = parties
        .iter()
        .filter(|d| trackers.domains.contains_key(*d))
        .cloned()
        .collect();
    ThirdPartyStats {
        first_party,
        distinct_third_parties: parties.len(),
        distinct_trackers: trackers.len(),
        parties,
        trackers,
        unparsed,
    }
}

fn url_etld_plus_one_with(u: &str, psl: &SuffixList) -> Option<String> {
    psl.url_etld_plus_one(u).ok().map(|r| r.domain)
}
