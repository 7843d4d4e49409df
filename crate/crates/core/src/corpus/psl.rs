use std::net::IpAddr;
use std::sync::LazyLock;

use publicsuffix::{List, Psl};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::net::Transport;

const EMBEDDED_DAT: &str = include_str!("../../data/public_suffix_list.dat");
/// SHA-256 of the embedded list snapshot.
pub const EMBEDDED_PSL_SHA256: &str = "88ba7239ff5d73a9fd4037aca6007dc8d1a8de22af34463b56e2a2585a74e6fc";
pub const PSL_URL: &str = "https://publicsuffix.org/list/public_suffix_list.dat";

static EMBEDDED: LazyLock<SuffixList> =
    LazyLock::new(|| SuffixList::from_dat(EMBEDDED_DAT).expect("embedded public suffix list parses"));

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PslError {
    #[error("invalid hostname {0:?}")]
    InvalidHost(String),
    #[error("{0:?} is a public suffix with no registrable label")]
    UnresolvableSuffix(String),
    #[error("cannot parse suffix list: {0}")]
    Parse(String),
    #[error("cannot fetch suffix list: {0}")]
    Fetch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Registrable {
    pub domain: String,
    /// The input was an IP literal and is returned unchanged.
    pub ip_literal: bool,
}

pub struct SuffixList {
    list: List,
    sha256: String,
}

impl std::fmt::Debug for SuffixList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SuffixList").field("sha256", &self.sha256).finish()
    }
}

impl SuffixList {
    pub fn embedded() -> &'static SuffixList {
        &EMBEDDED
    }

    pub fn from_dat(src: &str) -> Result<Self, PslError> {
        let list: List = src.parse().map_err(|e: publicsuffix::Error| PslError::Parse(e.to_string()))?;
        if list.is_empty() {
            return Err(PslError::Parse("list has no rules".into()));
        }
        Ok(Self {
            list,
            sha256: hex::encode(Sha256::digest(src.as_bytes())),
        })
    }

    /// Downloads the current list.
    pub fn fetch(transport: &dyn Transport) -> Result<(Self, String), PslError> {
        let resp = transport.get(PSL_URL).map_err(|e| PslError::Fetch(e.to_string()))?;
        if !resp.is_success() {
            return Err(PslError::Fetch(format!("http status {}", resp.status)));
        }
        let text = resp.text();
        Ok((Self::from_dat(&text)?, text))
    }

    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    /// Registrable domain (public suffix plus one label). Input is
    /// lowercased and a single trailing dot is dropped.
    pub fn etld_plus_one(&self, host: &str) -> Result<Registrable, PslError> {
        let trimmed = host.trim();
        let bare = trimmed.strip_prefix('[').and_then(|h| h.strip_suffix(']')).unwrap_or(trimmed);
        if let Ok(ip) = bare.parse::<IpAddr>() {
            return Ok(Registrable {
                domain: ip.to_string(),
                ip_literal: true,
            });
        }
        let lower = trimmed.to_lowercase();
        let name = lower.strip_suffix('.').unwrap_or(&lower);
        if name.is_empty()
            || name.split('.').any(str::is_empty)
            || name.chars().any(|c| c.is_whitespace() || matches!(c, '/' | ':' | '@' | '?' | '#'))
        {
            return Err(PslError::InvalidHost(host.to_string()));
        }
        match self.list.domain(name.as_bytes()) {
            Some(d) => Ok(Registrable {
                domain: String::from_utf8_lossy(d.as_bytes()).into_owned(),
                ip_literal: false,
            }),
            None => Err(PslError::UnresolvableSuffix(name.to_string())),
        }
    }

    /// Registrable domain of a URL's host.
    pub fn url_etld_plus_one(&self, url: &str) -> Result<Registrable, PslError> {
        let parsed = url::Url::parse(url).map_err(|_| PslError::InvalidHost(url.to_string()))?;
        let host = match parsed.host() {
            Some(url::Host::Domain(d)) => d.to_string(),
            Some(url::Host::Ipv4(ip)) => ip.to_string(),
            Some(url::Host::Ipv6(ip)) => ip.to_string(),
            None => return Err(PslError::InvalidHost(url.to_string())),
        };
        self.etld_plus_one(&host)
    }
}

/// [`SuffixList::etld_plus_one`] against the embedded snapshot.
pub fn etld_plus_one(host: &str) -> Result<Registrable, PslError> {
    SuffixList::embedded().etld_plus_one(host)
}

/// Registrable domain of a URL's host, against the embedded snapshot.
pub fn url_etld_plus_one(url: &str) -> Result<Registrable, PslError> {
    SuffixList::embedded().url_etld_plus_one(url)
}
