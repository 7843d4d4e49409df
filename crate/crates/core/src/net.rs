//! Network and time seams. Everything that touches the outside world goes
//! through [`Transport`] and [`Clock`] so tests can substitute fakes.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("network access is disabled (offline mode)")]
    Offline,
    #[error("request to {url} timed out")]
    Timeout { url: String },
    #[error("request to {url} failed: {reason}")]
    Failed { url: String, reason: String },
}

/// Minimal blocking HTTP GET.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError>;
}

/// Real transport backed by `ureq`.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(concat!("advertoscope/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        Self { agent }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(20))
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let mut resp = self.agent.get(url).call().map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout { url: url.to_string() },
            other => TransportError::Failed {
                url: url.to_string(),
                reason: other.to_string(),
            },
        })?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| TransportError::Failed {
                url: url.to_string(),
                reason: e.to_string(),
            })?;
        Ok(HttpResponse { status, body })
    }
}

/// Refuses every request.
#[derive(Debug, Default, Clone, Copy)]
pub struct OfflineTransport;

impl Transport for OfflineTransport {
    fn get(&self, _url: &str) -> Result<HttpResponse, TransportError> {
        Err(TransportError::Offline)
    }
}

/// Wraps another transport and counts every request that reaches it.
pub struct CountingTransport {
    inner: Arc<dyn Transport>,
    calls: AtomicUsize,
}

impl CountingTransport {
    pub fn new(inner: Arc<dyn Transport>) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for CountingTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.get(url)
    }
}

/// Serves `<dir>/<last path segment>.json` for every URL; anything absent is a 404.
///
/// Used for offline RDAP and engine fixtures: `https://rdap.example/domain/foo.com`
/// resolves to `<dir>/foo.com.json`.
#[derive(Debug, Clone)]
pub struct FixtureTransport {
    dir: PathBuf,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

impl Transport for FixtureTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let key = url
            .trim_end_matches('/')
            .rsplit('/')
            .next()
            .unwrap_or_default()
            .to_ascii_lowercase();
        let path = self.dir.join(format!("{key}.json"));
        match std::fs::read(&path) {
            Ok(body) => Ok(HttpResponse { status: 200, body }),
            Err(_) => Ok(HttpResponse {
                status: 404,
                body: Vec::new(),
            }),
        }
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FixedClock(pub DateTime<Utc>);

impl FixedClock {
    /// 1970-01-01T00:00:00Z, used by deterministic runs.
    pub fn epoch() -> Self {
        Self(Utc.timestamp_opt(0, 0).single().expect("epoch is valid"))
    }
}

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_transport_counts_refusals_too() {
        let t = CountingTransport::new(Arc::new(OfflineTransport));
        assert!(t.get("https://example.com").is_err());
        assert_eq!(t.calls(), 1);
    }

    #[test]
    fn fixture_transport_maps_last_segment() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("foo.com.json"), b"{}").unwrap();
        let t = FixtureTransport::new(dir.path());
        assert_eq!(t.get("https://rdap.x/domain/FOO.com").unwrap().status, 200);
        assert_eq!(t.get("https://rdap.x/domain/bar.com").unwrap().status, 404);
    }
}
