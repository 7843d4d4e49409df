use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::Pipeline;
use crate::corpus::{RdapBootstrap, RdapClient};
use crate::darkpattern::DarkPatternConfig;
use crate::features::{
    engine_spec, EngineClient, HttpJsonEngine, RateLimiter, RdapEngine, ReplayEngine, ReportCache, DEFAULT_TTL_DAYS,
};
use crate::forest::{ForestError, ForestModel};
use crate::net::{Clock, FixtureTransport, Transport};
use crate::structure::{DisclaimerLexicon, LexiconError, RuleError, RuleSet};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error("model: {0}")]
    Model(#[from] ForestError),
    #[error("engine {0}")]
    Engine(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub aa: f64,
    pub aaa: f64,
    pub banner_max_tokens: usize,
    pub dhash: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        let d = DarkPatternConfig::default();
        Self {
            aa: d.aa_threshold,
            aaa: d.aaa_threshold,
            banner_max_tokens: d.banner_max_tokens,
            dhash: 10,
        }
    }
}

/// A reputation API reached over HTTP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineEndpoint {
    pub id: String,
    /// URL template containing `{domain}`.
    pub endpoint: String,
    /// Signal name to JSON pointer overrides.
    #[serde(default)]
    pub pointers: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Seed lexicon and rules are used when unset.
    pub lexicon: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub offline: bool,
    pub cache: Option<PathBuf>,
    pub cache_ttl_days: i64,
    pub seed: u64,
    pub deterministic: bool,
    pub jobs: Option<usize>,
    /// Recorded engine output, one `{engine_id, domain, signals}` per line.
    pub replay: Option<PathBuf>,
    /// Directory of `<domain>.json` RDAP responses served instead of the network.
    pub rdap_fixtures: Option<PathBuf>,
    pub rdap: bool,
    pub rdap_reference_date: Option<NaiveDate>,
    pub engines: Vec<EngineEndpoint>,
    pub timeout_secs: u64,
    pub min_request_interval_ms: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lexicon: None,
            rules: None,
            model: None,
            thresholds: Thresholds::default(),
            offline: false,
            cache: None,
            cache_ttl_days: DEFAULT_TTL_DAYS,
            seed: 0,
            deterministic: false,
            jobs: None,
            replay: None,
            rdap_fixtures: None,
            rdap: false,
            rdap_reference_date: None,
            engines: Vec::new(),
            timeout_secs: 20,
            min_request_interval_ms: 0,
        }
    }
}

fn must_exist(p: &Path) -> Result<(), ConfigError> {
    if p.exists() {
        Ok(())
    } else {
        Err(ConfigError::Io {
            path: p.to_path_buf(),
            reason: "does not exist".into(),
        })
    }
}

impl RunConfig {
    pub fn darkpattern(&self) -> DarkPatternConfig {
        DarkPatternConfig {
            aa_threshold: self.thresholds.aa,
            aaa_threshold: self.thresholds.aaa,
            banner_max_tokens: self.thresholds.banner_max_tokens,
        }
    }

    pub fn cache_path(&self) -> Option<PathBuf> {
        self.cache.clone().or_else(ReportCache::env_path)
    }

    /// Loads and validates every referenced file. `transport` serves remote
    /// engines and RDAP; `clock` drives cache freshness and report times.
    pub fn build_pipeline(&self, transport: Arc<dyn Transport>, clock: Arc<dyn Clock>) -> Result<Pipeline, ConfigError> {
        let lexicon = match &self.lexicon {
            Some(p) => DisclaimerLexicon::load(p)?,
            None => DisclaimerLexicon::seed(),
        };
        let rules = match &self.rules {
            Some(p) => RuleSet::load(p)?,
            None => RuleSet::seed(),
        };
        let mut pipeline = Pipeline::new(lexicon, rules).with_clock(Arc::clone(&clock));
        if let Some(p) = &self.model {
            must_exist(p)?;
            pipeline = pipeline.with_model(ForestModel::load(p)?);
        }
        let ttl = chrono::Duration::days(self.cache_ttl_days);
        if let Some(p) = self.cache_path() {
            let cache = ReportCache::open(&p, ttl).map_err(|e| ConfigError::Io {
                path: p.clone(),
                reason: e.to_string(),
            })?;
            pipeline = pipeline.with_cache(cache);
        }

        let mut clients: Vec<Arc<dyn EngineClient>> = Vec::new();
        if let Some(p) = &self.replay {
            must_exist(p)?;
            for e in ReplayEngine::load(p).map_err(|e| ConfigError::Engine(e.to_string()))? {
                clients.push(Arc::new(e));
            }
        }
        for ep in &self.engines {
            let spec = engine_spec(&ep.id).ok_or_else(|| ConfigError::Engine(format!("{}: unknown engine id", ep.id)))?;
            if !ep.endpoint.contains("{domain}") {
                return Err(ConfigError::Engine(format!("{}: endpoint lacks {{domain}}", ep.id)));
            }
            let mut engine = HttpJsonEngine::new(spec, Some(ep.endpoint.clone()), Arc::clone(&transport));
            for (signal, ptr) in &ep.pointers {
                engine = engine.with_pointer(signal, ptr);
            }
            clients.push(Arc::new(engine));
        }
        if self.rdap || self.rdap_fixtures.is_some() {
            let reference = self.rdap_reference_date.unwrap_or_else(|| clock.now().date_naive());
            let (rdap_transport, local): (Arc<dyn Transport>, bool) = match &self.rdap_fixtures {
                Some(dir) => {
                    must_exist(dir)?;
                    (Arc::new(FixtureTransport::new(dir)), true)
                }
                None => (Arc::clone(&transport), false),
            };
            let client = RdapClient::new(RdapBootstrap::embedded(), rdap_transport, reference);
            clients.push(Arc::new(RdapEngine::new(Arc::new(client)).local(local)));
        }
        let mut ids: Vec<&str> = clients.iter().map(|c| c.id()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ConfigError::Engine(format!("{}: configured twice", w[0])));
        }
        pipeline = pipeline.with_clients(clients).offline(self.offline).deterministic(self.deterministic);
        pipeline.collect.timeout = Duration::from_secs(self.timeout_secs.max(1));
        if self.min_request_interval_ms > 0 {
            pipeline.collect.rate_limiter =
                Some(Arc::new(RateLimiter::new(Duration::from_millis(self.min_request_interval_ms))));
        }
        pipeline.darkpattern = self.darkpattern();
        Ok(pipeline)
    }
}
