//! Per-domain feature vectors built from reputation engine reports.

mod cache;
mod catalog;
mod collect;
mod engines;
mod schema;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use cache::{CacheRecord, ReportCache, CACHE_ENV, DEFAULT_TTL_DAYS};
pub use catalog::{engine_spec, EngineSpec, SignalKind, SignalSpec, ENGINES, LOCAL_ENGINES, REGISTRARS};
pub use collect::{collect_reports, CollectOptions, RateLimiter};
pub use engines::{
    local_report, page_size_signal, EngineClient, EngineError, HttpJsonEngine, RdapEngine, ReplayEngine,
    PAGE_SIZE_SIGNAL,
};
pub use schema::{FeatureDecl, FeatureKind, FeatureSchema, Impute, OTHER_LEVEL};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum SignalValue {
    Number(f64),
    Bool(bool),
    Category(String),
    #[default]
    Missing,
}

impl SignalValue {
    pub fn is_missing(&self) -> bool {
        matches!(self, SignalValue::Missing)
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            SignalValue::Number(_) => "number",
            SignalValue::Bool(_) => "boolean",
            SignalValue::Category(_) => "category",
            SignalValue::Missing => "missing",
        }
    }
}

impl From<f64> for SignalValue {
    fn from(v: f64) -> Self {
        SignalValue::Number(v)
    }
}

impl From<bool> for SignalValue {
    fn from(v: bool) -> Self {
        SignalValue::Bool(v)
    }
}

impl From<&str> for SignalValue {
    fn from(v: &str) -> Self {
        SignalValue::Category(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineReport {
    pub engine_id: String,
    pub domain: String,
    /// Keys are namespaced `engine_id.signal`.
    pub signals: BTreeMap<String, SignalValue>,
    pub retrieved_at: DateTime<Utc>,
    /// Why the signals are missing, when the fetch failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl EngineReport {
    pub fn missing(engine_id: &str, domain: &str, signals: &[String], at: DateTime<Utc>, why: String) -> Self {
        Self {
            engine_id: engine_id.to_string(),
            domain: domain.to_string(),
            signals: signals.iter().map(|s| (s.clone(), SignalValue::Missing)).collect(),
            retrieved_at: at,
            failure: Some(why),
        }
    }

    pub fn all_missing(&self) -> bool {
        self.signals.values().all(SignalValue::is_missing)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("schema mismatch on {feature}: {reason}")]
    SchemaMismatch { feature: String, reason: String },
    #[error("feature {0} is missing and the schema has no fitted imputation value")]
    Unfitted(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
}

/// Values aligned to a [`FeatureSchema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<T = f64> {
    pub domain: String,
    pub values: Vec<T>,
    pub missing_mask: Vec<bool>,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn new(domain: &str, values: Vec<T>) -> Self {
        let missing_mask = vec![false; values.len()];
        Self {
            domain: domain.to_string(),
            values,
            missing_mask,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn select(&self, keep: &[usize]) -> Self {
        Self {
            domain: self.domain.clone(),
            values: keep.iter().map(|&i| self.values[i]).collect(),
            missing_mask: keep.iter().map(|&i| self.missing_mask[i]).collect(),
        }
    }

    pub fn cast<U: Scalar>(&self) -> FeatureVector<U> {
        FeatureVector {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| U::of(v.as_f64())).collect(),
            missing_mask: self.missing_mask.clone(),
        }
    }
}

fn merged_signals(reports: &[EngineReport]) -> BTreeMap<&str, &SignalValue> {
    let mut all = BTreeMap::new();
    for r in reports {
        for (k, v) in &r.signals {
            // A present value beats a missing one from another report.
            let keep_existing = all.get(k.as_str()).is_some_and(|old: &&SignalValue| !old.is_missing());
            if !keep_existing {
                all.insert(k.as_str(), v);
            }
        }
    }
    all
}

/// Schema-ordered encodings, `None` where the signal is missing.
pub fn encode_raw(reports: &[EngineReport], schema: &FeatureSchema) -> Result<Vec<Option<f64>>, FeatureError> {
    let signals = merged_signals(reports);
    schema
        .features
        .iter()
        .map(|f| match signals.get(f.name.as_str()) {
            Some(v) => f.encode(v),
            None => Ok(None),
        })
        .collect()
}

/// Encodes signals and fills gaps with the schema's stored imputation values.
pub fn encode_and_impute(reports: &[EngineReport], schema: &FeatureSchema) -> Result<FeatureVector, FeatureError> {
    let raw = encode_raw(reports, schema)?;
    let domain = reports.first().map(|r| r.domain.clone()).unwrap_or_default();
    let mut values = Vec::with_capacity(raw.len());
    let mut missing_mask = Vec::with_capacity(raw.len());
    for (f, cell) in schema.features.iter().zip(raw) {
        match cell {
            Some(x) => {
                values.push(x);
                missing_mask.push(false);
            }
            None => {
                values.push(f.impute_value.ok_or_else(|| FeatureError::Unfitted(f.name.clone()))?);
                missing_mask.push(true);
            }
        }
    }
    Ok(FeatureVector {
        domain,
        values,
        missing_mask,
    })
}

/// Signal values recovered from a vector; imputed cells decode as missing.
pub fn decode(v: &FeatureVector, schema: &FeatureSchema) -> BTreeMap<String, SignalValue> {
    schema
        .features
        .iter()
        .zip(v.values.iter().zip(&v.missing_mask))
        .map(|(f, (&x, &missing))| {
            let val = if missing { SignalValue::Missing } else { f.decode(x) };
            (f.name.clone(), val)
        })
        .collect()
}
