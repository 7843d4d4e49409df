use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{FeatureError, SignalValue};

pub const OTHER_LEVEL: &str = "__other__";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Numbers pass through; booleans encode as 0/1.
    Numeric,
    /// Encoded as the index of the declared level.
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Impute {
    Median,
    Mode,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDecl {
    pub name: String,
    pub kind: FeatureKind,
    /// Categorical only; always ends with `__other__`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub category_levels: Vec<String>,
    pub impute: Impute,
    /// Fitted on the training corpus; `Constant` carries its own value.
    #[serde(default)]
    pub impute_value: Option<f64>,
}

impl FeatureDecl {
    pub fn numeric(name: &str, impute: Impute) -> Self {
        Self {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            category_levels: Vec::new(),
            impute,
            impute_value: match impute {
                Impute::Constant(v) => Some(v),
                _ => None,
            },
        }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        let mut category_levels: Vec<String> = levels
            .iter()
            .filter(|l| **l != OTHER_LEVEL)
            .map(|l| l.to_string())
            .collect();
        category_levels.push(OTHER_LEVEL.to_string());
        Self {
            name: name.to_string(),
            kind: FeatureKind::Categorical,
            category_levels,
            impute: Impute::Mode,
            impute_value: None,
        }
    }

    pub fn other_index(&self) -> usize {
        self.category_levels.len().saturating_sub(1)
    }

    /// Encodes one present signal; `None` for missing.
    pub fn encode(&self, v: &SignalValue) -> Result<Option<f64>, FeatureError> {
        let mismatch = || FeatureError::SchemaMismatch {
            feature: self.name.clone(),
            reason: format!("{} value for {:?} feature", v.type_name(), self.kind),
        };
        match (self.kind, v) {
            (_, SignalValue::Missing) => Ok(None),
            (FeatureKind::Numeric, SignalValue::Number(x)) if x.is_finite() => Ok(Some(*x)),
            (FeatureKind::Numeric, SignalValue::Number(_)) => Ok(None),
            (FeatureKind::Numeric, SignalValue::Bool(b)) => Ok(Some(f64::from(u8::from(*b)))),
            (FeatureKind::Categorical, SignalValue::Category(s)) => {
                let idx = self
                    .category_levels
                    .iter()
                    .position(|l| l == s)
                    .unwrap_or_else(|| self.other_index());
                Ok(Some(idx as f64))
            }
            (FeatureKind::Categorical, SignalValue::Bool(b)) => {
                let s = if *b { "true" } else { "false" };
                Ok(Some(self.category_levels.iter().position(|l| l == s).unwrap_or_else(|| self.other_index()) as f64))
            }
            _ => Err(mismatch()),
        }
    }

    /// Inverse of [`FeatureDecl::encode`] for numeric and categorical values.
    pub fn decode(&self, x: f64) -> SignalValue {
        match self.kind {
            FeatureKind::Numeric => SignalValue::Number(x),
            FeatureKind::Categorical => self
                .category_levels
                .get(x as usize)
                .map(|l| SignalValue::Category(l.clone()))
                .unwrap_or(SignalValue::Missing),
        }
    }
}

/// Ordered feature declarations; order defines the vector layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub version: u32,
    pub features: Vec<FeatureDecl>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// Most frequent value; ties go to the smallest.
fn mode(v: &[f64]) -> Option<f64> {
    let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for &x in v {
        counts.entry(x.to_bits()).or_insert((x, 0)).1 += 1;
    }
    counts
        .into_values()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.total_cmp(&a.0)))
        .map(|(x, _)| x)
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureDecl>) -> Result<Self, FeatureError> {
        let schema = Self { version: 1, features };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(FeatureError::InvalidSchema(format!("duplicate feature {:?}", f.name)));
            }
            if f.kind == FeatureKind::Categorical && f.category_levels.last().map(String::as_str) != Some(OTHER_LEVEL) {
                return Err(FeatureError::InvalidSchema(format!("{:?} must end with {OTHER_LEVEL}", f.name)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn is_fitted(&self) -> bool {
        self.features.iter().all(|f| f.impute_value.is_some())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, FeatureError> {
        let schema: Self = serde_json::from_str(s).map_err(|e| FeatureError::InvalidSchema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    /// Stores per-feature imputation values computed from encoded training
    /// rows (`None` = missing). Columns with no observed value impute 0.
    pub fn fit_imputation(&mut self, rows: &[Vec<Option<f64>>]) -> Result<(), FeatureError> {
        for (j, f) in self.features.iter_mut().enumerate() {
            let mut column = Vec::with_capacity(rows.len());
            for row in rows {
                let cell = row.get(j).ok_or_else(|| FeatureError::SchemaMismatch {
                    feature: f.name.clone(),
                    reason: format!("training row has {} values", row.len()),
                })?;
                if let Some(x) = cell {
                    column.push(*x);
                }
            }
            f.impute_value = Some(match f.impute {
                Impute::Constant(v) => v,
                Impute::Median => median(column).unwrap_or(0.0),
                Impute::Mode => mode(&column).unwrap_or(0.0),
            });
        }
        Ok(())
    }

    /// Keeps the given feature indices, in schema order.
    pub fn subset(&self, keep: &[usize]) -> FeatureSchema {
        let keep: HashSet<usize> = keep.iter().copied().collect();
        FeatureSchema {
            version: self.version,
            features: self
                .features
                .iter()
                .enumerate()
                .filter(|(i, _)| keep.contains(i))
                .map(|(_, f)| f.clone())
                .collect(),
        }
    }
}
