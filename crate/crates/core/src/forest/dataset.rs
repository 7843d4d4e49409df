use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ForestError, Label};
use crate::features::{FeatureSchema, FeatureVector, SignalValue};
use crate::scalar::Scalar;

/// Labelled feature vectors sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T = f64> {
    pub vectors: Vec<FeatureVector<T>>,
    pub labels: Vec<Label>,
    pub schema: FeatureSchema,
}

/// One training example as raw signals; the on-disk training format is one
/// of these per JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSignals {
    pub domain: String,
    pub label: Label,
    #[serde(default)]
    pub signals: BTreeMap<String, SignalValue>,
}

impl LabeledSignals {
    pub fn parse_jsonl(text: &str) -> Result<Vec<Self>, ForestError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| ForestError::BadRow {
                    row: i + 1,
                    reason: e.to_string(),
                })
            })
            .collect()
    }
}

impl<T: Scalar> Dataset<T> {
    pub fn new(vectors: Vec<FeatureVector<T>>, labels: Vec<Label>, schema: FeatureSchema) -> Result<Self, ForestError> {
        if vectors.len() != labels.len() {
            return Err(ForestError::LengthMismatch {
                vectors: vectors.len(),
                labels: labels.len(),
            });
        }
        for (row, v) in vectors.iter().enumerate() {
            if v.len() != schema.len() {
                return Err(ForestError::BadRow {
                    row,
                    reason: format!("{} values for a {}-feature schema", v.len(), schema.len()),
                });
            }
            if let Some(j) = v.values.iter().position(|x| !x.is_finite()) {
                return Err(ForestError::BadRow {
                    row,
                    reason: format!("non-finite value in feature {}", schema.features[j].name),
                });
            }
        }
        Ok(Self { vectors, labels, schema })
    }

    /// Rows of plain values; domains are named `row<i>`.
    pub fn from_rows(rows: Vec<Vec<T>>, labels: Vec<Label>, schema: FeatureSchema) -> Result<Self, ForestError> {
        let vectors = rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| FeatureVector::new(&format!("row{i}"), r))
            .collect();
        Self::new(vectors, labels, schema)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    /// Counts indexed by [`Label::index`].
    pub fn class_counts(&self) -> [usize; 2] {
        let mut c = [0; 2];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }

    pub fn require_both_classes(&self) -> Result<(), ForestError> {
        match self.class_counts() {
            [0, _] | [_, 0] => Err(ForestError::SingleClassDataset),
            _ => Ok(()),
        }
    }

    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            vectors: rows.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            schema: self.schema.clone(),
        }
    }

    /// Keeps the given feature columns, in schema order.
    pub fn select_features(&self, keep: &[usize]) -> Self {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        Self {
            vectors: self.vectors.iter().map(|v| v.select(&keep)).collect(),
            labels: self.labels.clone(),
            schema: self.schema.subset(&keep),
        }
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<T> {
        self.vectors.iter().map(|v| v.values[j]).collect()
    }

    pub fn cast<U: Scalar>(&self) -> Dataset<U> {
        Dataset {
            vectors: self.vectors.iter().map(FeatureVector::cast).collect(),
            labels: self.labels.clone(),
            schema: self.schema.clone(),
        }
    }
}

impl Dataset<f64> {
    /// Encodes raw signals against `schema`, fits imputation values on these
    /// rows and fills the gaps. The returned dataset carries the fitted schema.
    pub fn from_signals(schema: &FeatureSchema, rows: &[LabeledSignals]) -> Result<Self, ForestError> {
        let mut encoded = Vec::with_capacity(rows.len());
        for r in rows {
            let cells = schema
                .features
                .iter()
                .map(|f| match r.signals.get(&f.name) {
                    Some(v) => f.encode(v),
                    None => Ok(None),
                })
                .collect::<Result<Vec<_>, _>>()?;
            encoded.push(cells);
        }
        let mut fitted = schema.clone();
        fitted.fit_imputation(&encoded)?;
        let vectors = rows
            .iter()
            .zip(&encoded)
            .map(|(r, cells)| FeatureVector {
                domain: r.domain.clone(),
                values: cells
                    .iter()
                    .zip(&fitted.features)
                    .map(|(c, f)| c.unwrap_or_else(|| f.impute_value.unwrap_or(0.0)))
                    .collect(),
                missing_mask: cells.iter().map(Option::is_none).collect(),
            })
            .collect();
        Self::new(vectors, rows.iter().map(|r| r.label).collect(), fitted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureDecl, Impute};

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDecl::numeric("a.score", Impute::Median),
            FeatureDecl::categorical("a.verdict", &["clean", "malicious"]),
        ])
        .unwrap()
    }

    #[test]
    fn validates_shape_and_values() {
        let s = schema();
        assert!(matches!(
            Dataset::from_rows(vec![vec![1.0, 0.0]], vec![], s.clone()),
            Err(ForestError::LengthMismatch { .. })
        ));
        assert!(matches!(
            Dataset::from_rows(vec![vec![1.0]], vec![Label::Benign], s.clone()),
            Err(ForestError::BadRow { .. })
        ));
        assert!(matches!(
            Dataset::from_rows(vec![vec![f64::NAN, 0.0]], vec![Label::Benign], s),
            Err(ForestError::BadRow { .. })
        ));
    }

    #[test]
    fn signals_are_encoded_and_imputed() {
        let text = r#"{"domain":"a.com","label":"suspicious","signals":{"a.score":90,"a.verdict":"malicious"}}
{"domain":"b.com","label":"benign","signals":{"a.score":10}}

{"domain":"c.com","label":"benign","signals":{"a.verdict":"weird"}}"#;
        let rows = LabeledSignals::parse_jsonl(text).unwrap();
        let ds = Dataset::from_signals(&schema(), &rows).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.vectors[0].values, vec![90.0, 1.0]);
        assert_eq!(ds.vectors[1].values, vec![10.0, 1.0]);
        assert_eq!(ds.vectors[2].values, vec![50.0, 2.0]);
        assert!(ds.vectors[2].missing_mask[0]);
        assert!(ds.schema.is_fitted());
        assert_eq!(ds.class_counts(), [2, 1]);
    }

    #[test]
    fn single_class_is_rejected() {
        let ds = Dataset::from_rows(vec![vec![1.0, 0.0]], vec![Label::Benign], schema()).unwrap();
        assert_eq!(ds.require_both_classes(), Err(ForestError::SingleClassDataset));
    }
}
