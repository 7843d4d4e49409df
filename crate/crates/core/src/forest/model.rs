use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Columns, GrowParams, Tree};
use super::{derive_seed, Dataset, ForestError, Label};
use crate::features::{FeatureSchema, FeatureVector};
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "advertoscope-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features sampled per node; `None` means `floor(sqrt(d))`.
    pub mtry: Option<usize>,
    pub seed: u64,
    pub bootstrap: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            n_trees: 300,
            max_depth: None,
            min_leaf: 1,
            mtry: None,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl Hyperparams {
    pub fn resolved_mtry(&self, d: usize) -> usize {
        self.mtry.unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
    }

    pub fn validate(&self, d: usize) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::Hyperparams("n_trees must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(ForestError::Hyperparams("min_leaf must be at least 1".into()));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > d {
                return Err(ForestError::Hyperparams(format!("mtry {m} outside 1..={d}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction<T = f64> {
    pub label: Label,
    /// Mean over trees of the leaf share of suspicious examples.
    pub probability: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<T = f64> {
    pub format: String,
    pub version: u32,
    pub schema_hash: String,
    pub schema: FeatureSchema,
    pub hyperparams: Hyperparams,
    /// Mean decrease in impurity, normalized to sum to 1.
    pub importances: Vec<f64>,
    pub trees: Vec<Tree<T>>,
}

fn normalize(v: &mut [f64]) -> bool {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x /= s);
        true
    } else {
        false
    }
}

/// Trees are grown in parallel; tree `i` draws from its own stream seeded by
/// `(seed, i)`, so the model does not depend on the thread count.
pub fn train_forest<T: Scalar>(ds: &Dataset<T>, hp: &Hyperparams) -> Result<ForestModel<T>, ForestError> {
    ds.require_both_classes()?;
    let d = ds.n_features();
    hp.validate(d)?;
    let labels: Vec<usize> = ds.labels.iter().map(|l| l.index()).collect();
    let data = Columns {
        cols: (0..d).map(|j| ds.column(j)).collect(),
        labels: &labels,
    };
    let params = GrowParams {
        max_depth: hp.max_depth,
        min_leaf: hp.min_leaf,
        mtry: hp.resolved_mtry(d),
    };
    let n = ds.len();
    let grown: Vec<(Tree<T>, Vec<f64>)> = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(hp.seed, t as u64));
            let rows: Vec<usize> = if hp.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(&data, rows, &params, &mut rng)
        })
        .collect();
    let mut importances = vec![0.0; d];
    let mut contributing = 0usize;
    for (_, imp) in &grown {
        let mut imp = imp.clone();
        if normalize(&mut imp) {
            contributing += 1;
            importances.iter_mut().zip(&imp).for_each(|(a, b)| *a += b);
        }
    }
    if contributing == 0 || !normalize(&mut importances) {
        importances = vec![1.0 / d as f64; d];
    }
    Ok(ForestModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        schema_hash: ds.schema.hash(),
        schema: ds.schema.clone(),
        hyperparams: hp.clone(),
        importances,
        trees: grown.into_iter().map(|(t, _)| t).collect(),
    })
}

impl<T: Scalar> ForestModel<T> {
    pub fn n_features(&self) -> usize {
        self.schema.len()
    }

    pub fn probability_of(&self, values: &[T]) -> Result<T, ForestError> {
        if values.len() != self.n_features() {
            return Err(ForestError::SchemaMismatch {
                expected: format!("{} features", self.n_features()),
                found: format!("{} values", values.len()),
            });
        }
        let sum: T = self
            .trees
            .iter()
            .map(|t| {
                let c = t.leaf_counts(values);
                T::of_usize(c[1]) / T::of_usize(c[0] + c[1])
            })
            .sum();
        Ok(sum / T::of_usize(self.trees.len()))
    }

    /// Exact ties resolve to benign.
    pub fn predict(&self, v: &FeatureVector<T>) -> Result<Prediction<T>, ForestError> {
        let probability = self.probability_of(&v.values)?;
        let label = if probability - T::of(0.5) > T::tie_tolerance() {
            Label::Suspicious
        } else {
            Label::Benign
        };
        Ok(Prediction { label, probability })
    }

    pub fn predict_dataset(&self, ds: &Dataset<T>) -> Result<Vec<Prediction<T>>, ForestError> {
        self.check_schema(&ds.schema)?;
        ds.vectors.iter().map(|v| self.predict(v)).collect()
    }

    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<(), ForestError> {
        let found = schema.hash();
        if found != self.schema_hash {
            return Err(ForestError::SchemaMismatch {
                expected: self.schema_hash.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ForestError> {
        let m: Self = serde_json::from_str(s).map_err(|e| ForestError::Format(e.to_string()))?;
        if m.format != MODEL_FORMAT {
            return Err(ForestError::Format(format!("unknown format {:?}", m.format)));
        }
        if m.version != MODEL_VERSION {
            return Err(ForestError::Format(format!("unsupported model version {}", m.version)));
        }
        m.check_schema(&m.schema)?;
        if m.trees.is_empty() || m.importances.len() != m.n_features() {
            return Err(ForestError::Format("inconsistent tree or importance counts".into()));
        }
        for t in &m.trees {
            t.validate(m.n_features())?;
        }
        Ok(m)
    }

    /// Loads a model and requires it to match `expected`.
    pub fn from_json_for(s: &str, expected: &FeatureSchema) -> Result<Self, ForestError> {
        let m = Self::from_json(s)?;
        m.check_schema(expected)?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self, ForestError> {
        let s = std::fs::read_to_string(path).map_err(|e| ForestError::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureDecl, Impute};
    use crate::forest::TreeNode;

    fn schema(d: usize) -> FeatureSchema {
        FeatureSchema::new((0..d).map(|j| FeatureDecl::numeric(&format!("f{j}"), Impute::Constant(0.0))).collect())
            .unwrap()
    }

    fn separable(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, ((i * 7) % 13) as f64]).collect();
        let labels = (0..n).map(|i| if i < n / 2 { Label::Benign } else { Label::Suspicious }).collect();
        Dataset::from_rows(rows, labels, schema(2)).unwrap()
    }

    #[test]
    fn fits_separable_data() {
        let ds = separable(200);
        let m = train_forest(&ds, &Hyperparams { n_trees: 25, seed: 3, ..Default::default() }).unwrap();
        let preds = m.predict_dataset(&ds).unwrap();
        assert!(preds.iter().zip(&ds.labels).all(|(p, l)| p.label == *l));
        assert!((m.importances.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(m.importances[0] > m.importances[1]);
    }

    #[test]
    fn repeated_points_need_one_split() {
        let rows = vec![vec![0.0], vec![0.0], vec![5.0], vec![5.0]];
        let labels = vec![Label::Benign, Label::Benign, Label::Suspicious, Label::Suspicious];
        let ds = Dataset::from_rows(rows, labels, schema(1)).unwrap();
        let m = train_forest(&ds, &Hyperparams { n_trees: 10, bootstrap: false, ..Default::default() }).unwrap();
        for t in &m.trees {
            assert_eq!(t.nodes.len(), 3);
        }
        assert_eq!(m.predict_dataset(&ds).unwrap().iter().map(|p| p.label).collect::<Vec<_>>(), ds.labels);
    }

    #[test]
    fn single_class_errors() {
        let ds = Dataset::from_rows(vec![vec![1.0]], vec![Label::Benign], schema(1)).unwrap();
        assert_eq!(train_forest(&ds, &Hyperparams::default()), Err(ForestError::SingleClassDataset));
    }

    fn hand_model(trees: Vec<Tree<f64>>) -> ForestModel {
        let s = schema(1);
        ForestModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            schema_hash: s.hash(),
            schema: s,
            hyperparams: Hyperparams::default(),
            importances: vec![1.0],
            trees,
        }
    }

    fn leaf(b: usize, s: usize) -> Tree<f64> {
        Tree {
            nodes: vec![TreeNode::Leaf { counts: [b, s] }],
        }
    }

    #[test]
    fn prediction_probabilities_and_tie() {
        let v = FeatureVector::new("x", vec![0.0]);
        let all = hand_model(vec![leaf(0, 4), leaf(0, 1)]);
        assert_eq!(all.predict(&v).unwrap(), Prediction { label: Label::Suspicious, probability: 1.0 });
        let tie = hand_model(vec![leaf(0, 1), leaf(1, 0)]);
        assert_eq!(tie.predict(&v).unwrap().label, Label::Benign);
        let traced = hand_model(vec![Tree {
            nodes: vec![
                TreeNode::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
                TreeNode::Leaf { counts: [1, 3] },
                TreeNode::Leaf { counts: [5, 0] },
            ],
        }]);
        assert_eq!(traced.predict(&v).unwrap().probability, 0.75);
        assert!(matches!(
            traced.predict(&FeatureVector::new("x", vec![0.0, 1.0])),
            Err(ForestError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let ds = separable(120);
        let hp = Hyperparams { n_trees: 40, seed: 11, ..Default::default() };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| train_forest(&ds, &hp)).unwrap();
        let b = four.install(|| train_forest(&ds, &hp)).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn json_roundtrip_and_schema_check() {
        let ds = separable(40);
        let m = train_forest(&ds, &Hyperparams { n_trees: 5, ..Default::default() }).unwrap();
        let back = ForestModel::<f64>::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(ForestModel::<f64>::from_json_for(&m.to_json(), &schema(3)).is_err());
        let tampered = m.to_json().replace(&m.schema_hash, &"0".repeat(64));
        assert!(matches!(ForestModel::<f64>::from_json(&tampered), Err(ForestError::SchemaMismatch { .. })));
        let bad_version = m.to_json().replace("\"version\":1,\"schema_hash\"", "\"version\":9,\"schema_hash\"");
        assert!(matches!(ForestModel::<f64>::from_json(&bad_version), Err(ForestError::Format(_))));
    }

    #[test]
    fn f32_models_train() {
        let ds: Dataset<f32> = separable(60).cast();
        let m = train_forest(&ds, &Hyperparams { n_trees: 8, ..Default::default() }).unwrap();
        let p = m.predict(&ds.vectors[59]).unwrap();
        assert_eq!(p.label, Label::Suspicious);
    }

    #[test]
    fn invalid_hyperparams() {
        let ds = separable(10);
        assert!(train_forest(&ds, &Hyperparams { n_trees: 0, ..Default::default() }).is_err());
        assert!(train_forest(&ds, &Hyperparams { mtry: Some(3), ..Default::default() }).is_err());
    }
}
