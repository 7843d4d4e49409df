//! CART decision trees and random forests over feature vectors, with
//! repeated stratified cross-validation and importance-based feature selection.

mod cv;
mod dataset;
mod model;
mod select;
mod tree;

use serde::{Deserialize, Serialize};

pub use cv::{
    cross_validate, evaluate, stratified_split, tune, ClassMetrics, CvResult, CvSummary, EvalMetrics, MetricStats,
    PrfStats, TuneGrid, TuneRow, WeightedMetrics,
};
pub use dataset::{Dataset, LabeledSignals};
pub use model::{train_forest, ForestModel, Hyperparams, Prediction, MODEL_FORMAT, MODEL_VERSION};
pub use select::{select_features, FeatureSelection, SELECTION_TOLERANCE};
pub use tree::{best_split, gini_impurity, grow_tree, Split, Tree, TreeNode};

use crate::features::FeatureError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Benign,
    Suspicious,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Benign, Label::Suspicious];

    /// Position in per-class count arrays.
    pub fn index(self) -> usize {
        match self {
            Label::Benign => 0,
            Label::Suspicious => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Suspicious => "suspicious",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = ForestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "benign" | "0" => Ok(Label::Benign),
            "suspicious" | "1" => Ok(Label::Suspicious),
            other => Err(ForestError::Format(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForestError {
    #[error("node has no samples")]
    EmptyNode,
    #[error("dataset needs at least one example of each class")]
    SingleClassDataset,
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("invalid hyperparameters: {0}")]
    Hyperparams(String),
    #[error("invalid model file: {0}")]
    Format(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` of a run seeded with `seed`.
pub(crate) fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}
