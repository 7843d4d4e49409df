use serde::{Deserialize, Serialize};

use super::model::ForestModel;
use crate::features::FeatureSchema;
use crate::scalar::Scalar;

/// Slack for the cumulative-importance comparison; importances sum to 1
/// only within floating-point error.
pub const SELECTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    /// Indices into the original schema, ascending.
    pub kept: Vec<usize>,
    pub cumulative_importance: f64,
    pub schema: FeatureSchema,
}

/// Shortest prefix, by descending importance (lower index first on ties),
/// whose cumulative importance reaches `threshold`. At least one feature is kept.
pub fn select_features<T: Scalar>(model: &ForestModel<T>, threshold: f64) -> FeatureSelection {
    select_by_importance(&model.importances, &model.schema, threshold)
}

pub(crate) fn select_by_importance(importances: &[f64], schema: &FeatureSchema, threshold: f64) -> FeatureSelection {
    let mut order: Vec<usize> = (0..importances.len()).collect();
    order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    let mut kept = Vec::new();
    let mut cum = 0.0;
    for i in order {
        if !kept.is_empty() && cum >= threshold - SELECTION_TOLERANCE {
            break;
        }
        cum += importances[i];
        kept.push(i);
    }
    kept.sort_unstable();
    FeatureSelection {
        schema: schema.subset(&kept),
        kept,
        cumulative_importance: cum,
    }
}
