use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{train_forest, ForestModel, Hyperparams};
use super::{derive_seed, Dataset, ForestError, Label};
use crate::scalar::Scalar;

/// Share of each class held out per iteration.
pub const TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// One evaluation, laid out as a classification report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub suspicious: ClassMetrics,
    pub benign: ClassMetrics,
    /// Support-weighted averages over both classes.
    pub weighted: WeightedMetrics,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn class_metrics(truth: &[Label], pred: &[Label], class: Label) -> ClassMetrics {
    let tp = truth.iter().zip(pred).filter(|(t, p)| **t == class && **p == class).count();
    let predicted = pred.iter().filter(|p| **p == class).count();
    let support = truth.iter().filter(|t| **t == class).count();
    let precision = ratio(tp, predicted);
    let recall = ratio(tp, support);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support,
    }
}

/// Undefined ratios (no predictions or no support) count as 0.
pub fn evaluate_labels(truth: &[Label], pred: &[Label]) -> EvalMetrics {
    let suspicious = class_metrics(truth, pred, Label::Suspicious);
    let benign = class_metrics(truth, pred, Label::Benign);
    let n = truth.len();
    let w = |f: fn(&ClassMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            (f(&suspicious) * suspicious.support as f64 + f(&benign) * benign.support as f64) / n as f64
        }
    };
    EvalMetrics {
        accuracy: ratio(truth.iter().zip(pred).filter(|(t, p)| t == p).count(), n),
        suspicious,
        benign,
        weighted: WeightedMetrics {
            precision: w(|m| m.precision),
            recall: w(|m| m.recall),
            f1: w(|m| m.f1),
        },
    }
}

pub fn evaluate<T: Scalar>(model: &ForestModel<T>, ds: &Dataset<T>) -> Result<EvalMetrics, ForestError> {
    let pred: Vec<Label> = model.predict_dataset(ds)?.into_iter().map(|p| p.label).collect();
    Ok(evaluate_labels(&ds.labels, &pred))
}

/// Stratified shuffle split: each class contributes `round(0.2 * n_c)` test
/// rows, keeping at least one of each class in training.
pub fn stratified_split(labels: &[Label], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in Label::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64 * TEST_FRACTION).round() as usize).min(idx.len().saturating_sub(1));
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single iteration.
    pub std: f64,
}

impl MetricStats {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfStats {
    pub precision: MetricStats,
    pub recall: MetricStats,
    pub f1: MetricStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub accuracy: MetricStats,
    pub suspicious: PrfStats,
    pub benign: PrfStats,
    pub weighted: PrfStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub iterations: Vec<EvalMetrics>,
    pub summary: CvSummary,
}

fn summarize(it: &[EvalMetrics]) -> CvSummary {
    let stats = |f: &dyn Fn(&EvalMetrics) -> f64| MetricStats::of(&it.iter().map(f).collect::<Vec<_>>());
    CvSummary {
        accuracy: stats(&|m| m.accuracy),
        suspicious: PrfStats {
            precision: stats(&|m| m.suspicious.precision),
            recall: stats(&|m| m.suspicious.recall),
            f1: stats(&|m| m.suspicious.f1),
        },
        benign: PrfStats {
            precision: stats(&|m| m.benign.precision),
            recall: stats(&|m| m.benign.recall),
            f1: stats(&|m| m.benign.f1),
        },
        weighted: PrfStats {
            precision: stats(&|m| m.weighted.precision),
            recall: stats(&|m| m.weighted.recall),
            f1: stats(&|m| m.weighted.f1),
        },
    }
}

/// Repeated stratified 80/20 evaluation. Iteration `i` splits with seed
/// `(seed, i)` and trains with a forest seed derived from the same pair.
pub fn cross_validate<T: Scalar>(ds: &Dataset<T>, hp: &Hyperparams, iterations: usize) -> Result<CvResult, ForestError> {
    ds.require_both_classes()?;
    if iterations == 0 {
        return Err(ForestError::Hyperparams("iterations must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(iterations);
    for i in 0..iterations {
        let split_seed = derive_seed(hp.seed, 2 * i as u64);
        let (train, test) = stratified_split(&ds.labels, split_seed);
        let hp_i = Hyperparams {
            seed: derive_seed(hp.seed, 2 * i as u64 + 1),
            ..hp.clone()
        };
        let model = train_forest(&ds.subset(&train), &hp_i)?;
        out.push(evaluate(&model, &ds.subset(&test))?);
    }
    Ok(CvResult {
        summary: summarize(&out),
        iterations: out,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuneGrid {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<Option<usize>>,
    pub min_leaf: Vec<usize>,
    pub mtry: Vec<Option<usize>>,
}

impl Default for TuneGrid {
    fn default() -> Self {
        Self {
            n_trees: vec![100, 300],
            max_depth: vec![None, Some(8), Some(16)],
            min_leaf: vec![1, 2, 5],
            mtry: vec![None],
        }
    }
}

impl TuneGrid {
    pub fn candidates(&self, base: &Hyperparams) -> Vec<Hyperparams> {
        let mut out = Vec::new();
        for &n_trees in &self.n_trees {
            for &max_depth in &self.max_depth {
                for &min_leaf in &self.min_leaf {
                    for &mtry in &self.mtry {
                        out.push(Hyperparams {
                            n_trees,
                            max_depth,
                            min_leaf,
                            mtry,
                            ..base.clone()
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub hyperparams: Hyperparams,
    pub summary: CvSummary,
}

/// Cross-validates every grid point; best mean weighted F1 first, grid order
/// breaking ties.
pub fn tune<T: Scalar>(
    ds: &Dataset<T>,
    base: &Hyperparams,
    grid: &TuneGrid,
    iterations: usize,
) -> Result<Vec<TuneRow>, ForestError> {
    let mut rows = grid
        .candidates(base)
        .into_iter()
        .map(|hp| {
            cross_validate(ds, &hp, iterations).map(|r| TuneRow {
                hyperparams: hp,
                summary: r.summary,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| b.summary.weighted.f1.mean.total_cmp(&a.summary.weighted.f1.mean));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureDecl, FeatureSchema, Impute};
    use rand::Rng;

    fn schema(d: usize) -> FeatureSchema {
        FeatureSchema::new((0..d).map(|j| FeatureDecl::numeric(&format!("f{j}"), Impute::Constant(0.0))).collect())
            .unwrap()
    }

    #[test]
    fn report_arithmetic() {
        use Label::{Benign as B, Suspicious as S};
        let truth = [S, S, S, B, B, B, B, B];
        let pred = [S, B, B, B, B, B, B, S];
        let m = evaluate_labels(&truth, &pred);
        assert_eq!(m.accuracy, 5.0 / 8.0);
        assert_eq!(m.suspicious.precision, 0.5);
        assert_eq!(m.suspicious.recall, 1.0 / 3.0);
        assert!((m.suspicious.f1 - 0.4).abs() < 1e-12);
        assert_eq!(m.benign.precision, 4.0 / 6.0);
        assert_eq!(m.benign.recall, 0.8);
        assert!((m.weighted.recall - m.accuracy).abs() < 1e-12);
        let none = evaluate_labels(&[B, B], &[B, B]);
        assert_eq!(none.suspicious.precision, 0.0);
        assert_eq!(none.suspicious.f1, 0.0);
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let labels: Vec<Label> = (0..50).map(|i| if i < 10 { Label::Suspicious } else { Label::Benign }).collect();
        let (train, test) = stratified_split(&labels, 9);
        assert_eq!(test.len(), 10);
        assert_eq!(test.iter().filter(|&&i| labels[i] == Label::Suspicious).count(), 2);
        assert_eq!(train.len() + test.len(), 50);
        assert!(train.iter().all(|i| !test.contains(i)));
        assert_eq!(stratified_split(&labels, 9), (train, test));
    }

    #[test]
    fn perfect_data_scores_one() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![if i < 30 { i as f64 } else { 1000.0 + i as f64 }]).collect();
        let labels = (0..60).map(|i| if i < 30 { Label::Benign } else { Label::Suspicious }).collect();
        let ds = Dataset::from_rows(rows, labels, schema(1)).unwrap();
        let r = cross_validate(&ds, &Hyperparams { n_trees: 10, ..Default::default() }, 5).unwrap();
        assert_eq!(r.iterations.len(), 5);
        assert_eq!(r.summary.accuracy.mean, 1.0);
        assert_eq!(r.summary.weighted.f1.mean, 1.0);
        assert_eq!(r.summary.suspicious.recall.std, 0.0);
    }

    #[test]
    fn shuffled_labels_are_near_chance() {
        let mut accs = Vec::new();
        for seed in 0..3u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
            let mut labels: Vec<Label> = (0..200).map(|i| if i % 2 == 0 { Label::Benign } else { Label::Suspicious }).collect();
            labels.shuffle(&mut rng);
            let ds = Dataset::from_rows(rows, labels, schema(3)).unwrap();
            let hp = Hyperparams { n_trees: 30, seed, ..Default::default() };
            accs.push(cross_validate(&ds, &hp, 5).unwrap().summary.accuracy.mean);
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((mean - 0.5).abs() <= 0.1, "mean accuracy {mean}");
    }

    #[test]
    fn tune_orders_by_weighted_f1() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let labels = (0..40).map(|i| if i < 20 { Label::Benign } else { Label::Suspicious }).collect();
        let ds = Dataset::from_rows(rows, labels, schema(2)).unwrap();
        let grid = TuneGrid {
            n_trees: vec![5],
            max_depth: vec![Some(0), None],
            min_leaf: vec![1],
            mtry: vec![Some(2)],
        };
        let rows = tune(&ds, &Hyperparams::default(), &grid, 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].hyperparams.max_depth, None);
    }
}
