use num_traits::{FromPrimitive, Num};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{ForestError, Label};
use crate::scalar::Scalar;

/// `1 - Σ (c_i / n)^2`.
pub fn gini_impurity<T>(counts: &[usize]) -> Result<T, ForestError>
where
    T: Num + FromPrimitive + Copy,
{
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(ForestError::EmptyNode);
    }
    let total = T::from_usize(n).ok_or(ForestError::EmptyNode)?;
    let mut g = T::one();
    for &c in counts {
        let p = T::from_usize(c).ok_or(ForestError::EmptyNode)? / total;
        g = g - p * p;
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split<T> {
    pub feature: usize,
    /// Rows with `value <= threshold` go left.
    pub threshold: T,
    /// Parent impurity minus the size-weighted child impurities.
    pub impurity_decrease: T,
}

/// Nodes are stored flat; the root is node 0 and children always follow
/// their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode<T> {
    Leaf {
        /// Indexed by [`Label::index`].
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<T> {
    pub nodes: Vec<TreeNode<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn leaf_counts(&self, x: &[T]) -> [usize; 2] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { counts } => return *counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[TreeNode<T>], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Structural checks applied to loaded models.
    pub fn validate(&self, n_features: usize) -> Result<(), ForestError> {
        if self.nodes.is_empty() {
            return Err(ForestError::Format("empty tree".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                TreeNode::Leaf { counts } if counts[0] + counts[1] == 0 => {
                    return Err(ForestError::Format(format!("node {i}: empty leaf")));
                }
                TreeNode::Leaf { .. } => {}
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let ok = *feature < n_features
                        && threshold.is_finite()
                        && *left > i
                        && *right > i
                        && left != right
                        && *left < self.nodes.len()
                        && *right < self.nodes.len();
                    if !ok {
                        return Err(ForestError::Format(format!("node {i}: malformed split")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Column-major view of the training data.
pub(crate) struct Columns<'a, T> {
    pub cols: Vec<Vec<T>>,
    pub labels: &'a [usize],
}

fn weighted_child_impurity<T: Scalar>(left: [usize; 2], right: [usize; 2]) -> T {
    // n_l * gini_l + n_r * gini_r, with n * gini = n - Σc²/n
    let part = |c: [usize; 2]| {
        let n = T::of_usize(c[0] + c[1]);
        let sq = T::of_usize(c[0]) * T::of_usize(c[0]) + T::of_usize(c[1]) * T::of_usize(c[1]);
        n - sq / n
    };
    part(left) + part(right)
}

fn counts_of(labels: &[usize], rows: &[usize]) -> [usize; 2] {
    let mut c = [0; 2];
    for &r in rows {
        c[labels[r]] += 1;
    }
    c
}

fn midpoint<T: Scalar>(a: T, b: T) -> T {
    let m = (a + b) / T::of(2.0);
    if m >= b || !m.is_finite() {
        a
    } else {
        m
    }
}

pub(crate) fn search_split<T: Scalar>(
    data: &Columns<'_, T>,
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split<T>> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let total = counts_of(data.labels, rows);
    let parent = gini_impurity::<T>(&total).ok()?;
    let nt = T::of_usize(n);
    let tol = T::tie_tolerance();
    let mut best: Option<Split<T>> = None;
    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();
    let mut pairs: Vec<(T, usize)> = Vec::with_capacity(n);
    for &f in &sorted_features {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (data.cols[f][r], data.labels[r])));
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
        let mut left = [0usize; 2];
        for i in 0..n - 1 {
            left[pairs[i].1] += 1;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let nl = i + 1;
            if nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let decrease = parent - weighted_child_impurity::<T>(left, right) / nt;
            if decrease <= tol {
                continue;
            }
            if best.is_none_or(|b| decrease > b.impurity_decrease + tol) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(pairs[i].0, pairs[i + 1].0),
                    impurity_decrease: decrease,
                });
            }
        }
    }
    best
}

/// Best single split of `x` over `candidate_features`. Ties go to the lower
/// feature index, then the lower threshold.
pub fn best_split<T: Scalar>(x: &[Vec<T>], y: &[Label], candidate_features: &[usize]) -> Option<Split<T>> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let d = x[0].len();
    let labels: Vec<usize> = y.iter().map(|l| l.index()).collect();
    let data = Columns {
        cols: (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect(),
        labels: &labels,
    };
    let rows: Vec<usize> = (0..x.len()).collect();
    let features: Vec<usize> = candidate_features.iter().copied().filter(|&f| f < d).collect();
    search_split(&data, &rows, &features, 1)
}

pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub mtry: usize,
}

/// Grows one tree on `rows` (duplicates allowed). Returns the tree and the
/// per-feature sum of `n_node / n_root * impurity_decrease`.
pub(crate) fn grow<T: Scalar, R: Rng>(
    data: &Columns<'_, T>,
    rows: Vec<usize>,
    params: &GrowParams,
    rng: &mut R,
) -> (Tree<T>, Vec<f64>) {
    let d = data.cols.len();
    let n_root = rows.len() as f64;
    let mut nodes: Vec<TreeNode<T>> = Vec::new();
    let mut importance = vec![0.0; d];
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, rows, 0)];
    nodes.push(TreeNode::Leaf { counts: [0, 0] });
    while let Some((slot, rows, depth)) = stack.pop() {
        let counts = counts_of(data.labels, &rows);
        let can_split = counts[0] > 0
            && counts[1] > 0
            && params.max_depth.is_none_or(|m| depth < m)
            && rows.len() >= 2 * params.min_leaf;
        let split = if can_split {
            let features: Vec<usize> = if params.mtry >= d {
                (0..d).collect()
            } else {
                sample(rng, d, params.mtry).into_vec()
            };
            search_split(data, &rows, &features, params.min_leaf)
        } else {
            None
        };
        match split {
            None => nodes[slot] = TreeNode::Leaf { counts },
            Some(s) => {
                importance[s.feature] += rows.len() as f64 / n_root * s.impurity_decrease.as_f64();
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| data.cols[s.feature][i] <= s.threshold);
                let left = nodes.len();
                nodes.push(TreeNode::Leaf { counts: [0, 0] });
                let right = nodes.len();
                nodes.push(TreeNode::Leaf { counts: [0, 0] });
                nodes[slot] = TreeNode::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left,
                    right,
                };
                // Right first so the left subtree is expanded first.
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    (Tree { nodes }, importance)
}

/// A single tree on all rows using every feature at every node.
pub fn grow_tree<T: Scalar>(x: &[Vec<T>], y: &[Label], max_depth: Option<usize>, min_leaf: usize) -> Tree<T> {
    let d = x.first().map_or(0, Vec::len);
    let labels: Vec<usize> = y.iter().map(|l| l.index()).collect();
    let data = Columns {
        cols: (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect(),
        labels: &labels,
    };
    let params = GrowParams {
        max_depth,
        min_leaf: min_leaf.max(1),
        mtry: d,
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    grow(&data, (0..x.len()).collect(), &params, &mut rng).0
}
