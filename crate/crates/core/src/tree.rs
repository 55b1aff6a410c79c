//! CART regression trees.
//!
//! A node splits on `(k, C)`: rows with `z_k <= C` go left. Thresholds are
//! observed values of `z_k` inside the node, excluding the node maximum, and
//! the split minimizing `SSE(left) + SSE(right)` wins, ties going to the
//! smallest `k` and then the smallest `C`.
//!
//! The principal decision ratio between two rules is kept in log space:
//! `log tau = loss(rule2) - loss(rule1)` under unit error variance.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::losses_tie;
use crate::rng;
use crate::stats::bayes_permutation;
use crate::types::{mean_sse, RankPermutation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub coordinate: usize,
    pub threshold: f64,
}

impl SplitRule {
    pub fn new(coordinate: usize, threshold: f64) -> Self {
        SplitRule { coordinate, threshold }
    }

    pub fn goes_left(&self, row: &[f64]) -> bool {
        row[self.coordinate] <= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf { samples: Vec<usize>, mean: f64 },
    Split { samples: Vec<usize>, rule: SplitRule, left: Box<TreeNode>, right: Box<TreeNode> },
}

impl TreeNode {
    /// Training rows enclosed by this node. Empty for deserialized trees.
    pub fn samples(&self) -> &[usize] {
        match self {
            TreeNode::Leaf { samples, .. } | TreeNode::Split { samples, .. } => samples,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn visit<'a>(&'a self, out: &mut Vec<&'a TreeNode>) {
        out.push(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.visit(out);
            right.visit(out);
        }
    }
}

/// A grown tree together with the number of feature columns it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TreeDoc", into = "TreeDoc")]
pub struct Tree {
    pub n_features: usize,
    pub root: TreeNode,
}

impl Tree {
    /// Nodes in depth-first (preorder) order.
    pub fn nodes(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        self.root.visit(&mut out);
        out
    }

    pub fn leaves(&self) -> Vec<&TreeNode> {
        self.nodes().into_iter().filter(|n| n.is_leaf()).collect()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Number of internal splits on each feature column.
    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_features];
        for node in self.nodes() {
            if let TreeNode::Split { rule, .. } = node {
                counts[rule.coordinate] += 1;
            }
        }
        counts
    }

    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::ColumnMismatch { expected: self.n_features, got: row.len() });
        }
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { mean, .. } => return Ok(*mean),
                TreeNode::Split { rule, left, right, .. } => {
                    node = if rule.goes_left(row) { left } else { right };
                }
            }
        }
    }

    /// Predictions for every row of a column-major matrix.
    pub fn predict_columns(&self, columns: &[Vec<f64>]) -> Result<Vec<f64>> {
        if columns.len() != self.n_features {
            return Err(Error::ColumnMismatch { expected: self.n_features, got: columns.len() });
        }
        let n = columns.first().map_or(0, Vec::len);
        let mut row = vec![0.0; self.n_features];
        (0..n)
            .map(|i| {
                for (slot, col) in row.iter_mut().zip(columns) {
                    *slot = col[i];
                }
                self.predict(&row)
            })
            .collect()
    }

    /// Rows sorted by predicted score, highest first; equal scores keep
    /// index order.
    pub fn induced_permutation(&self, columns: &[Vec<f64>]) -> Result<RankPermutation> {
        Ok(bayes_permutation(&self.predict_columns(columns)?))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeDoc {
    n_features: usize,
    nodes: Vec<NodeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum NodeDoc {
    Split { coordinate: usize, threshold: f64 },
    Leaf { mean: f64 },
}

impl From<Tree> for TreeDoc {
    fn from(tree: Tree) -> Self {
        let nodes = tree
            .nodes()
            .into_iter()
            .map(|n| match n {
                TreeNode::Leaf { mean, .. } => NodeDoc::Leaf { mean: *mean },
                TreeNode::Split { rule, .. } => {
                    NodeDoc::Split { coordinate: rule.coordinate, threshold: rule.threshold }
                }
            })
            .collect();
        TreeDoc { n_features: tree.n_features, nodes }
    }
}

impl TryFrom<TreeDoc> for Tree {
    type Error = Error;

    fn try_from(doc: TreeDoc) -> Result<Tree> {
        fn build(it: &mut std::slice::Iter<'_, NodeDoc>, d: usize) -> Result<TreeNode> {
            match it.next() {
                None => Err(Error::Config("tree document ends early".into())),
                Some(NodeDoc::Leaf { mean }) => Ok(TreeNode::Leaf { samples: Vec::new(), mean: *mean }),
                Some(NodeDoc::Split { coordinate, threshold }) => {
                    if *coordinate >= d {
                        return Err(Error::ColumnMismatch { expected: d, got: coordinate + 1 });
                    }
                    let left = Box::new(build(it, d)?);
                    let right = Box::new(build(it, d)?);
                    Ok(TreeNode::Split {
                        samples: Vec::new(),
                        rule: SplitRule::new(*coordinate, *threshold),
                        left,
                        right,
                    })
                }
            }
        }
        let mut it = doc.nodes.iter();
        let root = build(&mut it, doc.n_features)?;
        if it.next().is_some() {
            return Err(Error::Config("tree document has trailing nodes".into()));
        }
        Ok(Tree { n_features: doc.n_features, root })
    }
}

fn check_columns(columns: &[Vec<f64>], y: &[f64]) -> Result<()> {
    for (k, c) in columns.iter().enumerate() {
        if c.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("column {k} has {} rows, response has {}", c.len(), y.len())));
        }
    }
    Ok(())
}

/// Means of the responses on each side of `mask_left`.
pub fn split_means(y: &[f64], mask_left: &[bool]) -> Result<(f64, f64)> {
    if mask_left.len() != y.len() {
        return Err(Error::LengthMismatch { left: mask_left.len(), right: y.len() });
    }
    let (mut sl, mut nl, mut sr, mut nr) = (0.0, 0usize, 0.0, 0usize);
    for (&v, &m) in y.iter().zip(mask_left) {
        if m {
            sl += v;
            nl += 1;
        } else {
            sr += v;
            nr += 1;
        }
    }
    if nl == 0 || nr == 0 {
        return Err(Error::EmptySide);
    }
    Ok((sl / nl as f64, sr / nr as f64))
}

/// The chosen rule and its two-sided loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestSplit {
    pub rule: SplitRule,
    pub loss: f64,
}

/// Best split of the node holding rows `idx`.
pub fn best_split(columns: &[Vec<f64>], y: &[f64], idx: &[usize]) -> Result<BestSplit> {
    best_split_min_leaf(columns, y, idx, 1)
}

/// [`best_split`] restricted to children with at least `min_leaf` rows.
pub fn best_split_min_leaf(columns: &[Vec<f64>], y: &[f64], idx: &[usize], min_leaf: usize) -> Result<BestSplit> {
    check_columns(columns, y)?;
    if idx.len() < 2 {
        return Err(Error::Unsplittable("fewer than two samples"));
    }
    let first = y[idx[0]];
    if idx.iter().all(|&i| y[i] == first) {
        return Err(Error::Unsplittable("constant response"));
    }
    let (mean, _) = mean_sse(y, idx);
    let per_column: Vec<Option<BestSplit>> =
        columns.par_iter().enumerate().map(|(k, col)| best_on_column(k, col, y, idx, mean, min_leaf.max(1))).collect();
    let mut best: Option<BestSplit> = None;
    for cand in per_column.into_iter().flatten() {
        match best {
            Some(b) if !(cand.loss < b.loss && !losses_tie(cand.loss, b.loss)) => {}
            _ => best = Some(cand),
        }
    }
    best.ok_or(Error::Unsplittable("no admissible threshold"))
}

fn best_on_column(k: usize, col: &[f64], y: &[f64], idx: &[usize], mean: f64, min_leaf: usize) -> Option<BestSplit> {
    let mut order = idx.to_vec();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
    let n = order.len();
    let c: Vec<f64> = order.iter().map(|&i| y[i] - mean).collect();
    let total_s: f64 = c.iter().sum();
    let total_q: f64 = c.iter().map(|v| v * v).sum();
    let (mut s, mut q) = (0.0, 0.0);
    let mut best: Option<BestSplit> = None;
    for j in 0..n - 1 {
        s += c[j];
        q += c[j] * c[j];
        let (here, next) = (col[order[j]], col[order[j + 1]]);
        let nl = j + 1;
        if here == next || nl < min_leaf || n - nl < min_leaf {
            continue;
        }
        let left = (q - s * s / nl as f64).max(0.0);
        let right = ((total_q - q) - (total_s - s).powi(2) / (n - nl) as f64).max(0.0);
        let loss = left + right;
        match best {
            Some(b) if !(loss < b.loss && !losses_tie(loss, b.loss)) => {}
            _ => best = Some(BestSplit { rule: SplitRule::new(k, here), loss }),
        }
    }
    best
}

/// `SSE(left) + SSE(right)` for `rule` on the node `idx`. A rule sending
/// every row to one side scores the parent SSE.
pub fn split_loss(columns: &[Vec<f64>], y: &[f64], idx: &[usize], rule: SplitRule) -> Result<f64> {
    check_columns(columns, y)?;
    if rule.coordinate >= columns.len() {
        return Err(Error::InadmissibleRule(format!("coordinate {} with {} columns", rule.coordinate, columns.len())));
    }
    if rule.threshold.is_nan() {
        return Err(Error::InadmissibleRule("NaN threshold".into()));
    }
    if idx.is_empty() {
        return Err(Error::Unsplittable("empty node"));
    }
    let col = &columns[rule.coordinate];
    let (left, right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| col[i] <= rule.threshold);
    let sse = |s: &[usize]| if s.is_empty() { 0.0 } else { mean_sse(y, s).1 };
    Ok(sse(&left) + sse(&right))
}

/// `log tau = loss(rule2) - loss(rule1)`; positive when `rule1` fits better.
pub fn log_principal_decision_ratio(
    columns: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    rule1: SplitRule,
    rule2: SplitRule,
) -> Result<f64> {
    if rule1 == rule2 {
        split_loss(columns, y, idx, rule1)?;
        return Ok(0.0);
    }
    Ok(split_loss(columns, y, idx, rule2)? - split_loss(columns, y, idx, rule1)?)
}

/// Grows a tree to depth `depth`. Nodes with fewer than `2 * min_leaf`
/// rows or no admissible split become leaves.
pub fn grow_tree(columns: &[Vec<f64>], y: &[f64], depth: usize, min_leaf: usize) -> Result<Tree> {
    check_columns(columns, y)?;
    if y.is_empty() {
        return Err(Error::TooFewObservations { needed: 1, got: 0 });
    }
    let min_leaf = min_leaf.max(1);
    let idx: Vec<usize> = (0..y.len()).collect();
    let root = grow_node(columns, y, idx, depth, min_leaf);
    Ok(Tree { n_features: columns.len(), root })
}

fn grow_node(columns: &[Vec<f64>], y: &[f64], idx: Vec<usize>, depth: usize, min_leaf: usize) -> TreeNode {
    let leaf = |idx: Vec<usize>| {
        let mean = mean_sse(y, &idx).0;
        TreeNode::Leaf { samples: idx, mean }
    };
    if depth == 0 || idx.len() < 2 * min_leaf {
        return leaf(idx);
    }
    let Ok(best) = best_split_min_leaf(columns, y, &idx, min_leaf) else {
        return leaf(idx);
    };
    let col = &columns[best.rule.coordinate];
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| col[i] <= best.rule.threshold);
    TreeNode::Split {
        samples: idx,
        rule: best.rule,
        left: Box::new(grow_node(columns, y, l, depth - 1, min_leaf)),
        right: Box::new(grow_node(columns, y, r, depth - 1, min_leaf)),
    }
}

/// Settings for [`ensemble_importance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_trees: usize,
    pub depth: usize,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { n_trees: 50, depth: 3, min_leaf: 1, bootstrap: true }
    }
}

/// Fraction of internal splits that use each column across an ensemble of
/// trees grown on bootstrap resamples. All zeros if no tree ever splits.
pub fn ensemble_importance(columns: &[Vec<f64>], y: &[f64], cfg: &EnsembleConfig, seed: u64) -> Result<Vec<f64>> {
    check_columns(columns, y)?;
    if cfg.n_trees == 0 {
        return Err(Error::Config("n_trees must be at least 1".into()));
    }
    let n = y.len();
    let counts: Vec<Vec<usize>> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| -> Result<Vec<usize>> {
            if !cfg.bootstrap {
                return Ok(grow_tree(columns, y, cfg.depth, cfg.min_leaf)?.split_counts());
            }
            let mut r = rng::stream(seed, t as u64);
            let rows: Vec<usize> = (0..n).map(|_| r.random_range(0..n)).collect();
            let cols: Vec<Vec<f64>> = columns.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect();
            let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
            Ok(grow_tree(&cols, &ys, cfg.depth, cfg.min_leaf)?.split_counts())
        })
        .collect::<Result<_>>()?;
    let mut total = vec![0usize; columns.len()];
    for c in &counts {
        total.iter_mut().zip(c).for_each(|(t, v)| *t += v);
    }
    let sum: usize = total.iter().sum();
    Ok(total.iter().map(|&c| if sum == 0 { 0.0 } else { c as f64 / sum as f64 }).collect())
}
