//! Downstream check of feature subsets with a deterministic CART tree and
//! stratified k-fold cross-validation.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::LabelVector;
use crate::matrix::FeatureMatrix;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_leaf: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node<T> {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// Binary classification tree over feature rows; instances go left when
/// `value <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree<T> {
    nodes: Vec<Node<T>>,
    classes: usize,
}

impl<T: Real> DecisionTree<T> {
    pub fn predict(&self, f: &FeatureMatrix<T>, instance: usize) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if f.values()[[feature, instance]] <= threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    /// Fraction of instances predicted correctly.
    pub fn accuracy(&self, f: &FeatureMatrix<T>, labels: &LabelVector) -> f64 {
        let hits = (0..labels.n())
            .filter(|&i| self.predict(f, i) == labels.code(i))
            .count();
        hits as f64 / labels.n() as f64
    }
}

/// Split quality as the exact fraction `Σ_L c²/n_L + Σ_R c²/n_R`; larger means
/// lower weighted Gini impurity.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn new(left_sq: u128, n_left: u128, right_sq: u128, n_right: u128) -> Self {
        Self {
            num: left_sq * n_right + right_sq * n_left,
            den: n_left * n_right,
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

fn sum_sq(counts: &[usize]) -> u128 {
    counts.iter().map(|&k| (k as u128) * (k as u128)).sum()
}

fn majority(counts: &[usize]) -> usize {
    // ties resolve to the lowest class code
    let mut best = 0;
    for (l, &k) in counts.iter().enumerate() {
        if k > counts[best] {
            best = l;
        }
    }
    best
}

struct Builder<'a, T> {
    f: &'a FeatureMatrix<T>,
    codes: &'a [usize],
    classes: usize,
    features: Vec<usize>,
    params: TreeParams,
    nodes: Vec<Node<T>>,
}

impl<T: Real> Builder<'_, T> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &i in idx {
            counts[self.codes[i]] += 1;
        }
        counts
    }

    fn best_split(&self, idx: &[usize], counts: &[usize]) -> Option<(usize, T)> {
        let min_leaf = self.params.min_leaf;
        let n = idx.len();
        let values = self.f.values();
        let mut best: Option<(Purity, usize, T)> = None;
        let mut order = idx.to_vec();
        for &feature in &self.features {
            let row = values.row(feature);
            order.sort_by(|&a, &b| {
                row[a]
                    .partial_cmp(&row[b])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            let mut left = vec![0usize; self.classes];
            for pos in 0..n - 1 {
                left[self.codes[order[pos]]] += 1;
                let (lo, hi) = (row[order[pos]], row[order[pos + 1]]);
                let n_left = pos + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right: Vec<usize> = counts.iter().zip(&left).map(|(&a, &b)| a - b).collect();
                let purity = Purity::new(
                    sum_sq(&left),
                    n_left as u128,
                    sum_sq(&right),
                    (n - n_left) as u128,
                );
                // strict improvement keeps the lowest feature, then lowest threshold
                let better = match &best {
                    None => true,
                    Some((p, _, _)) => purity.cmp(p) == Ordering::Greater,
                };
                if better {
                    best = Some((purity, feature, (lo + hi) / T::lit(2.0)));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let class = majority(&counts);
        let pure = counts.iter().filter(|&&k| k > 0).count() <= 1;
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { class });
        if pure || depth >= self.params.max_depth || idx.len() < 2 * self.params.min_leaf {
            return at;
        }
        let Some((feature, threshold)) = self.best_split(idx, &counts) else {
            return at;
        };
        let row = self.f.row(feature);
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| row[i] <= threshold);
        let left = self.build(&l, depth + 1);
        let right = self.build(&r, depth + 1);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

fn check_subset(subset: &[usize], m: usize) -> Result<Vec<usize>> {
    if subset.is_empty() {
        return Err(Error::InvalidParameter {
            name: "subset",
            reason: "at least one feature is required".into(),
        });
    }
    if let Some(&index) = subset.iter().find(|&&j| j >= m) {
        return Err(Error::IndexOutOfRange { index, m });
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

fn check_params(params: TreeParams) -> Result<()> {
    if params.max_depth == 0 || params.min_leaf == 0 {
        return Err(Error::InvalidParameter {
            name: "tree",
            reason: "max_depth and min_leaf must be at least 1".into(),
        });
    }
    Ok(())
}

fn fit<T: Real>(
    f: &FeatureMatrix<T>,
    codes: &[usize],
    classes: usize,
    features: Vec<usize>,
    params: TreeParams,
    instances: &[usize],
) -> DecisionTree<T> {
    let mut builder = Builder {
        f,
        codes,
        classes,
        features,
        params,
        nodes: Vec::new(),
    };
    builder.build(instances, 0);
    DecisionTree {
        nodes: builder.nodes,
        classes,
    }
}

/// Fits a Gini CART tree on all instances using only the features in `subset`.
///
/// Split thresholds are midpoints between consecutive distinct values. Ties
/// go to the lowest feature index, then the lowest threshold. Nodes that are
/// pure, at `max_depth`, or too small for two `min_leaf` children become
/// leaves predicting the majority class.
pub fn train_tree<T: Real>(
    f: &FeatureMatrix<T>,
    labels: &LabelVector,
    subset: &[usize],
    params: TreeParams,
) -> Result<DecisionTree<T>> {
    check_params(params)?;
    let features = check_subset(subset, f.m())?;
    if f.n() != labels.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", f.n()),
            found: format!("{}", labels.n()),
        });
    }
    let all: Vec<usize> = (0..f.n()).collect();
    Ok(fit(f, labels.codes(), labels.c(), features, params, &all))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRates {
    pub class: String,
    pub count: usize,
    /// Recall of this class.
    pub tp: f64,
    /// Fraction of other-class instances predicted as this class.
    pub fp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub per_class: Vec<ClassRates>,
    pub weighted_tp: f64,
    pub weighted_fp: f64,
    pub accuracy: f64,
    /// Zero-based feature indices used.
    pub feature_subset: Vec<usize>,
    pub folds: usize,
    pub tree: TreeParams,
}

/// Fold of every instance: the t-th instance of each class lands in fold
/// `t mod folds`.
pub fn stratified_folds(labels: &LabelVector, folds: usize) -> Vec<usize> {
    let mut seen = vec![0usize; labels.c()];
    labels
        .codes()
        .iter()
        .map(|&l| {
            let fold = seen[l] % folds;
            seen[l] += 1;
            fold
        })
        .collect()
}

/// Per-class TP/FP rates and their occurrence-weighted averages.
pub fn class_rates(labels: &LabelVector, predicted: &[usize]) -> (Vec<ClassRates>, f64, f64) {
    let n = labels.n();
    let mut per_class = Vec::with_capacity(labels.c());
    let (mut wtp, mut wfp) = (0.0, 0.0);
    for l in 0..labels.c() {
        let count = labels.class_counts()[l];
        let mut hit = 0usize;
        let mut false_alarm = 0usize;
        for (i, &p) in predicted.iter().enumerate() {
            if p == l {
                if labels.code(i) == l {
                    hit += 1;
                } else {
                    false_alarm += 1;
                }
            }
        }
        let tp = hit as f64 / count as f64;
        let others = n - count;
        let fp = if others == 0 {
            0.0
        } else {
            false_alarm as f64 / others as f64
        };
        let weight = count as f64 / n as f64;
        wtp += weight * tp;
        wfp += weight * fp;
        per_class.push(ClassRates {
            class: labels.class_names()[l].clone(),
            count,
            tp,
            fp,
        });
    }
    (per_class, wtp, wfp)
}

/// Stratified k-fold cross-validation of a CART tree restricted to `subset`.
pub fn evaluate_subset<T: Real>(
    f: &FeatureMatrix<T>,
    labels: &LabelVector,
    subset: &[usize],
    folds: usize,
    params: TreeParams,
) -> Result<EvalResult> {
    check_params(params)?;
    let features = check_subset(subset, f.m())?;
    if f.n() != labels.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} labels", f.n()),
            found: format!("{}", labels.n()),
        });
    }
    if folds < 2 {
        return Err(Error::InvalidParameter {
            name: "folds",
            reason: format!("must be at least 2, got {folds}"),
        });
    }
    for (l, &count) in labels.class_counts().iter().enumerate() {
        if count < folds {
            return Err(Error::TooFewInstances {
                class: labels.class_names()[l].clone(),
                count,
                folds,
            });
        }
    }

    let fold_of = stratified_folds(labels, folds);
    let per_fold: Vec<Vec<(usize, usize)>> = (0..folds)
        .into_par_iter()
        .map(|k| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..f.n()).partition(|&i| fold_of[i] == k);
            let tree = fit(f, labels.codes(), labels.c(), features.clone(), params, &train);
            test.into_iter().map(|i| (i, tree.predict(f, i))).collect()
        })
        .collect();
    let mut predicted = vec![0usize; f.n()];
    for (i, p) in per_fold.into_iter().flatten() {
        predicted[i] = p;
    }

    let (per_class, weighted_tp, weighted_fp) = class_rates(labels, &predicted);
    let accuracy = predicted
        .iter()
        .enumerate()
        .filter(|&(i, &p)| p == labels.code(i))
        .count() as f64
        / f.n() as f64;
    Ok(EvalResult {
        per_class,
        weighted_tp,
        weighted_fp,
        accuracy,
        feature_subset: features,
        folds,
        tree: params,
    })
}
