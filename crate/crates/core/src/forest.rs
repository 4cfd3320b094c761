//! Random forest classification built on Gini-split decision trees.
//!
//! Trees are grown on bootstrap samples with a random feature subset per
//! split. Everything is seeded: the same data, hyperparameters, and seed
//! grow bit-identical forests, and per-tree seeds are derived so parallel
//! training cannot reorder results.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

/// A flat feature matrix with one label per row. Labels are 0-based.
#[derive(Debug, Clone)]
pub struct Dataset {
    values: Vec<f64>,
    n_features: usize,
    labels: Vec<u32>,
    n_classes: u32,
}

impl Dataset {
    pub fn new(rows: &[Vec<f64>], labels: Vec<u32>, n_classes: u32) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("empty training set".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let n_features = rows[0].len();
        let mut values = Vec::with_capacity(rows.len() * n_features);
        for row in rows {
            if row.len() != n_features {
                return Err(Error::FeatureLengthMismatch {
                    got: row.len(),
                    want: n_features,
                });
            }
            values.extend_from_slice(row);
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::InvalidParameter(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(Dataset {
            values,
            n_features,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        counts: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub(crate) nodes: Vec<Node>,
}

impl DecisionTree {
    /// Class counts of the leaf this vector falls into.
    pub fn leaf_counts(&self, x: &[f64]) -> &[u64] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub trees: usize,
    /// 0 means unbounded depth.
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: 0,
            min_leaf: 1,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub n_classes: u32,
    pub n_features: usize,
    pub params: ForestParams,
    pub trees: Vec<DecisionTree>,
    /// Set when the training labels were single-class; such a forest always
    /// answers that class with probability 1.
    pub single_class: Option<u32>,
    /// Out-of-bag accuracy over samples left out of at least one bootstrap.
    pub oob_accuracy: Option<f64>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn gini(counts: &[u64], total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

struct TreeBuilder<'a> {
    data: &'a Dataset,
    params: &'a ForestParams,
    n_subset: usize,
    rng: ChaCha12Rng,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn class_counts(&self, rows: &[u32]) -> Vec<u64> {
        let mut counts = vec![0u64; self.data.n_classes as usize];
        for &r in rows {
            counts[self.data.label(r as usize) as usize] += 1;
        }
        counts
    }

    /// Draw a feature subset without replacement via partial Fisher-Yates.
    fn feature_subset(&mut self) -> Vec<usize> {
        let n = self.data.n_features();
        let mut all: Vec<usize> = (0..n).collect();
        for i in 0..self.n_subset.min(n) {
            let j = self.rng.random_range(i..n);
            all.swap(i, j);
        }
        all.truncate(self.n_subset.min(n));
        all
    }

    fn build(&mut self, mut rows: Vec<u32>, depth: usize) -> u32 {
        let counts = self.class_counts(&rows);
        let total = rows.len() as u64;
        let node_gini = gini(&counts, total);
        let depth_stop = self.params.max_depth != 0 && depth >= self.params.max_depth;
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;

        if !depth_stop && !pure && rows.len() >= 2 * self.params.min_leaf {
            if let Some((feature, threshold)) = self.best_split(&rows, node_gini) {
                let split_at = stable_partition(&mut rows, |&r| {
                    self.data.row(r as usize)[feature] <= threshold
                });
                let (left_rows, right_rows) = rows.split_at(split_at);
                let (left_rows, right_rows) = (left_rows.to_vec(), right_rows.to_vec());
                let id = self.nodes.len() as u32;
                self.nodes.push(Node::Split {
                    feature: feature as u32,
                    threshold,
                    left: 0,
                    right: 0,
                });
                let left = self.build(left_rows, depth + 1);
                let right = self.build(right_rows, depth + 1);
                if let Node::Split {
                    left: l, right: r, ..
                } = &mut self.nodes[id as usize]
                {
                    *l = left;
                    *r = right;
                }
                return id;
            }
        }

        let id = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf { counts });
        id
    }

    /// Best (feature, midpoint threshold) by Gini impurity decrease over a
    /// random feature subset; `None` when no split helps.
    fn best_split(&mut self, rows: &[u32], node_gini: f64) -> Option<(usize, f64)> {
        let features = self.feature_subset();
        let n = rows.len();
        let total = n as u64;
        let mut best: Option<(f64, usize, f64)> = None;

        let mut sorted: Vec<(f64, u32)> = Vec::with_capacity(n);
        for feature in features {
            sorted.clear();
            sorted.extend(rows.iter().map(|&r| {
                (
                    self.data.row(r as usize)[feature],
                    self.data.label(r as usize),
                )
            }));
            sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_counts = vec![0u64; self.data.n_classes as usize];
            let right_counts = self.class_counts(rows);
            let mut right_counts = right_counts;
            for i in 0..n - 1 {
                let (value, label) = sorted[i];
                left_counts[label as usize] += 1;
                right_counts[label as usize] -= 1;
                let next_value = sorted[i + 1].0;
                if value == next_value {
                    continue;
                }
                let n_left = (i + 1) as u64;
                let n_right = total - n_left;
                if (n_left as usize) < self.params.min_leaf
                    || (n_right as usize) < self.params.min_leaf
                {
                    continue;
                }
                let weighted = (n_left as f64 * gini(&left_counts, n_left)
                    + n_right as f64 * gini(&right_counts, n_right))
                    / total as f64;
                let gain = node_gini - weighted;
                if gain > 1e-12 && best.map(|(g, _, _)| gain > g).unwrap_or(true) {
                    best = Some((gain, feature, value + (next_value - value) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Stable partition: reorders `rows` so that all elements satisfying `pred`
/// come first, returning the split point.
fn stable_partition(rows: &mut Vec<u32>, pred: impl Fn(&u32) -> bool) -> usize {
    let mut left: Vec<u32> = Vec::with_capacity(rows.len());
    let mut right: Vec<u32> = Vec::new();
    for &r in rows.iter() {
        if pred(&r) {
            left.push(r);
        } else {
            right.push(r);
        }
    }
    let split = left.len();
    left.extend_from_slice(&right);
    *rows = left;
    split
}

/// Train a forest. A single-class training set yields a constant classifier
/// (recorded in [`Forest::single_class`]) rather than an error.
pub fn train_forest(data: &Dataset, params: &ForestParams) -> Result<Forest> {
    if params.trees == 0 {
        return Err(Error::InvalidParameter(
            "forest needs at least 1 tree".into(),
        ));
    }
    if params.min_leaf == 0 {
        return Err(Error::InvalidParameter("min_leaf must be >= 1".into()));
    }
    let n = data.len();
    let distinct: std::collections::BTreeSet<u32> = (0..n).map(|i| data.label(i)).collect();
    if distinct.len() == 1 {
        let class = *distinct.iter().next().unwrap();
        log::warn!("single-class training set: constant classifier for class {class}");
        let mut counts = vec![0u64; data.n_classes as usize];
        counts[class as usize] = n as u64;
        let tree = DecisionTree {
            nodes: vec![Node::Leaf { counts }],
        };
        return Ok(Forest {
            n_classes: data.n_classes,
            n_features: data.n_features(),
            params: *params,
            trees: vec![tree; params.trees],
            single_class: Some(class),
            oob_accuracy: None,
        });
    }

    let n_subset = (data.n_features() as f64).sqrt().ceil() as usize;
    let results: Vec<(DecisionTree, Vec<bool>)> = (0..params.trees)
        .into_par_iter()
        .map(|tree_idx| {
            let tree_seed = splitmix64(params.seed ^ splitmix64(tree_idx as u64 + 1));
            let mut rng = ChaCha12Rng::seed_from_u64(tree_seed);
            let mut in_bag = vec![false; n];
            let rows: Vec<u32> = (0..n)
                .map(|_| {
                    let r = rng.random_range(0..n);
                    in_bag[r] = true;
                    r as u32
                })
                .collect();
            let mut builder = TreeBuilder {
                data,
                params,
                n_subset,
                rng,
                nodes: Vec::new(),
            };
            builder.build(rows, 0);
            (
                DecisionTree {
                    nodes: builder.nodes,
                },
                in_bag,
            )
        })
        .collect();

    // out-of-bag accuracy: majority vote per sample over trees that skipped it
    let mut oob_votes = vec![vec![0u64; data.n_classes as usize]; n];
    for (tree, in_bag) in &results {
        for i in 0..n {
            if !in_bag[i] {
                let counts = tree.leaf_counts(data.row(i));
                let vote = argmax_class(counts);
                oob_votes[i][vote as usize] += 1;
            }
        }
    }
    let mut evaluated = 0u64;
    let mut correct = 0u64;
    for (i, votes) in oob_votes.iter().enumerate() {
        if votes.iter().any(|&v| v > 0) {
            evaluated += 1;
            if argmax_class(votes) == data.label(i) {
                correct += 1;
            }
        }
    }
    let oob_accuracy = (evaluated > 0).then(|| correct as f64 / evaluated as f64);

    Ok(Forest {
        n_classes: data.n_classes,
        n_features: data.n_features(),
        params: *params,
        trees: results.into_iter().map(|(t, _)| t).collect(),
        single_class: None,
        oob_accuracy,
    })
}

/// Index of the largest count; ties go to the lowest class.
fn argmax_class(counts: &[u64]) -> u32 {
    let mut best = 0usize;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u32
}

impl Forest {
    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::FeatureLengthMismatch {
                got: x.len(),
                want: self.n_features,
            });
        }
        Ok(())
    }

    /// Per-class probability: the unweighted mean over trees of each leaf's
    /// class proportions.
    pub fn predict_distribution(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let mut dist = vec![0.0; self.n_classes as usize];
        for tree in &self.trees {
            let counts = tree.leaf_counts(x);
            let total: u64 = counts.iter().sum();
            if total > 0 {
                for (d, &c) in dist.iter_mut().zip(counts) {
                    *d += c as f64 / total as f64;
                }
            }
        }
        for d in &mut dist {
            *d /= self.trees.len() as f64;
        }
        Ok(dist)
    }

    /// Probability that the (binary) class is 0.
    pub fn prob_class0(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_distribution(x)?[0])
    }

    /// Majority vote over trees; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Result<u32> {
        self.check_len(x)?;
        let mut votes = vec![0u64; self.n_classes as usize];
        for tree in &self.trees {
            votes[argmax_class(tree.leaf_counts(x)) as usize] += 1;
        }
        Ok(argmax_class(&votes))
    }

    /// Share of rows whose majority-vote prediction matches the label.
    pub fn training_accuracy(&self, data: &Dataset) -> f64 {
        let correct = (0..data.len())
            .filter(|&i| self.predict(data.row(i)).unwrap() == data.label(i))
            .count();
        correct as f64 / data.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> Dataset {
        // class by sign of feature 0, feature 1 is noise
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let x = if i % 2 == 0 { -1.0 } else { 1.0 } * (1.0 + (i as f64) / 40.0);
                vec![x, (i as f64 * 7.0) % 3.0]
            })
            .collect();
        let labels: Vec<u32> = (0..40).map(|i| (i % 2) as u32).collect();
        Dataset::new(&rows, labels, 2).unwrap()
    }

    #[test]
    fn separable_data_trains_to_perfect_accuracy() {
        let data = separable();
        let forest = train_forest(
            &data,
            &ForestParams {
                trees: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(forest.training_accuracy(&data), 1.0);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let data = separable();
        let params = ForestParams {
            trees: 12,
            seed: 99,
            ..Default::default()
        };
        let a = train_forest(&data, &params).unwrap();
        let b = train_forest(&data, &params).unwrap();
        assert_eq!(a, b);
        let c = train_forest(
            &data,
            &ForestParams {
                seed: 100,
                ..params
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_class_set_becomes_constant_classifier() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let data = Dataset::new(&rows, vec![1, 1], 2).unwrap();
        let forest = train_forest(&data, &ForestParams::default()).unwrap();
        assert_eq!(forest.single_class, Some(1));
        assert_eq!(forest.predict(&[0.0, 0.0]).unwrap(), 1);
        assert_eq!(forest.prob_class0(&[9.9, 9.9]).unwrap(), 0.0);
    }

    #[test]
    fn probability_is_mean_of_leaf_proportions() {
        // two stumps voting 1.0 and 0.0 for class 0 average to 0.5
        let t0 = DecisionTree {
            nodes: vec![Node::Leaf { counts: vec![5, 0] }],
        };
        let t1 = DecisionTree {
            nodes: vec![Node::Leaf { counts: vec![0, 3] }],
        };
        let forest = Forest {
            n_classes: 2,
            n_features: 1,
            params: ForestParams::default(),
            trees: vec![t0, t1],
            single_class: None,
            oob_accuracy: None,
        };
        assert_eq!(forest.prob_class0(&[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn hand_traced_tree_probability() {
        // split on feature 0 at 0.5: left leaf 3/4 class 0, right leaf pure 1
        let tree = DecisionTree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { counts: vec![3, 1] },
                Node::Leaf { counts: vec![0, 2] },
            ],
        };
        let forest = Forest {
            n_classes: 2,
            n_features: 1,
            params: ForestParams::default(),
            trees: vec![tree],
            single_class: None,
            oob_accuracy: None,
        };
        assert_eq!(forest.prob_class0(&[0.2]).unwrap(), 0.75);
        assert_eq!(forest.prob_class0(&[0.9]).unwrap(), 0.0);
    }

    #[test]
    fn vector_length_mismatch_is_an_error() {
        let data = separable();
        let forest = train_forest(&data, &ForestParams::default()).unwrap();
        assert!(matches!(
            forest.prob_class0(&[1.0]),
            Err(Error::FeatureLengthMismatch { .. })
        ));
    }

    #[test]
    fn permuted_labels_give_chance_level_oob_accuracy() {
        use rand::seq::SliceRandom;
        // 240 rows, 3 informative-ish features, labels then shuffled away
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..240)
            .map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let mut labels: Vec<u32> = (0..240).map(|i| (i % 2) as u32).collect();
        labels.shuffle(&mut rng);
        let majority = labels
            .iter()
            .filter(|&&l| l == 0)
            .count()
            .max(labels.iter().filter(|&&l| l == 1).count()) as f64
            / 240.0;
        let data = Dataset::new(&rows, labels, 2).unwrap();
        let forest = train_forest(
            &data,
            &ForestParams {
                trees: 60,
                seed: 7,
                ..Default::default()
            },
        )
        .unwrap();
        let oob = forest.oob_accuracy.unwrap();
        assert!(
            (oob - majority).abs() <= 0.1,
            "oob {oob} vs majority {majority}"
        );
    }

    #[test]
    fn multiclass_separable_and_tie_rule() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i % 3) as f64, ((i * 13) % 5) as f64])
            .collect();
        let labels: Vec<u32> = (0..60).map(|i| (i % 3) as u32).collect();
        let data = Dataset::new(&rows, labels, 3).unwrap();
        let forest = train_forest(
            &data,
            &ForestParams {
                trees: 15,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(forest.training_accuracy(&data), 1.0);
        // tie rule: equal counts resolve to the lowest class
        assert_eq!(argmax_class(&[4, 4, 1]), 0);
        assert_eq!(argmax_class(&[0, 3, 3]), 1);
    }
}
