//! Stratified cross-validation fold assignment.

use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

/// A partition of topics into folds, stratified by class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    n_folds: usize,
    assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn fold_of(&self, topic: &str) -> Option<usize> {
        self.assignment.get(topic).copied()
    }

    pub fn topics_in(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    pub fn topics_not_in(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f != fold)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.assignment.iter().map(|(t, &f)| (t.as_str(), f))
    }
}

/// Assign topics to `n_folds` folds, stratified by label.
///
/// Members of each class are shuffled (seeded) and dealt round-robin, with
/// the dealing offset carried across classes so overall fold sizes stay
/// balanced. Per-class fold counts differ by at most one; a class smaller
/// than the fold count spreads over distinct folds with a warning.
pub fn make_folds(labels: &BTreeMap<String, u32>, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::InvalidParameter("need at least 2 folds".into()));
    }
    if labels.len() < n_folds {
        return Err(Error::InvalidParameter(format!(
            "{} topics cannot fill {} folds",
            labels.len(),
            n_folds
        )));
    }
    let mut by_class: BTreeMap<u32, Vec<&str>> = BTreeMap::new();
    for (topic, &class) in labels {
        by_class.entry(class).or_default().push(topic.as_str());
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut assignment = BTreeMap::new();
    let mut offset = 0usize;
    for (class, mut members) in by_class {
        if members.len() < n_folds {
            log::warn!(
                "class {class} has {} members for {n_folds} folds; spreading",
                members.len()
            );
        }
        members.shuffle(&mut rng);
        for (i, topic) in members.iter().enumerate() {
            assignment.insert(topic.to_string(), (offset + i) % n_folds);
        }
        offset = (offset + members.len()) % n_folds;
    }
    Ok(FoldPlan {
        n_folds,
        assignment,
    })
}
