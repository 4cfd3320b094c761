//! Judged validation of predicted cutoffs on held-out topics.

use crate::error::{Error, Result};
use crate::labeling::CutoffGrid;
use crate::metrics::{err_judged, ndcg_at};
use crate::run::{Judgments, RankedRun};
use std::collections::{BTreeMap, BTreeSet};

/// Judged-metric means for one method over the held-out topics.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub method: String,
    pub ndcg10: f64,
    pub err: f64,
    pub mean_cutoff: f64,
}

/// Evaluate methods' per-topic cutoff predictions against judgments.
///
/// Each method maps judged topics to predicted classes; the candidate run is
/// truncated to the predicted cutoff before scoring. Judged topics must be
/// disjoint from the training topics.
#[allow(clippy::too_many_arguments)]
pub fn validate_judged(
    methods: &[(String, BTreeMap<String, u32>)],
    candidate_full: &RankedRun,
    grid: &CutoffGrid,
    judgments: &Judgments,
    training_topics: &BTreeSet<String>,
    ndcg_cutoff: usize,
    err_depth: usize,
    err_max_grade: u32,
) -> Result<Vec<ValidationRow>> {
    let judged: Vec<&str> = judgments.topics().collect();
    if let Some(overlap) = judged.iter().find(|t| training_topics.contains(**t)) {
        return Err(Error::Config(format!(
            "judged topic {overlap} overlaps the training set"
        )));
    }

    let mut rows = Vec::with_capacity(methods.len());
    for (method, predictions) in methods {
        let mut sum_ndcg = 0.0;
        let mut sum_err = 0.0;
        let mut sum_cutoff = 0.0;
        let mut n = 0usize;
        for topic in &judged {
            let Some(&class) = predictions.get(*topic) else {
                continue;
            };
            let cutoff = grid.cutoff_of_class(class);
            let empty = Vec::new();
            let full = candidate_full.topic(topic).unwrap_or(&empty);
            let ranked = &full[..full.len().min(cutoff as usize)];
            sum_ndcg += ndcg_at(ranked, topic, judgments, ndcg_cutoff);
            sum_err += err_judged(ranked, topic, judgments, err_depth, err_max_grade);
            sum_cutoff += cutoff as f64;
            n += 1;
        }
        if n == 0 {
            return Err(Error::Config(format!(
                "method {method} predicted no judged topics"
            )));
        }
        rows.push(ValidationRow {
            method: method.clone(),
            ndcg10: sum_ndcg / n as f64,
            err: sum_err / n as f64,
            mean_cutoff: sum_cutoff / n as f64,
        });
    }
    Ok(rows)
}
