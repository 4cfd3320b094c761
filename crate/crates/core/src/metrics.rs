//! Judged effectiveness metrics for validation: NDCG@k, ERR, and RBP.

use crate::run::{Judgments, RunDoc};

/// NDCG at `cutoff` with linear gains and `1/log2(rank+1)` discounts.
/// A topic with no relevant documents scores 0.
pub fn ndcg_at(ranked: &[RunDoc], topic: &str, judgments: &Judgments, cutoff: usize) -> f64 {
    let dcg: f64 = ranked
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, d)| judgments.gain(topic, &d.doc_id) as f64 / ((i + 2) as f64).log2())
        .sum();
    let mut gains: Vec<u32> = judgments
        .topic_grades(topic)
        .into_iter()
        .map(|(_, g)| g)
        .filter(|&g| g > 0)
        .collect();
    if gains.is_empty() {
        return 0.0;
    }
    gains.sort_unstable_by(|a, b| b.cmp(a));
    let ideal: f64 = gains
        .iter()
        .take(cutoff)
        .enumerate()
        .map(|(i, &g)| g as f64 / ((i + 2) as f64).log2())
        .sum();
    dcg / ideal
}

/// Expected reciprocal rank with the cascade user model and gain mapping
/// `(2^g - 1) / 2^max_grade`, evaluated to `depth`.
pub fn err_judged(
    ranked: &[RunDoc],
    topic: &str,
    judgments: &Judgments,
    depth: usize,
    max_grade: u32,
) -> f64 {
    let mut err = 0.0;
    let mut continue_p = 1.0;
    for (i, d) in ranked.iter().take(depth).enumerate() {
        let g = judgments.gain(topic, &d.doc_id).min(max_grade);
        let r = ((1u64 << g) - 1) as f64 / (1u64 << max_grade) as f64;
        err += continue_p * r / (i + 1) as f64;
        continue_p *= 1.0 - r;
    }
    err
}

/// Rank-biased precision point value with persistence `p`; a document counts
/// as relevant when its grade is positive. The residual is not included.
pub fn rbp_judged(ranked: &[RunDoc], topic: &str, judgments: &Judgments, p: f64) -> f64 {
    ranked
        .iter()
        .enumerate()
        .filter(|(_, d)| judgments.gain(topic, &d.doc_id) > 0)
        .map(|(i, _)| (1.0 - p) * p.powi(i as i32))
        .sum()
}
