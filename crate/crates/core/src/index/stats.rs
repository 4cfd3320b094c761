//! Per-term similarity-score statistics, precomputed at index time.
//!
//! For every term and every measure, the scores of the term's full posting
//! list are summarized into order statistics and moments. These blocks are
//! what query-time feature extraction aggregates, and their per-measure
//! maxima double as the upper bounds used by safe top-k pruning.

use super::PostingsIndex;
use crate::scoring::{Measure, ScoreContext, SimilarityParams, MEASURES};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Summary of one term's per-document scores under one measure.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoreStats {
    pub max: f64,
    pub min: f64,
    pub q1: f64,
    pub q3: f64,
    pub median: f64,
    pub mean: f64,
    pub harmonic_mean: f64,
    /// Population variance (divide by n): these are descriptive features,
    /// not estimates.
    pub variance: f64,
    pub iqr: f64,
}

impl ScoreStats {
    pub fn get(&self, stat: ScoreStat) -> f64 {
        match stat {
            ScoreStat::Max => self.max,
            ScoreStat::Min => self.min,
            ScoreStat::Q1 => self.q1,
            ScoreStat::Q3 => self.q3,
            ScoreStat::Median => self.median,
            ScoreStat::Mean => self.mean,
            ScoreStat::HarmonicMean => self.harmonic_mean,
            ScoreStat::Variance => self.variance,
            ScoreStat::Iqr => self.iqr,
        }
    }
}

/// Names of the nine per-measure score statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreStat {
    Max,
    Min,
    Q1,
    Q3,
    Median,
    Mean,
    HarmonicMean,
    Variance,
    Iqr,
}

impl ScoreStat {
    pub const ALL: [ScoreStat; 9] = [
        ScoreStat::Max,
        ScoreStat::Min,
        ScoreStat::Q1,
        ScoreStat::Q3,
        ScoreStat::Median,
        ScoreStat::Mean,
        ScoreStat::HarmonicMean,
        ScoreStat::Variance,
        ScoreStat::Iqr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScoreStat::Max => "max",
            ScoreStat::Min => "min",
            ScoreStat::Q1 => "q1",
            ScoreStat::Q3 => "q3",
            ScoreStat::Median => "median",
            ScoreStat::Mean => "mean",
            ScoreStat::HarmonicMean => "hmean",
            ScoreStat::Variance => "variance",
            ScoreStat::Iqr => "iqr",
        }
    }
}

/// Statistics block stored next to one term's postings.
#[derive(Debug, Clone, PartialEq)]
pub struct TermStatBlock {
    pub doc_freq: u64,
    pub coll_freq: u64,
    /// Indexed by [`Measure::index`]: bm25, lm, tfidf.
    pub per_measure: [ScoreStats; 3],
}

impl TermStatBlock {
    pub fn stats(&self, measure: Measure) -> &ScoreStats {
        &self.per_measure[measure.index()]
    }
}

/// All term blocks plus the similarity parameters they were computed under.
#[derive(Debug, Clone)]
pub struct TermStatsStore {
    pub params: SimilarityParams,
    blocks: BTreeMap<String, TermStatBlock>,
}

impl TermStatsStore {
    pub(crate) fn from_parts(
        params: SimilarityParams,
        blocks: BTreeMap<String, TermStatBlock>,
    ) -> Self {
        TermStatsStore { params, blocks }
    }

    pub fn get(&self, term: &str) -> Option<&TermStatBlock> {
        self.blocks.get(term)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TermStatBlock)> {
        self.blocks.iter().map(|(t, b)| (t.as_str(), b))
    }

    /// Safe pruning bound for one term: the maximum per-document score.
    pub fn max_score(&self, term: &str, measure: Measure) -> Option<f64> {
        self.get(term).map(|b| b.stats(measure).max)
    }
}

/// Compute a [`TermStatBlock`] for every term in the index under all three
/// measures.
pub fn precompute_term_stats(index: &PostingsIndex, params: &SimilarityParams) -> TermStatsStore {
    let coll = index.collection_stats();
    let terms: Vec<(&str, &super::TermPostings)> = index.vocab().collect();
    let blocks: BTreeMap<String, TermStatBlock> = terms
        .par_iter()
        .map(|(term, tp)| {
            let mut per_measure = [ScoreStats::default(); 3];
            for measure in MEASURES {
                let ctx = ScoreContext {
                    measure,
                    n_docs: coll.doc_count,
                    coll_len: coll.total_terms,
                    avg_doc_len: coll.avg_doc_len,
                    params: *params,
                };
                let mut scores: Vec<f64> = tp
                    .postings
                    .iter()
                    .map(|p| {
                        ctx.score(
                            tp.doc_freq(),
                            tp.coll_freq,
                            p.tf as u64,
                            index.doc(p.doc).len,
                        )
                    })
                    .collect();
                per_measure[measure.index()] = summarize(&mut scores);
            }
            (
                term.to_string(),
                TermStatBlock {
                    doc_freq: tp.doc_freq(),
                    coll_freq: tp.coll_freq,
                    per_measure,
                },
            )
        })
        .collect();
    TermStatsStore::from_parts(*params, blocks)
}

/// Summarize a non-empty score list. Sorts its input.
fn summarize(scores: &mut [f64]) -> ScoreStats {
    debug_assert!(!scores.is_empty());
    scores.sort_unstable_by(f64::total_cmp);
    let n = scores.len() as f64;
    let min = scores[0];
    let max = scores[scores.len() - 1];
    let q1 = quantile(scores, 0.25);
    let median = quantile(scores, 0.5);
    let q3 = quantile(scores, 0.75);
    let mean = scores.iter().sum::<f64>() / n;
    let variance = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    ScoreStats {
        max,
        min,
        q1,
        q3,
        median,
        mean,
        harmonic_mean: harmonic_mean(scores),
        variance,
        iqr: q3 - q1,
    }
}

/// Linear-interpolation quantile over a sorted slice (the common "type 7"
/// estimator).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Harmonic mean of a score list.
///
/// Only defined over positive values; when any score is nonpositive (LM
/// log-scores always are), the mean is taken over scores shifted by
/// `-min + 1e-6` instead. The feature manifest documents this transform.
fn harmonic_mean(sorted: &[f64]) -> f64 {
    const SHIFT_EPS: f64 = 1e-6;
    let min = sorted[0];
    let shift = if min <= 0.0 { -min + SHIFT_EPS } else { 0.0 };
    let denom: f64 = sorted.iter().map(|s| 1.0 / (s + shift)).sum();
    sorted.len() as f64 / denom
}
