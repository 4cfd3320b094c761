//! Impact-ordered index with quantized scores.
//!
//! Every (term, document) score is quantized to a small integer over the
//! global score range, and each term's postings are regrouped into segments
//! of equal impact, stored in decreasing impact order. Score-at-a-time
//! evaluation then accumulates integer impacts and may stop early.

use super::PostingsIndex;
use crate::error::{Error, Result};
use crate::scoring::{Measure, ScoreContext, SimilarityParams};
use std::collections::BTreeMap;

/// Postings of one term sharing a quantized impact. Document ids ascend
/// within a segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImpactSegment {
    pub impact: u32,
    pub docs: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct ImpactIndex {
    pub bits: u8,
    pub measure: Measure,
    /// Global score range the quantizer was fit on.
    pub score_min: f64,
    pub score_max: f64,
    pub total_postings: u64,
    terms: BTreeMap<String, Vec<ImpactSegment>>,
}

impl ImpactIndex {
    /// Segments for one term, in strictly decreasing impact order.
    pub fn term(&self, term: &str) -> Option<&[ImpactSegment]> {
        self.terms.get(term).map(|v| v.as_slice())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[ImpactSegment])> {
        self.terms.iter().map(|(t, s)| (t.as_str(), s.as_slice()))
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    /// Number of quantization levels: `2^bits - 1`.
    pub fn levels(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    pub(crate) fn from_parts(
        bits: u8,
        measure: Measure,
        score_min: f64,
        score_max: f64,
        total_postings: u64,
        terms: BTreeMap<String, Vec<ImpactSegment>>,
    ) -> Self {
        ImpactIndex {
            bits,
            measure,
            score_min,
            score_max,
            total_postings,
            terms,
        }
    }
}

/// Uniform linear quantizer over `[min, max]` onto `1..=levels`.
///
/// A global (rather than per-term) range keeps impacts additive across
/// terms. A degenerate range maps everything to level 1.
fn quantize(score: f64, min: f64, max: f64, levels: u32) -> u32 {
    if max <= min {
        return 1;
    }
    let scaled = (score - min) / (max - min) * levels as f64;
    (1 + scaled.floor() as u32).min(levels)
}

/// Derive an impact-ordered index from a postings index by quantizing every
/// (term, document) score under `measure`.
pub fn build_impact_index(
    index: &PostingsIndex,
    params: &SimilarityParams,
    measure: Measure,
    bits: u8,
) -> Result<ImpactIndex> {
    if !(1..=16).contains(&bits) {
        return Err(Error::InvalidParameter(format!(
            "quantization bits must be in 1..=16: {bits}"
        )));
    }
    let coll = index.collection_stats();
    let ctx = ScoreContext {
        measure,
        n_docs: coll.doc_count,
        coll_len: coll.total_terms,
        avg_doc_len: coll.avg_doc_len,
        params: *params,
    };

    // First pass: the global score range.
    let mut score_min = f64::INFINITY;
    let mut score_max = f64::NEG_INFINITY;
    for (_, tp) in index.vocab() {
        for p in &tp.postings {
            let s = ctx.score(
                tp.doc_freq(),
                tp.coll_freq,
                p.tf as u64,
                index.doc(p.doc).len,
            );
            score_min = score_min.min(s);
            score_max = score_max.max(s);
        }
    }

    let levels = (1u32 << bits) - 1;
    let mut terms: BTreeMap<String, Vec<ImpactSegment>> = BTreeMap::new();
    let mut total_postings = 0u64;
    for (term, tp) in index.vocab() {
        let mut by_impact: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for p in &tp.postings {
            let s = ctx.score(
                tp.doc_freq(),
                tp.coll_freq,
                p.tf as u64,
                index.doc(p.doc).len,
            );
            by_impact
                .entry(quantize(s, score_min, score_max, levels))
                .or_default()
                .push(p.doc);
        }
        let segments: Vec<ImpactSegment> = by_impact
            .into_iter()
            .rev()
            .map(|(impact, docs)| {
                total_postings += docs.len() as u64;
                ImpactSegment { impact, docs }
            })
            .collect();
        terms.insert(term.to_string(), segments);
    }

    Ok(ImpactIndex::from_parts(
        bits,
        measure,
        score_min,
        score_max,
        total_postings,
        terms,
    ))
}
