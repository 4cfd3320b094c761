//! Candidate generation: exhaustive top-k, safe-to-k WAND, and
//! score-at-a-time evaluation with a posting budget.
//!
//! All three rank by the sum of per-term scores, one contribution per
//! query-term occurrence, and break score ties by ascending external
//! document id. WAND is safe-to-k: it returns lists identical to exhaustive
//! evaluation, only cheaper.

use crate::error::{Error, Result};
use crate::index::{ImpactIndex, PostingsIndex, TermStatsStore};
use crate::run::RankedRun;
use crate::scoring::{Measure, ScoreContext, SimilarityParams};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

/// An analyzed query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub topic_id: String,
    pub terms: Vec<String>,
}

impl Query {
    pub fn new(topic_id: impl Into<String>, terms: Vec<String>) -> Self {
        Query {
            topic_id: topic_id.into(),
            terms,
        }
    }
}

/// Read a `topic_id <TAB> query text` file and analyze each query with the
/// index's analyzer configuration.
pub fn read_queries(path: &Path, index: &PostingsIndex) -> Result<Vec<Query>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut queries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (topic, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected 'topic_id<TAB>query text'"))?;
        if !seen.insert(topic.to_string()) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("duplicate topic '{topic}'"),
            ));
        }
        queries.push(Query::new(topic, index.analyze_query(text)));
    }
    Ok(queries)
}

/// One retrieved document before external-id resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDoc {
    pub doc: u32,
    pub score: f64,
}

/// Instrumentation counters for one query evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    /// Postings whose score contribution was actually computed.
    pub postings_scored: u64,
}

/// Heap entry ordered worst-first: lower score is worse; on ties a larger
/// external-id rank is worse.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapDoc {
    score: f64,
    tie_rank: u32,
    doc: u32,
}

impl Eq for HeapDoc {}

impl Ord for HeapDoc {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; peek() must yield the worst entry
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.tie_rank.cmp(&other.tie_rank))
    }
}

impl PartialOrd for HeapDoc {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn heap_push(heap: &mut BinaryHeap<HeapDoc>, entry: HeapDoc, k: usize) {
    if heap.len() < k {
        heap.push(entry);
        return;
    }
    if let Some(worst) = heap.peek() {
        let better = match entry.score.total_cmp(&worst.score) {
            Ordering::Greater => true,
            Ordering::Equal => entry.tie_rank < worst.tie_rank,
            Ordering::Less => false,
        };
        if better {
            heap.pop();
            heap.push(entry);
        }
    }
}

fn finalize(index: &PostingsIndex, heap: BinaryHeap<HeapDoc>) -> Vec<ScoredDoc> {
    let mut out: Vec<HeapDoc> = heap.into_vec();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| index.tie_rank(a.doc).cmp(&index.tie_rank(b.doc)))
    });
    out.into_iter()
        .map(|h| ScoredDoc {
            doc: h.doc,
            score: h.score,
        })
        .collect()
}

fn score_context(
    index: &PostingsIndex,
    measure: Measure,
    params: &SimilarityParams,
) -> ScoreContext {
    let coll = index.collection_stats();
    ScoreContext {
        measure,
        n_docs: coll.doc_count,
        coll_len: coll.total_terms,
        avg_doc_len: coll.avg_doc_len,
        params: *params,
    }
}

/// Exact top-k by scoring every posting of every query term.
///
/// Returns fewer than `k` documents only when fewer match any term; a query
/// with no in-vocabulary term yields an empty list.
pub fn exhaustive_topk(
    index: &PostingsIndex,
    query: &Query,
    k: usize,
    measure: Measure,
    params: &SimilarityParams,
) -> (Vec<ScoredDoc>, EvalStats) {
    let ctx = score_context(index, measure, params);
    let mut acc: HashMap<u32, f64> = HashMap::new();
    let mut stats = EvalStats::default();
    for term in &query.terms {
        let Some(tp) = index.term(term) else { continue };
        for p in &tp.postings {
            let s = ctx.score(
                tp.doc_freq(),
                tp.coll_freq,
                p.tf as u64,
                index.doc(p.doc).len,
            );
            *acc.entry(p.doc).or_insert(0.0) += s;
            stats.postings_scored += 1;
        }
    }
    let mut heap = BinaryHeap::with_capacity(k + 1);
    if k > 0 {
        // heap fill order does not affect the final sort: scores are exact
        for (doc, score) in acc {
            heap_push(
                &mut heap,
                HeapDoc {
                    score,
                    tie_rank: index.tie_rank(doc),
                    doc,
                },
                k,
            );
        }
    }
    (finalize(index, heap), stats)
}

struct WandTerm<'a> {
    /// Position of this term in the query; per-document score summation
    /// runs in this order so totals are bit-identical to exhaustive
    /// evaluation.
    query_pos: usize,
    postings: &'a [crate::index::Posting],
    cursor: usize,
    doc_freq: u64,
    coll_freq: u64,
    /// Per-document score upper bound, clamped at 0 for the pivot sum: a
    /// negative bound never helps a prefix reach the heap threshold.
    upper_bound: f64,
}

impl WandTerm<'_> {
    fn current(&self) -> Option<u32> {
        self.postings.get(self.cursor).map(|p| p.doc)
    }

    fn advance_to(&mut self, target: u32) {
        let rest = &self.postings[self.cursor..];
        self.cursor += rest.partition_point(|p| p.doc < target);
    }
}

/// Safe-to-k WAND over the postings index, using precomputed per-term
/// maximum scores as upper bounds.
///
/// Rank-identical to [`exhaustive_topk`] under the same tie rule; the stats
/// counter reports how many postings were fully scored.
pub fn wand_topk(
    index: &PostingsIndex,
    stats_store: &TermStatsStore,
    query: &Query,
    k: usize,
    measure: Measure,
    params: &SimilarityParams,
) -> (Vec<ScoredDoc>, EvalStats) {
    let ctx = score_context(index, measure, params);
    let mut stats = EvalStats::default();
    let mut terms: Vec<WandTerm> = Vec::new();
    for (query_pos, term) in query.terms.iter().enumerate() {
        let Some(tp) = index.term(term) else { continue };
        let max_score = stats_store
            .max_score(term, measure)
            .expect("term statistics must cover every indexed term");
        terms.push(WandTerm {
            query_pos,
            postings: &tp.postings,
            cursor: 0,
            doc_freq: tp.doc_freq(),
            coll_freq: tp.coll_freq,
            upper_bound: max_score.max(0.0),
        });
    }
    if k == 0 || terms.is_empty() {
        return (Vec::new(), stats);
    }

    let mut heap: BinaryHeap<HeapDoc> = BinaryHeap::with_capacity(k + 1);
    // term indices ordered by current doc id; rebuilt after each advance
    let mut order: Vec<usize> = (0..terms.len()).collect();
    let sort_order = |order: &mut Vec<usize>, terms: &[WandTerm]| {
        order.retain(|&i| terms[i].current().is_some());
        order.sort_by_key(|&i| (terms[i].current().unwrap(), i));
    };
    sort_order(&mut order, &terms);

    while !order.is_empty() {
        // full evaluation until the heap is full; afterwards only documents
        // whose upper-bound prefix can at least tie the threshold matter
        let threshold = if heap.len() < k {
            f64::NEG_INFINITY
        } else {
            heap.peek().map(|d| d.score).unwrap_or(f64::NEG_INFINITY)
        };

        let mut bound = 0.0;
        let mut pivot = None;
        for (pos, &i) in order.iter().enumerate() {
            bound += terms[i].upper_bound;
            // >= rather than >: a document tying the threshold can still win
            // on the doc-id tie rule
            if bound >= threshold {
                pivot = Some(pos);
                break;
            }
        }
        let Some(pivot_pos) = pivot else { break };
        let pivot_doc = terms[order[pivot_pos]].current().unwrap();
        let first_doc = terms[order[0]].current().unwrap();

        if first_doc == pivot_doc {
            // score pivot_doc fully, summing contributions in query order
            let mut on_doc: Vec<usize> = order
                .iter()
                .copied()
                .take_while(|&i| terms[i].current() == Some(pivot_doc))
                .collect();
            on_doc.sort_by_key(|&i| terms[i].query_pos);
            let mut score = 0.0;
            for &i in &on_doc {
                let t = &terms[i];
                let p = t.postings[t.cursor];
                score += ctx.score(t.doc_freq, t.coll_freq, p.tf as u64, index.doc(p.doc).len);
                stats.postings_scored += 1;
            }
            for &i in &on_doc {
                terms[i].cursor += 1;
            }
            heap_push(
                &mut heap,
                HeapDoc {
                    score,
                    tie_rank: index.tie_rank(pivot_doc),
                    doc: pivot_doc,
                },
                k,
            );
            sort_order(&mut order, &terms);
        } else {
            // no prefix before the pivot can reach the threshold: skip ahead
            for &i in order.iter().take(pivot_pos) {
                terms[i].advance_to(pivot_doc);
            }
            sort_order(&mut order, &terms);
        }
    }

    (finalize(index, heap), stats)
}

/// Exhaustive ranking over quantized impacts: integer score accumulation
/// with no early termination. This is the gold standard the budgeted
/// evaluation converges to.
pub fn exhaustive_quantized_topk(
    impact: &ImpactIndex,
    index: &PostingsIndex,
    query: &Query,
    k: usize,
) -> Vec<ScoredDoc> {
    let total: u64 = query
        .terms
        .iter()
        .filter_map(|t| impact.term(t))
        .flat_map(|segs| segs.iter().map(|s| s.docs.len() as u64))
        .sum();
    let (docs, _) = saat_rho(impact, index, query, total, k);
    docs
}

/// Score-at-a-time evaluation with a posting budget.
///
/// Posting segments of the query's terms are processed in globally
/// decreasing impact order (ties by term spelling, then query position),
/// accumulating integer impacts per document. Processing stops after `rho`
/// postings, cutting the final segment mid-way if needed, so the budget is
/// exact and the processed prefix is deterministic.
pub fn saat_rho(
    impact: &ImpactIndex,
    index: &PostingsIndex,
    query: &Query,
    rho: u64,
    k: usize,
) -> (Vec<ScoredDoc>, EvalStats) {
    struct SegmentRef<'a> {
        impact: u32,
        term: &'a str,
        query_pos: usize,
        docs: &'a [u32],
    }

    let mut segments: Vec<SegmentRef> = Vec::new();
    for (query_pos, term) in query.terms.iter().enumerate() {
        let Some(segs) = impact.term(term) else {
            continue;
        };
        for s in segs {
            segments.push(SegmentRef {
                impact: s.impact,
                term,
                query_pos,
                docs: &s.docs,
            });
        }
    }
    segments.sort_by(|a, b| {
        b.impact
            .cmp(&a.impact)
            .then_with(|| a.term.cmp(b.term))
            .then_with(|| a.query_pos.cmp(&b.query_pos))
    });

    let mut acc: HashMap<u32, u64> = HashMap::new();
    let mut processed = 0u64;
    'outer: for seg in &segments {
        for &doc in seg.docs {
            if processed >= rho {
                break 'outer;
            }
            *acc.entry(doc).or_insert(0) += seg.impact as u64;
            processed += 1;
        }
    }

    let mut heap = BinaryHeap::with_capacity(k + 1);
    if k > 0 {
        for (doc, score) in acc {
            heap_push(
                &mut heap,
                HeapDoc {
                    score: score as f64,
                    tie_rank: index.tie_rank(doc),
                    doc,
                },
                k,
            );
        }
    }
    (
        finalize(index, heap),
        EvalStats {
            postings_scored: processed,
        },
    )
}

/// Total postings across a query's terms: the budget at which score-at-a-time
/// evaluation equals exhaustive quantized ranking.
pub fn total_query_postings(index: &PostingsIndex, query: &Query) -> u64 {
    query
        .terms
        .iter()
        .filter_map(|t| index.term(t))
        .map(|tp| tp.doc_freq())
        .sum()
}

/// Resolve internal ids and append one topic's results to a run.
pub fn append_to_run(run: &mut RankedRun, index: &PostingsIndex, topic: &str, docs: &[ScoredDoc]) {
    run.push_topic(
        topic,
        docs.iter()
            .map(|d| (index.external_id(d.doc).to_string(), d.score))
            .collect(),
    );
}
