//! Per-term similarity measures: BM25, Dirichlet-smoothed query likelihood,
//! and length-normalized TFIDF.
//!
//! All three use the natural logarithm. A document's score for a query is
//! the sum of its per-term scores, one contribution per query-term
//! occurrence; every function here is pure.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The three similarity measures scored per (term, document) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Bm25,
    Lm,
    Tfidf,
}

/// All measures, in the fixed order used for term statistic blocks.
pub const MEASURES: [Measure; 3] = [Measure::Bm25, Measure::Lm, Measure::Tfidf];

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Bm25 => "bm25",
            Measure::Lm => "lm",
            Measure::Tfidf => "tfidf",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Measure::Bm25 => 0,
            Measure::Lm => 1,
            Measure::Tfidf => 2,
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm25" => Ok(Measure::Bm25),
            "lm" => Ok(Measure::Lm),
            "tfidf" => Ok(Measure::Tfidf),
            other => Err(Error::InvalidParameter(format!(
                "unknown measure '{other}' (expected bm25, lm, or tfidf)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityParams {
    /// BM25 term-frequency saturation.
    pub k1: f64,
    /// BM25 length normalization, in `[0, 1]`.
    pub b: f64,
    /// Dirichlet smoothing mass.
    pub mu: f64,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        SimilarityParams {
            k1: 0.9,
            b: 0.4,
            mu: 2500.0,
        }
    }
}

impl SimilarityParams {
    pub fn validate(&self) -> Result<()> {
        if !self.k1.is_finite() || self.k1 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "k1 must be > 0: {}",
                self.k1
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParameter(format!(
                "b must be in [0, 1]: {}",
                self.b
            )));
        }
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mu must be > 0: {}",
                self.mu
            )));
        }
        Ok(())
    }
}

/// BM25 contribution of one term occurrence.
///
/// `idf * tf` with `idf = ln((N - f_t + 0.5) / (f_t + 0.5))` and
/// `tf = f_td (k1 + 1) / (f_td + k1 ((1 - b) + b l_d / l_avg))`.
pub fn bm25(
    n_docs: u64,
    doc_freq: u64,
    term_freq: u64,
    doc_len: u64,
    avg_doc_len: f64,
    params: &SimilarityParams,
) -> f64 {
    debug_assert!(doc_freq >= 1 && doc_freq <= n_docs);
    debug_assert!(term_freq >= 1 && doc_len >= 1);
    let n = n_docs as f64;
    let ft = doc_freq as f64;
    let idf = ((n - ft + 0.5) / (ft + 0.5)).ln();
    let ftd = term_freq as f64;
    let norm = params.k1 * ((1.0 - params.b) + params.b * doc_len as f64 / avg_doc_len);
    idf * ftd * (params.k1 + 1.0) / (ftd + norm)
}

/// Dirichlet-smoothed query-likelihood contribution of one term occurrence:
/// `ln((f_td + mu C_t / |C|) / (l_d + mu))`.
pub fn lm_dirichlet(coll_freq: u64, coll_len: u64, term_freq: u64, doc_len: u64, mu: f64) -> f64 {
    debug_assert!(coll_freq >= 1 && coll_len >= 1);
    let background = mu * coll_freq as f64 / coll_len as f64;
    ((term_freq as f64 + background) / (doc_len as f64 + mu)).ln()
}

/// Length-normalized TFIDF: `(1 / l_d)(1 + ln f_td) ln(1 + N / f_t)`.
pub fn tfidf(n_docs: u64, doc_freq: u64, term_freq: u64, doc_len: u64) -> f64 {
    debug_assert!(doc_freq >= 1 && term_freq >= 1 && doc_len >= 1);
    (1.0 / doc_len as f64)
        * (1.0 + (term_freq as f64).ln())
        * (1.0 + n_docs as f64 / doc_freq as f64).ln()
}

/// Collection-level inputs shared by every (term, document) score.
#[derive(Debug, Clone, Copy)]
pub struct ScoreContext {
    pub measure: Measure,
    pub n_docs: u64,
    pub coll_len: u64,
    pub avg_doc_len: f64,
    pub params: SimilarityParams,
}

impl ScoreContext {
    pub fn score(&self, doc_freq: u64, coll_freq: u64, term_freq: u64, doc_len: u64) -> f64 {
        match self.measure {
            Measure::Bm25 => bm25(
                self.n_docs,
                doc_freq,
                term_freq,
                doc_len,
                self.avg_doc_len,
                &self.params,
            ),
            Measure::Lm => {
                lm_dirichlet(coll_freq, self.coll_len, term_freq, doc_len, self.params.mu)
            }
            Measure::Tfidf => tfidf(self.n_docs, doc_freq, term_freq, doc_len),
        }
    }
}
