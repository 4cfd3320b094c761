//! Per-query tuning of candidate generation in multi-stage retrieval.
//!
//! A first retrieval stage hands a pool of candidate documents to more
//! expensive rerankers. How large that pool must be varies strongly by
//! query, yet systems typically fix one global setting. This crate predicts,
//! per query, the smallest candidate-generation cutoff that keeps the ranked
//! list within a bounded effectiveness envelope relative to a reference
//! ("gold") run, with the envelope measured by maximized effectiveness
//! difference (MED) so that no relevance judgments are needed for training.
//!
//! Two cutoff knobs are supported:
//!
//! * `k` — the heap depth of safe-to-k top-k evaluation (WAND) over a
//!   postings index;
//! * `rho` — the posting budget of score-at-a-time evaluation over an
//!   impact-ordered index with quantized scores.
//!
//! The pipeline: build an index ([`index`]), sweep a cutoff grid and compute
//! MED against the gold run ([`labeling`]), turn minimal-cutoff labels into
//! binary training sets, extract static pre-retrieval features
//! ([`features`]), train a left-to-right cascade of binary random-forest
//! classifiers ([`cascade`]), and evaluate everything under stratified
//! cross-validation ([`harness`]).

pub mod analyze;
pub mod cascade;
pub mod error;
pub mod features;
pub mod forest;
pub mod harness;
pub mod index;
pub mod labeling;
pub mod med;
pub mod metrics;
pub mod retrieval;
pub mod run;
pub mod scoring;
pub mod synth;

pub use error::{Error, Result};
pub use index::{CollectionStats, PostingsIndex};
pub use run::{Judgments, RankedRun};
pub use scoring::{Measure, SimilarityParams};
