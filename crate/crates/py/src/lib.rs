//! Python bindings for the dyncut toolkit.
//!
//! Exposes index construction and retrieval, the similarity measures, MED
//! scoring, minimal-cutoff labeling, and cascade training/prediction as the
//! `dyncut_py` extension module.

use dyncut::analyze::AnalyzerConfig;
use dyncut::cascade::{self, CascadeModel};
use dyncut::features::{extract_features, FeatureManifest};
use dyncut::forest::ForestParams;
use dyncut::index::{
    build_impact_index, build_index, ok_records, precompute_term_stats, ImpactIndex, PostingsIndex,
    TermStatsStore,
};
use dyncut::labeling::{self, CutoffGrid, Knob};
use dyncut::med;
use dyncut::retrieval::{exhaustive_topk, saat_rho, total_query_postings, wand_topk, Query};
use dyncut::scoring;
use dyncut::{Measure, SimilarityParams};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

fn to_py_err(e: dyncut::Error) -> PyErr {
    match &e {
        dyncut::Error::Io { .. } | dyncut::Error::Corrupt { .. } => {
            PyIOError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_measure(name: &str) -> PyResult<Measure> {
    Measure::from_str(name).map_err(to_py_err)
}

fn params_from(k1: f64, b: f64, mu: f64) -> PyResult<SimilarityParams> {
    let params = SimilarityParams { k1, b, mu };
    params.validate().map_err(to_py_err)?;
    Ok(params)
}

/// An in-memory index with precomputed term statistics.
#[pyclass(name = "Index")]
struct PyIndex {
    index: PostingsIndex,
    stats: TermStatsStore,
    params: SimilarityParams,
    impact: Option<ImpactIndex>,
}

#[pymethods]
impl PyIndex {
    /// Build from `(doc_id, text)` pairs.
    #[new]
    #[pyo3(signature = (records, stopwords=true, stemming=true, k1=0.9, b=0.4, mu=2500.0))]
    fn new(
        records: Vec<(String, String)>,
        stopwords: bool,
        stemming: bool,
        k1: f64,
        b: f64,
        mu: f64,
    ) -> PyResult<Self> {
        let analyzer = AnalyzerConfig {
            stopwords,
            stemming,
        };
        let index = build_index(ok_records(records), analyzer).map_err(to_py_err)?;
        let params = params_from(k1, b, mu)?;
        let stats = precompute_term_stats(&index, &params);
        Ok(PyIndex {
            index,
            stats,
            params,
            impact: None,
        })
    }

    fn doc_count(&self) -> u64 {
        self.index.doc_count()
    }

    fn vocab_size(&self) -> usize {
        self.index.vocab_size()
    }

    fn total_postings(&self) -> u64 {
        self.index.total_postings()
    }

    fn collection_stats(&self) -> HashMap<String, f64> {
        let c = self.index.collection_stats();
        HashMap::from([
            ("doc_count".to_string(), c.doc_count as f64),
            ("total_terms".to_string(), c.total_terms as f64),
            ("avg_doc_len".to_string(), c.avg_doc_len),
        ])
    }

    /// Analyze query text with the index's analyzer.
    fn analyze(&self, text: &str) -> Vec<String> {
        self.index.analyze_query(text)
    }

    /// Per-document score statistics of one term under one measure.
    fn term_stats(&self, term: &str, measure: &str) -> PyResult<Option<HashMap<String, f64>>> {
        let measure = parse_measure(measure)?;
        Ok(self.stats.get(term).map(|block| {
            let s = block.stats(measure);
            HashMap::from([
                ("doc_freq".to_string(), block.doc_freq as f64),
                ("coll_freq".to_string(), block.coll_freq as f64),
                ("max".to_string(), s.max),
                ("min".to_string(), s.min),
                ("q1".to_string(), s.q1),
                ("q3".to_string(), s.q3),
                ("median".to_string(), s.median),
                ("mean".to_string(), s.mean),
                ("harmonic_mean".to_string(), s.harmonic_mean),
                ("variance".to_string(), s.variance),
                ("iqr".to_string(), s.iqr),
            ])
        }))
    }

    /// Top-k search. `algo` is `exhaustive` or `wand`; both return identical
    /// lists, WAND just prunes.
    #[pyo3(signature = (query, k, algo="wand", measure="bm25"))]
    fn search(
        &self,
        query: &str,
        k: usize,
        algo: &str,
        measure: &str,
    ) -> PyResult<Vec<(String, f64)>> {
        let measure = parse_measure(measure)?;
        let q = Query::new("q", self.index.analyze_query(query));
        let (docs, _) = match algo {
            "exhaustive" => exhaustive_topk(&self.index, &q, k, measure, &self.params),
            "wand" => wand_topk(&self.index, &self.stats, &q, k, measure, &self.params),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown algorithm '{other}' (expected exhaustive or wand)"
                )))
            }
        };
        Ok(docs
            .iter()
            .map(|d| (self.index.external_id(d.doc).to_string(), d.score))
            .collect())
    }

    /// Build (or rebuild) the impact-ordered index for budgeted evaluation.
    #[pyo3(signature = (bits=8, measure="bm25"))]
    fn build_impact(&mut self, bits: u8, measure: &str) -> PyResult<()> {
        let measure = parse_measure(measure)?;
        self.impact =
            Some(build_impact_index(&self.index, &self.params, measure, bits).map_err(to_py_err)?);
        Ok(())
    }

    /// Score-at-a-time evaluation under a posting budget. Requires
    /// `build_impact` first.
    #[pyo3(signature = (query, rho, k=1000))]
    fn saat(&self, query: &str, rho: u64, k: usize) -> PyResult<Vec<(String, f64)>> {
        let impact = self
            .impact
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("call build_impact() first"))?;
        let q = Query::new("q", self.index.analyze_query(query));
        let (docs, _) = saat_rho(impact, &self.index, &q, rho, k);
        Ok(docs
            .iter()
            .map(|d| (self.index.external_id(d.doc).to_string(), d.score))
            .collect())
    }

    /// Postings across the query's terms: the budget at which `saat` equals
    /// exhaustive quantized ranking.
    fn query_postings(&self, query: &str) -> u64 {
        let q = Query::new("q", self.index.analyze_query(query));
        total_query_postings(&self.index, &q)
    }

    /// The static feature vector of a query under the default manifest.
    fn features(&self, query: &str) -> Vec<f64> {
        let manifest = FeatureManifest::default_v1();
        extract_features(&self.index.analyze_query(query), &self.stats, &manifest)
    }
}

/// Names of the default feature manifest, in vector order.
#[pyfunction]
fn feature_names() -> Vec<String> {
    FeatureManifest::default_v1()
        .names()
        .map(|s| s.to_string())
        .collect()
}

#[pyfunction]
#[pyo3(signature = (n_docs, doc_freq, term_freq, doc_len, avg_doc_len, k1=0.9, b=0.4))]
fn bm25(
    n_docs: u64,
    doc_freq: u64,
    term_freq: u64,
    doc_len: u64,
    avg_doc_len: f64,
    k1: f64,
    b: f64,
) -> f64 {
    let params = SimilarityParams {
        k1,
        b,
        ..Default::default()
    };
    scoring::bm25(n_docs, doc_freq, term_freq, doc_len, avg_doc_len, &params)
}

#[pyfunction]
#[pyo3(signature = (coll_freq, coll_len, term_freq, doc_len, mu=2500.0))]
fn lm_dirichlet(coll_freq: u64, coll_len: u64, term_freq: u64, doc_len: u64, mu: f64) -> f64 {
    scoring::lm_dirichlet(coll_freq, coll_len, term_freq, doc_len, mu)
}

#[pyfunction]
fn tfidf(n_docs: u64, doc_freq: u64, term_freq: u64, doc_len: u64) -> f64 {
    scoring::tfidf(n_docs, doc_freq, term_freq, doc_len)
}

#[pyfunction]
#[pyo3(signature = (gold, cand, p=0.8))]
fn med_rbp(gold: Vec<String>, cand: Vec<String>, p: f64) -> PyResult<f64> {
    med::med_rbp(&gold, &cand, p).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (gold, cand, depth=20))]
fn med_dcg(gold: Vec<String>, cand: Vec<String>, depth: usize) -> PyResult<f64> {
    med::med_dcg(&gold, &cand, depth).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (gold, cand, depth=20, max_grade=1))]
fn med_err(gold: Vec<String>, cand: Vec<String>, depth: usize, max_grade: u32) -> PyResult<f64> {
    med::med_err(&gold, &cand, depth, max_grade).map_err(to_py_err)
}

/// Minimal-cutoff class per MED row: 1-based index of the first value at or
/// under `eps`, else the number of cells.
#[pyfunction]
fn assign_label(meds: Vec<f64>, eps: f64) -> PyResult<u32> {
    if meds.is_empty() {
        return Err(PyValueError::new_err("empty MED row"));
    }
    if eps <= 0.0 {
        return Err(PyValueError::new_err("eps must be positive"));
    }
    Ok(meds
        .iter()
        .position(|&m| m <= eps)
        .map(|i| i as u32 + 1)
        .unwrap_or(meds.len() as u32))
}

/// The under-prediction-penalizing cost matrix as nested lists.
#[pyfunction]
fn cost_matrix(c: u32) -> PyResult<Vec<Vec<f64>>> {
    let m = labeling::build_cost_matrix(c).map_err(to_py_err)?;
    Ok((1..=c)
        .map(|i| (1..=c).map(|j| m.cost(i, j)).collect())
        .collect())
}

/// A trained left-to-right cascade of binary forests.
#[pyclass(name = "Cascade")]
struct PyCascade {
    model: CascadeModel,
}

#[pymethods]
impl PyCascade {
    /// Train on feature rows and 1-based class labels over a cutoff grid.
    #[new]
    #[pyo3(signature = (rows, labels, grid, knob="k", trees=100, max_depth=0, min_leaf=1, seed=0x5eed, default_t=0.8))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<u32>,
        grid: Vec<u64>,
        knob: &str,
        trees: usize,
        max_depth: usize,
        min_leaf: usize,
        seed: u64,
        default_t: f64,
    ) -> PyResult<Self> {
        let knob = Knob::from_str(knob).map_err(to_py_err)?;
        let grid = CutoffGrid::new(knob, grid).map_err(to_py_err)?;
        let params = ForestParams {
            trees,
            max_depth,
            min_leaf,
            seed,
        };
        let manifest_sha = FeatureManifest::default_v1().sha256();
        let model = cascade::train_cascade(&rows, &labels, &grid, &params, default_t, manifest_sha)
            .map_err(to_py_err)?;
        Ok(PyCascade { model })
    }

    /// Predicted `(class, cutoff_value)` at confidence threshold `t`.
    #[pyo3(signature = (row, t=None))]
    fn predict(&self, row: Vec<f64>, t: Option<f64>) -> PyResult<(u32, u64)> {
        let t = t.unwrap_or(self.model.default_t);
        let class = self.model.predict_class(&row, t).map_err(to_py_err)?;
        Ok((class, self.model.grid.cutoff_of_class(class)))
    }

    fn class_count(&self) -> u32 {
        self.model.class_count()
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        cascade::save_cascade(&path, &self.model).map_err(to_py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyCascade {
            model: cascade::load_cascade(&path).map_err(to_py_err)?,
        })
    }
}

#[pymodule]
fn dyncut_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyIndex>()?;
    m.add_class::<PyCascade>()?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(bm25, m)?)?;
    m.add_function(wrap_pyfunction!(lm_dirichlet, m)?)?;
    m.add_function(wrap_pyfunction!(tfidf, m)?)?;
    m.add_function(wrap_pyfunction!(med_rbp, m)?)?;
    m.add_function(wrap_pyfunction!(med_dcg, m)?)?;
    m.add_function(wrap_pyfunction!(med_err, m)?)?;
    m.add_function(wrap_pyfunction!(assign_label, m)?)?;
    m.add_function(wrap_pyfunction!(cost_matrix, m)?)?;
    Ok(())
}
