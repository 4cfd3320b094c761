//! Deterministic synthetic corpora and query logs for experiments and
//! benchmarks at desk scale.
//!
//! Documents draw tokens from a three-tier vocabulary (frequent Zipf-shaped
//! head terms, mid-frequency theme terms shared by document clusters, and a
//! long rare tail) with widely varying document lengths. Queries mix
//! "focused" queries anchored on mid or rare terms with "diffuse" queries of
//! head terms only, so per-query retrieval difficulty genuinely varies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub docs: usize,
    pub queries: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            docs: 5000,
            queries: 2000,
            seed: 42,
        }
    }
}

const N_COMMON: usize = 300;
const N_MID: usize = 1500;
const N_RARE: usize = 6000;
const THEME_TERMS: usize = 3;

struct Zipf {
    cumulative: Vec<f64>,
}

impl Zipf {
    fn new(n: usize, exponent: f64) -> Self {
        let mut cumulative = Vec::with_capacity(n);
        let mut total = 0.0;
        for rank in 1..=n {
            total += 1.0 / (rank as f64).powf(exponent);
            cumulative.push(total);
        }
        for c in &mut cumulative {
            *c /= total;
        }
        Zipf { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c < u)
    }
}

fn common(i: usize) -> String {
    format!("w{i:03}")
}

fn mid(i: usize) -> String {
    format!("m{i:04}")
}

fn rare(i: usize) -> String {
    format!("r{i:05}")
}

/// Generate `spec.docs` records of `(doc_id, text)`, ids zero-padded so
/// lexicographic order equals numeric order.
pub fn corpus(spec: &SynthSpec) -> Vec<(String, String)> {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let common_dist = Zipf::new(N_COMMON, 1.07);
    let mid_dist = Zipf::new(N_MID, 1.07);
    let n_clusters = (spec.docs / 25).max(1);

    let mut records = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let cluster = rng.random_range(0..n_clusters);
        let theme: Vec<String> = (0..THEME_TERMS)
            .map(|i| mid((cluster * 7 + i * 131) % N_MID))
            .collect();
        let shape: f64 = rng.random();
        let len = 30 + (shape * shape * 270.0) as usize;
        let mut text = String::with_capacity(len * 6);
        for t in 0..len {
            if t > 0 {
                text.push(' ');
            }
            let r: f64 = rng.random();
            let token = if r < 0.45 {
                common(common_dist.sample(&mut rng))
            } else if r < 0.70 {
                theme[rng.random_range(0..THEME_TERMS)].clone()
            } else if r < 0.92 {
                mid(mid_dist.sample(&mut rng))
            } else {
                rare(rng.random_range(0..N_RARE))
            };
            text.push_str(&token);
        }
        records.push((format!("D{d:06}"), text));
    }
    records
}

/// Generate `spec.queries` records of `(topic_id, query text)`.
pub fn queries(spec: &SynthSpec) -> Vec<(String, String)> {
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let common_dist = Zipf::new(N_COMMON, 1.07);
    let mid_dist = Zipf::new(N_MID, 1.07);

    let mut records = Vec::with_capacity(spec.queries);
    for q in 0..spec.queries {
        let focused = rng.random::<f64>() < 0.45;
        let mut terms: Vec<String> = Vec::new();
        if focused {
            let anchors = rng.random_range(1..=2);
            for _ in 0..anchors {
                if rng.random::<f64>() < 0.5 {
                    terms.push(mid(mid_dist.sample(&mut rng)));
                } else {
                    terms.push(rare(rng.random_range(0..N_RARE)));
                }
            }
            for _ in 0..rng.random_range(0..=1) {
                terms.push(common(common_dist.sample(&mut rng)));
            }
        } else {
            for _ in 0..rng.random_range(2..=4) {
                terms.push(common(common_dist.sample(&mut rng)));
            }
        }
        records.push((format!("Q{q:05}"), terms.join(" ")));
    }
    records
}

/// Write corpus and queries as tab-separated files under `dir`.
pub fn write_tsv(
    spec: &SynthSpec,
    dir: &std::path::Path,
) -> crate::error::Result<(std::path::PathBuf, std::path::PathBuf)> {
    use crate::error::Error;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let corpus_path = dir.join("corpus.tsv");
    let queries_path = dir.join("queries.tsv");
    let mut corpus_text = String::new();
    for (id, text) in corpus(spec) {
        corpus_text.push_str(&id);
        corpus_text.push('\t');
        corpus_text.push_str(&text);
        corpus_text.push('\n');
    }
    std::fs::write(&corpus_path, corpus_text).map_err(|e| Error::io(&corpus_path, e))?;
    let mut query_text = String::new();
    for (id, text) in queries(spec) {
        query_text.push_str(&id);
        query_text.push('\t');
        query_text.push_str(&text);
        query_text.push('\n');
    }
    std::fs::write(&queries_path, query_text).map_err(|e| Error::io(&queries_path, e))?;
    Ok((corpus_path, queries_path))
}
