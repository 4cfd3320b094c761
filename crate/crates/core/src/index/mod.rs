//! Inverted index construction and access.
//!
//! The index is immutable once built: construction assigns dense internal
//! document ids in corpus order, and any number of readers may share it.

mod impact;
mod persist;
mod stats;

pub use impact::{build_impact_index, ImpactIndex, ImpactSegment};
pub use persist::{load_index, save_index, IndexBundle, MANIFEST_FILE};
pub use stats::{precompute_term_stats, ScoreStat, ScoreStats, TermStatBlock, TermStatsStore};

use crate::analyze::{analyze, AnalyzerConfig};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

/// One indexed document: its external identifier and post-analysis length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocEntry {
    pub external_id: String,
    pub len: u64,
}

/// Collection-wide counts kept consistent with the postings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionStats {
    pub doc_count: u64,
    /// Total term occurrences across the collection.
    pub total_terms: u64,
    pub avg_doc_len: f64,
}

/// One posting: internal document id and within-document term frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

/// Postings list for one term, sorted by ascending internal document id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TermPostings {
    /// Total occurrences of the term in the collection.
    pub coll_freq: u64,
    pub postings: Vec<Posting>,
}

impl TermPostings {
    /// Number of documents containing the term.
    pub fn doc_freq(&self) -> u64 {
        self.postings.len() as u64
    }
}

#[derive(Debug, Clone)]
pub struct PostingsIndex {
    docs: Vec<DocEntry>,
    terms: BTreeMap<String, TermPostings>,
    analyzer: AnalyzerConfig,
    /// Position of each document in ascending external-id order; used as the
    /// ranking tie-breaker so list order never depends on internal ids.
    tie_rank: Vec<u32>,
}

impl PostingsIndex {
    pub fn doc_count(&self) -> u64 {
        self.docs.len() as u64
    }

    pub fn doc(&self, internal: u32) -> &DocEntry {
        &self.docs[internal as usize]
    }

    pub fn external_id(&self, internal: u32) -> &str {
        &self.docs[internal as usize].external_id
    }

    /// Tie-break key: smaller means earlier in external-id order.
    pub fn tie_rank(&self, internal: u32) -> u32 {
        self.tie_rank[internal as usize]
    }

    pub fn analyzer(&self) -> &AnalyzerConfig {
        &self.analyzer
    }

    pub fn term(&self, term: &str) -> Option<&TermPostings> {
        self.terms.get(term)
    }

    pub fn vocab(&self) -> impl Iterator<Item = (&str, &TermPostings)> {
        self.terms.iter().map(|(t, p)| (t.as_str(), p))
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    pub fn total_postings(&self) -> u64 {
        self.terms.values().map(|p| p.postings.len() as u64).sum()
    }

    pub fn collection_stats(&self) -> CollectionStats {
        let doc_count = self.docs.len() as u64;
        let total_terms: u64 = self.docs.iter().map(|d| d.len).sum();
        CollectionStats {
            doc_count,
            total_terms,
            avg_doc_len: total_terms as f64 / doc_count as f64,
        }
    }

    /// Analyze raw query text with the same configuration the corpus used.
    pub fn analyze_query(&self, text: &str) -> Vec<String> {
        analyze(text, &self.analyzer)
    }
}

/// Build an index over `(doc_id, text)` records.
///
/// Internal ids are assigned in record order, so rebuilding from the same
/// corpus and configuration reproduces the index exactly.
pub fn build_index<I>(records: I, analyzer: AnalyzerConfig) -> Result<PostingsIndex>
where
    I: IntoIterator<Item = Result<(String, String)>>,
{
    let mut docs: Vec<DocEntry> = Vec::new();
    let mut seen: HashMap<String, u32> = HashMap::new();
    let mut terms: BTreeMap<String, TermPostings> = BTreeMap::new();

    for record in records {
        let (external_id, text) = record?;
        let internal = docs.len() as u32;
        if seen.insert(external_id.clone(), internal).is_some() {
            return Err(Error::DuplicateDocId(external_id));
        }
        let tokens = analyze(&text, &analyzer);
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for token in &tokens {
            *tf.entry(token.as_str()).or_insert(0) += 1;
        }
        for (token, count) in tf {
            let entry = terms.entry(token.to_string()).or_default();
            entry.coll_freq += count as u64;
            entry.postings.push(Posting {
                doc: internal,
                tf: count,
            });
        }
        docs.push(DocEntry {
            external_id,
            len: tokens.len() as u64,
        });
    }

    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let tie_rank = compute_tie_ranks(&docs);
    Ok(PostingsIndex {
        docs,
        terms,
        analyzer,
        tie_rank,
    })
}

fn compute_tie_ranks(docs: &[DocEntry]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..docs.len() as u32).collect();
    order.sort_by(|&a, &b| {
        docs[a as usize]
            .external_id
            .cmp(&docs[b as usize].external_id)
    });
    let mut rank = vec![0u32; docs.len()];
    for (pos, doc) in order.into_iter().enumerate() {
        rank[doc as usize] = pos as u32;
    }
    rank
}

pub(crate) fn assemble_index(
    docs: Vec<DocEntry>,
    terms: BTreeMap<String, TermPostings>,
    analyzer: AnalyzerConfig,
) -> PostingsIndex {
    let tie_rank = compute_tie_ranks(&docs);
    PostingsIndex {
        docs,
        terms,
        analyzer,
        tie_rank,
    }
}

/// Read a `doc_id <TAB> text` corpus file, one document per line.
pub fn read_corpus_tsv(path: &Path) -> Result<Vec<(String, String)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        match line.split_once('\t') {
            Some((id, text)) => records.push((id.to_string(), text.to_string())),
            None => {
                return Err(Error::parse(path, i + 1, "expected 'doc_id<TAB>text'"));
            }
        }
    }
    Ok(records)
}

/// Read a directory of files as a corpus: each regular file is one document
/// whose id is the file name and whose text is the file contents. Files are
/// visited in sorted name order.
pub fn read_corpus_dir(path: &Path) -> Result<Vec<(String, String)>> {
    let mut names: Vec<std::path::PathBuf> = Vec::new();
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        if entry.file_type().map_err(|e| Error::io(path, e))?.is_file() {
            names.push(entry.path());
        }
    }
    names.sort();
    let mut records = Vec::new();
    for file in names {
        let id = file
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        records.push((id, text));
    }
    Ok(records)
}

/// Wrap in-memory `(doc_id, text)` records for [`build_index`].
pub fn ok_records(
    records: Vec<(String, String)>,
) -> impl Iterator<Item = Result<(String, String)>> {
    records.into_iter().map(Ok)
}
