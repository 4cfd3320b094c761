//! On-disk index layout: a plain-text manifest plus little-endian binary
//! files for documents, postings, term statistics, and the impact index.
//!
//! The layout is versioned and fully deterministic: saving the same bundle
//! twice produces byte-identical files, and the manifest records a SHA-256
//! digest of every binary file, which is verified on load.

use super::stats::{ScoreStats, TermStatBlock, TermStatsStore};
use super::{
    assemble_index, DocEntry, ImpactIndex, ImpactSegment, Posting, PostingsIndex, TermPostings,
};
use crate::analyze::AnalyzerConfig;
use crate::error::{Error, Result};
use crate::scoring::{Measure, SimilarityParams};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

const FORMAT_VERSION: u32 = 1;
const MAGIC_DOCS: &[u8; 4] = b"DCDC";
const MAGIC_POSTINGS: &[u8; 4] = b"DCPS";
const MAGIC_STATS: &[u8; 4] = b"DCST";
const MAGIC_IMPACT: &[u8; 4] = b"DCIM";

pub const MANIFEST_FILE: &str = "index.manifest";
const DOCS_FILE: &str = "docs.bin";
const POSTINGS_FILE: &str = "postings.bin";
const STATS_FILE: &str = "stats.bin";
const IMPACT_FILE: &str = "impact.bin";

/// An index directory's contents: the postings index plus whichever derived
/// artifacts have been built.
#[derive(Debug, Clone)]
pub struct IndexBundle {
    pub index: PostingsIndex,
    pub stats: Option<TermStatsStore>,
    pub impact: Option<ImpactIndex>,
}

pub fn save_index(dir: &Path, bundle: &IndexBundle) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(&str, Vec<u8>)> = Vec::new();
    files.push((DOCS_FILE, encode_docs(&bundle.index)));
    files.push((POSTINGS_FILE, encode_postings(&bundle.index)));
    if let Some(stats) = &bundle.stats {
        files.push((STATS_FILE, encode_stats(stats)));
    }
    if let Some(impact) = &bundle.impact {
        files.push((IMPACT_FILE, encode_impact(impact)));
    }

    let mut manifest = String::new();
    manifest.push_str(&format!("format_version = {FORMAT_VERSION}\n"));
    manifest.push_str(&format!(
        "stopwords = {}\n",
        bundle.index.analyzer.stopwords
    ));
    manifest.push_str(&format!("stemming = {}\n", bundle.index.analyzer.stemming));
    let coll = bundle.index.collection_stats();
    manifest.push_str(&format!("doc_count = {}\n", coll.doc_count));
    manifest.push_str(&format!("total_terms = {}\n", coll.total_terms));
    manifest.push_str(&format!("distinct_terms = {}\n", bundle.index.vocab_size()));
    for (name, bytes) in &files {
        let digest = Sha256::digest(bytes);
        manifest.push_str(&format!("file {name} sha256={}\n", hex(&digest)));
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(())
}

pub fn load_index(dir: &Path) -> Result<IndexBundle> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest =
        std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut keys: BTreeMap<String, String> = BTreeMap::new();
    let mut file_hashes: BTreeMap<String, String> = BTreeMap::new();
    for line in manifest.lines() {
        if let Some(rest) = line.strip_prefix("file ") {
            if let Some((name, hash)) = rest.split_once(" sha256=") {
                file_hashes.insert(name.to_string(), hash.to_string());
            }
        } else if let Some((k, v)) = line.split_once(" = ") {
            keys.insert(k.to_string(), v.to_string());
        }
    }
    let version: u32 = keys
        .get("format_version")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::corrupt(&manifest_path, "missing format_version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::corrupt(
            &manifest_path,
            format!("unsupported format_version {version}"),
        ));
    }
    let analyzer = AnalyzerConfig {
        stopwords: keys.get("stopwords").map(|v| v == "true").unwrap_or(true),
        stemming: keys.get("stemming").map(|v| v == "true").unwrap_or(true),
    };

    let read_verified = |name: &str| -> Result<Vec<u8>> {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let expect = file_hashes.get(name).ok_or_else(|| {
            Error::corrupt(&manifest_path, format!("file {name} not in manifest"))
        })?;
        let digest = hex(&Sha256::digest(&bytes));
        if &digest != expect {
            return Err(Error::corrupt(&path, "sha256 mismatch"));
        }
        Ok(bytes)
    };

    let docs = decode_docs(dir.join(DOCS_FILE), &read_verified(DOCS_FILE)?)?;
    let terms = decode_postings(dir.join(POSTINGS_FILE), &read_verified(POSTINGS_FILE)?)?;
    let index = assemble_index(docs, terms, analyzer);

    let stats = if file_hashes.contains_key(STATS_FILE) {
        Some(decode_stats(
            dir.join(STATS_FILE),
            &read_verified(STATS_FILE)?,
        )?)
    } else {
        None
    };
    let impact = if file_hashes.contains_key(IMPACT_FILE) {
        Some(decode_impact(
            dir.join(IMPACT_FILE),
            &read_verified(IMPACT_FILE)?,
        )?)
    } else {
        None
    };

    Ok(IndexBundle {
        index,
        stats,
        impact,
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_string(out: &mut Vec<u8>, s: &str) {
    out.write_u32::<LittleEndian>(s.len() as u32).unwrap();
    out.write_all(s.as_bytes()).unwrap();
}

fn read_string(input: &mut &[u8]) -> std::io::Result<String> {
    let len = input.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    input.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| std::io::Error::other("invalid utf-8"))
}

fn check_magic(input: &mut &[u8], magic: &[u8; 4]) -> std::io::Result<()> {
    let mut got = [0u8; 4];
    input.read_exact(&mut got)?;
    if &got != magic {
        return Err(std::io::Error::other("bad magic"));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != FORMAT_VERSION {
        return Err(std::io::Error::other("bad version"));
    }
    Ok(())
}

fn encode_docs(index: &PostingsIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC_DOCS);
    out.write_u32::<LittleEndian>(FORMAT_VERSION).unwrap();
    out.write_u32::<LittleEndian>(index.docs.len() as u32)
        .unwrap();
    for doc in &index.docs {
        write_string(&mut out, &doc.external_id);
        out.write_u64::<LittleEndian>(doc.len).unwrap();
    }
    out
}

fn decode_docs(path: PathBuf, bytes: &[u8]) -> Result<Vec<DocEntry>> {
    let mut input = bytes;
    let inner = (|| -> std::io::Result<Vec<DocEntry>> {
        check_magic(&mut input, MAGIC_DOCS)?;
        let n = input.read_u32::<LittleEndian>()? as usize;
        let mut docs = Vec::with_capacity(n);
        for _ in 0..n {
            let external_id = read_string(&mut input)?;
            let len = input.read_u64::<LittleEndian>()?;
            docs.push(DocEntry { external_id, len });
        }
        Ok(docs)
    })();
    inner.map_err(|e| Error::corrupt(path, e.to_string()))
}

fn encode_postings(index: &PostingsIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC_POSTINGS);
    out.write_u32::<LittleEndian>(FORMAT_VERSION).unwrap();
    out.write_u32::<LittleEndian>(index.terms.len() as u32)
        .unwrap();
    for (term, tp) in &index.terms {
        write_string(&mut out, term);
        out.write_u64::<LittleEndian>(tp.coll_freq).unwrap();
        out.write_u32::<LittleEndian>(tp.postings.len() as u32)
            .unwrap();
        for p in &tp.postings {
            out.write_u32::<LittleEndian>(p.doc).unwrap();
            out.write_u32::<LittleEndian>(p.tf).unwrap();
        }
    }
    out
}

fn decode_postings(path: PathBuf, bytes: &[u8]) -> Result<BTreeMap<String, TermPostings>> {
    let mut input = bytes;
    let inner = (|| -> std::io::Result<BTreeMap<String, TermPostings>> {
        check_magic(&mut input, MAGIC_POSTINGS)?;
        let n_terms = input.read_u32::<LittleEndian>()? as usize;
        let mut terms = BTreeMap::new();
        for _ in 0..n_terms {
            let term = read_string(&mut input)?;
            let coll_freq = input.read_u64::<LittleEndian>()?;
            let n = input.read_u32::<LittleEndian>()? as usize;
            let mut postings = Vec::with_capacity(n);
            for _ in 0..n {
                let doc = input.read_u32::<LittleEndian>()?;
                let tf = input.read_u32::<LittleEndian>()?;
                postings.push(Posting { doc, tf });
            }
            terms.insert(
                term,
                TermPostings {
                    coll_freq,
                    postings,
                },
            );
        }
        Ok(terms)
    })();
    inner.map_err(|e| Error::corrupt(path, e.to_string()))
}

fn write_score_stats(out: &mut Vec<u8>, s: &ScoreStats) {
    for v in [
        s.max,
        s.min,
        s.q1,
        s.q3,
        s.median,
        s.mean,
        s.harmonic_mean,
        s.variance,
        s.iqr,
    ] {
        out.write_f64::<LittleEndian>(v).unwrap();
    }
}

fn read_score_stats(input: &mut &[u8]) -> std::io::Result<ScoreStats> {
    let mut vals = [0f64; 9];
    for v in &mut vals {
        *v = input.read_f64::<LittleEndian>()?;
    }
    Ok(ScoreStats {
        max: vals[0],
        min: vals[1],
        q1: vals[2],
        q3: vals[3],
        median: vals[4],
        mean: vals[5],
        harmonic_mean: vals[6],
        variance: vals[7],
        iqr: vals[8],
    })
}

fn encode_stats(store: &TermStatsStore) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC_STATS);
    out.write_u32::<LittleEndian>(FORMAT_VERSION).unwrap();
    out.write_f64::<LittleEndian>(store.params.k1).unwrap();
    out.write_f64::<LittleEndian>(store.params.b).unwrap();
    out.write_f64::<LittleEndian>(store.params.mu).unwrap();
    let entries: Vec<(&str, &TermStatBlock)> = store.iter().collect();
    out.write_u32::<LittleEndian>(entries.len() as u32).unwrap();
    for (term, block) in entries {
        write_string(&mut out, term);
        out.write_u64::<LittleEndian>(block.coll_freq).unwrap();
        out.write_u64::<LittleEndian>(block.doc_freq).unwrap();
        for s in &block.per_measure {
            write_score_stats(&mut out, s);
        }
    }
    out
}

fn decode_stats(path: PathBuf, bytes: &[u8]) -> Result<TermStatsStore> {
    let mut input = bytes;
    let inner = (|| -> std::io::Result<TermStatsStore> {
        check_magic(&mut input, MAGIC_STATS)?;
        let params = SimilarityParams {
            k1: input.read_f64::<LittleEndian>()?,
            b: input.read_f64::<LittleEndian>()?,
            mu: input.read_f64::<LittleEndian>()?,
        };
        let n = input.read_u32::<LittleEndian>()? as usize;
        let mut blocks = BTreeMap::new();
        for _ in 0..n {
            let term = read_string(&mut input)?;
            let coll_freq = input.read_u64::<LittleEndian>()?;
            let doc_freq = input.read_u64::<LittleEndian>()?;
            let mut per_measure = [ScoreStats::default(); 3];
            for s in &mut per_measure {
                *s = read_score_stats(&mut input)?;
            }
            blocks.insert(
                term,
                TermStatBlock {
                    doc_freq,
                    coll_freq,
                    per_measure,
                },
            );
        }
        Ok(TermStatsStore::from_parts(params, blocks))
    })();
    inner.map_err(|e| Error::corrupt(path, e.to_string()))
}

fn encode_impact(impact: &ImpactIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC_IMPACT);
    out.write_u32::<LittleEndian>(FORMAT_VERSION).unwrap();
    out.push(impact.bits);
    out.push(impact.measure.index() as u8);
    out.write_f64::<LittleEndian>(impact.score_min).unwrap();
    out.write_f64::<LittleEndian>(impact.score_max).unwrap();
    out.write_u64::<LittleEndian>(impact.total_postings)
        .unwrap();
    let terms: Vec<(&str, &[ImpactSegment])> = impact.terms().collect();
    out.write_u32::<LittleEndian>(terms.len() as u32).unwrap();
    for (term, segments) in terms {
        write_string(&mut out, term);
        out.write_u32::<LittleEndian>(segments.len() as u32)
            .unwrap();
        for s in segments {
            out.write_u32::<LittleEndian>(s.impact).unwrap();
            out.write_u32::<LittleEndian>(s.docs.len() as u32).unwrap();
            for d in &s.docs {
                out.write_u32::<LittleEndian>(*d).unwrap();
            }
        }
    }
    out
}

fn decode_impact(path: PathBuf, bytes: &[u8]) -> Result<ImpactIndex> {
    let mut input = bytes;
    let inner = (|| -> std::io::Result<ImpactIndex> {
        check_magic(&mut input, MAGIC_IMPACT)?;
        let bits = input.read_u8()?;
        let measure = match input.read_u8()? {
            0 => Measure::Bm25,
            1 => Measure::Lm,
            2 => Measure::Tfidf,
            _ => return Err(std::io::Error::other("bad measure tag")),
        };
        let score_min = input.read_f64::<LittleEndian>()?;
        let score_max = input.read_f64::<LittleEndian>()?;
        let total_postings = input.read_u64::<LittleEndian>()?;
        let n_terms = input.read_u32::<LittleEndian>()? as usize;
        let mut terms = BTreeMap::new();
        for _ in 0..n_terms {
            let term = read_string(&mut input)?;
            let n_segs = input.read_u32::<LittleEndian>()? as usize;
            let mut segments = Vec::with_capacity(n_segs);
            for _ in 0..n_segs {
                let impact = input.read_u32::<LittleEndian>()?;
                let n = input.read_u32::<LittleEndian>()? as usize;
                let mut docs = Vec::with_capacity(n);
                for _ in 0..n {
                    docs.push(input.read_u32::<LittleEndian>()?);
                }
                segments.push(ImpactSegment { impact, docs });
            }
            terms.insert(term, segments);
        }
        Ok(ImpactIndex::from_parts(
            bits,
            measure,
            score_min,
            score_max,
            total_postings,
            terms,
        ))
    })();
    inner.map_err(|e| Error::corrupt(path, e.to_string()))
}
