//! TREC-shaped ranked runs and relevance judgments.

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

/// One result line: document, 1-based rank, retrieval score.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDoc {
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
}

/// Ranked document lists per topic.
///
/// Invariants: ranks are contiguous from 1, scores are nonincreasing with
/// rank, and no topic lists the same document twice.
#[derive(Debug, Clone, Default)]
pub struct RankedRun {
    pub tag: String,
    topics: BTreeMap<String, Vec<RunDoc>>,
}

impl RankedRun {
    pub fn new(tag: impl Into<String>) -> Self {
        RankedRun {
            tag: tag.into(),
            topics: BTreeMap::new(),
        }
    }

    /// Add a topic's ranked list from `(doc_id, score)` pairs already in rank
    /// order. Ranks are assigned 1..n.
    pub fn push_topic(&mut self, topic: impl Into<String>, ranked: Vec<(String, f64)>) {
        let docs = ranked
            .into_iter()
            .enumerate()
            .map(|(i, (doc_id, score))| RunDoc {
                doc_id,
                rank: i as u32 + 1,
                score,
            })
            .collect();
        self.topics.insert(topic.into(), docs);
    }

    pub fn topic(&self, topic: &str) -> Option<&[RunDoc]> {
        self.topics.get(topic).map(|v| v.as_slice())
    }

    pub fn topics(&self) -> impl Iterator<Item = (&str, &[RunDoc])> {
        self.topics.iter().map(|(t, d)| (t.as_str(), d.as_slice()))
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(|t| t.as_str())
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    /// Document ids of one topic, in rank order, truncated to `depth`.
    pub fn doc_ids(&self, topic: &str, depth: usize) -> Vec<&str> {
        match self.topics.get(topic) {
            Some(docs) => docs.iter().take(depth).map(|d| d.doc_id.as_str()).collect(),
            None => Vec::new(),
        }
    }

    /// A copy of this run with every topic truncated to its first `depth`
    /// entries.
    pub fn truncated(&self, depth: usize) -> RankedRun {
        let topics = self
            .topics
            .iter()
            .map(|(t, docs)| (t.clone(), docs.iter().take(depth).cloned().collect()))
            .collect();
        RankedRun {
            tag: self.tag.clone(),
            topics,
        }
    }

    pub fn write_trec<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (topic, docs) in &self.topics {
            for d in docs {
                writeln!(
                    out,
                    "{} Q0 {} {} {:.6} {}",
                    topic, d.doc_id, d.rank, d.score, self.tag
                )?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_trec(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

/// Parse a TREC run file: `topic Q0 doc_id rank score tag` per line.
///
/// Lists whose ranks are not contiguous from 1 or whose scores increase with
/// rank are re-sorted by descending score (ties by ascending doc id) with a
/// warning; duplicate documents within a topic are an error.
pub fn parse_run(path: &Path) -> Result<RankedRun> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);

    let mut tag = String::new();
    let mut raw: BTreeMap<String, Vec<(String, u32, f64)>> = BTreeMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected 6 fields, got {}", fields.len()),
            ));
        }
        let topic = fields[0].to_string();
        let doc = fields[2].to_string();
        let rank: u32 = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad rank '{}'", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad score '{}'", fields[4])))?;
        if !seen.insert((topic.clone(), doc.clone())) {
            return Err(Error::DuplicateInList { topic, doc });
        }
        tag = fields[5].to_string();
        raw.entry(topic).or_default().push((doc, rank, score));
    }

    let mut run = RankedRun::new(tag);
    for (topic, mut docs) in raw {
        let ordered = docs
            .iter()
            .enumerate()
            .all(|(i, (_, rank, _))| *rank == i as u32 + 1)
            && docs.windows(2).all(|w| w[0].2 >= w[1].2);
        if !ordered {
            log::warn!(
                "run {}: topic {topic} out of order; re-sorting",
                path.display()
            );
            docs.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
        }
        run.push_topic(topic, docs.into_iter().map(|(d, _, s)| (d, s)).collect());
    }
    Ok(run)
}

/// Graded relevance judgments; absent pairs have grade 0.
#[derive(Debug, Clone, Default)]
pub struct Judgments {
    grades: BTreeMap<(String, String), u32>,
    topics: BTreeSet<String>,
}

impl Judgments {
    pub fn insert(&mut self, topic: impl Into<String>, doc: impl Into<String>, grade: u32) {
        let topic = topic.into();
        self.topics.insert(topic.clone());
        self.grades.insert((topic, doc.into()), grade);
    }

    pub fn gain(&self, topic: &str, doc: &str) -> u32 {
        self.grades
            .get(&(topic.to_string(), doc.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// All grades judged for one topic, in document order.
    pub fn topic_grades(&self, topic: &str) -> Vec<(&str, u32)> {
        self.grades
            .range((topic.to_string(), String::new())..)
            .take_while(|((t, _), _)| t == topic)
            .map(|((_, d), g)| (d.as_str(), *g))
            .collect()
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.topics.iter().map(|t| t.as_str())
    }

    pub fn has_topic(&self, topic: &str) -> bool {
        self.topics.contains(topic)
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }
}

/// Parse a qrels file: `topic 0 doc_id grade` per line.
pub fn parse_qrels(path: &Path) -> Result<Judgments> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut j = Judgments::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad grade '{}'", fields[3])))?;
        // negative grades (sometimes used for "judged nonrelevant") clamp to 0
        j.insert(fields[0], fields[2], grade.max(0) as u32);
    }
    Ok(j)
}
