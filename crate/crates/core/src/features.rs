//! Static pre-retrieval query features aggregated from term statistics.
//!
//! The manifest pins an ordered list of exactly 70 features; every vector
//! and every model records the manifest it was built against so training and
//! prediction can never silently disagree on feature meaning.
//!
//! Layout of the default manifest (70 features):
//!
//! * `query_length`, and the arithmetic mean of document frequency over the
//!   query's terms (2);
//! * per measure, arithmetic means over terms of the per-term median, mean,
//!   variance, and IQR scores, plus arithmetic and harmonic means of the
//!   per-term maximum scores (6 x 3 = 18);
//! * minima and maxima over terms of collection and document frequency
//!   (2 x 2 = 4);
//! * minima and maxima over terms of the per-term max, min, mean, harmonic
//!   mean, median, variance, and IQR scores for every measure
//!   (7 x 3 x 2 = 42);
//! * minima and maxima over terms of the per-term first and third quartile
//!   scores for BM25 (2 x 2 = 4).
//!
//! Out-of-vocabulary terms are excluded from every aggregate (a fully
//! out-of-vocabulary query scores 0 on all statistic-derived features), and
//! a harmonic mean over a set containing a nonpositive value is defined
//! as 0.

use crate::error::{Error, Result};
use crate::index::{ScoreStat, TermStatsStore};
use crate::scoring::{Measure, MEASURES};
use sha2::{Digest, Sha256};
use std::io::BufRead;
use std::path::Path;

/// How one feature aggregates a per-term quantity across the query's terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    QueryLength,
    ArithmeticMean,
    HarmonicMean,
    Min,
    Max,
}

impl Aggregate {
    fn name(self) -> &'static str {
        match self {
            Aggregate::QueryLength => "query_length",
            Aggregate::ArithmeticMean => "am",
            Aggregate::HarmonicMean => "hm",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "query_length" => Aggregate::QueryLength,
            "am" => Aggregate::ArithmeticMean,
            "hm" => Aggregate::HarmonicMean,
            "min" => Aggregate::Min,
            "max" => Aggregate::Max,
            _ => return None,
        })
    }
}

/// The per-term quantity a feature aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermQuantity {
    /// No per-term source (query length).
    None,
    CollFreq,
    DocFreq,
    Score(ScoreStat, Measure),
}

impl TermQuantity {
    fn name(self) -> String {
        match self {
            TermQuantity::None => "-".to_string(),
            TermQuantity::CollFreq => "coll_freq".to_string(),
            TermQuantity::DocFreq => "doc_freq".to_string(),
            TermQuantity::Score(stat, m) => format!("{}_{}", stat.name(), m.name()),
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "-" => return Some(TermQuantity::None),
            "coll_freq" => return Some(TermQuantity::CollFreq),
            "doc_freq" => return Some(TermQuantity::DocFreq),
            _ => {}
        }
        let (stat_name, measure_name) = s.rsplit_once('_')?;
        let measure: Measure = measure_name.parse().ok()?;
        let stat = ScoreStat::ALL.into_iter().find(|x| x.name() == stat_name)?;
        Some(TermQuantity::Score(stat, measure))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDef {
    pub name: String,
    pub aggregate: Aggregate,
    pub quantity: TermQuantity,
}

/// An ordered, versioned list of feature definitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureManifest {
    pub version: u32,
    defs: Vec<FeatureDef>,
}

impl FeatureManifest {
    /// The pinned 70-feature enumeration described in the module docs.
    pub fn default_v1() -> Self {
        let mut defs = Vec::with_capacity(70);
        let mut push = |aggregate: Aggregate, quantity: TermQuantity| {
            let name = match quantity {
                TermQuantity::None => aggregate.name().to_string(),
                _ => format!("{}_{}", aggregate.name(), quantity.name()),
            };
            defs.push(FeatureDef {
                name,
                aggregate,
                quantity,
            });
        };

        push(Aggregate::QueryLength, TermQuantity::None);
        push(Aggregate::ArithmeticMean, TermQuantity::DocFreq);
        for measure in MEASURES {
            push(
                Aggregate::ArithmeticMean,
                TermQuantity::Score(ScoreStat::Max, measure),
            );
            push(
                Aggregate::HarmonicMean,
                TermQuantity::Score(ScoreStat::Max, measure),
            );
            for stat in [
                ScoreStat::Median,
                ScoreStat::Mean,
                ScoreStat::Variance,
                ScoreStat::Iqr,
            ] {
                push(
                    Aggregate::ArithmeticMean,
                    TermQuantity::Score(stat, measure),
                );
            }
        }
        for quantity in [TermQuantity::CollFreq, TermQuantity::DocFreq] {
            push(Aggregate::Min, quantity);
            push(Aggregate::Max, quantity);
        }
        for measure in MEASURES {
            for stat in [
                ScoreStat::Max,
                ScoreStat::Min,
                ScoreStat::Mean,
                ScoreStat::HarmonicMean,
                ScoreStat::Median,
                ScoreStat::Variance,
                ScoreStat::Iqr,
            ] {
                push(Aggregate::Min, TermQuantity::Score(stat, measure));
                push(Aggregate::Max, TermQuantity::Score(stat, measure));
            }
        }
        for stat in [ScoreStat::Q1, ScoreStat::Q3] {
            push(Aggregate::Min, TermQuantity::Score(stat, Measure::Bm25));
            push(Aggregate::Max, TermQuantity::Score(stat, Measure::Bm25));
        }

        debug_assert_eq!(defs.len(), 70);
        FeatureManifest { version: 1, defs }
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn defs(&self) -> &[FeatureDef] {
        &self.defs
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.iter().map(|d| d.name.as_str())
    }

    /// Canonical text serialization: a version line, then one
    /// `index<TAB>name<TAB>aggregate<TAB>quantity` line per feature.
    pub fn to_text(&self) -> String {
        let mut out = format!("manifest_version\t{}\n", self.version);
        for (i, def) in self.defs.iter().enumerate() {
            out.push_str(&format!(
                "{i}\t{}\t{}\t{}\n",
                def.name,
                def.aggregate.name(),
                def.quantity.name()
            ));
        }
        out
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::corrupt(path, "empty manifest"))?;
        let version: u32 = header
            .strip_prefix("manifest_version\t")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::corrupt(path, "bad manifest header"))?;
        let mut defs = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(path, i + 1, "expected 4 tab-separated fields"));
            }
            let aggregate = Aggregate::from_name(fields[2]).ok_or_else(|| {
                Error::parse(path, i + 1, format!("bad aggregate '{}'", fields[2]))
            })?;
            let quantity = TermQuantity::from_name(fields[3]).ok_or_else(|| {
                Error::parse(path, i + 1, format!("bad quantity '{}'", fields[3]))
            })?;
            defs.push(FeatureDef {
                name: fields[1].to_string(),
                aggregate,
                quantity,
            });
        }
        Ok(FeatureManifest { version, defs })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(path, &text)
    }

    /// SHA-256 of the canonical serialization; embedded in model files.
    pub fn sha256(&self) -> [u8; 32] {
        Sha256::digest(self.to_text().as_bytes()).into()
    }
}

/// A query's feature values in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryFeatureVector {
    pub topic_id: String,
    pub values: Vec<f64>,
}

fn aggregate(values: &mut [f64], how: Aggregate) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    // sums run over sorted values so term order cannot perturb the result
    values.sort_unstable_by(f64::total_cmp);
    match how {
        Aggregate::QueryLength => unreachable!("query length has no per-term values"),
        Aggregate::ArithmeticMean => values.iter().sum::<f64>() / values.len() as f64,
        Aggregate::HarmonicMean => {
            if values.first().is_some_and(|&v| v <= 0.0) {
                0.0
            } else {
                values.len() as f64 / values.iter().map(|v| 1.0 / v).sum::<f64>()
            }
        }
        Aggregate::Min => values[0],
        Aggregate::Max => values[values.len() - 1],
    }
}

/// Extract the feature vector of one analyzed query.
///
/// Pure: permuting the query's terms leaves the vector unchanged, and the
/// result depends only on (terms, store, manifest).
pub fn extract_features(
    terms: &[String],
    store: &TermStatsStore,
    manifest: &FeatureManifest,
) -> Vec<f64> {
    let blocks: Vec<&crate::index::TermStatBlock> =
        terms.iter().filter_map(|t| store.get(t)).collect();
    manifest
        .defs
        .iter()
        .map(|def| match def.quantity {
            TermQuantity::None => terms.len() as f64,
            TermQuantity::CollFreq => {
                let mut vals: Vec<f64> = blocks.iter().map(|b| b.coll_freq as f64).collect();
                aggregate(&mut vals, def.aggregate)
            }
            TermQuantity::DocFreq => {
                let mut vals: Vec<f64> = blocks.iter().map(|b| b.doc_freq as f64).collect();
                aggregate(&mut vals, def.aggregate)
            }
            TermQuantity::Score(stat, measure) => {
                let mut vals: Vec<f64> =
                    blocks.iter().map(|b| b.stats(measure).get(stat)).collect();
                aggregate(&mut vals, def.aggregate)
            }
        })
        .collect()
}

/// Write one row per topic, `topic` plus manifest-named columns.
pub fn write_features_csv<W: std::io::Write>(
    out: &mut W,
    manifest: &FeatureManifest,
    rows: &[QueryFeatureVector],
) -> std::io::Result<()> {
    write!(out, "topic")?;
    for name in manifest.names() {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for row in rows {
        write!(out, "{}", row.topic_id)?;
        for v in &row.values {
            write!(out, ",{v:.6}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_features_csv(
    path: &Path,
    manifest: &FeatureManifest,
    rows: &[QueryFeatureVector],
) -> Result<()> {
    let mut buf = Vec::new();
    write_features_csv(&mut buf, manifest, rows).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Read a feature CSV produced by [`write_features_csv`], checking column
/// count against the manifest.
pub fn read_features_csv(
    path: &Path,
    manifest: &FeatureManifest,
) -> Result<Vec<QueryFeatureVector>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut rows = Vec::new();
    let mut header_seen = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let mut fields = line.split(',');
        let topic = fields
            .next()
            .ok_or_else(|| Error::parse(path, i + 1, "empty row"))?
            .to_string();
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, i + 1, "bad feature value"))?;
        if values.len() != manifest.len() {
            return Err(Error::FeatureLengthMismatch {
                got: values.len(),
                want: manifest.len(),
            });
        }
        rows.push(QueryFeatureVector {
            topic_id: topic,
            values,
        });
    }
    Ok(rows)
}
