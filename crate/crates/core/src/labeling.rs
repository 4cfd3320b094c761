//! Cutoff grids, MED sweeps, and minimal-cutoff class labels.
//!
//! A sweep computes MED between the gold run and the candidate run at every
//! grid cutoff. A topic's class label is then the index of the first cutoff
//! whose MED falls within the effectiveness envelope `eps`, or the last
//! class when none does. Multiclass labels expand into one binary training
//! set per cascade stage.

use crate::error::{Error, Result};
use crate::med::MedMetric;
use crate::run::RankedRun;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

/// Which candidate-generation knob a grid ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Knob {
    K,
    Rho,
}

impl std::fmt::Display for Knob {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Knob::K => "k",
            Knob::Rho => "rho",
        })
    }
}

impl std::str::FromStr for Knob {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" => Ok(Knob::K),
            "rho" => Ok(Knob::Rho),
            other => Err(Error::InvalidParameter(format!(
                "unknown knob '{other}' (expected k or rho)"
            ))),
        }
    }
}

/// A strictly increasing list of cutoff values; class `i` (1-based) names
/// the `i`-th value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutoffGrid {
    pub knob: Knob,
    values: Vec<u64>,
}

impl CutoffGrid {
    pub fn new(knob: Knob, values: Vec<u64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(
                "cutoff grid needs at least 2 values".into(),
            ));
        }
        if !values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "cutoff grid must be strictly increasing".into(),
            ));
        }
        Ok(CutoffGrid { knob, values })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Number of classes `c`.
    pub fn class_count(&self) -> u32 {
        self.values.len() as u32
    }

    /// Cutoff value named by a 1-based class label.
    pub fn cutoff_of_class(&self, class: u32) -> u64 {
        self.values[(class - 1) as usize]
    }
}

/// MED values for every (topic, cutoff) cell of a sweep.
#[derive(Debug, Clone)]
pub struct MedTable {
    pub metric: MedMetric,
    pub grid: CutoffGrid,
    rows: BTreeMap<String, Vec<f64>>,
}

impl MedTable {
    pub fn new(metric: MedMetric, grid: CutoffGrid) -> Self {
        MedTable {
            metric,
            grid,
            rows: BTreeMap::new(),
        }
    }

    pub fn insert_row(&mut self, topic: impl Into<String>, meds: Vec<f64>) -> Result<()> {
        if meds.len() != self.grid.values().len() {
            return Err(Error::InvalidParameter(format!(
                "row has {} cells, grid has {}",
                meds.len(),
                self.grid.values().len()
            )));
        }
        self.rows.insert(topic.into(), meds);
        Ok(())
    }

    pub fn row(&self, topic: &str) -> Option<&[f64]> {
        self.rows.get(topic).map(|r| r.as_slice())
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(|t| t.as_str())
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.rows.iter().map(|(t, r)| (t.as_str(), r.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// A copy restricted to the given topics.
    pub fn filtered(&self, keep: &std::collections::BTreeSet<String>) -> MedTable {
        MedTable {
            metric: self.metric,
            grid: self.grid.clone(),
            rows: self
                .rows
                .iter()
                .filter(|(t, _)| keep.contains(*t))
                .map(|(t, r)| (t.clone(), r.clone()))
                .collect(),
        }
    }

    /// Write `topic,cutoff,med` rows (with a header) to CSV.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "topic,cutoff,med")?;
        for (topic, row) in &self.rows {
            for (value, med) in self.grid.values().iter().zip(row) {
                writeln!(out, "{topic},{value},{med:.6}")?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    /// Read a table previously written by [`MedTable::write_csv`]. The grid
    /// is reconstructed from the cutoff column.
    pub fn read_csv(path: &Path, knob: Knob, metric: MedMetric) -> Result<MedTable> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut cells: BTreeMap<String, BTreeMap<u64, f64>> = BTreeMap::new();
        let mut cutoffs: std::collections::BTreeSet<u64> = Default::default();
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
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::parse(path, i + 1, "expected topic,cutoff,med"));
            }
            let cutoff: u64 = fields[1]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad cutoff"))?;
            let med: f64 = fields[2]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, "bad med"))?;
            cutoffs.insert(cutoff);
            cells
                .entry(fields[0].to_string())
                .or_default()
                .insert(cutoff, med);
        }
        let grid = CutoffGrid::new(knob, cutoffs.iter().copied().collect())?;
        let mut table = MedTable::new(metric, grid);
        for (topic, by_cutoff) in cells {
            if by_cutoff.len() != cutoffs.len() {
                return Err(Error::corrupt(
                    path,
                    format!("topic {topic} is missing cutoff cells"),
                ));
            }
            let row = by_cutoff.into_values().collect();
            table.insert_row(topic, row)?;
        }
        Ok(table)
    }
}

/// Produces the candidate run for one cutoff value.
pub trait CutoffRunner {
    fn run_at(&mut self, cutoff: u64) -> Result<RankedRun>;
}

/// Candidate runs that are prefixes of one full-depth run, as with safe
/// top-k retrieval where the list at depth `k` is the first `k` entries of
/// the list at any deeper setting.
pub struct PrefixRunner {
    pub full: RankedRun,
}

impl CutoffRunner for PrefixRunner {
    fn run_at(&mut self, cutoff: u64) -> Result<RankedRun> {
        Ok(self.full.truncated(cutoff as usize))
    }
}

/// MED of every gold topic against the candidate run at every grid cutoff.
///
/// A topic missing from a candidate run is compared as an empty list, which
/// simply leaves all of the gold mass in place.
pub fn sweep_med(
    gold: &RankedRun,
    runner: &mut dyn CutoffRunner,
    grid: &CutoffGrid,
    metric: &MedMetric,
) -> Result<MedTable> {
    let mut table = MedTable::new(*metric, grid.clone());
    let mut columns: Vec<RankedRun> = Vec::with_capacity(grid.values().len());
    for &cutoff in grid.values() {
        columns.push(runner.run_at(cutoff)?);
    }
    let topics: Vec<&str> = gold.topic_ids().collect();
    let rows: Vec<(String, Result<Vec<f64>>)> = topics
        .par_iter()
        .map(|topic| {
            let gold_docs: Vec<&str> = gold.doc_ids(topic, usize::MAX);
            let row: Result<Vec<f64>> = columns
                .iter()
                .map(|run| {
                    let cand_docs: Vec<&str> = run.doc_ids(topic, usize::MAX);
                    metric.compute(&gold_docs, &cand_docs)
                })
                .collect();
            (topic.to_string(), row)
        })
        .collect();
    for (topic, row) in rows {
        table.insert_row(topic, row?)?;
    }
    Ok(table)
}

/// Minimal-cutoff labels: the 1-based index of the first cutoff with
/// `MED <= eps`, or the last class when no cutoff qualifies.
pub fn assign_labels(table: &MedTable, eps: f64) -> Result<BTreeMap<String, u32>> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "envelope threshold must be positive: {eps}"
        )));
    }
    let c = table.grid.class_count();
    Ok(table
        .rows()
        .map(|(topic, row)| {
            let class = row
                .iter()
                .position(|&med| med <= eps)
                .map(|i| i as u32 + 1)
                .unwrap_or(c);
            (topic.to_string(), class)
        })
        .collect())
}

/// Expand multiclass labels (1..=c) into `c - 1` binary label sets: in set
/// `i` (1-based), an instance is 0 when its class is at most `i`, else 1.
pub fn multiclass_to_binary(labels: &[u32], c: u32) -> Vec<Vec<u8>> {
    (1..c)
        .map(|stage| {
            labels
                .iter()
                .map(|&label| u8::from(label > stage))
                .collect()
        })
        .collect()
}

/// Misclassification penalties: zero on the diagonal, 1 for over-prediction,
/// and `true - predicted + 1` for under-prediction, which grows with how far
/// below the true class the prediction fell.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    c: u32,
    entries: Vec<f64>,
}

pub fn build_cost_matrix(c: u32) -> Result<CostMatrix> {
    if c < 2 {
        return Err(Error::InvalidParameter("cost matrix needs c >= 2".into()));
    }
    let mut entries = vec![0.0; (c * c) as usize];
    for i in 1..=c {
        for j in 1..=c {
            let cell = &mut entries[((i - 1) * c + (j - 1)) as usize];
            *cell = match i.cmp(&j) {
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => (i - j + 1) as f64,
                std::cmp::Ordering::Less => 1.0,
            };
        }
    }
    Ok(CostMatrix { c, entries })
}

impl CostMatrix {
    pub fn class_count(&self) -> u32 {
        self.c
    }

    /// Penalty of predicting class `predicted` when the truth is `actual`
    /// (both 1-based).
    pub fn cost(&self, actual: u32, predicted: u32) -> f64 {
        self.entries[((actual - 1) * self.c + (predicted - 1)) as usize]
    }
}

/// Write `topic,class` label rows to CSV.
pub fn write_labels_csv<W: std::io::Write>(
    out: &mut W,
    labels: &BTreeMap<String, u32>,
) -> std::io::Result<()> {
    writeln!(out, "topic,class")?;
    for (topic, class) in labels {
        writeln!(out, "{topic},{class}")?;
    }
    Ok(())
}

pub fn save_labels_csv(path: &Path, labels: &BTreeMap<String, u32>) -> Result<()> {
    let mut buf = Vec::new();
    write_labels_csv(&mut buf, labels).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_labels_csv(path: &Path) -> Result<BTreeMap<String, u32>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut labels = BTreeMap::new();
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
        let (topic, class) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(path, i + 1, "expected topic,class"))?;
        let class: u32 = class
            .parse()
            .map_err(|_| Error::parse(path, i + 1, "bad class"))?;
        labels.insert(topic.to_string(), class);
    }
    Ok(labels)
}
