//! End-to-end experiment orchestration.
//!
//! One experiment: build candidate runs over a cutoff grid, sweep MED
//! against a gold run, label topics with minimal cutoffs, extract features,
//! cross-validate the cascade and the multiclass baseline, and report every
//! method against the fixed-cutoff tradeoff horizon. All outputs are CSV
//! files with stable headers; identical configuration and seeds reproduce
//! them byte for byte.

mod folds;
mod gains;
mod validate;

pub use folds::{make_folds, FoldPlan};
pub use gains::{
    cutoff_at_med, fixed_curve, gain_pct, gain_report, med_at_cutoff, oracle_report, GainReport,
    Interpolated, TradeoffCurve,
};
pub use validate::{validate_judged, ValidationRow};

use crate::cascade::{train_cascade, train_multiclass};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureManifest, QueryFeatureVector};
use crate::forest::ForestParams;
use crate::index::{build_impact_index, load_index, IndexBundle};
use crate::labeling::{
    assign_labels, build_cost_matrix, sweep_med, CutoffGrid, CutoffRunner, Knob, MedTable,
    PrefixRunner,
};
use crate::med::MedMetric;
use crate::retrieval::{read_queries, saat_rho, wand_topk, Query};
use crate::run::{parse_qrels, parse_run, Judgments, RankedRun};
use crate::scoring::{Measure, SimilarityParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricConfig {
    pub kind: String,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_max_grade")]
    pub max_grade: u32,
}

fn default_p() -> f64 {
    0.8
}

fn default_depth() -> usize {
    20
}

fn default_max_grade() -> u32 {
    1
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            kind: "rbp".into(),
            p: default_p(),
            depth: default_depth(),
            max_grade: default_max_grade(),
        }
    }
}

impl MetricConfig {
    pub fn to_metric(&self) -> Result<MedMetric> {
        match self.kind.as_str() {
            "rbp" => Ok(MedMetric::Rbp { p: self.p }),
            "dcg" => Ok(MedMetric::Dcg { depth: self.depth }),
            "err" => Ok(MedMetric::Err {
                depth: self.depth,
                max_grade: self.max_grade,
            }),
            other => Err(Error::Config(format!("unknown metric kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaatConfig {
    /// Quantization bits of the impact index.
    #[serde(default = "default_bits")]
    pub bits: u8,
    /// Result-list depth of budgeted runs.
    #[serde(default = "default_saat_depth")]
    pub depth: usize,
}

fn default_bits() -> u8 {
    8
}

fn default_saat_depth() -> usize {
    1000
}

impl Default for SaatConfig {
    fn default() -> Self {
        SaatConfig {
            bits: default_bits(),
            depth: default_saat_depth(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub knob: Knob,
    pub epsilon: f64,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    pub grid: Vec<u64>,
    pub measure: Measure,
    pub index_dir: PathBuf,
    pub queries: PathBuf,
    pub gold_run: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub qrels: Option<PathBuf>,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub forest: ForestParams,
    #[serde(default)]
    pub similarity: SimilarityParams,
    #[serde(default)]
    pub saat: SaatConfig,
}

fn default_seed() -> u64 {
    42
}

fn default_folds() -> usize {
    10
}

fn default_t_grid() -> Vec<f64> {
    vec![0.75, 0.80, 0.85]
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Consistency checks that must pass before any computation starts.
    pub fn validate(&self) -> Result<()> {
        CutoffGrid::new(self.knob, self.grid.clone())?;
        self.metric.to_metric()?;
        self.similarity.validate()?;
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be > 0: {}",
                self.epsilon
            )));
        }
        if self.folds < 2 {
            return Err(Error::Config("folds must be >= 2".into()));
        }
        if self.t_grid.is_empty() {
            return Err(Error::Config("t_grid must not be empty".into()));
        }
        if let Some(&t) = self.t_grid.iter().find(|t| !(0.0..1.0).contains(*t)) {
            return Err(Error::Config(format!("t must be in [0, 1): {t}")));
        }
        if self.forest.trees == 0 {
            return Err(Error::Config("forest.trees must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-topic cross-validated predictions of every method.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub topic: String,
    pub fold: usize,
    pub true_class: u32,
    pub multiclass: u32,
    /// One predicted class per threshold in the configured `t_grid`.
    pub cascade: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnderTargetRow {
    pub method: String,
    pub mean_cutoff: f64,
    pub fraction_under_target: f64,
}

/// Everything an experiment produced, also written to `out_dir`.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub labels: BTreeMap<String, u32>,
    pub curve: TradeoffCurve,
    pub gains: Vec<GainReport>,
    pub predictions: Vec<PredictionRow>,
    pub under_target: Vec<UnderTargetRow>,
    pub validation: Vec<ValidationRow>,
    pub out_dir: PathBuf,
}

impl ExperimentOutcome {
    pub fn gain(&self, method: &str) -> Option<&GainReport> {
        self.gains.iter().find(|g| g.method == method)
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn method_name_for_t(t: f64) -> String {
    format!("lr_cascade_t{t:.2}")
}

struct SaatRunner<'a> {
    impact: &'a crate::index::ImpactIndex,
    index: &'a crate::index::PostingsIndex,
    queries: &'a [Query],
    depth: usize,
}

impl CutoffRunner for SaatRunner<'_> {
    fn run_at(&mut self, cutoff: u64) -> Result<RankedRun> {
        let per_topic: Vec<(String, Vec<(String, f64)>)> = self
            .queries
            .par_iter()
            .map(|q| {
                let (docs, _) = saat_rho(self.impact, self.index, q, cutoff, self.depth);
                let resolved = docs
                    .iter()
                    .map(|d| (self.index.external_id(d.doc).to_string(), d.score))
                    .collect();
                (q.topic_id.clone(), resolved)
            })
            .collect();
        let mut run = RankedRun::new(format!("saat_rho{cutoff}"));
        for (topic, docs) in per_topic {
            run.push_topic(topic, docs);
        }
        Ok(run)
    }
}

/// Run the full pipeline described by `cfg`. See the module docs for the
/// artifact list.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let grid = CutoffGrid::new(cfg.knob, cfg.grid.clone())?;
    let metric = cfg.metric.to_metric()?;

    let bundle = load_index(&cfg.index_dir)?;
    let stats = bundle
        .stats
        .as_ref()
        .ok_or_else(|| Error::Config("index has no term statistics; rebuild with stats".into()))?;
    let all_queries = read_queries(&cfg.queries, &bundle.index)?;
    let gold = parse_run(&cfg.gold_run)?;
    // a query whose terms match nothing produces no gold lines at all;
    // such topics carry no signal and are dropped up front
    let queries: Vec<Query> = all_queries
        .iter()
        .filter(|q| gold.topic(&q.topic_id).is_some())
        .cloned()
        .collect();
    if queries.len() < all_queries.len() {
        log::warn!(
            "{} of {} query topics missing from the gold run; skipped",
            all_queries.len() - queries.len(),
            all_queries.len()
        );
    }
    if queries.is_empty() {
        return Err(Error::MissingGoldTopic("every query topic".into()));
    }
    let judgments = match &cfg.qrels {
        Some(path) => Some(parse_qrels(path)?),
        None => None,
    };

    // candidate generation and the MED sweep
    let (table, candidate_full) =
        build_candidates_and_sweep(cfg, &bundle, stats, &queries, &gold, &grid, &metric)?;

    let labels = assign_labels(&table, cfg.epsilon)?;

    // features for every query, in topic order
    let manifest = FeatureManifest::default_v1();
    let mut sorted_queries: Vec<&Query> = queries.iter().collect();
    sorted_queries.sort_by(|a, b| a.topic_id.cmp(&b.topic_id));
    let vectors: Vec<QueryFeatureVector> = sorted_queries
        .par_iter()
        .map(|q| QueryFeatureVector {
            topic_id: q.topic_id.clone(),
            values: extract_features(&q.terms, stats, &manifest),
        })
        .collect();
    let features_by_topic: BTreeMap<&str, &QueryFeatureVector> =
        vectors.iter().map(|v| (v.topic_id.as_str(), v)).collect();

    // held-out judged topics never enter the folds
    let judged_topics: BTreeSet<String> = judgments
        .as_ref()
        .map(|j| {
            j.topics()
                .filter(|t| labels.contains_key(*t))
                .map(|t| t.to_string())
                .collect()
        })
        .unwrap_or_default();
    let cv_labels: BTreeMap<String, u32> = labels
        .iter()
        .filter(|(t, _)| !judged_topics.contains(*t))
        .map(|(t, &c)| (t.clone(), c))
        .collect();

    let plan = make_folds(&cv_labels, cfg.folds, cfg.seed)?;

    // cross-validated predictions: each fold predicted by the model trained
    // on the other folds
    let manifest_sha = manifest.sha256();
    let fold_outputs: Vec<Result<Vec<PredictionRow>>> = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| {
            let train_topics = plan.topics_not_in(fold);
            let rows: Vec<Vec<f64>> = train_topics
                .iter()
                .map(|t| features_by_topic[*t].values.clone())
                .collect();
            let train_labels: Vec<u32> = train_topics.iter().map(|t| cv_labels[*t]).collect();
            let fold_seed = cfg.forest.seed.wrapping_add(fold as u64 + 1);
            let params = ForestParams {
                seed: fold_seed,
                ..cfg.forest
            };
            let cascade = train_cascade(&rows, &train_labels, &grid, &params, 0.8, manifest_sha)?;
            let multi = train_multiclass(&rows, &train_labels, &grid, &params, manifest_sha)?;
            plan.topics_in(fold)
                .into_iter()
                .map(|topic| {
                    let x = &features_by_topic[topic].values;
                    let cascade_preds: Vec<u32> = cfg
                        .t_grid
                        .iter()
                        .map(|&t| cascade.predict_class(x, t))
                        .collect::<Result<_>>()?;
                    Ok(PredictionRow {
                        topic: topic.to_string(),
                        fold,
                        true_class: cv_labels[topic],
                        multiclass: multi.predict_class(x)?,
                        cascade: cascade_preds,
                    })
                })
                .collect()
        })
        .collect();
    let mut predictions: Vec<PredictionRow> = Vec::new();
    for fold_rows in fold_outputs {
        predictions.extend(fold_rows?);
    }
    predictions.sort_by(|a, b| a.topic.cmp(&b.topic));

    // method summaries over the cross-validated topic set
    let cv_topic_set: BTreeSet<String> = cv_labels.keys().cloned().collect();
    let cv_table = table.filtered(&cv_topic_set);
    let curve = fixed_curve(&cv_table)?;
    let cost = build_cost_matrix(grid.class_count())?;

    let mut gains = Vec::new();
    gains.push(oracle_report(&cv_table, cfg.epsilon, &curve, &cost)?);
    let multi_preds: BTreeMap<String, u32> = predictions
        .iter()
        .map(|p| (p.topic.clone(), p.multiclass))
        .collect();
    gains.push(gain_report(
        "multilabel",
        &cv_table,
        &curve,
        &multi_preds,
        &cv_labels,
        &cost,
    )?);
    for (ti, &t) in cfg.t_grid.iter().enumerate() {
        let preds: BTreeMap<String, u32> = predictions
            .iter()
            .map(|p| (p.topic.clone(), p.cascade[ti]))
            .collect();
        gains.push(gain_report(
            method_name_for_t(t),
            &cv_table,
            &curve,
            &preds,
            &cv_labels,
            &cost,
        )?);
    }

    // share of topics meeting the envelope, per method and per fixed cutoff
    let mut under_target = Vec::new();
    {
        let fraction_under = |preds: &BTreeMap<String, u32>| -> (f64, f64) {
            let mut under = 0usize;
            let mut cutoff_sum = 0.0;
            for (topic, row) in cv_table.rows() {
                let class = preds[topic];
                if row[(class - 1) as usize] <= cfg.epsilon {
                    under += 1;
                }
                cutoff_sum += cv_table.grid.cutoff_of_class(class) as f64;
            }
            (
                cutoff_sum / cv_table.len() as f64,
                under as f64 / cv_table.len() as f64,
            )
        };
        let oracle_preds: BTreeMap<String, u32> = cv_labels.clone();
        let (mean_cutoff, frac) = fraction_under(&oracle_preds);
        under_target.push(UnderTargetRow {
            method: "oracle".into(),
            mean_cutoff,
            fraction_under_target: frac,
        });
        let (mean_cutoff, frac) = fraction_under(&multi_preds);
        under_target.push(UnderTargetRow {
            method: "multilabel".into(),
            mean_cutoff,
            fraction_under_target: frac,
        });
        for (ti, &t) in cfg.t_grid.iter().enumerate() {
            let preds: BTreeMap<String, u32> = predictions
                .iter()
                .map(|p| (p.topic.clone(), p.cascade[ti]))
                .collect();
            let (mean_cutoff, frac) = fraction_under(&preds);
            under_target.push(UnderTargetRow {
                method: method_name_for_t(t),
                mean_cutoff,
                fraction_under_target: frac,
            });
        }
        for (ci, &cutoff) in grid.values().iter().enumerate() {
            let under = cv_table
                .rows()
                .filter(|(_, row)| row[ci] <= cfg.epsilon)
                .count();
            under_target.push(UnderTargetRow {
                method: format!("fixed_{cutoff}"),
                mean_cutoff: cutoff as f64,
                fraction_under_target: under as f64 / cv_table.len() as f64,
            });
        }
    }

    // judged validation: one model trained on all cross-validation topics
    let mut validation = Vec::new();
    if let Some(judgments) = &judgments {
        if !judged_topics.is_empty() {
            validation = validate_on_judged(
                cfg,
                &grid,
                &cv_labels,
                &judged_topics,
                &features_by_topic,
                &labels,
                &candidate_full,
                judgments,
                manifest_sha,
            )?;
        }
    }

    let outcome = ExperimentOutcome {
        labels,
        curve,
        gains,
        predictions,
        under_target,
        validation,
        out_dir: cfg.out_dir.clone(),
    };
    write_reports(cfg, &table, &manifest, &vectors, &outcome)?;
    Ok(outcome)
}

fn build_candidates_and_sweep(
    cfg: &ExperimentConfig,
    bundle: &IndexBundle,
    stats: &crate::index::TermStatsStore,
    queries: &[Query],
    gold: &RankedRun,
    grid: &CutoffGrid,
    metric: &MedMetric,
) -> Result<(MedTable, RankedRun)> {
    match cfg.knob {
        Knob::K => {
            let k_max = *grid.values().last().unwrap() as usize;
            let per_topic: Vec<(String, Vec<(String, f64)>)> = queries
                .par_iter()
                .map(|q| {
                    let (docs, _) =
                        wand_topk(&bundle.index, stats, q, k_max, cfg.measure, &cfg.similarity);
                    let resolved = docs
                        .iter()
                        .map(|d| (bundle.index.external_id(d.doc).to_string(), d.score))
                        .collect();
                    (q.topic_id.clone(), resolved)
                })
                .collect();
            let mut full = RankedRun::new(format!("wand_{}", cfg.measure));
            for (topic, docs) in per_topic {
                full.push_topic(topic, docs);
            }
            let mut runner = PrefixRunner { full: full.clone() };
            let table = sweep_med(gold, &mut runner, grid, metric)?;
            Ok((restrict_table(table, queries, grid, metric)?, full))
        }
        Knob::Rho => {
            let impact_owned;
            let impact = match &bundle.impact {
                Some(imp) if imp.measure == cfg.measure && imp.bits == cfg.saat.bits => imp,
                _ => {
                    impact_owned = build_impact_index(
                        &bundle.index,
                        &cfg.similarity,
                        cfg.measure,
                        cfg.saat.bits,
                    )?;
                    &impact_owned
                }
            };
            let mut runner = SaatRunner {
                impact,
                index: &bundle.index,
                queries,
                depth: cfg.saat.depth,
            };
            let table = sweep_med(gold, &mut runner, grid, metric)?;
            let full = runner.run_at(*grid.values().last().unwrap())?;
            Ok((restrict_table(table, queries, grid, metric)?, full))
        }
    }
}

/// Keep only the experiment's query topics (the gold run may cover more).
fn restrict_table(
    table: MedTable,
    queries: &[Query],
    grid: &CutoffGrid,
    metric: &MedMetric,
) -> Result<MedTable> {
    let keep: BTreeSet<String> = queries.iter().map(|q| q.topic_id.clone()).collect();
    let filtered = table.filtered(&keep);
    if filtered.len() != keep.len() {
        return Err(Error::Config(
            "sweep did not cover every query topic".into(),
        ));
    }
    let _ = (grid, metric);
    Ok(filtered)
}

#[allow(clippy::too_many_arguments)]
fn validate_on_judged(
    cfg: &ExperimentConfig,
    grid: &CutoffGrid,
    cv_labels: &BTreeMap<String, u32>,
    judged_topics: &BTreeSet<String>,
    features_by_topic: &BTreeMap<&str, &QueryFeatureVector>,
    all_labels: &BTreeMap<String, u32>,
    candidate_full: &RankedRun,
    judgments: &Judgments,
    manifest_sha: [u8; 32],
) -> Result<Vec<ValidationRow>> {
    let train_topics: Vec<&String> = cv_labels.keys().collect();
    let rows: Vec<Vec<f64>> = train_topics
        .iter()
        .map(|t| features_by_topic[t.as_str()].values.clone())
        .collect();
    let train_labels: Vec<u32> = train_topics.iter().map(|t| cv_labels[*t]).collect();
    let cascade = train_cascade(&rows, &train_labels, grid, &cfg.forest, 0.8, manifest_sha)?;

    let mut methods: Vec<(String, BTreeMap<String, u32>)> = Vec::new();
    let oracle: BTreeMap<String, u32> = judged_topics
        .iter()
        .map(|t| (t.clone(), all_labels[t]))
        .collect();
    methods.push(("oracle".into(), oracle));
    for &t in &cfg.t_grid {
        let preds: BTreeMap<String, u32> = judged_topics
            .iter()
            .map(|topic| {
                let x = &features_by_topic[topic.as_str()].values;
                cascade.predict_class(x, t).map(|c| (topic.clone(), c))
            })
            .collect::<Result<_>>()?;
        methods.push((method_name_for_t(t), preds));
    }
    let fixed_max: BTreeMap<String, u32> = judged_topics
        .iter()
        .map(|t| (t.clone(), grid.class_count()))
        .collect();
    methods.push((
        format!("fixed_{}", grid.values().last().unwrap()),
        fixed_max,
    ));

    let training_set: BTreeSet<String> = cv_labels.keys().cloned().collect();
    validate_judged(
        &methods,
        candidate_full,
        grid,
        judgments,
        &training_set,
        10,
        cfg.metric.depth,
        cfg.metric.max_grade.max(1),
    )
}

// --- report files -----------------------------------------------------------

fn file_header(cfg_sha: &str, inputs_sha: &str) -> String {
    format!("# dyncut config_sha256={cfg_sha} inputs_sha256={inputs_sha}\n")
}

fn write_reports(
    cfg: &ExperimentConfig,
    table: &MedTable,
    manifest: &FeatureManifest,
    vectors: &[QueryFeatureVector],
    outcome: &ExperimentOutcome,
) -> Result<()> {
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let resolved = toml::to_string_pretty(cfg).map_err(|e| Error::Config(e.to_string()))?;
    let cfg_sha = hex(&Sha256::digest(resolved.as_bytes()));
    let mut inputs = String::new();
    inputs.push_str(&format!(
        "queries_sha256 = \"{}\"\n",
        sha256_file(&cfg.queries)?
    ));
    inputs.push_str(&format!(
        "gold_run_sha256 = \"{}\"\n",
        sha256_file(&cfg.gold_run)?
    ));
    inputs.push_str(&format!(
        "index_manifest_sha256 = \"{}\"\n",
        sha256_file(&cfg.index_dir.join(crate::index::MANIFEST_FILE))?
    ));
    if let Some(qrels) = &cfg.qrels {
        inputs.push_str(&format!("qrels_sha256 = \"{}\"\n", sha256_file(qrels)?));
    }
    let inputs_sha = hex(&Sha256::digest(inputs.as_bytes()));
    let header = file_header(&cfg_sha, &inputs_sha);

    let write = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, format!("{header}{body}")).map_err(|e| Error::io(&path, e))
    };

    // med table
    {
        let mut buf = Vec::new();
        table
            .write_csv(&mut buf)
            .map_err(|e| Error::io(dir.join("medtable.csv"), e))?;
        write("medtable.csv", String::from_utf8(buf).unwrap())?;
    }
    // labels
    {
        let mut buf = Vec::new();
        crate::labeling::write_labels_csv(&mut buf, &outcome.labels)
            .map_err(|e| Error::io(dir.join("labels.csv"), e))?;
        write("labels.csv", String::from_utf8(buf).unwrap())?;
    }
    // features + manifest
    {
        let mut buf = Vec::new();
        crate::features::write_features_csv(&mut buf, manifest, vectors)
            .map_err(|e| Error::io(dir.join("features.csv"), e))?;
        write("features.csv", String::from_utf8(buf).unwrap())?;
        let manifest_path = dir.join("feature_manifest.tsv");
        manifest.save(&manifest_path)?;
    }
    // predictions
    {
        let mut body = String::from("topic,fold,true_class");
        body.push_str(",multilabel_class,multilabel_cutoff");
        for &t in &cfg.t_grid {
            body.push_str(&format!(",{m}_class,{m}_cutoff", m = method_name_for_t(t)));
        }
        body.push('\n');
        let grid = CutoffGrid::new(cfg.knob, cfg.grid.clone())?;
        for p in &outcome.predictions {
            body.push_str(&format!(
                "{},{},{},{},{}",
                p.topic,
                p.fold,
                p.true_class,
                p.multiclass,
                grid.cutoff_of_class(p.multiclass)
            ));
            for &class in &p.cascade {
                body.push_str(&format!(",{},{}", class, grid.cutoff_of_class(class)));
            }
            body.push('\n');
        }
        write("predictions.csv", body)?;
    }
    // tradeoff curve
    {
        let mut body = String::from("cutoff,mean_med\n");
        for (cutoff, med) in &outcome.curve.points {
            body.push_str(&format!("{cutoff:.0},{med:.6}\n"));
        }
        write("tradeoff_curve.csv", body)?;
    }
    // gains
    {
        let mut body = String::from(
            "method,predicted_med,predicted_cutoff,fixed_cutoff_at_equal_med,cutoff_diff_pct,fixed_med_at_equal_cutoff,med_diff_pct,mean_cost,clamped\n",
        );
        for g in &outcome.gains {
            body.push_str(&format!(
                "{},{:.6},{:.3},{:.3},{:.2},{:.6},{:.2},{:.4},{}\n",
                g.method,
                g.predicted_med,
                g.predicted_cutoff,
                g.fixed_cutoff_at_equal_med,
                g.cutoff_diff_pct,
                g.fixed_med_at_equal_cutoff,
                g.med_diff_pct,
                g.mean_cost,
                g.clamped
            ));
        }
        write("gains.csv", body)?;
    }
    // under target
    {
        let mut body = String::from("method,mean_cutoff,fraction_under_target\n");
        for row in &outcome.under_target {
            body.push_str(&format!(
                "{},{:.3},{:.6}\n",
                row.method, row.mean_cutoff, row.fraction_under_target
            ));
        }
        write("under_target.csv", body)?;
    }
    // validation
    if !outcome.validation.is_empty() {
        let mut body = String::from("method,ndcg10,err,mean_cutoff\n");
        for row in &outcome.validation {
            body.push_str(&format!(
                "{},{:.6},{:.6},{:.3}\n",
                row.method, row.ndcg10, row.err, row.mean_cutoff
            ));
        }
        write("validation.csv", body)?;
    }
    // run metadata: resolved config, input digests, and sweep statistics.
    // MED falling monotonically with the cutoff is typical but not
    // guaranteed, so it is reported rather than asserted.
    {
        let monotone = table
            .rows()
            .filter(|(_, row)| row.windows(2).all(|w| w[0] >= w[1] - 1e-12))
            .count();
        let meta = format!(
            "[inputs]\n{inputs}\n[stats]\nswept_topics = {}\nmonotone_med_rows_fraction = {:.6}\n\n[config]\n{resolved}",
            table.len(),
            monotone as f64 / table.len() as f64,
        );
        let path = dir.join("run_meta.toml");
        std::fs::write(&path, meta).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Recompute curve, gains, and under-target reports from a previous run's
/// persisted MED table, labels, and predictions.
pub fn report_from_dir(dir: &Path) -> Result<ExperimentOutcome> {
    let meta_path = dir.join("run_meta.toml");
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: toml::Value = toml::from_str(&meta_text)
        .map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    let cfg: ExperimentConfig = meta
        .get("config")
        .cloned()
        .ok_or_else(|| Error::corrupt(&meta_path, "missing [config]"))?
        .try_into()
        .map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;

    let metric = cfg.metric.to_metric()?;
    let table = MedTable::read_csv(&dir.join("medtable.csv"), cfg.knob, metric)?;
    let labels = crate::labeling::read_labels_csv(&dir.join("labels.csv"))?;
    let grid = CutoffGrid::new(cfg.knob, cfg.grid.clone())?;
    let cost = build_cost_matrix(grid.class_count())?;

    // predictions.csv: topic,fold,true_class,multilabel pair,then per-t pairs
    let pred_path = dir.join("predictions.csv");
    let text = std::fs::read_to_string(&pred_path).map_err(|e| Error::io(&pred_path, e))?;
    let mut predictions = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("topic,") || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let want = 5 + 2 * cfg.t_grid.len();
        if fields.len() != want {
            return Err(Error::parse(&pred_path, i + 1, "unexpected column count"));
        }
        let parse_u32 = |s: &str| -> Result<u32> {
            s.parse()
                .map_err(|_| Error::parse(&pred_path, i + 1, format!("bad number '{s}'")))
        };
        let cascade: Vec<u32> = (0..cfg.t_grid.len())
            .map(|k| parse_u32(fields[5 + 2 * k]))
            .collect::<Result<_>>()?;
        predictions.push(PredictionRow {
            topic: fields[0].to_string(),
            fold: fields[1]
                .parse()
                .map_err(|_| Error::parse(&pred_path, i + 1, "bad fold"))?,
            true_class: parse_u32(fields[2])?,
            multiclass: parse_u32(fields[3])?,
            cascade,
        });
    }

    let cv_topics: BTreeSet<String> = predictions.iter().map(|p| p.topic.clone()).collect();
    let cv_table = table.filtered(&cv_topics);
    let cv_labels: BTreeMap<String, u32> = labels
        .iter()
        .filter(|(t, _)| cv_topics.contains(*t))
        .map(|(t, &c)| (t.clone(), c))
        .collect();
    let curve = fixed_curve(&cv_table)?;
    let mut gains = vec![oracle_report(&cv_table, cfg.epsilon, &curve, &cost)?];
    let multi: BTreeMap<String, u32> = predictions
        .iter()
        .map(|p| (p.topic.clone(), p.multiclass))
        .collect();
    gains.push(gain_report(
        "multilabel",
        &cv_table,
        &curve,
        &multi,
        &cv_labels,
        &cost,
    )?);
    for (ti, &t) in cfg.t_grid.iter().enumerate() {
        let preds: BTreeMap<String, u32> = predictions
            .iter()
            .map(|p| (p.topic.clone(), p.cascade[ti]))
            .collect();
        gains.push(gain_report(
            method_name_for_t(t),
            &cv_table,
            &curve,
            &preds,
            &cv_labels,
            &cost,
        )?);
    }

    Ok(ExperimentOutcome {
        labels,
        curve,
        gains,
        predictions,
        under_target: Vec::new(),
        validation: Vec::new(),
        out_dir: dir.to_path_buf(),
    })
}
