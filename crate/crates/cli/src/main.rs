//! `dyncut` command line: index management, retrieval runs, MED scoring,
//! labeling, feature extraction, cascade training, and experiments.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dyncut::analyze::AnalyzerConfig;
use dyncut::cascade;
use dyncut::features::{
    extract_features, read_features_csv, save_features_csv, FeatureManifest, QueryFeatureVector,
};
use dyncut::forest::ForestParams;
use dyncut::harness;
use dyncut::index::{
    build_impact_index, build_index, load_index, precompute_term_stats, read_corpus_dir,
    read_corpus_tsv, save_index, IndexBundle,
};
use dyncut::labeling::{
    assign_labels, multiclass_to_binary, read_labels_csv, save_labels_csv, sweep_med, CutoffGrid,
    CutoffRunner, Knob, MedTable, PrefixRunner,
};
use dyncut::med::MedMetric;
use dyncut::retrieval::{append_to_run, exhaustive_topk, read_queries, saat_rho, wand_topk, Query};
use dyncut::run::{parse_run, RankedRun};
use dyncut::synth::{write_tsv, SynthSpec};
use dyncut::{Measure, PostingsIndex, SimilarityParams};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "dyncut",
    version,
    about = "Per-query candidate-generation cutoff prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct SimilarityArgs {
    /// BM25 term-frequency saturation.
    #[arg(long, default_value_t = 0.9)]
    k1: f64,
    /// BM25 length normalization.
    #[arg(long, default_value_t = 0.4)]
    b: f64,
    /// Dirichlet smoothing mass.
    #[arg(long, default_value_t = 2500.0)]
    mu: f64,
}

impl SimilarityArgs {
    fn params(&self) -> Result<SimilarityParams> {
        let params = SimilarityParams {
            k1: self.k1,
            b: self.b,
            mu: self.mu,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build and inspect inverted indexes.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Evaluate queries and write a TREC run.
    Run(RunArgs),
    /// MED between a gold and a candidate run, as CSV.
    Med(MedArgs),
    /// MED sweeps, labels, and binary training-set expansion.
    #[command(subcommand)]
    Label(LabelCmd),
    /// Static query feature extraction.
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Train and apply cutoff classifiers.
    #[command(subcommand)]
    Cascade(CascadeCmd),
    /// Full experiments from a config file.
    #[command(subcommand)]
    Exp(ExpCmd),
    /// Generate a synthetic corpus and query log.
    Synth(SynthArgs),
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Index a corpus (line-delimited `doc_id<TAB>text` or a directory of
    /// files) and precompute term statistics.
    Build {
        /// Tab-separated corpus file.
        #[arg(long, conflicts_with = "corpus_dir")]
        corpus: Option<PathBuf>,
        /// Directory of files, one document per file.
        #[arg(long)]
        corpus_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Keep stopwords.
        #[arg(long)]
        no_stopwords: bool,
        /// Disable the plural stemmer.
        #[arg(long)]
        no_stemming: bool,
        /// Skip the per-term statistics pass.
        #[arg(long)]
        no_stats: bool,
        #[command(flatten)]
        similarity: SimilarityArgs,
    },
    /// Recompute term statistics for an existing index and print a summary.
    Stats {
        #[arg(long)]
        index: PathBuf,
        /// Print the statistic block of one term.
        #[arg(long)]
        term: Option<String>,
        #[command(flatten)]
        similarity: SimilarityArgs,
    },
    /// Build the impact-ordered index used by score-at-a-time evaluation.
    Impact {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = 8)]
        bits: u8,
        #[arg(long, default_value = "bm25")]
        measure: String,
        #[command(flatten)]
        similarity: SimilarityArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    index: PathBuf,
    /// `topic_id<TAB>query text` file.
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, value_parser = ["exhaustive", "wand", "saat"])]
    algo: String,
    #[arg(long, default_value = "bm25")]
    measure: String,
    /// Result-list depth.
    #[arg(long, default_value_t = 1000)]
    k: usize,
    /// Posting budget for score-at-a-time evaluation; defaults to one tenth
    /// of the collection's postings.
    #[arg(long)]
    rho: Option<u64>,
    /// Quantization bits when the impact index must be built on the fly.
    #[arg(long, default_value_t = 8)]
    bits: u8,
    #[arg(long, default_value = "dyncut")]
    tag: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    similarity: SimilarityArgs,
}

#[derive(Args)]
struct MedArgs {
    #[arg(long, value_parser = ["rbp", "dcg", "err"])]
    metric: String,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    cand: PathBuf,
    /// RBP persistence.
    #[arg(long, default_value_t = 0.8)]
    p: f64,
    /// Evaluation depth for DCG and ERR.
    #[arg(long, default_value_t = 20)]
    depth: usize,
    #[arg(long, default_value_t = 1)]
    max_grade: u32,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LabelCmd {
    /// Sweep a cutoff grid: retrieve candidates, compute MED per cutoff.
    Sweep {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, default_value = "k")]
        knob: String,
        /// Comma-separated strictly increasing cutoffs.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<u64>,
        #[arg(long, default_value = "bm25")]
        measure: String,
        #[arg(long, value_parser = ["rbp", "dcg", "err"], default_value = "rbp")]
        metric: String,
        #[arg(long, default_value_t = 0.8)]
        p: f64,
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[arg(long, default_value_t = 1)]
        max_grade: u32,
        /// Result depth of budgeted score-at-a-time runs.
        #[arg(long, default_value_t = 1000)]
        saat_depth: usize,
        #[arg(long, default_value_t = 8)]
        bits: u8,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        similarity: SimilarityArgs,
    },
    /// Assign minimal-cutoff class labels from a sweep table.
    Assign {
        /// `topic,cutoff,med` CSV from `label sweep`.
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value = "k")]
        knob: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expand multiclass labels into per-stage binary label CSVs.
    Expand {
        #[arg(long)]
        labels: PathBuf,
        /// Number of classes; defaults to the largest label seen.
        #[arg(long)]
        classes: Option<u32>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum FeaturesCmd {
    /// Extract the static feature vector of every query.
    Extract {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        /// Manifest file: loaded when present, otherwise the default
        /// manifest is written there.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum CascadeCmd {
    /// Train a left-to-right cascade (or the multiclass baseline).
    Train {
        /// `topic,class` CSV.
        #[arg(long)]
        labels: PathBuf,
        /// Feature CSV from `features extract`.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<u64>,
        #[arg(long, default_value = "k")]
        knob: String,
        #[arg(long)]
        out: PathBuf,
        /// Train the plain multiclass baseline instead of the cascade.
        #[arg(long)]
        multilabel: bool,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        /// 0 means unbounded.
        #[arg(long, default_value_t = 0)]
        max_depth: usize,
        #[arg(long, default_value_t = 1)]
        min_leaf: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 0.8)]
        default_t: f64,
    },
    /// Predict classes and cutoffs for a feature CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Confidence threshold; the model default when omitted.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ExpCmd {
    /// Run the full experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute reports from a previous run's artifacts.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    docs: usize,
    #[arg(long, default_value_t = 2000)]
    queries: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Index(cmd) => index_cmd(cmd),
        Command::Run(args) => run_cmd(args),
        Command::Med(args) => med_cmd(args),
        Command::Label(cmd) => label_cmd(cmd),
        Command::Features(cmd) => features_cmd(cmd),
        Command::Cascade(cmd) => cascade_cmd(cmd),
        Command::Exp(cmd) => exp_cmd(cmd),
        Command::Synth(args) => synth_cmd(args),
    }
}

fn index_cmd(cmd: IndexCmd) -> Result<()> {
    match cmd {
        IndexCmd::Build {
            corpus,
            corpus_dir,
            out,
            no_stopwords,
            no_stemming,
            no_stats,
            similarity,
        } => {
            let records = match (&corpus, &corpus_dir) {
                (Some(path), None) => read_corpus_tsv(path)?,
                (None, Some(dir)) => read_corpus_dir(dir)?,
                _ => bail!("exactly one of --corpus or --corpus-dir is required"),
            };
            let analyzer = AnalyzerConfig {
                stopwords: !no_stopwords,
                stemming: !no_stemming,
            };
            let index = build_index(records.into_iter().map(Ok), analyzer)?;
            let params = similarity.params()?;
            let stats = (!no_stats).then(|| precompute_term_stats(&index, &params));
            let bundle = IndexBundle {
                index,
                stats,
                impact: None,
            };
            save_index(&out, &bundle)?;
            let coll = bundle.index.collection_stats();
            println!(
                "indexed {} documents, {} distinct terms, {} postings -> {}",
                coll.doc_count,
                bundle.index.vocab_size(),
                bundle.index.total_postings(),
                out.display()
            );
            Ok(())
        }
        IndexCmd::Stats {
            index,
            term,
            similarity,
        } => {
            let mut bundle = load_index(&index)?;
            let params = similarity.params()?;
            let stats = precompute_term_stats(&bundle.index, &params);
            if let Some(term) = term {
                match stats.get(&term) {
                    Some(block) => {
                        println!("term {term}: df={} cf={}", block.doc_freq, block.coll_freq);
                        for m in dyncut::scoring::MEASURES {
                            let s = block.stats(m);
                            println!(
                                "  {m}: max={:.4} min={:.4} q1={:.4} median={:.4} q3={:.4} mean={:.4} hmean={:.4} var={:.4} iqr={:.4}",
                                s.max,
                                s.min,
                                s.q1,
                                s.median,
                                s.q3,
                                s.mean,
                                s.harmonic_mean,
                                s.variance,
                                s.iqr
                            );
                        }
                    }
                    None => println!("term {term}: not in vocabulary"),
                }
            }
            let coll = bundle.index.collection_stats();
            println!(
                "docs={} total_terms={} avg_len={:.2} vocab={}",
                coll.doc_count,
                coll.total_terms,
                coll.avg_doc_len,
                bundle.index.vocab_size()
            );
            bundle.stats = Some(stats);
            save_index(&index, &bundle)?;
            Ok(())
        }
        IndexCmd::Impact {
            index,
            bits,
            measure,
            similarity,
        } => {
            let mut bundle = load_index(&index)?;
            let params = similarity.params()?;
            let measure: Measure = measure.parse()?;
            let impact = build_impact_index(&bundle.index, &params, measure, bits)?;
            println!(
                "impact index: measure={measure} bits={bits} levels={} postings={} range=[{:.4}, {:.4}]",
                impact.levels(),
                impact.total_postings,
                impact.score_min,
                impact.score_max
            );
            bundle.impact = Some(impact);
            save_index(&index, &bundle)?;
            Ok(())
        }
    }
}

fn run_cmd(args: RunArgs) -> Result<()> {
    let bundle = load_index(&args.index)?;
    let queries = read_queries(&args.queries, &bundle.index)?;
    let params = args.similarity.params()?;
    let measure: Measure = args.measure.parse()?;
    let mut run = RankedRun::new(&args.tag);
    match args.algo.as_str() {
        "exhaustive" => {
            for q in &queries {
                let (docs, _) = exhaustive_topk(&bundle.index, q, args.k, measure, &params);
                append_to_run(&mut run, &bundle.index, &q.topic_id, &docs);
            }
        }
        "wand" => {
            let stats = match bundle.stats {
                Some(ref s) => s.clone(),
                None => precompute_term_stats(&bundle.index, &params),
            };
            for q in &queries {
                let (docs, _) = wand_topk(&bundle.index, &stats, q, args.k, measure, &params);
                append_to_run(&mut run, &bundle.index, &q.topic_id, &docs);
            }
        }
        "saat" => {
            let impact_owned;
            let impact = match &bundle.impact {
                Some(imp) if imp.measure == measure && imp.bits == args.bits => imp,
                _ => {
                    log::warn!("no matching impact index on disk; building in memory");
                    impact_owned = build_impact_index(&bundle.index, &params, measure, args.bits)?;
                    &impact_owned
                }
            };
            let rho = args.rho.unwrap_or(bundle.index.total_postings() / 10);
            for q in &queries {
                let (docs, _) = saat_rho(impact, &bundle.index, q, rho, args.k);
                append_to_run(&mut run, &bundle.index, &q.topic_id, &docs);
            }
        }
        other => bail!("unknown algorithm '{other}'"),
    }
    match &args.out {
        Some(path) => run.save(path)?,
        None => run.write_trec(&mut std::io::stdout().lock())?,
    }
    Ok(())
}

fn med_metric(metric: &str, p: f64, depth: usize, max_grade: u32) -> Result<MedMetric> {
    Ok(match metric {
        "rbp" => MedMetric::Rbp { p },
        "dcg" => MedMetric::Dcg { depth },
        "err" => MedMetric::Err { depth, max_grade },
        other => bail!("unknown metric '{other}'"),
    })
}

fn med_cmd(args: MedArgs) -> Result<()> {
    let metric = med_metric(&args.metric, args.p, args.depth, args.max_grade)?;
    let gold = parse_run(&args.gold)?;
    let cand = parse_run(&args.cand)?;
    let mut out = String::from("topic,metric,value\n");
    for (topic, _) in gold.topics() {
        let gold_docs = gold.doc_ids(topic, usize::MAX);
        let cand_docs = cand.doc_ids(topic, usize::MAX);
        let value = metric.compute(&gold_docs, &cand_docs)?;
        out.push_str(&format!("{topic},{},{value:.6}\n", metric.name()));
    }
    match &args.out {
        Some(path) => std::fs::write(path, out).context("write output")?,
        None => print!("{out}"),
    }
    Ok(())
}

struct CliSaatRunner<'a> {
    impact: &'a dyncut::index::ImpactIndex,
    index: &'a PostingsIndex,
    queries: &'a [Query],
    depth: usize,
}

impl CutoffRunner for CliSaatRunner<'_> {
    fn run_at(&mut self, cutoff: u64) -> dyncut::Result<RankedRun> {
        let mut run = RankedRun::new(format!("saat_rho{cutoff}"));
        for q in self.queries {
            let (docs, _) = saat_rho(self.impact, self.index, q, cutoff, self.depth);
            append_to_run(&mut run, self.index, &q.topic_id, &docs);
        }
        Ok(run)
    }
}

#[allow(clippy::too_many_arguments)]
fn label_cmd(cmd: LabelCmd) -> Result<()> {
    match cmd {
        LabelCmd::Sweep {
            index,
            queries,
            gold,
            knob,
            grid,
            measure,
            metric,
            p,
            depth,
            max_grade,
            saat_depth,
            bits,
            out,
            similarity,
        } => {
            let bundle = load_index(&index)?;
            let params = similarity.params()?;
            let measure: Measure = measure.parse()?;
            let knob: Knob = knob.parse()?;
            let queries = read_queries(&queries, &bundle.index)?;
            let gold = parse_run(&gold)?;
            let grid = CutoffGrid::new(knob, grid)?;
            let metric = med_metric(&metric, p, depth, max_grade)?;
            let table = match knob {
                Knob::K => {
                    let stats = match bundle.stats {
                        Some(ref s) => s.clone(),
                        None => precompute_term_stats(&bundle.index, &params),
                    };
                    let k_max = *grid.values().last().unwrap() as usize;
                    let mut full = RankedRun::new("sweep");
                    for q in &queries {
                        let (docs, _) =
                            wand_topk(&bundle.index, &stats, q, k_max, measure, &params);
                        append_to_run(&mut full, &bundle.index, &q.topic_id, &docs);
                    }
                    let mut runner = PrefixRunner { full };
                    sweep_med(&gold, &mut runner, &grid, &metric)?
                }
                Knob::Rho => {
                    let impact_owned;
                    let impact = match &bundle.impact {
                        Some(imp) if imp.measure == measure && imp.bits == bits => imp,
                        _ => {
                            impact_owned =
                                build_impact_index(&bundle.index, &params, measure, bits)?;
                            &impact_owned
                        }
                    };
                    let mut runner = CliSaatRunner {
                        impact,
                        index: &bundle.index,
                        queries: &queries,
                        depth: saat_depth,
                    };
                    sweep_med(&gold, &mut runner, &grid, &metric)?
                }
            };
            table.save_csv(&out)?;
            println!(
                "swept {} topics x {} cutoffs -> {}",
                table.len(),
                table.grid.values().len(),
                out.display()
            );
            Ok(())
        }
        LabelCmd::Assign {
            table,
            eps,
            knob,
            out,
        } => {
            let knob: Knob = knob.parse()?;
            let table = MedTable::read_csv(&table, knob, MedMetric::Rbp { p: 0.8 })?;
            let labels = assign_labels(&table, eps)?;
            save_labels_csv(&out, &labels)?;
            println!("labeled {} topics -> {}", labels.len(), out.display());
            Ok(())
        }
        LabelCmd::Expand {
            labels,
            classes,
            out_dir,
        } => {
            let labels = read_labels_csv(&labels)?;
            let c = classes
                .or_else(|| labels.values().max().copied())
                .context("no labels")?;
            std::fs::create_dir_all(&out_dir)?;
            let topics: Vec<&String> = labels.keys().collect();
            let values: Vec<u32> = labels.values().copied().collect();
            let sets = multiclass_to_binary(&values, c);
            for (i, set) in sets.iter().enumerate() {
                let mut body = String::from("topic,label\n");
                for (topic, bit) in topics.iter().zip(set) {
                    body.push_str(&format!("{topic},{bit}\n"));
                }
                let path = out_dir.join(format!("stage_{:02}.csv", i + 1));
                std::fs::write(&path, body)?;
            }
            println!(
                "wrote {} binary training sets to {}",
                sets.len(),
                out_dir.display()
            );
            Ok(())
        }
    }
}

fn load_manifest(path: &Option<PathBuf>) -> Result<FeatureManifest> {
    match path {
        Some(p) if p.exists() => Ok(FeatureManifest::load(p)?),
        Some(p) => {
            let manifest = FeatureManifest::default_v1();
            manifest.save(p)?;
            Ok(manifest)
        }
        None => Ok(FeatureManifest::default_v1()),
    }
}

fn features_cmd(cmd: FeaturesCmd) -> Result<()> {
    let FeaturesCmd::Extract {
        index,
        queries,
        manifest,
        out,
    } = cmd;
    let bundle = load_index(&index)?;
    let stats = bundle
        .stats
        .context("index has no term statistics; run `dyncut index stats` first")?;
    let queries = read_queries(&queries, &bundle.index)?;
    let manifest = load_manifest(&manifest)?;
    let mut rows: Vec<QueryFeatureVector> = queries
        .iter()
        .map(|q| QueryFeatureVector {
            topic_id: q.topic_id.clone(),
            values: extract_features(&q.terms, &stats, &manifest),
        })
        .collect();
    rows.sort_by(|a, b| a.topic_id.cmp(&b.topic_id));
    save_features_csv(&out, &manifest, &rows)?;
    println!(
        "extracted {} features for {} queries -> {}",
        manifest.len(),
        rows.len(),
        out.display()
    );
    Ok(())
}

fn cascade_cmd(cmd: CascadeCmd) -> Result<()> {
    match cmd {
        CascadeCmd::Train {
            labels,
            features,
            manifest,
            grid,
            knob,
            out,
            multilabel,
            trees,
            max_depth,
            min_leaf,
            seed,
            default_t,
        } => {
            let manifest = load_manifest(&manifest)?;
            let labels = read_labels_csv(&labels)?;
            let vectors = read_features_csv(&features, &manifest)?;
            let knob: Knob = knob.parse()?;
            let grid = CutoffGrid::new(knob, grid)?;
            let mut rows = Vec::new();
            let mut y = Vec::new();
            let mut skipped = 0usize;
            for v in &vectors {
                let Some(&class) = labels.get(&v.topic_id) else {
                    skipped += 1;
                    continue;
                };
                rows.push(v.values.clone());
                y.push(class);
            }
            if skipped > 0 {
                log::warn!("{skipped} feature rows had no label; skipped");
            }
            if rows.is_empty() {
                bail!("no labeled feature rows");
            }
            let params = ForestParams {
                trees,
                max_depth,
                min_leaf,
                seed,
            };
            if multilabel {
                let model =
                    cascade::train_multiclass(&rows, &y, &grid, &params, manifest.sha256())?;
                cascade::save_multiclass(&out, &model)?;
                println!(
                    "trained multiclass forest on {} instances -> {}",
                    rows.len(),
                    out.display()
                );
            } else {
                let model = cascade::train_cascade(
                    &rows,
                    &y,
                    &grid,
                    &params,
                    default_t,
                    manifest.sha256(),
                )?;
                cascade::save_cascade(&out, &model)?;
                println!(
                    "trained {}-stage cascade on {} instances -> {}",
                    model.stages.len(),
                    rows.len(),
                    out.display()
                );
            }
            Ok(())
        }
        CascadeCmd::Predict {
            model,
            features,
            manifest,
            t,
            out,
        } => {
            let manifest = load_manifest(&manifest)?;
            let vectors = read_features_csv(&features, &manifest)?;
            let mut body = String::from("topic,class,cutoff_value\n");
            match cascade::load_cascade(&model) {
                Ok(model) => {
                    if model.manifest_sha != manifest.sha256() {
                        bail!("model was trained on a different feature manifest");
                    }
                    let t = t.unwrap_or(model.default_t);
                    for v in &vectors {
                        let class = model.predict_class(&v.values, t)?;
                        body.push_str(&format!(
                            "{},{},{}\n",
                            v.topic_id,
                            class,
                            model.grid.cutoff_of_class(class)
                        ));
                    }
                }
                Err(_) => {
                    let model = cascade::load_multiclass(&model)?;
                    if model.manifest_sha != manifest.sha256() {
                        bail!("model was trained on a different feature manifest");
                    }
                    for v in &vectors {
                        let class = model.predict_class(&v.values)?;
                        body.push_str(&format!(
                            "{},{},{}\n",
                            v.topic_id,
                            class,
                            model.grid.cutoff_of_class(class)
                        ));
                    }
                }
            }
            match &out {
                Some(path) => std::fs::write(path, body)?,
                None => print!("{body}"),
            }
            Ok(())
        }
    }
}

fn exp_cmd(cmd: ExpCmd) -> Result<()> {
    match cmd {
        ExpCmd::Run { config } => {
            let cfg = harness::load_config(&config)?;
            let outcome = harness::run_experiment(&cfg)?;
            println!("experiment '{}' -> {}", cfg.name, outcome.out_dir.display());
            for g in &outcome.gains {
                println!(
                    "  {:<20} mean_med={:.4} mean_cutoff={:>10.1} diff_cutoff={:+.1}% diff_med={:+.1}%",
                    g.method,
                    g.predicted_med,
                    g.predicted_cutoff,
                    g.cutoff_diff_pct,
                    g.med_diff_pct
                );
            }
            for v in &outcome.validation {
                println!(
                    "  judged {:<16} ndcg10={:.3} err={:.3} mean_cutoff={:.1}",
                    v.method, v.ndcg10, v.err, v.mean_cutoff
                );
            }
            Ok(())
        }
        ExpCmd::Report { dir } => {
            let outcome = harness::report_from_dir(&dir)?;
            for g in &outcome.gains {
                println!(
                    "{:<20} mean_med={:.4} mean_cutoff={:>10.1} diff_cutoff={:+.1}% diff_med={:+.1}%",
                    g.method,
                    g.predicted_med,
                    g.predicted_cutoff,
                    g.cutoff_diff_pct,
                    g.med_diff_pct
                );
            }
            Ok(())
        }
    }
}

fn synth_cmd(args: SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        docs: args.docs,
        queries: args.queries,
        seed: args.seed,
    };
    let (corpus_path, queries_path) = write_tsv(&spec, &args.out)?;
    println!(
        "wrote {} docs to {} and {} queries to {}",
        spec.docs,
        corpus_path.display(),
        spec.queries,
        queries_path.display()
    );
    Ok(())
}
