//! End-to-end pipeline behaviors that cross module boundaries: index
//! persistence, degenerate experiment configurations, judged validation,
//! and report recomputation.

use dyncut::analyze::AnalyzerConfig;
use dyncut::forest::ForestParams;
use dyncut::harness::{self, ExperimentConfig, MetricConfig, SaatConfig};
use dyncut::index::{
    build_impact_index, build_index, load_index, ok_records, precompute_term_stats, save_index,
    IndexBundle,
};
use dyncut::labeling::Knob;
use dyncut::retrieval::{append_to_run, read_queries, wand_topk};
use dyncut::run::RankedRun;
use dyncut::synth::{self, SynthSpec};
use dyncut::{Measure, SimilarityParams};
use std::path::{Path, PathBuf};

fn write_corpus(dir: &Path, docs: usize, queries: usize, seed: u64) -> (PathBuf, PathBuf) {
    synth::write_tsv(
        &SynthSpec {
            docs,
            queries,
            seed,
        },
        dir,
    )
    .unwrap()
}

#[test]
fn index_round_trips_and_rebuilds_bit_identically() {
    let dir = tempfile::TempDir::new().unwrap();
    let (corpus_path, queries_path) = write_corpus(dir.path(), 300, 40, 3);
    let records = dyncut::index::read_corpus_tsv(&corpus_path).unwrap();
    let params = SimilarityParams::default();
    let index = build_index(ok_records(records.clone()), AnalyzerConfig::default()).unwrap();
    let stats = precompute_term_stats(&index, &params);
    let impact = build_impact_index(&index, &params, Measure::Bm25, 8).unwrap();
    let bundle = IndexBundle {
        index,
        stats: Some(stats),
        impact: Some(impact),
    };

    let idx_a = dir.path().join("a");
    let idx_b = dir.path().join("b");
    save_index(&idx_a, &bundle).unwrap();

    // rebuilding from the same corpus and config is byte-identical on disk
    let rebuilt = build_index(ok_records(records), AnalyzerConfig::default()).unwrap();
    let bundle_b = IndexBundle {
        stats: Some(precompute_term_stats(&rebuilt, &params)),
        impact: Some(build_impact_index(&rebuilt, &params, Measure::Bm25, 8).unwrap()),
        index: rebuilt,
    };
    save_index(&idx_b, &bundle_b).unwrap();
    for name in [
        "index.manifest",
        "docs.bin",
        "postings.bin",
        "stats.bin",
        "impact.bin",
    ] {
        let a = std::fs::read(idx_a.join(name)).unwrap();
        let b = std::fs::read(idx_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical builds");
    }

    // a loaded index answers queries exactly like the in-memory one
    let loaded = load_index(&idx_a).unwrap();
    let queries = read_queries(&queries_path, &loaded.index).unwrap();
    let loaded_stats = loaded.stats.as_ref().unwrap();
    for q in queries.iter().take(10) {
        let (mem, _) = wand_topk(
            &bundle.index,
            bundle.stats.as_ref().unwrap(),
            q,
            20,
            Measure::Bm25,
            &params,
        );
        let (disk, _) = wand_topk(&loaded.index, loaded_stats, q, 20, Measure::Bm25, &params);
        assert_eq!(mem.len(), disk.len());
        for (a, b) in mem.iter().zip(&disk) {
            assert_eq!(
                bundle.index.external_id(a.doc),
                loaded.index.external_id(b.doc)
            );
            assert_eq!(a.score.to_bits(), b.score.to_bits());
        }
    }

    // tampering is caught by the manifest digests
    let postings = idx_a.join("postings.bin");
    let mut bytes = std::fs::read(&postings).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    std::fs::write(&postings, bytes).unwrap();
    assert!(load_index(&idx_a).is_err());
}

fn small_experiment_config(
    dir: &Path,
    knob: Knob,
    gold_run: PathBuf,
    queries: PathBuf,
    index_dir: PathBuf,
    qrels: Option<PathBuf>,
) -> ExperimentConfig {
    ExperimentConfig {
        name: "pipeline".into(),
        seed: 3,
        folds: 4,
        knob,
        epsilon: 0.05,
        t_grid: vec![0.75, 0.80, 0.85],
        grid: match knob {
            Knob::K => vec![20, 50, 100],
            Knob::Rho => vec![100, 500, 2000, 10000],
        },
        measure: Measure::Bm25,
        index_dir,
        queries,
        gold_run,
        out_dir: dir.join("out"),
        qrels,
        metric: MetricConfig {
            kind: "rbp".into(),
            p: 0.8,
            depth: 20,
            max_grade: 1,
        },
        forest: ForestParams {
            trees: 15,
            max_depth: 0,
            min_leaf: 1,
            seed: 2,
        },
        similarity: SimilarityParams::default(),
        saat: SaatConfig {
            bits: 8,
            depth: 300,
        },
    }
}

/// With the gold run generated by the candidate system itself and a grid
/// whose smallest cutoff already absorbs the truncation mass, every topic
/// labels class 1 and every method is trivially optimal.
#[test]
fn self_gold_degenerates_to_class_one() {
    let dir = tempfile::TempDir::new().unwrap();
    let (corpus_path, queries_path) = write_corpus(dir.path(), 400, 80, 17);
    let records = dyncut::index::read_corpus_tsv(&corpus_path).unwrap();
    let params = SimilarityParams::default();
    let index = build_index(ok_records(records), AnalyzerConfig::default()).unwrap();
    let stats = precompute_term_stats(&index, &params);

    let queries = read_queries(&queries_path, &index).unwrap();
    let mut gold = RankedRun::new("self");
    for q in &queries {
        let (docs, _) = wand_topk(&index, &stats, q, 100, Measure::Bm25, &params);
        if !docs.is_empty() {
            append_to_run(&mut gold, &index, &q.topic_id, &docs);
        }
    }
    let gold_path = dir.path().join("gold.run");
    gold.save(&gold_path).unwrap();
    let index_dir = dir.path().join("idx");
    save_index(
        &index_dir,
        &IndexBundle {
            index,
            stats: Some(stats),
            impact: None,
        },
    )
    .unwrap();

    let cfg = small_experiment_config(
        dir.path(),
        Knob::K,
        gold_path,
        queries_path,
        index_dir,
        None,
    );
    let outcome = harness::run_experiment(&cfg).unwrap();
    assert!(outcome.labels.values().all(|&c| c == 1));
    let oracle = outcome.gain("oracle").unwrap();
    assert_eq!(oracle.predicted_cutoff, 20.0);
    for t in ["lr_cascade_t0.75", "lr_cascade_t0.85", "multilabel"] {
        assert_eq!(outcome.gain(t).unwrap().predicted_cutoff, 20.0, "{t}");
    }
}

#[test]
fn judged_topics_are_held_out_and_validation_has_five_rows() {
    let dir = tempfile::TempDir::new().unwrap();
    let (corpus_path, queries_path) = write_corpus(dir.path(), 800, 150, 23);
    let records = dyncut::index::read_corpus_tsv(&corpus_path).unwrap();
    let params = SimilarityParams::default();
    let index = build_index(ok_records(records), AnalyzerConfig::default()).unwrap();
    let stats = precompute_term_stats(&index, &params);
    let impact = build_impact_index(&index, &params, Measure::Bm25, 8).unwrap();

    let queries = read_queries(&queries_path, &index).unwrap();
    let mut gold = RankedRun::new("gold");
    for q in &queries {
        let (docs, _) = dyncut::retrieval::saat_rho(&impact, &index, q, u64::MAX, 300);
        if !docs.is_empty() {
            append_to_run(&mut gold, &index, &q.topic_id, &docs);
        }
    }
    let gold_path = dir.path().join("gold.run");
    gold.save(&gold_path).unwrap();

    // judge a handful of topics: their top gold documents count as relevant
    let judged: Vec<&str> = gold.topic_ids().take(8).collect();
    let mut qrels = String::new();
    for topic in &judged {
        for doc in gold.doc_ids(topic, 5) {
            qrels.push_str(&format!("{topic} 0 {doc} 1\n"));
        }
    }
    let qrels_path = dir.path().join("qrels.txt");
    std::fs::write(&qrels_path, qrels).unwrap();

    let index_dir = dir.path().join("idx");
    save_index(
        &index_dir,
        &IndexBundle {
            index,
            stats: Some(stats),
            impact: Some(impact),
        },
    )
    .unwrap();

    let cfg = small_experiment_config(
        dir.path(),
        Knob::Rho,
        gold_path,
        queries_path,
        index_dir,
        Some(qrels_path),
    );
    let outcome = harness::run_experiment(&cfg).unwrap();

    // no judged topic may receive a cross-validated prediction
    for p in &outcome.predictions {
        assert!(
            !judged.contains(&p.topic.as_str()),
            "judged {} in folds",
            p.topic
        );
    }
    // oracle, three cascade thresholds, and the fixed-maximum baseline
    assert_eq!(outcome.validation.len(), 5);
    let methods: Vec<&str> = outcome
        .validation
        .iter()
        .map(|v| v.method.as_str())
        .collect();
    assert_eq!(
        methods,
        vec![
            "oracle",
            "lr_cascade_t0.75",
            "lr_cascade_t0.80",
            "lr_cascade_t0.85",
            "fixed_10000"
        ]
    );
    let fixed = outcome.validation.last().unwrap();
    assert_eq!(fixed.mean_cutoff, 10000.0);
    for v in &outcome.validation {
        assert!(v.mean_cutoff <= fixed.mean_cutoff);
        assert!((0.0..=1.0).contains(&v.ndcg10));
        assert!((0.0..=1.0).contains(&v.err));
    }
    assert!(outcome.out_dir.join("validation.csv").exists());

    // reports recompute from the persisted artifacts
    let recomputed = harness::report_from_dir(&outcome.out_dir).unwrap();
    for (a, b) in outcome.gains.iter().zip(&recomputed.gains) {
        assert_eq!(a.method, b.method);
        assert!((a.predicted_cutoff - b.predicted_cutoff).abs() < 1e-9);
        assert!((a.predicted_med - b.predicted_med).abs() < 1e-5);
    }
}

#[test]
fn config_validation_rejects_inconsistencies_before_compute() {
    let dir = tempfile::TempDir::new().unwrap();
    let base = small_experiment_config(
        dir.path(),
        Knob::K,
        dir.path().join("missing.run"),
        dir.path().join("missing.tsv"),
        dir.path().join("missing_idx"),
        None,
    );

    let mut bad = base.clone();
    bad.grid = vec![50, 20];
    assert!(bad.validate().is_err());

    let mut bad = base.clone();
    bad.epsilon = 0.0;
    assert!(bad.validate().is_err());

    let mut bad = base.clone();
    bad.t_grid = vec![1.0];
    assert!(bad.validate().is_err());

    let mut bad = base.clone();
    bad.metric.kind = "map".into();
    assert!(bad.validate().is_err());

    let mut bad = base.clone();
    bad.folds = 1;
    assert!(bad.validate().is_err());

    // a structurally valid config still fails cleanly on missing inputs
    assert!(base.validate().is_ok());
    assert!(harness::run_experiment(&base).is_err());
}
