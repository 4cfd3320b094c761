//! Acceptance suite: one test per criterion, each printing a `criterion N:
//! PASS` line (visible with `-- --nocapture`). Reference values come from
//! the independent brute-force oracles in [`oracle`], never from the code
//! under test.

use dyncut::analyze::AnalyzerConfig;
use dyncut::cascade::cascade_decision;
use dyncut::features::{extract_features, FeatureManifest};
use dyncut::forest::ForestParams;
use dyncut::harness::{
    cutoff_at_med, fixed_curve, gain_pct, med_at_cutoff, run_experiment, ExperimentConfig,
    MetricConfig, SaatConfig, TradeoffCurve,
};
use dyncut::index::{
    build_impact_index, build_index, ok_records, precompute_term_stats, save_index, ImpactIndex,
    IndexBundle, PostingsIndex, TermStatsStore,
};
use dyncut::labeling::{assign_labels, CutoffGrid, Knob, MedTable};
use dyncut::med::{med_dcg, med_err, med_rbp, MedMetric};
use dyncut::retrieval::{
    append_to_run, exhaustive_topk, read_queries, saat_rho, total_query_postings, wand_topk, Query,
};
use dyncut::run::RankedRun;
use dyncut::synth::{self, SynthSpec};
use dyncut::{Measure, SimilarityParams};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

/// Exhaustive reference implementations, independent of the library's
/// closed forms and branch-and-bound.
mod oracle {
    use std::collections::BTreeSet;

    fn union<'a>(a: &'a [String], b: &'a [String]) -> Vec<&'a str> {
        let set: BTreeSet<&str> = a
            .iter()
            .map(|s| s.as_str())
            .chain(b.iter().map(|s| s.as_str()))
            .collect();
        set.into_iter().collect()
    }

    fn weighted(list: &[String], weight: impl Fn(usize) -> f64, rel: impl Fn(&str) -> bool) -> f64 {
        list.iter()
            .enumerate()
            .filter(|(_, d)| rel(d))
            .map(|(i, _)| weight(i))
            .sum()
    }

    /// Maximum |metric(A) - metric(B)| over every binary relevance
    /// assignment, for a metric linear in per-document relevance.
    pub fn med_linear(
        gold: &[String],
        cand: &[String],
        weight: impl Fn(usize) -> f64 + Copy,
    ) -> f64 {
        let docs = union(gold, cand);
        assert!(docs.len() <= 20);
        let mut best = 0.0f64;
        for mask in 0u32..(1 << docs.len()) {
            let rel = |d: &str| {
                let idx = docs.iter().position(|x| *x == d).unwrap();
                (mask >> idx) & 1 == 1
            };
            let diff = (weighted(gold, weight, rel) - weighted(cand, weight, rel)).abs();
            best = best.max(diff);
        }
        best
    }

    pub fn err_of(
        list: &[String],
        grades: &dyn Fn(&str) -> u32,
        depth: usize,
        max_grade: u32,
    ) -> f64 {
        let mut err = 0.0;
        let mut cont = 1.0;
        for (i, d) in list.iter().take(depth).enumerate() {
            let r = ((1u64 << grades(d)) - 1) as f64 / (1u64 << max_grade) as f64;
            err += cont * r / (i + 1) as f64;
            cont *= 1.0 - r;
        }
        err
    }

    /// Maximum |ERR(A) - ERR(B)| by enumerating every grade assignment.
    pub fn med_err(gold: &[String], cand: &[String], depth: usize, max_grade: u32) -> f64 {
        let docs = union(gold, cand);
        let levels = max_grade as u64 + 1;
        let combos = levels.pow(docs.len() as u32);
        assert!(combos <= 1 << 22);
        let mut best = 0.0f64;
        for combo in 0..combos {
            let mut c = combo;
            let mut assignment = std::collections::HashMap::new();
            for d in &docs {
                assignment.insert(*d, (c % levels) as u32);
                c /= levels;
            }
            let grades = |d: &str| assignment.get(d).copied().unwrap_or(0);
            let diff = (err_of(gold, &grades, depth, max_grade)
                - err_of(cand, &grades, depth, max_grade))
            .abs();
            best = best.max(diff);
        }
        best
    }
}

fn random_lists(rng: &mut ChaCha12Rng, pool: usize, max_len: usize) -> (Vec<String>, Vec<String>) {
    let docs: Vec<String> = (0..pool).map(|i| format!("d{i:02}")).collect();
    let mut gold = docs.clone();
    gold.shuffle(rng);
    gold.truncate(rng.random_range(0..=max_len));
    let mut cand = docs;
    cand.shuffle(rng);
    cand.truncate(rng.random_range(0..=max_len));
    (gold, cand)
}

#[test]
fn criterion_01_med_closed_forms_match_enumeration() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xC1);
    let p = 0.8f64;
    let depth = 20usize;
    for trial in 0..500 {
        // both lists drawn from a 12-document pool keeps |union| <= 12
        let (gold, cand) = random_lists(&mut rng, 12, 12);
        let rbp = med_rbp(&gold, &cand, p).unwrap();
        let rbp_ref = oracle::med_linear(&gold, &cand, |i| (1.0 - p) * p.powi(i as i32));
        assert!(
            (rbp - rbp_ref).abs() < 1e-9,
            "trial {trial}: rbp {rbp} vs {rbp_ref}"
        );
        let dcg = med_dcg(&gold, &cand, depth).unwrap();
        let gold_d: Vec<String> = gold.iter().take(depth).cloned().collect();
        let cand_d: Vec<String> = cand.iter().take(depth).cloned().collect();
        let dcg_ref = oracle::med_linear(&gold_d, &cand_d, |i| 1.0 / ((i + 2) as f64).log2());
        assert!(
            (dcg - dcg_ref).abs() < 1e-9,
            "trial {trial}: dcg {dcg} vs {dcg_ref}"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}");
    println!(
        "criterion 1: PASS - med_rbp/med_dcg equal 2^|union| enumeration on 500 pairs ({elapsed:?})"
    );
}

#[test]
fn criterion_02_med_err_search_matches_enumeration() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xC2);
    for trial in 0..200 {
        let (gold, cand) = random_lists(&mut rng, 15, 15);
        let got = med_err(&gold, &cand, 20, 1).unwrap();
        let want = oracle::med_err(&gold, &cand, 20, 1);
        assert!((got - want).abs() < 1e-12, "trial {trial}: {got} vs {want}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 300, "took {elapsed:?}");
    println!(
        "criterion 2: PASS - med_err branch-and-bound equals brute force on 200 pairs ({elapsed:?})"
    );
}

#[test]
fn criterion_03_rbp_truncation_identity() {
    let p = 0.8f64;
    // long enough that the gold list's own tail mass is far below 1e-9
    let gold: Vec<String> = (0..200).map(|i| format!("d{i:03}")).collect();
    for k in 1..=10usize {
        let prefix: Vec<String> = gold.iter().take(k).cloned().collect();
        let value = med_rbp(&gold, &prefix, p).unwrap();
        assert!(
            (value - p.powi(k as i32)).abs() < 1e-9,
            "k={k}: {value} vs {}",
            p.powi(k as i32)
        );
    }
    println!("criterion 3: PASS - med_rbp(gold, prefix_k) = 0.8^k exactly for k in 1..=10");
}

fn random_micro_corpus(rng: &mut ChaCha12Rng) -> PostingsIndex {
    let n_docs = rng.random_range(5..=200);
    let vocab = rng.random_range(10..=60);
    let records: Vec<(String, String)> = (0..n_docs)
        .map(|d| {
            let len = rng.random_range(3..=30);
            let text: Vec<String> = (0..len)
                .map(|_| format!("t{:02}", rng.random_range(0..vocab)))
                .collect();
            (format!("x{d:03}"), text.join(" "))
        })
        .collect();
    build_index(
        ok_records(records),
        AnalyzerConfig {
            stopwords: false,
            stemming: false,
        },
    )
    .unwrap()
}

#[test]
fn criterion_04_wand_is_safe_to_k() {
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xC4);
    let params = SimilarityParams::default();
    let mut strictly_cheaper = 0usize;
    for trial in 0..1000 {
        let index = random_micro_corpus(&mut rng);
        let stats = precompute_term_stats(&index, &params);
        let n_terms = rng.random_range(1..=5);
        let terms: Vec<String> = (0..n_terms)
            .map(|_| format!("t{:02}", rng.random_range(0..70)))
            .collect();
        let query = Query::new("q", terms);
        let k = rng.random_range(1..=20);
        let measure = [Measure::Bm25, Measure::Lm, Measure::Tfidf][trial % 3];

        let (exhaustive, ex_stats) = exhaustive_topk(&index, &query, k, measure, &params);
        let (wand, wd_stats) = wand_topk(&index, &stats, &query, k, measure, &params);

        assert_eq!(exhaustive.len(), wand.len(), "trial {trial}");
        for (a, b) in exhaustive.iter().zip(&wand) {
            assert_eq!(a.doc, b.doc, "trial {trial} ({measure}, k={k})");
            assert_eq!(a.score.to_bits(), b.score.to_bits(), "trial {trial}");
        }
        assert!(
            wd_stats.postings_scored <= ex_stats.postings_scored,
            "trial {trial}: wand scored more postings than exhaustive"
        );
        if wd_stats.postings_scored < ex_stats.postings_scored {
            strictly_cheaper += 1;
        }
    }
    let elapsed = start.elapsed();
    println!(
        "criterion 4: PASS - wand list-identical to exhaustive on 1000 instances; \
         postings counter <= exhaustive on 100% (strictly cheaper on {strictly_cheaper}) ({elapsed:?})"
    );
}

// --- shared desk-scale corpus -----------------------------------------------

struct Desk {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    index_dir: PathBuf,
    queries_path: PathBuf,
    gold_path: PathBuf,
    index: PostingsIndex,
    stats: TermStatsStore,
    impact: ImpactIndex,
    queries: Vec<Query>,
}

const DESK_GRID: [u64; 9] = [100, 200, 500, 1000, 2000, 5000, 10000, 20000, 50000];
const DESK_DEPTH: usize = 1000;

fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| {
        let spec = SynthSpec {
            docs: 5000,
            queries: 2200,
            seed: 42,
        };
        let dir = tempfile::TempDir::new().unwrap();
        let (corpus_path, queries_path) = synth::write_tsv(&spec, dir.path()).unwrap();
        let records = dyncut::index::read_corpus_tsv(&corpus_path).unwrap();
        let index = build_index(ok_records(records), AnalyzerConfig::default()).unwrap();
        let params = SimilarityParams::default();
        let stats = precompute_term_stats(&index, &params);
        let impact = build_impact_index(&index, &params, Measure::Bm25, 8).unwrap();

        let index_dir = dir.path().join("idx");
        save_index(
            &index_dir,
            &IndexBundle {
                index: index.clone(),
                stats: Some(stats.clone()),
                impact: Some(impact.clone()),
            },
        )
        .unwrap();

        let queries = read_queries(&queries_path, &index).unwrap();
        // the pluggable gold run: exhaustive quantized evaluation
        let mut gold = RankedRun::new("gold_quantized");
        for q in &queries {
            let (docs, _) = saat_rho(&impact, &index, q, u64::MAX, DESK_DEPTH);
            if !docs.is_empty() {
                append_to_run(&mut gold, &index, &q.topic_id, &docs);
            }
        }
        let gold_path = dir.path().join("gold.run");
        gold.save(&gold_path).unwrap();

        Desk {
            dir,
            index_dir,
            queries_path,
            gold_path,
            index,
            stats,
            impact,
            queries,
        }
    })
}

#[test]
fn criterion_05_saat_full_budget_equals_exhaustive_quantized() {
    let start = Instant::now();
    let desk = desk();
    let mut checked = 0usize;
    for q in &desk.queries {
        let total = total_query_postings(&desk.index, q);
        let (budgeted, stats) = saat_rho(&desk.impact, &desk.index, q, total, DESK_DEPTH);
        assert_eq!(stats.postings_scored, total);

        // independent accumulation straight off the impact segments
        let mut acc: HashMap<u32, u64> = HashMap::new();
        for term in &q.terms {
            if let Some(segments) = desk.impact.term(term) {
                for seg in segments {
                    for &doc in &seg.docs {
                        *acc.entry(doc).or_insert(0) += seg.impact as u64;
                    }
                }
            }
        }
        let mut expected: Vec<(u32, u64)> = acc.into_iter().collect();
        expected.sort_by(|a, b| {
            b.1.cmp(&a.1)
                .then_with(|| desk.index.tie_rank(a.0).cmp(&desk.index.tie_rank(b.0)))
        });
        expected.truncate(DESK_DEPTH);

        let got: Vec<(u32, u64)> = budgeted.iter().map(|d| (d.doc, d.score as u64)).collect();
        assert_eq!(got, expected, "topic {}", q.topic_id);

        let gold_ids: Vec<String> = expected
            .iter()
            .map(|(d, _)| desk.index.external_id(*d).to_string())
            .collect();
        let cand_ids: Vec<String> = budgeted
            .iter()
            .map(|d| desk.index.external_id(d.doc).to_string())
            .collect();
        let med = med_rbp(&gold_ids, &cand_ids, 0.8).unwrap();
        assert_eq!(med, 0.0, "topic {}", q.topic_id);
        checked += 1;
    }
    assert!(checked >= 2000, "only {checked} desk queries");
    let elapsed = start.elapsed();
    println!(
        "criterion 5: PASS - med_rbp = 0 at rho = total postings for all {checked} desk queries ({elapsed:?})"
    );
}

#[test]
fn criterion_06_published_med_rows_label_exactly() {
    let grid = CutoffGrid::new(
        Knob::K,
        vec![20, 50, 100, 200, 500, 1000, 2000, 5000, 10000],
    )
    .unwrap();
    let mut table = MedTable::new(MedMetric::Rbp { p: 0.8 }, grid);
    let rows: [(&str, [f64; 9]); 4] = [
        (
            "20001",
            [
                0.544, 0.346, 0.104, 0.056, 0.010, 0.002, 0.001, 0.000, 0.000,
            ],
        ),
        (
            "20002",
            [
                0.536, 0.142, 0.053, 0.016, 0.002, 0.000, 0.000, 0.000, 0.000,
            ],
        ),
        (
            "20003",
            [
                0.865, 0.856, 0.810, 0.773, 0.706, 0.684, 0.582, 0.122, 0.000,
            ],
        ),
        (
            "20004",
            [
                0.999, 0.944, 0.132, 0.070, 0.018, 0.008, 0.008, 0.000, 0.000,
            ],
        ),
    ];
    for (topic, row) in rows {
        table.insert_row(topic, row.to_vec()).unwrap();
    }
    let labels = assign_labels(&table, 0.05).unwrap();
    assert_eq!(labels["20001"], 5);
    assert_eq!(labels["20002"], 4);
    assert_eq!(labels["20003"], 9);
    assert_eq!(labels["20004"], 5);
    println!("criterion 6: PASS - injected MED rows label to classes (5, 4, 9, 5) at eps = 0.05");
}

#[test]
fn criterion_07_oracle_probability_cascade_round_trip() {
    let c = 9u32;
    let mut rng = ChaCha12Rng::seed_from_u64(0xC7);
    for trial in 0..10_000 {
        let label = rng.random_range(1..=c);
        // a perfect stage classifier: certain 0 iff the label is within reach
        let probs = (1..c).map(|stage| if label <= stage { 1.0 } else { 0.0 });
        let predicted = cascade_decision(probs, 0.5, c);
        assert_eq!(predicted, label, "trial {trial}");
    }
    println!("criterion 7: PASS - oracle-probability cascade recovers all 10000 labels at t = 0.5");
}

#[test]
fn criterion_08_cascade_prediction_monotone_in_t() {
    let start = Instant::now();
    // a real trained model over noisy data, probed on random vectors
    let mut rng = ChaCha12Rng::seed_from_u64(0xC8);
    let n_features = 8usize;
    let rows: Vec<Vec<f64>> = (0..400)
        .map(|_| {
            (0..n_features)
                .map(|_| rng.random_range(0.0..1.0))
                .collect()
        })
        .collect();
    let labels: Vec<u32> = rows
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum::<f64>() / n_features as f64 + rng.random_range(-0.1..0.1);
            (1.0 + (s * 5.0).clamp(0.0, 4.0)).floor() as u32
        })
        .collect();
    let grid = CutoffGrid::new(Knob::K, vec![10, 20, 50, 100, 200]).unwrap();
    let model = dyncut::cascade::train_cascade(
        &rows,
        &labels,
        &grid,
        &ForestParams {
            trees: 30,
            seed: 0xC8,
            ..Default::default()
        },
        0.8,
        [0u8; 32],
    )
    .unwrap();

    let mut violations = 0usize;
    for _ in 0..1000 {
        let x: Vec<f64> = (0..n_features)
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let mut prev = 0u32;
        for i in 0..100 {
            let t = i as f64 / 100.0;
            let class = model.predict_class(&x, t).unwrap();
            if class < prev {
                violations += 1;
            }
            prev = class;
        }
    }
    assert_eq!(violations, 0);
    let elapsed = start.elapsed();
    println!(
        "criterion 8: PASS - zero monotonicity violations over 1000 vectors x 100 thresholds ({elapsed:?})"
    );
}

#[test]
fn criterion_09_gain_report_reproduces_published_oracle_row() {
    // two-point tradeoff horizon through the published interpolated values
    let curve = TradeoffCurve {
        points: vec![(1688.0, 0.067), (5459.0, 0.029)],
    };

    let fixed_k = cutoff_at_med(&curve, 0.029);
    assert!(!fixed_k.clamped);
    let k_pct = gain_pct(fixed_k.value, 1688.0);
    assert!(
        (k_pct - 223.0).abs() <= 2.0,
        "cutoff-direction gain {k_pct:.2}% should be +223%"
    );

    let fixed_med = med_at_cutoff(&curve, 1688.0);
    assert!(!fixed_med.clamped);
    let med_pct = gain_pct(fixed_med.value, 0.029);
    // the exact formula on the published 3-decimal inputs gives
    // (0.067 - 0.029) / 0.029 = +131.03%; the published row prints +128%,
    // computed before display rounding, so the reproduction check allows
    // the rounding gap
    assert!(
        (med_pct - 131.034).abs() <= 0.1,
        "effectiveness-direction gain {med_pct:.3}% should be +131.03% exactly"
    );
    assert!(
        (med_pct - 128.0).abs() <= 3.1,
        "effectiveness-direction gain {med_pct:.2}% vs published +128% beyond rounding allowance"
    );
    println!(
        "criterion 9: PASS - gain formula gives {k_pct:.1}% (+223% published) and {med_pct:.1}% (+128% published, +131.0% from displayed inputs)"
    );
}

fn desk_config(out_dir: PathBuf) -> ExperimentConfig {
    let desk = desk();
    ExperimentConfig {
        name: "desk_rho".into(),
        seed: 42,
        folds: 10,
        knob: Knob::Rho,
        epsilon: 0.05,
        t_grid: vec![0.75, 0.80, 0.85],
        grid: DESK_GRID.to_vec(),
        measure: Measure::Bm25,
        index_dir: desk.index_dir.clone(),
        queries: desk.queries_path.clone(),
        gold_run: desk.gold_path.clone(),
        out_dir,
        qrels: None,
        metric: MetricConfig {
            kind: "rbp".into(),
            p: 0.8,
            depth: 20,
            max_grade: 1,
        },
        forest: ForestParams {
            trees: 80,
            max_depth: 0,
            min_leaf: 1,
            seed: 7,
        },
        similarity: SimilarityParams::default(),
        saat: SaatConfig {
            bits: 8,
            depth: DESK_DEPTH,
        },
    }
}

#[test]
fn criterion_10_desk_experiment_beats_fixed_cutoffs() {
    let start = Instant::now();
    let desk = desk();
    assert!(desk.index.doc_count() >= 5000);
    assert!(desk.queries.len() >= 2000, "{} queries", desk.queries.len());

    let out = tempfile::TempDir::new().unwrap();
    let cfg = desk_config(out.path().to_path_buf());
    let outcome = run_experiment(&cfg).unwrap();

    for name in [
        "medtable.csv",
        "labels.csv",
        "features.csv",
        "feature_manifest.tsv",
        "predictions.csv",
        "tradeoff_curve.csv",
        "gains.csv",
        "under_target.csv",
        "run_meta.toml",
    ] {
        assert!(out.path().join(name).exists(), "missing artifact {name}");
    }

    let oracle = outcome.gain("oracle").unwrap().clone();
    assert!(oracle.cutoff_diff_pct > 0.0);
    // every cross-validated topic predicted exactly once
    let mut seen = std::collections::BTreeSet::new();
    for p in &outcome.predictions {
        assert!(
            seen.insert(p.topic.clone()),
            "topic {} predicted twice",
            p.topic
        );
    }

    let mut winner = None;
    for &t in &cfg.t_grid {
        let g = outcome.gain(&format!("lr_cascade_t{t:.2}")).unwrap();
        println!(
            "    lr_cascade t={t:.2}: mean_med={:.4} mean_rho={:.0} vs fixed {:.0} ({:+.1}%), oracle mean_rho={:.0}",
            g.predicted_med,
            g.predicted_cutoff,
            g.fixed_cutoff_at_equal_med,
            g.cutoff_diff_pct,
            oracle.predicted_cutoff
        );
        if g.cutoff_diff_pct > 0.0 && g.predicted_cutoff > oracle.predicted_cutoff {
            winner = Some(t);
        }
    }
    assert!(
        winner.is_some(),
        "no threshold gave a positive cutoff difference above the oracle"
    );

    // conservatism check: the higher threshold never costs effectiveness
    let low = outcome.gain("lr_cascade_t0.75").unwrap().predicted_med;
    let high = outcome.gain("lr_cascade_t0.85").unwrap().predicted_med;
    assert!(high <= low, "mean MED rose with t: {high} vs {low}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 1800, "took {elapsed:?}");
    println!(
        "criterion 10: PASS - cascade at t={:.2} sits strictly between the oracle and the fixed horizon ({elapsed:?})",
        winner.unwrap()
    );
}

#[test]
fn criterion_11_reports_are_byte_identical_across_runs() {
    let start = Instant::now();
    // a self-contained smaller experiment, run twice with one config
    let dir = tempfile::TempDir::new().unwrap();
    let spec = SynthSpec {
        docs: 1500,
        queries: 500,
        seed: 9,
    };
    let (corpus_path, queries_path) = synth::write_tsv(&spec, dir.path()).unwrap();
    let records = dyncut::index::read_corpus_tsv(&corpus_path).unwrap();
    let index = build_index(ok_records(records), AnalyzerConfig::default()).unwrap();
    let params = SimilarityParams::default();
    let stats = precompute_term_stats(&index, &params);
    let impact = build_impact_index(&index, &params, Measure::Bm25, 8).unwrap();
    let queries = read_queries(&queries_path, &index).unwrap();
    let mut gold = RankedRun::new("gold_quantized");
    for q in &queries {
        let (docs, _) = saat_rho(&impact, &index, q, u64::MAX, 500);
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
            impact: Some(impact),
        },
    )
    .unwrap();

    let out_dir = dir.path().join("out");
    let cfg = ExperimentConfig {
        name: "determinism".into(),
        seed: 5,
        folds: 5,
        knob: Knob::Rho,
        epsilon: 0.05,
        t_grid: vec![0.75, 0.85],
        grid: vec![50, 100, 200, 500, 1000, 2000, 5000],
        measure: Measure::Bm25,
        index_dir,
        queries: queries_path,
        gold_run: gold_path,
        out_dir: out_dir.clone(),
        qrels: None,
        metric: MetricConfig {
            kind: "rbp".into(),
            p: 0.8,
            depth: 20,
            max_grade: 1,
        },
        forest: ForestParams {
            trees: 30,
            max_depth: 0,
            min_leaf: 1,
            seed: 11,
        },
        similarity: SimilarityParams::default(),
        saat: SaatConfig {
            bits: 8,
            depth: 500,
        },
    };

    let files = [
        "medtable.csv",
        "labels.csv",
        "features.csv",
        "predictions.csv",
        "tradeoff_curve.csv",
        "gains.csv",
        "under_target.csv",
    ];
    run_experiment(&cfg).unwrap();
    let first: Vec<Vec<u8>> = files
        .iter()
        .map(|f| std::fs::read(out_dir.join(f)).unwrap())
        .collect();
    run_experiment(&cfg).unwrap();
    for (f, before) in files.iter().zip(&first) {
        let after = std::fs::read(out_dir.join(f)).unwrap();
        assert_eq!(&after, before, "{f} changed between identical runs");
    }
    let elapsed = start.elapsed();
    println!(
        "criterion 11: PASS - {} report files byte-identical across two runs ({elapsed:?})",
        files.len()
    );
}

// supporting check: the fixed-curve means recompute exactly from the
// persisted MED table, and feature vectors keep manifest length everywhere
#[test]
fn fixed_curve_recomputes_from_persisted_table() {
    let desk = desk();
    let out = tempfile::TempDir::new().unwrap();
    let mut cfg = desk_config(out.path().to_path_buf());
    // keep this support check light
    cfg.forest.trees = 10;
    let outcome = run_experiment(&cfg).unwrap();

    let table = MedTable::read_csv(
        &out.path().join("medtable.csv"),
        Knob::Rho,
        MedMetric::Rbp { p: 0.8 },
    )
    .unwrap();
    let cv_topics: std::collections::BTreeSet<String> = outcome
        .predictions
        .iter()
        .map(|p| p.topic.clone())
        .collect();
    let curve = fixed_curve(&table.filtered(&cv_topics)).unwrap();
    assert_eq!(curve.points.len(), outcome.curve.points.len());
    for ((k1, m1), (k2, m2)) in curve.points.iter().zip(&outcome.curve.points) {
        assert_eq!(k1, k2);
        // medtable.csv stores 6 decimals; recomputed means agree to that
        assert!((m1 - m2).abs() < 1e-5, "{m1} vs {m2}");
    }

    let manifest = FeatureManifest::default_v1();
    for q in desk.queries.iter().take(50) {
        let v = extract_features(&q.terms, &desk.stats, &manifest);
        assert_eq!(v.len(), manifest.len());
    }
}
