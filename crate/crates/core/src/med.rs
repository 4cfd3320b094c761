//! Maximized effectiveness difference (MED) between two ranked lists.
//!
//! `MED(A, B)` under a metric is the largest absolute difference in that
//! metric's score over all relevance assignments consistent with the two
//! lists. It is a judgment-free, top-weighted rank distance: identical lists
//! score 0, and losing a top-ranked document costs more than losing a deep
//! one.
//!
//! RBP and DCG are linear in per-document relevance, so their MED has a
//! closed form over per-document weight differences. ERR's cascade model is
//! not separable; its MED is found by an exact branch-and-bound over grade
//! assignments.

use crate::error::{Error, Result};
use std::collections::HashMap;

/// MED variant plus its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MedMetric {
    Rbp { p: f64 },
    Dcg { depth: usize },
    Err { depth: usize, max_grade: u32 },
}

impl MedMetric {
    pub fn name(&self) -> &'static str {
        match self {
            MedMetric::Rbp { .. } => "med_rbp",
            MedMetric::Dcg { .. } => "med_dcg",
            MedMetric::Err { .. } => "med_err",
        }
    }

    pub fn compute<S: AsRef<str>>(&self, gold: &[S], cand: &[S]) -> Result<f64> {
        match *self {
            MedMetric::Rbp { p } => med_rbp(gold, cand, p),
            MedMetric::Dcg { depth } => med_dcg(gold, cand, depth),
            MedMetric::Err { depth, max_grade } => med_err(gold, cand, depth, max_grade),
        }
    }
}

impl std::fmt::Display for MedMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MedMetric::Rbp { p } => write!(f, "med_rbp(p={p})"),
            MedMetric::Dcg { depth } => write!(f, "med_dcg(depth={depth})"),
            MedMetric::Err { depth, max_grade } => {
                write!(f, "med_err(depth={depth},max_grade={max_grade})")
            }
        }
    }
}

/// A MED value for one (gold, candidate) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MedScore {
    pub topic_id: String,
    pub metric: MedMetric,
    pub value: f64,
}

fn check_duplicates<S: AsRef<str>>(list: &[S], which: &str) -> Result<()> {
    let mut seen = HashMap::with_capacity(list.len());
    for d in list {
        if seen.insert(d.as_ref(), ()).is_some() {
            return Err(Error::DuplicateInList {
                topic: which.to_string(),
                doc: d.as_ref().to_string(),
            });
        }
    }
    Ok(())
}

/// Closed-form MED for a metric that is a per-document weighted sum of
/// binary relevance: the maximizing assignment marks exactly the documents
/// whose weight difference has one sign, so the answer is the larger of the
/// positive and negative difference masses.
///
/// Sums run in rank order so the result is bit-reproducible.
fn med_linear(gold: &[(&str, f64)], cand: &[(&str, f64)]) -> f64 {
    let gold_w: HashMap<&str, f64> = gold.iter().copied().collect();
    let cand_w: HashMap<&str, f64> = cand.iter().copied().collect();
    let mut positive = 0.0;
    let mut negative = 0.0;
    for (doc, wg) in gold {
        let delta = wg - cand_w.get(doc).copied().unwrap_or(0.0);
        if delta > 0.0 {
            positive += delta;
        } else {
            negative -= delta;
        }
    }
    for (doc, wc) in cand {
        if !gold_w.contains_key(doc) {
            negative += wc;
        }
    }
    positive.max(negative)
}

fn rbp_weights<S: AsRef<str>>(list: &[S], p: f64) -> Vec<(&str, f64)> {
    list.iter()
        .enumerate()
        .map(|(i, d)| (d.as_ref(), (1.0 - p) * p.powi(i as i32)))
        .collect()
}

fn dcg_weights<S: AsRef<str>>(list: &[S], depth: usize) -> Vec<(&str, f64)> {
    list.iter()
        .take(depth)
        .enumerate()
        .map(|(i, d)| (d.as_ref(), 1.0 / ((i + 2) as f64).log2()))
        .collect()
}

/// MED under rank-biased precision with persistence `p`, binary relevance,
/// evaluated to unbounded depth.
pub fn med_rbp<S: AsRef<str>>(gold: &[S], cand: &[S], p: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 || p >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "rbp persistence must be in (0, 1): {p}"
        )));
    }
    check_duplicates(gold, "gold")?;
    check_duplicates(cand, "cand")?;
    Ok(med_linear(&rbp_weights(gold, p), &rbp_weights(cand, p)))
}

/// MED under DCG truncated at `depth`, binary gains, `1/log2(rank+1)`
/// weights.
pub fn med_dcg<S: AsRef<str>>(gold: &[S], cand: &[S], depth: usize) -> Result<f64> {
    if depth == 0 {
        return Err(Error::InvalidParameter("dcg depth must be >= 1".into()));
    }
    check_duplicates(gold, "gold")?;
    check_duplicates(cand, "cand")?;
    Ok(med_linear(
        &dcg_weights(gold, depth),
        &dcg_weights(cand, depth),
    ))
}

pub const DEFAULT_ERR_BUDGET: u64 = 20_000_000;

/// MED under ERR truncated at `depth`, maximizing over grade assignments
/// `0..=max_grade` with gain mapping `(2^g - 1) / 2^max_grade`, using the
/// default node budget.
pub fn med_err<S: AsRef<str>>(gold: &[S], cand: &[S], depth: usize, max_grade: u32) -> Result<f64> {
    med_err_budgeted(gold, cand, depth, max_grade, DEFAULT_ERR_BUDGET)
}

/// [`med_err`] with an explicit branch-and-bound node budget. Exceeding the
/// budget is an error carrying the best bound found, never a silent
/// approximation.
pub fn med_err_budgeted<S: AsRef<str>>(
    gold: &[S],
    cand: &[S],
    depth: usize,
    max_grade: u32,
    budget: u64,
) -> Result<f64> {
    if depth == 0 {
        return Err(Error::InvalidParameter("err depth must be >= 1".into()));
    }
    if max_grade == 0 {
        return Err(Error::InvalidParameter("max_grade must be >= 1".into()));
    }
    check_duplicates(gold, "gold")?;
    check_duplicates(cand, "cand")?;

    let problem = ErrProblem::new(gold, cand, depth, max_grade);
    let mut nodes = 0u64;
    let (forward, f_done) = problem.maximize(Direction::GoldMinusCand, budget, &mut nodes);
    let (backward, b_done) = problem.maximize(Direction::CandMinusGold, budget, &mut nodes);
    if f_done && b_done {
        Ok(forward.max(backward))
    } else {
        Err(Error::SearchBudgetExceeded {
            budget,
            best_bound: forward.max(backward),
        })
    }
}

#[derive(Clone, Copy)]
enum Direction {
    GoldMinusCand,
    CandMinusGold,
}

/// Search state for maximizing `ERR(first) - ERR(second)` over grade
/// assignments on the union of top-`depth` documents.
struct ErrProblem {
    /// Union-doc index per position of each truncated list.
    gold_pos: Vec<usize>,
    cand_pos: Vec<usize>,
    /// Union docs appearing in both truncated lists: only these need search.
    /// ERR is monotone in every grade, so a doc private to one list is
    /// always graded to that list's extreme.
    shared: Vec<usize>,
    n_union: usize,
    max_grade: u32,
    gains: Vec<f64>,
}

impl ErrProblem {
    fn new<S: AsRef<str>>(gold: &[S], cand: &[S], depth: usize, max_grade: u32) -> Self {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut gold_pos = Vec::new();
        for d in gold.iter().take(depth) {
            let next = ids.len();
            gold_pos.push(*ids.entry(d.as_ref()).or_insert(next));
        }
        let mut cand_pos = Vec::new();
        for d in cand.iter().take(depth) {
            let next = ids.len();
            cand_pos.push(*ids.entry(d.as_ref()).or_insert(next));
        }
        let n_union = ids.len();
        let in_gold: Vec<bool> = {
            let mut v = vec![false; n_union];
            for &i in &gold_pos {
                v[i] = true;
            }
            v
        };
        let mut shared = Vec::new();
        for &i in &cand_pos {
            if in_gold[i] {
                shared.push(i);
            }
        }
        // search the shared docs in gold-rank order: early ranks move ERR most
        shared.sort_by_key(|i| gold_pos.iter().position(|g| g == i));
        let gains = (0..=max_grade)
            .map(|g| ((1u64 << g) - 1) as f64 / (1u64 << max_grade) as f64)
            .collect();
        ErrProblem {
            gold_pos,
            cand_pos,
            shared,
            n_union,
            max_grade,
            gains,
        }
    }

    fn err_of(&self, list: &[usize], grades: &[u32]) -> f64 {
        let mut err = 0.0;
        let mut continue_p = 1.0;
        for (i, &doc) in list.iter().enumerate() {
            let r = self.gains[grades[doc] as usize];
            err += continue_p * r / (i + 1) as f64;
            continue_p *= 1.0 - r;
            if continue_p == 0.0 {
                break;
            }
        }
        err
    }

    /// Admissible upper bound for a partial assignment: grade the remaining
    /// docs to the first list's best and the second list's worst
    /// independently. Valid because ERR increases with every grade.
    fn bound(&self, first: &[usize], second: &[usize], grades: &mut [u32], assigned: usize) -> f64 {
        let free: Vec<usize> = self.shared[assigned..].to_vec();
        for &d in &free {
            grades[d] = self.max_grade;
        }
        let hi = self.err_of(first, grades);
        for &d in &free {
            grades[d] = 0;
        }
        let lo = self.err_of(second, grades);
        hi - lo
    }

    fn maximize(&self, dir: Direction, budget: u64, nodes: &mut u64) -> (f64, bool) {
        let (first, second): (&[usize], &[usize]) = match dir {
            Direction::GoldMinusCand => (&self.gold_pos, &self.cand_pos),
            Direction::CandMinusGold => (&self.cand_pos, &self.gold_pos),
        };
        let mut grades = vec![0u32; self.n_union];
        // docs private to `first` help only `first`: give them the top grade;
        // docs private to `second` get 0 (the initialization above)
        let mut in_second = vec![false; self.n_union];
        for &i in second {
            in_second[i] = true;
        }
        for &i in first {
            if !in_second[i] {
                grades[i] = self.max_grade;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let done = self.search(first, second, &mut grades, 0, &mut best, budget, nodes);
        (best.max(0.0), done)
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        first: &[usize],
        second: &[usize],
        grades: &mut [u32],
        assigned: usize,
        best: &mut f64,
        budget: u64,
        nodes: &mut u64,
    ) -> bool {
        *nodes += 1;
        if *nodes > budget {
            return false;
        }
        if assigned == self.shared.len() {
            let value = self.err_of(first, grades) - self.err_of(second, grades);
            if value > *best {
                *best = value;
            }
            return true;
        }
        if self.bound(first, second, grades, assigned) <= *best {
            return true;
        }
        let doc = self.shared[assigned];
        for g in (0..=self.max_grade).rev() {
            grades[doc] = g;
            if !self.search(first, second, grades, assigned + 1, best, budget, nodes) {
                return false;
            }
        }
        grades[doc] = 0;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identical_lists_are_zero() {
        let a = v(&["d1", "d2", "d3"]);
        assert_eq!(med_rbp(&a, &a, 0.8).unwrap(), 0.0);
        assert_eq!(med_dcg(&a, &a, 20).unwrap(), 0.0);
        assert_eq!(med_err(&a, &a, 20, 1).unwrap(), 0.0);
    }

    #[test]
    fn rbp_disjoint_singletons() {
        let value = med_rbp(&v(&["d1"]), &v(&["d2"]), 0.5).unwrap();
        assert!((value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dcg_swapped_pair() {
        let value = med_dcg(&v(&["d1", "d2"]), &v(&["d2", "d1"]), 2).unwrap();
        assert!((value - (1.0 - 1.0 / 3.0f64.log2())).abs() < 1e-12);
    }

    #[test]
    fn dcg_ignores_tails_beyond_depth() {
        let gold = v(&["a", "b", "c", "x"]);
        let cand = v(&["a", "b", "c", "y"]);
        assert_eq!(med_dcg(&gold, &cand, 3).unwrap(), 0.0);
    }

    #[test]
    fn err_gold_singleton_vs_empty() {
        let value = med_err(&v(&["d1"]), &v(&[]), 1, 1).unwrap();
        assert!((value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn med_is_symmetric() {
        let a = v(&["a", "b", "c"]);
        let b = v(&["c", "d"]);
        assert_eq!(med_rbp(&a, &b, 0.8).unwrap(), med_rbp(&b, &a, 0.8).unwrap());
        assert_eq!(med_dcg(&a, &b, 10).unwrap(), med_dcg(&b, &a, 10).unwrap());
        assert!((med_err(&a, &b, 10, 2).unwrap() - med_err(&b, &a, 10, 2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rbp_rejects_bad_persistence_and_duplicates() {
        let a = v(&["a"]);
        assert!(med_rbp(&a, &a, 1.0).is_err());
        assert!(med_rbp(&a, &a, 0.0).is_err());
        let dup = v(&["a", "a"]);
        assert!(matches!(
            med_rbp(&dup, &a, 0.5),
            Err(Error::DuplicateInList { .. })
        ));
    }

    #[test]
    fn rbp_prefix_truncation_residual() {
        // dropping everything after rank k leaves exactly the tail mass p^k
        let gold: Vec<String> = (0..120).map(|i| format!("d{i:03}")).collect();
        let p = 0.8f64;
        for k in 1..=10 {
            let prefix: Vec<String> = gold.iter().take(k).cloned().collect();
            let value = med_rbp(&gold, &prefix, p).unwrap();
            assert!(
                (value - p.powi(k as i32)).abs() < 1e-9,
                "k={k} value={value}"
            );
        }
    }

    #[test]
    fn err_budget_exhaustion_reports_error() {
        let gold: Vec<String> = (0..12).map(|i| format!("d{i}")).collect();
        let mut cand = gold.clone();
        cand.reverse();
        match med_err_budgeted(&gold, &cand, 20, 1, 10) {
            Err(Error::SearchBudgetExceeded { budget, .. }) => assert_eq!(budget, 10),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    // exhaustive reference implementations, independent of the closed forms
    // and the branch-and-bound above
    pub mod oracle {
        use std::collections::BTreeSet;

        fn union<'a>(gold: &'a [String], cand: &'a [String]) -> Vec<&'a str> {
            let set: BTreeSet<&str> = gold
                .iter()
                .map(|s| s.as_str())
                .chain(cand.iter().map(|s| s.as_str()))
                .collect();
            set.into_iter().collect()
        }

        fn weighted_sum(
            list: &[String],
            weights: impl Fn(usize) -> f64,
            rel: impl Fn(&str) -> f64,
        ) -> f64 {
            list.iter()
                .enumerate()
                .map(|(i, d)| rel(d) * weights(i))
                .sum()
        }

        pub fn med_linear_brute(
            gold: &[String],
            cand: &[String],
            weight: impl Fn(usize) -> f64 + Copy,
        ) -> f64 {
            let docs = union(gold, cand);
            assert!(docs.len() <= 20, "brute force limited to small unions");
            let mut best = 0.0f64;
            for mask in 0u32..(1 << docs.len()) {
                let rel = |d: &str| -> f64 {
                    let idx = docs.iter().position(|x| *x == d).unwrap();
                    ((mask >> idx) & 1) as f64
                };
                let diff =
                    (weighted_sum(gold, weight, rel) - weighted_sum(cand, weight, rel)).abs();
                best = best.max(diff);
            }
            best
        }

        pub fn err_brute(
            list: &[String],
            grades: &dyn Fn(&str) -> u32,
            depth: usize,
            max_grade: u32,
        ) -> f64 {
            let mut err = 0.0;
            let mut cont = 1.0;
            for (i, d) in list.iter().take(depth).enumerate() {
                let g = grades(d);
                let r = ((1u64 << g) - 1) as f64 / (1u64 << max_grade) as f64;
                err += cont * r / (i + 1) as f64;
                cont *= 1.0 - r;
            }
            err
        }

        pub fn med_err_brute(
            gold: &[String],
            cand: &[String],
            depth: usize,
            max_grade: u32,
        ) -> f64 {
            let docs = union(gold, cand);
            let levels = max_grade as u64 + 1;
            let combos = levels.pow(docs.len() as u32);
            assert!(combos <= 1 << 22, "brute force too large");
            let mut best = 0.0f64;
            for combo in 0..combos {
                let mut c = combo;
                let mut assignment = std::collections::HashMap::new();
                for d in &docs {
                    assignment.insert(*d, (c % levels) as u32);
                    c /= levels;
                }
                let grades = |d: &str| assignment.get(d).copied().unwrap_or(0);
                let diff = (err_brute(gold, &grades, depth, max_grade)
                    - err_brute(cand, &grades, depth, max_grade))
                .abs();
                best = best.max(diff);
            }
            best
        }
    }

    #[test]
    fn closed_forms_match_brute_force_on_random_lists() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..60 {
            let pool: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
            let mut gold = pool.clone();
            gold.shuffle(&mut rng);
            gold.truncate(rng.random_range(0..=6));
            let mut cand = pool.clone();
            cand.shuffle(&mut rng);
            cand.truncate(rng.random_range(0..=6));

            let p = 0.8;
            let rbp = med_rbp(&gold, &cand, p).unwrap();
            let rbp_ref = oracle::med_linear_brute(&gold, &cand, |i| (1.0 - p) * p.powi(i as i32));
            assert!((rbp - rbp_ref).abs() < 1e-9);

            let depth = 4;
            let dcg = med_dcg(&gold, &cand, depth).unwrap();
            let dcg_ref = oracle::med_linear_brute(
                &gold[..gold.len().min(depth)],
                &cand[..cand.len().min(depth)],
                |i| 1.0 / ((i + 2) as f64).log2(),
            );
            assert!((dcg - dcg_ref).abs() < 1e-9);

            let err = med_err(&gold, &cand, 10, 1).unwrap();
            let err_ref = oracle::med_err_brute(&gold, &cand, 10, 1);
            assert!((err - err_ref).abs() < 1e-12, "{err} vs {err_ref}");
        }
    }

    #[test]
    fn err_matches_brute_force_with_graded_relevance() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(29);
        for _ in 0..20 {
            let pool: Vec<String> = (0..7).map(|i| format!("d{i}")).collect();
            let mut gold = pool.clone();
            gold.shuffle(&mut rng);
            gold.truncate(rng.random_range(1..=5));
            let mut cand = pool.clone();
            cand.shuffle(&mut rng);
            cand.truncate(rng.random_range(1..=5));
            let got = med_err(&gold, &cand, 8, 3).unwrap();
            let want = oracle::med_err_brute(&gold, &cand, 8, 3);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }
}
