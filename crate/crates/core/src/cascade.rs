//! Left-to-right cascades of binary classifiers and the multiclass baseline.
//!
//! A cascade holds one binary forest per stage, stage `i` trained to answer
//! "is the true class at most `i`?". Prediction scans stages left to right
//! and exits at the first stage that answers 0 with probability above the
//! confidence threshold `t`; if no stage fires, the last class wins. Raising
//! `t` can only delay the exit, so predictions are nondecreasing in `t`.

use crate::error::{Error, Result};
use crate::forest::{train_forest, Dataset, DecisionTree, Forest, ForestParams, Node};
use crate::labeling::{multiclass_to_binary, CutoffGrid, Knob};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;
use std::io::Read;
use std::path::Path;

const MODEL_MAGIC: &[u8; 4] = b"DCMD";
const MODEL_VERSION: u32 = 1;
const KIND_CASCADE: u8 = 0;
const KIND_MULTICLASS: u8 = 1;

/// Core of the left-to-right decision rule, on raw stage probabilities.
///
/// `stage_prob0` yields `Pr(class = 0)` for stages `1..c`; the predicted
/// stage class is 0 when that probability is at least one half. Returns the
/// first stage whose prediction is 0 with probability above `t`, else `c`.
pub fn cascade_decision(stage_prob0: impl IntoIterator<Item = f64>, t: f64, c: u32) -> u32 {
    for (i, p0) in stage_prob0.into_iter().enumerate() {
        let predicted_zero = p0 >= 0.5;
        if predicted_zero && p0 > t {
            return i as u32 + 1;
        }
    }
    c
}

/// `c - 1` binary forests plus the grid they predict over.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    pub grid: CutoffGrid,
    pub stages: Vec<Forest>,
    pub default_t: f64,
    pub params: ForestParams,
    /// SHA-256 of the feature manifest the stages were trained on.
    pub manifest_sha: [u8; 32],
}

impl CascadeModel {
    pub fn class_count(&self) -> u32 {
        self.grid.class_count()
    }

    /// Predict a 1-based class for one feature vector at confidence `t`.
    pub fn predict_class(&self, x: &[f64], t: f64) -> Result<u32> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "confidence threshold must be in [0, 1): {t}"
            )));
        }
        let mut result = self.class_count();
        for (i, stage) in self.stages.iter().enumerate() {
            let p0 = stage.prob_class0(x)?;
            if p0 >= 0.5 && p0 > t {
                result = i as u32 + 1;
                break;
            }
        }
        Ok(result)
    }

    /// Predict the cutoff value named by the predicted class.
    pub fn predict_cutoff(&self, x: &[f64], t: f64) -> Result<u64> {
        Ok(self.grid.cutoff_of_class(self.predict_class(x, t)?))
    }
}

/// Train one binary forest per stage from multiclass labels in `1..=c`.
///
/// Stage seeds derive from the master seed, so the whole cascade is
/// reproducible and stages may train in parallel.
pub fn train_cascade(
    rows: &[Vec<f64>],
    labels: &[u32],
    grid: &CutoffGrid,
    params: &ForestParams,
    default_t: f64,
    manifest_sha: [u8; 32],
) -> Result<CascadeModel> {
    let c = grid.class_count();
    validate_labels(labels, c)?;
    let binary_sets = multiclass_to_binary(labels, c);
    let stages: Vec<Result<Forest>> = binary_sets
        .par_iter()
        .enumerate()
        .map(|(stage_idx, set)| {
            let stage_labels: Vec<u32> = set.iter().map(|&b| b as u32).collect();
            let data = Dataset::new(rows, stage_labels, 2)?;
            let stage_params = ForestParams {
                seed: params
                    .seed
                    .wrapping_mul(0x9e3779b97f4a7c15)
                    .wrapping_add(stage_idx as u64 + 1),
                ..*params
            };
            train_forest(&data, &stage_params)
        })
        .collect();
    let stages = stages.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(CascadeModel {
        grid: grid.clone(),
        stages,
        default_t,
        params: *params,
        manifest_sha,
    })
}

fn validate_labels(labels: &[u32], c: u32) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidParameter("no training labels".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l < 1 || l > c) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} outside 1..={c}"
        )));
    }
    Ok(())
}

/// Plain multiclass random-forest baseline over the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassModel {
    pub grid: CutoffGrid,
    pub forest: Forest,
    pub params: ForestParams,
    pub manifest_sha: [u8; 32],
}

impl MulticlassModel {
    /// Majority-vote class (1-based); vote ties go to the lowest class.
    pub fn predict_class(&self, x: &[f64]) -> Result<u32> {
        Ok(self.forest.predict(x)? + 1)
    }

    pub fn predict_cutoff(&self, x: &[f64]) -> Result<u64> {
        Ok(self.grid.cutoff_of_class(self.predict_class(x)?))
    }
}

pub fn train_multiclass(
    rows: &[Vec<f64>],
    labels: &[u32],
    grid: &CutoffGrid,
    params: &ForestParams,
    manifest_sha: [u8; 32],
) -> Result<MulticlassModel> {
    let c = grid.class_count();
    validate_labels(labels, c)?;
    let zero_based: Vec<u32> = labels.iter().map(|&l| l - 1).collect();
    let data = Dataset::new(rows, zero_based, c)?;
    let forest = train_forest(&data, params)?;
    Ok(MulticlassModel {
        grid: grid.clone(),
        forest,
        params: *params,
        manifest_sha,
    })
}

// --- model files -----------------------------------------------------------
//
// Little-endian container: magic, version, kind, manifest hash, grid,
// hyperparameters, then one forest per stage. Writing is deterministic.

fn write_forest(out: &mut Vec<u8>, forest: &Forest) {
    out.write_u32::<LittleEndian>(forest.n_classes).unwrap();
    out.write_u64::<LittleEndian>(forest.params.seed).unwrap();
    out.write_u64::<LittleEndian>(forest.n_features as u64)
        .unwrap();
    out.push(forest.single_class.is_some() as u8);
    out.write_u32::<LittleEndian>(forest.single_class.unwrap_or(0))
        .unwrap();
    out.write_f64::<LittleEndian>(forest.oob_accuracy.unwrap_or(f64::NAN))
        .unwrap();
    out.write_u32::<LittleEndian>(forest.trees.len() as u32)
        .unwrap();
    for tree in &forest.trees {
        out.write_u32::<LittleEndian>(tree.nodes.len() as u32)
            .unwrap();
        for node in &tree.nodes {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    out.push(0);
                    out.write_u32::<LittleEndian>(*feature).unwrap();
                    out.write_f64::<LittleEndian>(*threshold).unwrap();
                    out.write_u32::<LittleEndian>(*left).unwrap();
                    out.write_u32::<LittleEndian>(*right).unwrap();
                }
                Node::Leaf { counts } => {
                    out.push(1);
                    out.write_u32::<LittleEndian>(counts.len() as u32).unwrap();
                    for &c in counts {
                        out.write_u64::<LittleEndian>(c).unwrap();
                    }
                }
            }
        }
    }
}

fn read_forest(input: &mut &[u8], params: ForestParams) -> std::io::Result<Forest> {
    let n_classes = input.read_u32::<LittleEndian>()?;
    let params = ForestParams {
        seed: input.read_u64::<LittleEndian>()?,
        ..params
    };
    let n_features = input.read_u64::<LittleEndian>()? as usize;
    let has_single = input.read_u8()? != 0;
    let single_class_value = input.read_u32::<LittleEndian>()?;
    let oob = input.read_f64::<LittleEndian>()?;
    let n_trees = input.read_u32::<LittleEndian>()? as usize;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_nodes = input.read_u32::<LittleEndian>()? as usize;
        let mut nodes = Vec::with_capacity(n_nodes);
        for _ in 0..n_nodes {
            match input.read_u8()? {
                0 => nodes.push(Node::Split {
                    feature: input.read_u32::<LittleEndian>()?,
                    threshold: input.read_f64::<LittleEndian>()?,
                    left: input.read_u32::<LittleEndian>()?,
                    right: input.read_u32::<LittleEndian>()?,
                }),
                1 => {
                    let n = input.read_u32::<LittleEndian>()? as usize;
                    let mut counts = Vec::with_capacity(n);
                    for _ in 0..n {
                        counts.push(input.read_u64::<LittleEndian>()?);
                    }
                    nodes.push(Node::Leaf { counts });
                }
                _ => return Err(std::io::Error::other("bad node tag")),
            }
        }
        trees.push(DecisionTree { nodes });
    }
    Ok(Forest {
        n_classes,
        n_features,
        params,
        trees,
        single_class: has_single.then_some(single_class_value),
        oob_accuracy: (!oob.is_nan()).then_some(oob),
    })
}

fn write_header(
    out: &mut Vec<u8>,
    kind: u8,
    manifest_sha: &[u8; 32],
    grid: &CutoffGrid,
    params: &ForestParams,
) {
    out.extend_from_slice(MODEL_MAGIC);
    out.write_u32::<LittleEndian>(MODEL_VERSION).unwrap();
    out.push(kind);
    out.extend_from_slice(manifest_sha);
    out.push(match grid.knob {
        Knob::K => 0,
        Knob::Rho => 1,
    });
    out.write_u32::<LittleEndian>(grid.values().len() as u32)
        .unwrap();
    for &v in grid.values() {
        out.write_u64::<LittleEndian>(v).unwrap();
    }
    out.write_u64::<LittleEndian>(params.trees as u64).unwrap();
    out.write_u64::<LittleEndian>(params.max_depth as u64)
        .unwrap();
    out.write_u64::<LittleEndian>(params.min_leaf as u64)
        .unwrap();
    out.write_u64::<LittleEndian>(params.seed).unwrap();
}

struct Header {
    kind: u8,
    manifest_sha: [u8; 32],
    grid: CutoffGrid,
    params: ForestParams,
}

fn read_header(input: &mut &[u8]) -> std::io::Result<Header> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(std::io::Error::other("not a model file"));
    }
    if input.read_u32::<LittleEndian>()? != MODEL_VERSION {
        return Err(std::io::Error::other("unsupported model version"));
    }
    let kind = input.read_u8()?;
    let mut manifest_sha = [0u8; 32];
    input.read_exact(&mut manifest_sha)?;
    let knob = match input.read_u8()? {
        0 => Knob::K,
        1 => Knob::Rho,
        _ => return Err(std::io::Error::other("bad knob tag")),
    };
    let n = input.read_u32::<LittleEndian>()? as usize;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(input.read_u64::<LittleEndian>()?);
    }
    let grid = CutoffGrid::new(knob, values).map_err(|e| std::io::Error::other(e.to_string()))?;
    let params = ForestParams {
        trees: input.read_u64::<LittleEndian>()? as usize,
        max_depth: input.read_u64::<LittleEndian>()? as usize,
        min_leaf: input.read_u64::<LittleEndian>()? as usize,
        seed: input.read_u64::<LittleEndian>()?,
    };
    Ok(Header {
        kind,
        manifest_sha,
        grid,
        params,
    })
}

pub fn save_cascade(path: &Path, model: &CascadeModel) -> Result<()> {
    let mut out = Vec::new();
    write_header(
        &mut out,
        KIND_CASCADE,
        &model.manifest_sha,
        &model.grid,
        &model.params,
    );
    out.write_f64::<LittleEndian>(model.default_t).unwrap();
    out.write_u32::<LittleEndian>(model.stages.len() as u32)
        .unwrap();
    for stage in &model.stages {
        write_forest(&mut out, stage);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_cascade(path: &Path) -> Result<CascadeModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut input = bytes.as_slice();
    let inner = (|| -> std::io::Result<CascadeModel> {
        let header = read_header(&mut input)?;
        if header.kind != KIND_CASCADE {
            return Err(std::io::Error::other("not a cascade model"));
        }
        let default_t = input.read_f64::<LittleEndian>()?;
        let n = input.read_u32::<LittleEndian>()? as usize;
        let mut stages = Vec::with_capacity(n);
        for _ in 0..n {
            stages.push(read_forest(&mut input, header.params)?);
        }
        Ok(CascadeModel {
            grid: header.grid,
            stages,
            default_t,
            params: header.params,
            manifest_sha: header.manifest_sha,
        })
    })();
    inner.map_err(|e| Error::corrupt(path, e.to_string()))
}

pub fn save_multiclass(path: &Path, model: &MulticlassModel) -> Result<()> {
    let mut out = Vec::new();
    write_header(
        &mut out,
        KIND_MULTICLASS,
        &model.manifest_sha,
        &model.grid,
        &model.params,
    );
    write_forest(&mut out, &model.forest);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_multiclass(path: &Path) -> Result<MulticlassModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut input = bytes.as_slice();
    let inner = (|| -> std::io::Result<MulticlassModel> {
        let header = read_header(&mut input)?;
        if header.kind != KIND_MULTICLASS {
            return Err(std::io::Error::other("not a multiclass model"));
        }
        let forest = read_forest(&mut input, header.params)?;
        Ok(MulticlassModel {
            grid: header.grid,
            forest,
            params: header.params,
            manifest_sha: header.manifest_sha,
        })
    })();
    inner.map_err(|e| Error::corrupt(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn grid(c: u32) -> CutoffGrid {
        CutoffGrid::new(Knob::K, (1..=c as u64).map(|i| i * 10).collect()).unwrap()
    }

    #[test]
    fn decision_rule_immediate_exit_and_fall_through() {
        assert_eq!(cascade_decision([1.0; 8], 0.75, 9), 1);
        assert_eq!(cascade_decision([0.0; 8], 0.75, 9), 9);
    }

    #[test]
    fn decision_rule_picks_first_confident_stage() {
        assert_eq!(cascade_decision([0.6, 0.9, 0.95], 0.75, 4), 2);
        // stage probabilities below 0.5 never fire even when above t
        assert_eq!(cascade_decision([0.4, 0.45, 0.3], 0.25, 4), 4);
    }

    #[test]
    fn oracle_probabilities_round_trip_true_labels() {
        let c = 9u32;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..500 {
            let label = rng.random_range(1..=c);
            let probs = (1..c).map(|stage| if label <= stage { 1.0 } else { 0.0 });
            assert_eq!(cascade_decision(probs, 0.5, c), label);
        }
    }

    fn toy_training() -> (Vec<Vec<f64>>, Vec<u32>) {
        // class = 1 + floor(feature0), features separable
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..120 {
            let class = (i % 3) as u32 + 1;
            rows.push(vec![class as f64 - 1.0 + (i as f64 % 7.0) * 0.01, 0.5]);
            labels.push(class);
        }
        (rows, labels)
    }

    #[test]
    fn trained_cascade_recovers_separable_classes() {
        let (rows, labels) = toy_training();
        let g = grid(3);
        let model = train_cascade(
            &rows,
            &labels,
            &g,
            &ForestParams {
                trees: 20,
                ..Default::default()
            },
            0.8,
            [0u8; 32],
        )
        .unwrap();
        let mut correct = 0;
        for (row, &label) in rows.iter().zip(&labels) {
            if model.predict_class(row, 0.5).unwrap() == label {
                correct += 1;
            }
        }
        assert_eq!(correct, rows.len());
        assert_eq!(
            model.predict_cutoff(&rows[0], 0.5).unwrap(),
            10 * labels[0] as u64
        );
    }

    #[test]
    fn prediction_nondecreasing_in_threshold() {
        let (rows, labels) = toy_training();
        let model = train_cascade(
            &rows,
            &labels,
            &grid(3),
            &ForestParams {
                trees: 10,
                ..Default::default()
            },
            0.8,
            [0u8; 32],
        )
        .unwrap();
        for row in rows.iter().take(20) {
            let mut prev = 0;
            for i in 0..=20 {
                let t = i as f64 / 21.0;
                let class = model.predict_class(row, t).unwrap();
                assert!(class >= prev);
                prev = class;
            }
        }
    }

    #[test]
    fn unanimous_rejection_returns_last_class() {
        assert_eq!(cascade_decision([0.2, 0.1, 0.0, 0.3], 0.9, 5), 5);
    }

    #[test]
    fn model_file_round_trip_preserves_predictions() {
        let (rows, labels) = toy_training();
        let model = train_cascade(
            &rows,
            &labels,
            &grid(3),
            &ForestParams {
                trees: 8,
                seed: 42,
                ..Default::default()
            },
            0.75,
            [7u8; 32],
        )
        .unwrap();
        let tmp = tempfile::NamedTempFile::new().unwrap();
        save_cascade(tmp.path(), &model).unwrap();
        let back = load_cascade(tmp.path()).unwrap();
        assert_eq!(back, model);

        let multi = train_multiclass(
            &rows,
            &labels,
            &grid(3),
            &ForestParams {
                trees: 8,
                seed: 42,
                ..Default::default()
            },
            [7u8; 32],
        )
        .unwrap();
        let tmp2 = tempfile::NamedTempFile::new().unwrap();
        save_multiclass(tmp2.path(), &multi).unwrap();
        let back2 = load_multiclass(tmp2.path()).unwrap();
        assert_eq!(back2, multi);
        assert!(load_cascade(tmp2.path()).is_err());
    }

    #[test]
    fn same_seed_models_are_bit_identical_on_disk() {
        let (rows, labels) = toy_training();
        let params = ForestParams {
            trees: 6,
            seed: 1234,
            ..Default::default()
        };
        let a = train_cascade(&rows, &labels, &grid(3), &params, 0.8, [0u8; 32]).unwrap();
        let b = train_cascade(&rows, &labels, &grid(3), &params, 0.8, [0u8; 32]).unwrap();
        let fa = tempfile::NamedTempFile::new().unwrap();
        let fb = tempfile::NamedTempFile::new().unwrap();
        save_cascade(fa.path(), &a).unwrap();
        save_cascade(fb.path(), &b).unwrap();
        assert_eq!(
            std::fs::read(fa.path()).unwrap(),
            std::fs::read(fb.path()).unwrap()
        );
    }

    #[test]
    fn multilabel_tie_goes_to_lowest_class() {
        use crate::forest::Node;
        // two trees voting class 0 and class 2: votes tie 1-1, class 0 wins
        let t0 = DecisionTree {
            nodes: vec![Node::Leaf {
                counts: vec![3, 0, 0],
            }],
        };
        let t1 = DecisionTree {
            nodes: vec![Node::Leaf {
                counts: vec![0, 0, 3],
            }],
        };
        let model = MulticlassModel {
            grid: grid(3),
            forest: Forest {
                n_classes: 3,
                n_features: 2,
                params: ForestParams::default(),
                trees: vec![t0, t1],
                single_class: None,
                oob_accuracy: None,
            },
            params: ForestParams::default(),
            manifest_sha: [0u8; 32],
        };
        assert_eq!(model.predict_class(&[0.0, 0.0]).unwrap(), 1);
    }
}
