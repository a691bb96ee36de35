//! Grid search with stratified k-fold cross-validation.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::classifiers::{fit, ClassifierKind, ClassifierParams, ClassifierSpec};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{compute_metrics, ConfusionMatrix};

pub const DEFAULT_FOLDS: usize = 5;
const FOLD_STREAM: u64 = 0x464f_4c44_0000_0000;

/// Grid axis that sets the fit seed rather than a parameter field, except
/// for the Gaussian process whose parameter record accepts it.
pub const RANDOM_STATE_AXIS: &str = "random_state";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    Accuracy,
    MacroF1,
}

/// Validation folds: each class is shuffled and dealt round-robin, the
/// dealing position carrying over between classes. Returns `(train,
/// validation)` index pairs, both sorted.
pub fn stratified_kfold(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::param("k", "at least 2 folds required"));
    }
    let mut fold_of = vec![0usize; data.len()];
    let mut position = 0;
    for (class, indices) in data.class_indices().iter().enumerate() {
        if indices.len() < k {
            return Err(Error::ClassTooSmall {
                class: data.label_vocab()[class].to_string(),
                count: indices.len(),
                required: k,
            });
        }
        let mut order = indices.clone();
        order.shuffle(&mut rng::derived(seed, FOLD_STREAM + class as u64));
        for i in order {
            fold_of[i] = position % k;
            position += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (val, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| fold_of[i] == f);
            (train, val)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: ClassifierKind,
    pub axes: Vec<Axis>,
}

fn axis(name: &str, values: Value) -> Axis {
    Axis {
        name: name.into(),
        values: values.as_array().expect("array literal").clone(),
    }
}

impl GridSpec {
    /// The considered values of each kind, axes in a fixed order.
    pub fn default_for(kind: ClassifierKind) -> GridSpec {
        let axes = match kind {
            ClassifierKind::RandomForest => vec![
                axis("max_depth", json!([5, 7, 9, 11])),
                axis("criterion", json!(["entropy", "gini"])),
                axis("n_estimators", json!([5, 10, 15, 20, 25, 30])),
                axis("max_features_fraction", json!([0.5, 0.7])),
                axis("bootstrap", json!([false, true])),
            ],
            ClassifierKind::Svm => vec![
                axis("c", json!([1.0, 10.0, 100.0, 1000.0])),
                axis("kernel", json!(["linear", "rbf"])),
                axis("gamma", json!([0.001, 0.0001])),
            ],
            ClassifierKind::GaussianProcess => vec![
                axis("kernel", json!(["rbf", "dot_product", "matern", "rational_quadratic", "white"])),
                axis(RANDOM_STATE_AXIS, json!([0, 50])),
            ],
            ClassifierKind::Knn => vec![
                axis("n_neighbors", json!([1, 5, 9, 13, 17])),
                axis("weights", json!(["uniform", "distance"])),
                axis("algorithm", json!(["auto", "ball_tree", "kd_tree", "brute"])),
                axis("minkowski_c", json!([1.0, 2.0, 3.0, 4.0, 5.0])),
            ],
            ClassifierKind::Mlp => vec![
                axis(RANDOM_STATE_AXIS, json!([0, 1])),
                axis("activation", json!(["identity", "logistic", "tanh", "relu"])),
                axis("optimizer", json!(["lbfgs", "sgd", "adam"])),
                axis("hidden_size", json!([1, 4, 16, 64])),
                axis("l2_alpha", json!([0.0001, 0.05])),
                axis("learning_rate_schedule", json!(["constant", "adaptive"])),
            ],
        };
        GridSpec { kind, axes }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::param("axes", "grid has no axes"));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(Error::param(&axis.name, "axis has no values"));
            }
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Grid points in lexicographic order, the first axis varying slowest.
    pub fn points(&self) -> Vec<Map<String, Value>> {
        let mut points = vec![Map::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(axis.name.clone(), v.clone());
                        q
                    })
                })
                .collect();
        }
        points
    }

    /// Builds the classifier spec of one grid point on top of the selected
    /// parameters of the grid's kind.
    pub fn spec_for(&self, point: &Map<String, Value>, seed: u64) -> Result<ClassifierSpec> {
        let mut overrides = point.clone();
        let mut seed = seed;
        if self.kind != ClassifierKind::GaussianProcess {
            if let Some(v) = overrides.remove(RANDOM_STATE_AXIS) {
                seed = v
                    .as_u64()
                    .ok_or_else(|| Error::param(RANDOM_STATE_AXIS, "must be a non-negative integer"))?;
            }
        }
        let params = ClassifierParams::selected(self.kind).with_overrides(&overrides)?;
        Ok(ClassifierSpec::new(params, seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<ClassifierSpec>,
    pub fold_scores: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_score: Option<f64>,
    /// Why the point could not be evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub kind: ClassifierKind,
    pub k_folds: usize,
    pub seed: u64,
    pub scoring: Scoring,
    pub points: Vec<PointResult>,
    pub best_index: usize,
    pub best: ClassifierSpec,
}

impl CvResult {
    pub fn best_point(&self) -> &PointResult {
        &self.points[self.best_index]
    }

    pub fn n_skipped(&self) -> usize {
        self.points.iter().filter(|p| p.skipped.is_some()).count()
    }
}

fn score(spec: &ClassifierSpec, train: &LabeledDataset, val: &LabeledDataset, scoring: Scoring) -> Result<f64> {
    let model = fit(spec, train)?;
    let mut predicted = Vec::with_capacity(val.len());
    for sample in val.samples() {
        predicted.push(model.predict_index(sample.vector.as_slice())?);
    }
    let labels = val.label_vocab().iter().map(|l| l.to_string()).collect();
    let cm = ConfusionMatrix::from_predictions(labels, val.labels(), &predicted)?;
    let report = compute_metrics(&cm)?;
    Ok(match scoring {
        Scoring::Accuracy => report.accuracy,
        Scoring::MacroF1 => report.macro_f1,
    })
}

/// Scores every grid point by k-fold cross-validation and selects the point
/// with the highest mean score, the earliest on ties. Points whose
/// parameters are rejected or whose fit fails are kept as skipped.
pub fn grid_search(grid: &GridSpec, data: &LabeledDataset, k: usize, seed: u64, scoring: Scoring) -> Result<CvResult> {
    grid.validate()?;
    let folds = stratified_kfold(data, k, seed)?;
    let fold_data: Vec<(LabeledDataset, LabeledDataset)> = folds
        .iter()
        .map(|(train, val)| (data.subset(train), data.subset(val)))
        .collect();
    let points = grid.points();
    let results = crate::par::map(&points, |point| {
        let spec = match grid.spec_for(point, seed).and_then(|s| s.params.validate().map(|_| s)) {
            Ok(spec) => spec,
            Err(e) => {
                return PointResult {
                    point: point.clone(),
                    spec: None,
                    fold_scores: Vec::new(),
                    mean_score: None,
                    skipped: Some(e.to_string()),
                }
            }
        };
        let mut fold_scores = Vec::with_capacity(fold_data.len());
        for (train, val) in &fold_data {
            match score(&spec, train, val, scoring) {
                Ok(s) => fold_scores.push(s),
                Err(e) => {
                    return PointResult {
                        point: point.clone(),
                        spec: Some(spec),
                        fold_scores,
                        mean_score: None,
                        skipped: Some(e.to_string()),
                    }
                }
            }
        }
        let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
        PointResult {
            point: point.clone(),
            spec: Some(spec),
            fold_scores,
            mean_score: Some(mean),
            skipped: None,
        }
    });
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if let Some(m) = r.mean_score {
            if best.is_none_or(|b| m > results[b].mean_score.unwrap()) {
                best = Some(i);
            }
        }
    }
    let best_index = best.ok_or_else(|| {
        let reason = results.first().and_then(|r| r.skipped.clone()).unwrap_or_default();
        Error::AllInfeasible(reason)
    })?;
    Ok(CvResult {
        kind: grid.kind,
        k_folds: k,
        seed,
        scoring,
        best: results[best_index].spec.clone().expect("scored points have specs"),
        best_index,
        points: results,
    })
}
