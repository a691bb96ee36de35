//! Five probabilistic classifiers behind one fit/predict contract.
//!
//! A [`TrainedModel`] is a versioned, self-describing container. Loading a
//! saved model and predicting gives bit-identical probabilities to the
//! in-memory model that was saved.

pub mod distance;
pub mod forest;
pub mod gp;
pub mod kernel;
pub mod knn;
pub mod mlp;
pub mod params;
pub mod svm;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use distance::minkowski_distance;
pub use kernel::{kernel_eval, Kernel};
pub use params::*;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::types::{EmbeddingVector, OntologyId};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    RandomForest,
    Svm,
    GaussianProcess,
    Knn,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::RandomForest,
        ClassifierKind::Svm,
        ClassifierKind::GaussianProcess,
        ClassifierKind::Knn,
        ClassifierKind::Mlp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::Svm => "svm",
            ClassifierKind::GaussianProcess => "gaussian_process",
            ClassifierKind::Knn => "knn",
            ClassifierKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::param("kind", format!("unknown classifier kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ClassifierParams {
    RandomForest(RandomForestParams),
    Svm(SvmParams),
    GaussianProcess(GpParams),
    Knn(KnnParams),
    Mlp(MlpParams),
}

impl ClassifierParams {
    /// The hyperparameters selected by grid search for each kind.
    pub fn selected(kind: ClassifierKind) -> ClassifierParams {
        match kind {
            ClassifierKind::RandomForest => ClassifierParams::RandomForest(RandomForestParams::default()),
            ClassifierKind::Svm => ClassifierParams::Svm(SvmParams::default()),
            ClassifierKind::GaussianProcess => ClassifierParams::GaussianProcess(GpParams::default()),
            ClassifierKind::Knn => ClassifierParams::Knn(KnnParams::default()),
            ClassifierKind::Mlp => ClassifierParams::Mlp(MlpParams::default()),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierParams::RandomForest(_) => ClassifierKind::RandomForest,
            ClassifierParams::Svm(_) => ClassifierKind::Svm,
            ClassifierParams::GaussianProcess(_) => ClassifierKind::GaussianProcess,
            ClassifierParams::Knn(_) => ClassifierKind::Knn,
            ClassifierParams::Mlp(_) => ClassifierKind::Mlp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierParams::RandomForest(p) => p.validate(),
            ClassifierParams::Svm(p) => p.validate(),
            ClassifierParams::GaussianProcess(p) => p.validate(),
            ClassifierParams::Knn(p) => p.validate(),
            ClassifierParams::Mlp(p) => p.validate(),
        }
    }

    /// The parameter record as a JSON object (without the kind tag).
    pub fn to_object(&self) -> serde_json::Map<String, serde_json::Value> {
        let value = serde_json::to_value(self).expect("params serialize");
        match value {
            serde_json::Value::Object(mut outer) => match outer.remove("params") {
                Some(serde_json::Value::Object(inner)) => inner,
                _ => unreachable!("params are objects"),
            },
            _ => unreachable!("params are objects"),
        }
    }

    /// Replaces the named fields. Unknown names and ill-typed values are
    /// rejected.
    pub fn with_overrides(&self, overrides: &serde_json::Map<String, serde_json::Value>) -> Result<ClassifierParams> {
        let mut object = self.to_object();
        for (name, value) in overrides {
            object.insert(name.clone(), value.clone());
        }
        let tagged = serde_json::json!({ "kind": self.kind(), "params": object });
        serde_json::from_value(tagged).map_err(|e| Error::param("params", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    #[serde(flatten)]
    pub params: ClassifierParams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(params: ClassifierParams, seed: u64) -> Self {
        ClassifierSpec { params, seed }
    }

    pub fn selected(kind: ClassifierKind, seed: u64) -> Self {
        ClassifierSpec::new(ClassifierParams::selected(kind), seed)
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }
}

/// Training rows with integer labels, borrowed from a dataset.
#[derive(Debug, Clone)]
pub(crate) struct Design<'a> {
    pub x: Vec<&'a [f64]>,
    pub y: Vec<usize>,
    pub n_classes: usize,
    pub dim: usize,
}

impl<'a> Design<'a> {
    fn from_dataset(data: &'a LabeledDataset) -> Self {
        Design {
            x: data.features(),
            y: data.labels().to_vec(),
            n_classes: data.label_vocab().len(),
            dim: data.dim(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedState {
    /// Training data held a single class.
    Constant { class: usize },
    RandomForest(forest::Forest),
    Svm(svm::SvmModel),
    GaussianProcess(gp::GpModel),
    Knn(knn::KnnModel),
    Mlp(mlp::MlpModel),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ClassifierSpec,
    pub label_vocab: Vec<OntologyId>,
    pub dim: usize,
    /// False when an iterative solver stopped at its iteration cap.
    pub converged: bool,
    pub state: FittedState,
}

pub fn fit(spec: &ClassifierSpec, train: &LabeledDataset) -> Result<TrainedModel> {
    spec.params.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    let design = Design::from_dataset(train);
    let counts = train.class_counts();
    let present: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    let (state, converged) = if let [class] = present[..] {
        (FittedState::Constant { class }, true)
    } else {
        if let Some(missing) = counts.iter().position(|&c| c == 0) {
            return Err(Error::ClassTooSmall {
                class: train.label_vocab()[missing].to_string(),
                count: 0,
                required: 1,
            });
        }
        match &spec.params {
            ClassifierParams::RandomForest(p) => (
                FittedState::RandomForest(forest::Forest::fit(p, &design, spec.seed)),
                true,
            ),
            ClassifierParams::Svm(p) => {
                let model = svm::SvmModel::fit(p, &design, spec.seed)?;
                let converged = model.converged();
                (FittedState::Svm(model), converged)
            }
            ClassifierParams::GaussianProcess(p) => {
                let model = gp::GpModel::fit(p, &design)?;
                let converged = model.converged();
                (FittedState::GaussianProcess(model), converged)
            }
            ClassifierParams::Knn(p) => (FittedState::Knn(knn::KnnModel::fit(p, &design)), true),
            ClassifierParams::Mlp(p) => {
                let model = mlp::MlpModel::fit(p, &design, spec.seed)?;
                let converged = model.converged();
                (FittedState::Mlp(model), converged)
            }
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        label_vocab: train.label_vocab().to_vec(),
        dim: train.dim(),
        converged,
        state,
    })
}

/// Rescales non-negative scores to a distribution; falls back to uniform
/// when every score vanishes.
pub(crate) fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    p.iter_mut().for_each(|v| {
        if !(*v > 0.0) {
            *v = 0.0;
        }
    });
    let total: f64 = p.iter().sum();
    if total > 0.0 && total.is_finite() {
        p.iter_mut().for_each(|v| *v /= total);
    } else {
        let u = 1.0 / p.len() as f64;
        p.iter_mut().for_each(|v| *v = u);
    }
    p
}

/// Index of the largest entry; the first one on ties.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        self.spec.kind()
    }

    pub fn n_classes(&self) -> usize {
        self.label_vocab.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
                context: None,
            });
        }
        Ok(())
    }

    /// Probability distribution over `label_vocab`.
    pub fn predict_proba(&self, x: &EmbeddingVector) -> Result<Vec<f64>> {
        self.predict_proba_slice(x.as_slice())
    }

    pub fn predict_proba_slice(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("input vector has non-finite entries".into()));
        }
        let k = self.n_classes();
        let raw = match &self.state {
            FittedState::Constant { class } => {
                let mut p = vec![0.0; k];
                p[*class] = 1.0;
                p
            }
            FittedState::RandomForest(m) => m.proba(x, k),
            FittedState::Svm(m) => m.proba(x),
            FittedState::GaussianProcess(m) => m.proba(x),
            FittedState::Knn(m) => m.votes(x, k),
            FittedState::Mlp(m) => m.proba(x),
        };
        Ok(normalize(raw))
    }

    /// Vocabulary index of the most probable class.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba_slice(x)?))
    }

    pub fn predict(&self, x: &EmbeddingVector) -> Result<&OntologyId> {
        Ok(&self.label_vocab[self.predict_index(x.as_slice())?])
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("model serializes")
    }

    pub fn read_json<R: Read>(reader: R) -> Result<TrainedModel> {
        let model: TrainedModel = serde_json::from_reader(reader)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        model.spec.params.validate()?;
        Ok(model)
    }
}
