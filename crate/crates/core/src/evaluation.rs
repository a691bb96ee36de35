//! Scoring trained models on held-out partitions.

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, TrainedModel};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::stats::compare::render_table;
use crate::stats::{compute_metrics, ConfusionMatrix, MetricReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub classifier: String,
    pub kind: ClassifierKind,
    pub partition: usize,
    pub n_samples: usize,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

/// Confusion matrix of a model on a labeled dataset with the same
/// vocabulary.
pub fn confusion(model: &TrainedModel, data: &LabeledDataset) -> Result<ConfusionMatrix> {
    if data.label_vocab() != model.label_vocab.as_slice() {
        return Err(Error::InvalidInput(
            "dataset and model label vocabularies differ".into(),
        ));
    }
    let labels = model.label_vocab.iter().map(|l| l.to_string()).collect();
    let mut cm = ConfusionMatrix::new(labels);
    for (sample, &truth) in data.samples().iter().zip(data.labels()) {
        let predicted = model.predict_index(sample.vector.as_slice()).map_err(|e| match e {
            Error::DimensionMismatch { expected, got, .. } => Error::DimensionMismatch {
                expected,
                got,
                context: Some(format!("sample {}", sample.sample_id)),
            },
            other => other,
        })?;
        cm.add(truth, predicted)?;
    }
    Ok(cm)
}

fn row(name: &str, model: &TrainedModel, partition: usize, data: &LabeledDataset) -> Result<MetricRow> {
    let MetricReport {
        accuracy,
        macro_precision,
        macro_recall,
        macro_f1,
    } = compute_metrics(&confusion(model, data)?)?;
    Ok(MetricRow {
        classifier: name.to_string(),
        kind: model.kind(),
        partition,
        n_samples: data.len(),
        accuracy,
        macro_precision,
        macro_recall,
        macro_f1,
    })
}

/// One row per (model, partition), models outermost.
pub fn evaluate(models: &[(String, TrainedModel)], partitions: &[LabeledDataset]) -> Result<Vec<MetricRow>> {
    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|m| (0..partitions.len()).map(move |p| (m, p)))
        .collect();
    crate::par::map(&jobs, |&(m, p)| row(&models[m].0, &models[m].1, p, &partitions[p]))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for one value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub classifier: String,
    pub n_partitions: usize,
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

/// Classifier names in order of first appearance.
pub fn classifiers(rows: &[MetricRow]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in rows {
        if !names.contains(&r.classifier) {
            names.push(r.classifier.clone());
        }
    }
    names
}

pub fn summarize(rows: &[MetricRow]) -> Vec<Summary> {
    classifiers(rows)
        .into_iter()
        .map(|name| {
            let mine: Vec<&MetricRow> = rows.iter().filter(|r| r.classifier == name).collect();
            let col = |f: fn(&MetricRow) -> f64| MeanStd::of(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            Summary {
                n_partitions: mine.len(),
                accuracy: col(|r| r.accuracy),
                precision: col(|r| r.macro_precision),
                recall: col(|r| r.macro_recall),
                f1: col(|r| r.macro_f1),
                classifier: name,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[default]
    Accuracy,
    MacroPrecision,
    MacroRecall,
    MacroF1,
}

impl Measure {
    pub fn of(self, row: &MetricRow) -> f64 {
        match self {
            Measure::Accuracy => row.accuracy,
            Measure::MacroPrecision => row.macro_precision,
            Measure::MacroRecall => row.macro_recall,
            Measure::MacroF1 => row.macro_f1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Accuracy => "accuracy",
            Measure::MacroPrecision => "macro_precision",
            Measure::MacroRecall => "macro_recall",
            Measure::MacroF1 => "macro_f1",
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Measure::Accuracy, Measure::MacroPrecision, Measure::MacroRecall, Measure::MacroF1]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::param("measure", format!("unknown measure {s:?}")))
    }
}

pub fn accuracy_matrix(rows: &[MetricRow]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    score_matrix(rows, Measure::Accuracy)
}

/// Score matrix with partitions in rows and classifiers in columns.
/// Every classifier must have been scored on the same partitions.
pub fn score_matrix(rows: &[MetricRow], measure: Measure) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let names = classifiers(rows);
    let mut partitions: Vec<usize> = rows.iter().map(|r| r.partition).collect();
    partitions.sort_unstable();
    partitions.dedup();
    let mut matrix = vec![vec![f64::NAN; names.len()]; partitions.len()];
    let mut seen = vec![vec![false; names.len()]; partitions.len()];
    for r in rows {
        let p = partitions.binary_search(&r.partition).expect("collected above");
        let c = names.iter().position(|n| *n == r.classifier).expect("collected above");
        if seen[p][c] {
            return Err(Error::InvalidInput(format!(
                "classifier {} scored twice on partition {}",
                r.classifier, r.partition
            )));
        }
        seen[p][c] = true;
        matrix[p][c] = measure.of(r);
    }
    if seen.iter().flatten().any(|s| !s) {
        return Err(Error::InvalidInput(
            "classifiers were not scored on the same partitions".into(),
        ));
    }
    Ok((names, matrix))
}

/// Mean and standard deviation in percent per classifier and measure.
pub fn render_summary(summaries: &[Summary]) -> String {
    let header: Vec<String> = ["classifier", "accuracy", "f1", "precision", "recall"]
        .into_iter()
        .map(String::from)
        .collect();
    let pct = |m: MeanStd| format!("{:.2} ± {:.2}", 100.0 * m.mean, 100.0 * m.std);
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.classifier.clone(),
                pct(s.accuracy),
                pct(s.f1),
                pct(s.precision),
                pct(s.recall),
            ]
        })
        .collect();
    render_table(&header, &rows)
}
