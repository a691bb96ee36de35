//! Classification of unlabeled paragraphs and per-ontology aggregates of
//! prediction counts, confidences and margins.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifiers::TrainedModel;
use crate::error::{Error, Result};
use crate::stats::compare::render_table;
use crate::types::{EmbeddedSample, OntologyId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub classifier: String,
    pub sample_id: String,
    pub doc_id: String,
    pub predicted: OntologyId,
    pub confidence: f64,
    pub margin: f64,
    pub distribution: Vec<f64>,
}

/// Index of the top probability (first on ties), its value and the gap to
/// the second largest.
pub fn confidence_margin(distribution: &[f64]) -> (usize, f64, f64) {
    let mut best = 0;
    for (i, &p) in distribution.iter().enumerate() {
        if p > distribution[best] {
            best = i;
        }
    }
    let second = distribution
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &p)| p)
        .fold(f64::NEG_INFINITY, f64::max);
    let top = distribution[best];
    let margin = if second.is_finite() { (top - second).max(0.0) } else { top };
    (best, top, margin)
}

/// Scores every paragraph with every model. `doc_ids[i]` names the document
/// of `paragraphs[i]`. Records are grouped by model, in input order.
pub fn classify_corpus(
    models: &[(String, TrainedModel)],
    paragraphs: &[EmbeddedSample],
    doc_ids: &[String],
) -> Result<Vec<Vec<PredictionRecord>>> {
    if paragraphs.len() != doc_ids.len() {
        return Err(Error::InvalidInput(format!(
            "{} paragraphs but {} document ids",
            paragraphs.len(),
            doc_ids.len()
        )));
    }
    if let Some((_, first)) = models.first() {
        for (name, m) in &models[1..] {
            if m.label_vocab != first.label_vocab || m.dim != first.dim {
                return Err(Error::InvalidInput(format!(
                    "model {name} differs from the first model in label vocabulary or dimension"
                )));
            }
        }
    }
    models
        .iter()
        .map(|(name, model)| {
            let indices: Vec<usize> = (0..paragraphs.len()).collect();
            crate::par::map(&indices, |&i| {
                let p = &paragraphs[i];
                let distribution = model.predict_proba(&p.vector).map_err(|e| match e {
                    Error::DimensionMismatch { expected, got, .. } => Error::DimensionMismatch {
                        expected,
                        got,
                        context: Some(format!("paragraph {}", p.sample_id)),
                    },
                    other => other,
                })?;
                let (best, confidence, margin) = confidence_margin(&distribution);
                Ok(PredictionRecord {
                    classifier: name.clone(),
                    sample_id: p.sample_id.clone(),
                    doc_id: doc_ids[i].clone(),
                    predicted: model.label_vocab[best].clone(),
                    confidence,
                    margin,
                    distribution,
                })
            })
            .into_iter()
            .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateBasis {
    /// Sums the top confidence and margin of records predicting the ontology.
    #[default]
    PredictedOnly,
    /// Sums each ontology's probability over all records; margins are still
    /// summed over records predicting it.
    AllParagraphs,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OntologyAggregate {
    pub prediction_count: usize,
    pub confidence_sum: f64,
    pub margin_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierAggregate {
    pub classifier: String,
    pub per_ontology: BTreeMap<OntologyId, OntologyAggregate>,
    pub total: OntologyAggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub basis: AggregateBasis,
    pub ontologies: Vec<OntologyId>,
    pub classifiers: Vec<ClassifierAggregate>,
}

fn sorted_sum(values: Option<Vec<f64>>) -> f64 {
    let mut values = values.unwrap_or_default();
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Ontologies are the union of predicted labels and `vocab`, sorted.
/// Classifiers appear in order of first occurrence in `records`.
pub fn aggregate(records: &[PredictionRecord], vocab: &[OntologyId], basis: AggregateBasis) -> AggregateReport {
    let mut ontologies: Vec<OntologyId> = vocab.to_vec();
    ontologies.extend(records.iter().map(|r| r.predicted.clone()));
    ontologies.sort();
    ontologies.dedup();

    let mut order: Vec<String> = Vec::new();
    for r in records {
        if !order.contains(&r.classifier) {
            order.push(r.classifier.clone());
        }
    }
    let classifiers = order
        .into_iter()
        .map(|name| {
            let mine: Vec<&PredictionRecord> = records.iter().filter(|r| r.classifier == name).collect();
            let mut counts: BTreeMap<&OntologyId, usize> = BTreeMap::new();
            let mut confidences: BTreeMap<&OntologyId, Vec<f64>> = BTreeMap::new();
            let mut margins: BTreeMap<&OntologyId, Vec<f64>> = BTreeMap::new();
            for r in &mine {
                *counts.entry(&r.predicted).or_default() += 1;
                margins.entry(&r.predicted).or_default().push(r.margin);
                match basis {
                    AggregateBasis::PredictedOnly => confidences.entry(&r.predicted).or_default().push(r.confidence),
                    AggregateBasis::AllParagraphs => {
                        for (label, &p) in vocab.iter().zip(&r.distribution) {
                            confidences.entry(label).or_default().push(p);
                        }
                    }
                }
            }
            let per_ontology: BTreeMap<OntologyId, OntologyAggregate> = ontologies
                .iter()
                .map(|o| {
                    let agg = OntologyAggregate {
                        prediction_count: counts.get(o).copied().unwrap_or(0),
                        confidence_sum: sorted_sum(confidences.remove(o)),
                        margin_sum: sorted_sum(margins.remove(o)),
                    };
                    (o.clone(), agg)
                })
                .collect();
            let total = per_ontology.values().fold(OntologyAggregate::default(), |acc, a| OntologyAggregate {
                prediction_count: acc.prediction_count + a.prediction_count,
                confidence_sum: acc.confidence_sum + a.confidence_sum,
                margin_sum: acc.margin_sum + a.margin_sum,
            });
            ClassifierAggregate {
                classifier: name,
                per_ontology,
                total,
            }
        })
        .collect();
    AggregateReport {
        basis,
        ontologies,
        classifiers,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Count,
    ConfidenceSum,
    MarginSum,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Count, Measure::ConfidenceSum, Measure::MarginSum];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Count => "count",
            Measure::ConfidenceSum => "confidence_sum",
            Measure::MarginSum => "margin_sum",
        }
    }

    fn value(self, a: &OntologyAggregate) -> f64 {
        match self {
            Measure::Count => a.prediction_count as f64,
            Measure::ConfidenceSum => a.confidence_sum,
            Measure::MarginSum => a.margin_sum,
        }
    }
}

fn format_value(measure: Measure, v: f64) -> String {
    match measure {
        Measure::Count => format!("{}", v as u64),
        _ => format!("{v:.6}"),
    }
}

impl AggregateReport {
    /// Grouped bar-chart data as `category,series,value` lines with the
    /// ontology as category and the classifier as series.
    pub fn bar_chart_csv(&self, measure: Measure) -> String {
        let mut out = String::from("category,series,value\n");
        for o in &self.ontologies {
            for c in &self.classifiers {
                out.push_str(&format!(
                    "{},{},{}\n",
                    o,
                    c.classifier,
                    format_value(measure, measure.value(&c.per_ontology[o]))
                ));
            }
        }
        out
    }

    /// Ontologies in rows, classifiers in columns, with a total row.
    pub fn render(&self, measure: Measure) -> String {
        let mut header = vec![measure.as_str().to_string()];
        header.extend(self.classifiers.iter().map(|c| c.classifier.clone()));
        let mut rows: Vec<Vec<String>> = self
            .ontologies
            .iter()
            .map(|o| {
                let mut row = vec![o.to_string()];
                row.extend(
                    self.classifiers
                        .iter()
                        .map(|c| format_value(measure, measure.value(&c.per_ontology[o]))),
                );
                row
            })
            .collect();
        let mut total = vec!["total".to_string()];
        total.extend(self.classifiers.iter().map(|c| format_value(measure, measure.value(&c.total))));
        rows.push(total);
        render_table(&header, &rows)
    }
}
