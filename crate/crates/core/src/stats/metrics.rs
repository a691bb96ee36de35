//! Confusion matrices and macro-averaged quality measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `counts[i][j]` is the number of samples of true class `i` predicted as
/// class `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let k = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = labels.len();
        if counts.len() != k || counts.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidInput(format!("confusion matrix must be {k} x {k}")));
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    /// Tallies paired truth/prediction class indices.
    pub fn from_predictions(labels: Vec<String>, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::InvalidInput("truth and predictions differ in length".into()));
        }
        let mut cm = ConfusionMatrix::new(labels);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.add(t, p)?;
        }
        Ok(cm)
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let k = self.labels.len();
        if truth >= k || predicted >= k {
            return Err(Error::InvalidInput(format!("class index out of range for {k} classes")));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One-vs-rest counts and scores of each class. Empty denominators give 0.
pub fn per_class(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    let k = cm.labels.len();
    let total = cm.total();
    (0..k)
        .map(|c| {
            let tp = cm.counts[c][c];
            let fn_ = cm.counts[c].iter().sum::<u64>() - tp;
            let fp = (0..k).map(|r| cm.counts[r][c]).sum::<u64>() - tp;
            let tn = total - tp - fn_ - fp;
            let precision = ratio(tp, tp + fp);
            let recall = ratio(tp, tp + fn_);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                tp,
                fp,
                fn_,
                tn,
                precision,
                recall,
                f1,
            }
        })
        .collect()
}

/// Overall accuracy and unweighted class means of precision, recall and F1.
pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricReport> {
    let total = cm.total();
    if total == 0 || cm.labels.is_empty() {
        return Err(Error::InvalidInput("confusion matrix is empty".into()));
    }
    let classes = per_class(cm);
    let k = classes.len() as f64;
    Ok(MetricReport {
        accuracy: cm.correct() as f64 / total as f64,
        macro_precision: classes.iter().map(|c| c.precision).sum::<f64>() / k,
        macro_recall: classes.iter().map(|c| c.recall).sum::<f64>() / k,
        macro_f1: classes.iter().map(|c| c.f1).sum::<f64>() / k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("L{i}")).collect()
    }

    #[test]
    fn binary_fixture() {
        let cm = ConfusionMatrix::from_counts(labels(2), vec![vec![9, 1], vec![1, 89]]).unwrap();
        let c = per_class(&cm)[0];
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (9, 1, 1, 89));
        assert!((c.precision - 0.9).abs() < 1e-15);
        assert!((c.recall - 0.9).abs() < 1e-15);
        assert!((c.f1 - 0.9).abs() < 1e-15);
        assert!((compute_metrics(&cm).unwrap().accuracy - 0.98).abs() < 1e-15);
    }

    #[test]
    fn perfect_diagonal() {
        let cm = ConfusionMatrix::from_counts(labels(3), vec![vec![4, 0, 0], vec![0, 5, 0], vec![0, 0, 6]]).unwrap();
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_precision, 1.0);
        assert_eq!(m.macro_recall, 1.0);
        assert_eq!(m.macro_f1, 1.0);
    }

    #[test]
    fn empty_is_error_and_unpredicted_class_scores_zero() {
        assert!(compute_metrics(&ConfusionMatrix::new(labels(2))).is_err());
        let cm = ConfusionMatrix::from_predictions(labels(2), &[0, 1], &[0, 0]).unwrap();
        let c = per_class(&cm);
        assert_eq!(c[1].precision, 0.0);
        assert_eq!(c[1].f1, 0.0);
    }
}
