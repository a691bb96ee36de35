//! Pairwise classifier comparison over datasets: win counts with
//! Holm-corrected Wilcoxon significance.

use serde::{Deserialize, Serialize};

use super::significance::{friedman_test, holm_correction, wilcoxon_signed_rank, TestResult};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinMatrix {
    pub classifiers: Vec<String>,
    /// `wins[i][j]`: datasets where classifier `i` scores strictly higher
    /// than `j`.
    pub wins: Vec<Vec<usize>>,
    pub p_values: Vec<Vec<f64>>,
    pub adjusted_p_values: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
    pub summary_score: Vec<usize>,
    pub n_datasets: usize,
    pub alpha: f64,
}

fn check_matrix(scores: &[Vec<f64>], names: &[String]) -> Result<()> {
    let k = names.len();
    if scores.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidInput(format!("every score row needs {k} columns")));
    }
    Ok(())
}

/// Compares the columns of an `n x k` score matrix (datasets in rows).
pub fn pairwise_comparison(scores: &[Vec<f64>], classifiers: &[String], alpha: f64) -> Result<WinMatrix> {
    if scores.len() < 2 {
        return Err(Error::InvalidInput("pairwise comparison needs at least 2 datasets".into()));
    }
    check_matrix(scores, classifiers)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", "must lie in (0, 1)"));
    }
    let k = classifiers.len();
    let column = |j: usize| scores.iter().map(|row| row[j]).collect::<Vec<f64>>();
    let mut wins = vec![vec![0; k]; k];
    for row in scores {
        for i in 0..k {
            for j in 0..k {
                if row[i] > row[j] {
                    wins[i][j] += 1;
                }
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let raw: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| wilcoxon_signed_rank(&column(i), &column(j)).map(|r| r.test.p_value))
        .collect::<Result<_>>()?;
    let adjusted = holm_correction(&raw);
    let mut p_values = vec![vec![1.0; k]; k];
    let mut adjusted_p_values = vec![vec![1.0; k]; k];
    let mut significant = vec![vec![false; k]; k];
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        p_values[i][j] = raw[idx];
        p_values[j][i] = raw[idx];
        adjusted_p_values[i][j] = adjusted[idx];
        adjusted_p_values[j][i] = adjusted[idx];
        let sig = adjusted[idx] < alpha;
        significant[i][j] = sig;
        significant[j][i] = sig;
    }
    let summary_score = wins.iter().map(|row| row.iter().sum()).collect();
    Ok(WinMatrix {
        classifiers: classifiers.to_vec(),
        wins,
        p_values,
        adjusted_p_values,
        significant,
        summary_score,
        n_datasets: scores.len(),
        alpha,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub friedman: TestResult,
    pub win_matrix: WinMatrix,
}

pub fn compare(scores: &[Vec<f64>], classifiers: &[String], alpha: f64) -> Result<Comparison> {
    check_matrix(scores, classifiers)?;
    Ok(Comparison {
        friedman: friedman_test(scores)?,
        win_matrix: pairwise_comparison(scores, classifiers, alpha)?,
    })
}

/// Left-aligned first column, right-aligned others.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut out = String::new();
        for (c, cell) in cells.iter().enumerate().take(cols) {
            if c > 0 {
                out.push_str("  ");
            }
            if c == 0 {
                out.push_str(&format!("{cell:<w$}", w = widths[c]));
            } else {
                out.push_str(&format!("{cell:>w$}", w = widths[c]));
            }
        }
        out.trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

impl WinMatrix {
    /// Win counts with a `*` on the higher count of each significant pair
    /// and the summary score as last column.
    pub fn render(&self) -> String {
        let k = self.classifiers.len();
        let mut header = vec![String::new()];
        header.extend(self.classifiers.iter().cloned());
        header.push("summary".into());
        let rows: Vec<Vec<String>> = (0..k)
            .map(|i| {
                let mut row = vec![self.classifiers[i].clone()];
                for j in 0..k {
                    row.push(if i == j {
                        "-".into()
                    } else if self.significant[i][j] && self.wins[i][j] > self.wins[j][i] {
                        format!("{}*", self.wins[i][j])
                    } else {
                        self.wins[i][j].to_string()
                    });
                }
                row.push(self.summary_score[i].to_string());
                row
            })
            .collect();
        render_table(&header, &rows)
    }

    /// Holm-adjusted p-values of all pairs.
    pub fn render_p_values(&self) -> String {
        let k = self.classifiers.len();
        let mut header = vec![String::new()];
        header.extend(self.classifiers.iter().cloned());
        let rows: Vec<Vec<String>> = (0..k)
            .map(|i| {
                let mut row = vec![self.classifiers[i].clone()];
                row.extend((0..k).map(|j| {
                    if i == j {
                        "-".into()
                    } else {
                        format!("{:.4e}", self.adjusted_p_values[i][j])
                    }
                }));
                row
            })
            .collect();
        render_table(&header, &rows)
    }
}
