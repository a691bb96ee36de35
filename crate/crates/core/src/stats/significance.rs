//! Friedman test, Wilcoxon signed-rank test and Holm step-down adjustment.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest effective sample size for which the Wilcoxon p-value is exact.
pub const EXACT_WILCOXON_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Friedman,
    WilcoxonExact,
    WilcoxonNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    /// Number of blocks (Friedman) or of non-zero differences (Wilcoxon).
    pub n: usize,
}

/// Ranks starting at 1, ties receiving the mean of the ranks they span.
pub fn rank_average(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mean = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

/// Sizes of the groups of equal values.
fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let mut end = start + 1;
        while end < sorted.len() && sorted[end] == sorted[start] {
            end += 1;
        }
        groups.push(end - start);
        start = end;
    }
    groups
}

/// Friedman rank test on an `n x k` score matrix (blocks in rows), with the
/// correction for ties within rows.
pub fn friedman_test(scores: &[Vec<f64>]) -> Result<TestResult> {
    let n = scores.len();
    let k = scores.first().map(Vec::len).unwrap_or(0);
    if n < 2 || k < 2 {
        return Err(Error::InvalidInput("friedman test needs at least 2 rows and 2 columns".into()));
    }
    if scores.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidInput("friedman score rows differ in length".into()));
    }
    let mut rank_sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for row in scores {
        for (sum, r) in rank_sums.iter_mut().zip(rank_average(row)) {
            *sum += r;
        }
        tie_term += tie_groups(row).iter().map(|&t| (t * t * t - t) as f64).sum::<f64>();
    }
    let (nf, kf) = (n as f64, k as f64);
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * rank_sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * nf * (kf + 1.0);
    let correction = 1.0 - tie_term / (nf * kf * (kf * kf - 1.0));
    let (statistic, p_value) = if correction <= 0.0 {
        (0.0, 1.0)
    } else {
        let statistic = (raw / correction).max(0.0);
        let chi2 = ChiSquared::new(kf - 1.0).expect("positive degrees of freedom");
        (statistic, chi2.sf(statistic))
    };
    Ok(TestResult {
        statistic,
        p_value,
        method: TestMethod::Friedman,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    /// Exact up to [`EXACT_WILCOXON_MAX_N`] non-zero differences, normal
    /// approximation beyond.
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub test: TestResult,
    pub w_plus: f64,
    pub w_minus: f64,
}

/// Two-sided Wilcoxon signed-rank test of paired samples. Zero differences
/// are dropped; `test.n` reports how many remain.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(a, b, WilcoxonMethod::Auto)
}

pub fn wilcoxon_signed_rank_with(a: &[f64], b: &[f64], method: WilcoxonMethod) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("wilcoxon samples differ in length".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            test: TestResult {
                statistic: 0.0,
                p_value: 1.0,
                method: TestMethod::WilcoxonExact,
                n: 0,
            },
            w_plus: 0.0,
            w_minus: 0.0,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = rank_average(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let statistic = w_plus.min(w_minus);
    let exact = match method {
        WilcoxonMethod::Auto => n <= EXACT_WILCOXON_MAX_N,
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    let test = if exact {
        TestResult {
            statistic,
            p_value: exact_p(&ranks, statistic),
            method: TestMethod::WilcoxonExact,
            n,
        }
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let ties: f64 = tie_groups(&abs).iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let d = statistic - mean;
        let p_value = if var <= 0.0 || d == 0.0 {
            1.0
        } else {
            let z = (d + 0.5) / var.sqrt();
            let normal = Normal::standard();
            (2.0 * normal.cdf(z.min(0.0))).min(1.0)
        };
        TestResult {
            statistic,
            p_value,
            method: TestMethod::WilcoxonNormal,
            n,
        }
    };
    Ok(WilcoxonResult { test, w_plus, w_minus })
}

/// Share of the `2^n` sign assignments whose `min(W+, W-)` is at most the
/// observed statistic, counted by dynamic programming over doubled ranks
/// (integers even with tied mean ranks).
fn exact_p(ranks: &[f64], statistic: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let observed = (2.0 * statistic).round() as usize;
    let hits: f64 = counts
        .iter()
        .enumerate()
        .filter(|&(s, _)| s.min(total - s) <= observed)
        .map(|(_, c)| c)
        .sum();
    hits / 2f64.powi(ranks.len() as i32)
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_correction(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (step, &i) in order.iter().enumerate() {
        let value = ((m - step) as f64 * p_values[i]).min(1.0);
        running = running.max(value);
        adjusted[i] = running;
    }
    adjusted
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_ranks_with_ties() {
        assert_eq!(rank_average(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn friedman_identical_rankings() {
        let r = friedman_test(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(r.statistic, 4.0);
        let all_equal = friedman_test(&[vec![0.5; 4], vec![0.5; 4], vec![0.5; 4]]).unwrap();
        assert_eq!((all_equal.statistic, all_equal.p_value), (0.0, 1.0));
    }

    #[test]
    fn wilcoxon_all_positive() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.test.statistic, 0.0);
        assert_eq!(r.test.p_value, 0.0625);
        let swapped = wilcoxon_signed_rank(&b, &a).unwrap();
        assert_eq!(swapped.test.p_value, r.test.p_value);
        assert_eq!((swapped.w_plus, swapped.w_minus), (r.w_minus, r.w_plus));
    }

    #[test]
    fn wilcoxon_no_signal() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((r.test.p_value, r.test.n), (1.0, 0));
    }

    #[test]
    fn holm_fixture() {
        let adj = holm_correction(&[0.01, 0.04, 0.03]);
        let expected = [0.03, 0.06, 0.06];
        for (a, e) in adj.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15, "{adj:?}");
        }
        assert_eq!(holm_correction(&[0.2]), vec![0.2]);
        assert_eq!(holm_correction(&[0.0, 0.0]), vec![0.0, 0.0]);
    }
}
