//! Quality measures and rank-based significance testing.

pub mod compare;
pub mod metrics;
pub mod significance;

pub use compare::{compare, pairwise_comparison, Comparison, WinMatrix, DEFAULT_ALPHA};
pub use metrics::{compute_metrics, per_class, ClassMetrics, ConfusionMatrix, MetricReport};
pub use significance::{
    friedman_test, holm_correction, rank_average, wilcoxon_signed_rank, wilcoxon_signed_rank_with, TestMethod,
    TestResult, WilcoxonMethod, WilcoxonResult,
};
