use approx::assert_relative_eq;
use ontorel::stats::{
    compare, friedman_test, holm_correction, pairwise_comparison, rank_average, wilcoxon_signed_rank,
    wilcoxon_signed_rank_with, TestMethod, WilcoxonMethod,
};
use proptest::prelude::*;

// Reference values below were produced with scipy 1.15 (`stats.wilcoxon`,
// `stats.friedmanchisquare`).

#[test]
fn wilcoxon_exact_reference() {
    let d = [0.5, -1.25, 2.0, 3.5, -0.75, 4.0, 1.5, 6.0, -0.25];
    let r = wilcoxon_signed_rank(&d, &[0.0; 9]).unwrap();
    assert_eq!(r.test.method, TestMethod::WilcoxonExact);
    assert_eq!(r.test.statistic, 8.0);
    assert_relative_eq!(r.test.p_value, 0.09765625, max_relative = 1e-12);
}

/// Tied absolute differences: the null distribution is taken over the tied
/// mean ranks (8 of 256 sign patterns), where scipy's exact mode reports
/// 10/256 from the untied distribution.
#[test]
fn wilcoxon_exact_with_tied_ranks() {
    let x = [0.91, 0.87, 0.93, 0.89, 0.95, 0.90, 0.88, 0.92];
    let y = [0.85, 0.88, 0.90, 0.86, 0.91, 0.87, 0.89, 0.84];
    let r = wilcoxon_signed_rank(&x, &y).unwrap();
    assert_eq!(r.test.statistic, 3.0);
    assert_eq!(r.test.p_value, 8.0 / 256.0);
}

#[test]
fn wilcoxon_normal_reference() {
    let a: Vec<f64> = (0..30).map(|i| (i % 7) as f64 + 0.01 * i as f64).collect();
    let b: Vec<f64> = (0..30).map(|i| ((i * 3) % 7) as f64 + 0.013 * i as f64).collect();
    let r = wilcoxon_signed_rank(&a, &b).unwrap();
    assert_eq!(r.test.method, TestMethod::WilcoxonNormal);
    assert_eq!(r.test.statistic, 178.0);
    assert_relative_eq!(r.test.p_value, 0.3990579735239722, max_relative = 1e-9);
}

#[test]
fn wilcoxon_normal_with_ties_reference() {
    let c: Vec<f64> = (1..=28).map(f64::from).collect();
    let d: Vec<f64> = c
        .iter()
        .enumerate()
        .map(|(i, v)| v - [1.0, -2.0, 1.0][i % 3])
        .collect();
    let r = wilcoxon_signed_rank_with(&c, &d, WilcoxonMethod::Normal).unwrap();
    assert_eq!(r.test.statistic, 190.0);
    assert_relative_eq!(r.test.p_value, 0.766443387635288, max_relative = 1e-9);
}

#[test]
fn friedman_reference_with_ties() {
    let s = vec![
        vec![0.9, 0.8, 0.7, 0.85],
        vec![0.92, 0.81, 0.75, 0.8],
        vec![0.88, 0.88, 0.7, 0.86],
        vec![0.95, 0.79, 0.72, 0.9],
        vec![0.9, 0.85, 0.85, 0.8],
    ];
    let r = friedman_test(&s).unwrap();
    assert_relative_eq!(r.statistic, 10.9375, max_relative = 1e-12);
    assert_relative_eq!(r.p_value, 0.012068682163157742, max_relative = 1e-9);
}

#[test]
fn identical_rankings_give_four() {
    let r = friedman_test(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
    assert_eq!(r.statistic, 4.0);
}

#[test]
fn friedman_rejects_degenerate_shapes() {
    assert!(friedman_test(&[vec![1.0, 2.0]]).is_err());
    assert!(friedman_test(&[vec![1.0], vec![2.0]]).is_err());
    assert!(friedman_test(&[vec![1.0, 2.0], vec![1.0]]).is_err());
}

#[test]
fn all_zero_differences() {
    let r = wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
    assert_eq!((r.test.n, r.test.p_value), (0, 1.0));
}

#[test]
fn holm_worked_example() {
    let adjusted = holm_correction(&[0.01, 0.04, 0.03, 0.005]);
    let expected = [0.03, 0.06, 0.06, 0.02];
    for (a, e) in adjusted.iter().zip(expected) {
        assert_relative_eq!(*a, e, max_relative = 1e-12);
    }
    assert_eq!(holm_correction(&[0.6, 0.7]), vec![1.0, 1.0]);
    assert!(holm_correction(&[]).is_empty());
}

#[test]
fn win_matrix_shape_and_marks() {
    let names: Vec<String> = ["rf", "svm", "gp"].iter().map(|s| s.to_string()).collect();
    let scores: Vec<Vec<f64>> = (0..20)
        .map(|i| vec![0.90 + 0.001 * i as f64, 0.80 + 0.002 * i as f64, 0.85])
        .collect();
    let w = pairwise_comparison(&scores, &names, 0.05).unwrap();
    assert_eq!(w.wins[0], vec![0, 20, 20]);
    assert_eq!(w.wins[1][0], 0);
    assert_eq!(w.wins[2], vec![0, 20, 0]);
    assert!(w.significant[0][1] && w.significant[0][2]);
    let table = w.render();
    assert!(table.contains('*'), "{table}");
    assert!(pairwise_comparison(&scores[..1], &names, 0.05).is_err());
    assert!(pairwise_comparison(&scores, &names, 1.5).is_err());
}

#[test]
fn compare_rejects_ragged_rows() {
    let names = vec!["a".to_string(), "b".to_string()];
    assert!(compare(&[vec![1.0, 2.0], vec![1.0]], &names, 0.05).is_err());
}

proptest! {
    #[test]
    fn ranks_sum_to_triangular(values in prop::collection::vec(0u8..6, 1..30)) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        let n = v.len() as f64;
        let r = rank_average(&v);
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn wilcoxon_is_symmetric(pairs in prop::collection::vec((0u8..8, 0u8..8), 1..40)) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let ab = wilcoxon_signed_rank(&a, &b).unwrap();
        let ba = wilcoxon_signed_rank(&b, &a).unwrap();
        prop_assert_eq!(ab.test.p_value, ba.test.p_value);
        prop_assert_eq!((ab.w_plus, ab.w_minus), (ba.w_minus, ba.w_plus));
        prop_assert!((0.0..=1.0).contains(&ab.test.p_value));
    }

    #[test]
    fn holm_dominates_and_preserves_order(p in prop::collection::vec(0.0f64..1.0, 1..25)) {
        let adj = holm_correction(&p);
        for i in 0..p.len() {
            prop_assert!(adj[i] >= p[i] && adj[i] <= 1.0);
            for j in 0..p.len() {
                if p[i] < p[j] {
                    prop_assert!(adj[i] <= adj[j]);
                }
            }
        }
    }

    #[test]
    fn friedman_invariant_to_monotone_rescaling(rows in prop::collection::vec(prop::collection::vec(0u8..10, 4), 2..12)) {
        let s: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        let t: Vec<Vec<f64>> = s.iter().map(|r| r.iter().map(|x| 3.0 * x + 1.0).collect()).collect();
        let a = friedman_test(&s).unwrap();
        let b = friedman_test(&t).unwrap();
        prop_assert_eq!(a.statistic, b.statistic);
        prop_assert!((0.0..=1.0).contains(&a.p_value));
    }

    #[test]
    fn wins_and_ties_partition_datasets(rows in prop::collection::vec(prop::collection::vec(0u8..4, 3), 2..15)) {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let s: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        let w = pairwise_comparison(&s, &names, 0.05).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let ties = s.iter().filter(|r| r[i] == r[j]).count();
                if i != j {
                    prop_assert_eq!(w.wins[i][j] + w.wins[j][i] + ties, s.len());
                }
            }
        }
    }
}
