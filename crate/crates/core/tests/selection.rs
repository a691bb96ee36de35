mod common;

use std::collections::BTreeSet;

use common::clusters;
use ontorel::classifiers::ClassifierKind;
use ontorel::selection::{grid_search, stratified_kfold, Axis, GridSpec, Scoring};
use proptest::prelude::*;
use serde_json::json;

fn knn_grid(values: &[serde_json::Value]) -> GridSpec {
    GridSpec {
        kind: ClassifierKind::Knn,
        axes: vec![Axis {
            name: "n_neighbors".into(),
            values: values.to_vec(),
        }],
    }
}

#[test]
fn default_grids_expand() {
    for kind in ClassifierKind::ALL {
        let grid = GridSpec::default_for(kind);
        grid.validate().unwrap();
        let points = grid.points();
        assert_eq!(points.len(), grid.n_points());
        let distinct: BTreeSet<String> = points.iter().map(|p| serde_json::to_string(p).unwrap()).collect();
        assert_eq!(distinct.len(), points.len(), "{kind:?}");
    }
    assert_eq!(GridSpec::default_for(ClassifierKind::Knn).n_points(), 200);
}

#[test]
fn grid_search_selects_and_skips() {
    let data = clusters(3, 12, 4, 3.0, 0.4, 1);
    let cv = grid_search(&knn_grid(&[json!(1), json!(0), json!(5)]), &data, 3, 2, Scoring::Accuracy).unwrap();
    assert_eq!(cv.points.len(), 3);
    assert_eq!(cv.n_skipped(), 1);
    assert!(cv.points[1].skipped.is_some() && cv.points[1].mean_score.is_none());
    assert_ne!(cv.best_index, 1);
    let best = cv.best_point().mean_score.unwrap();
    for p in &cv.points {
        if let Some(m) = p.mean_score {
            assert_eq!(p.fold_scores.len(), 3);
            assert!(m <= best);
        }
    }
    assert_eq!(cv.best, cv.best_point().spec.clone().unwrap());
}

#[test]
fn ties_go_to_the_earliest_point() {
    let data = clusters(2, 9, 3, 10.0, 0.1, 3);
    let cv = grid_search(&knn_grid(&[json!(1), json!(3)]), &data, 3, 0, Scoring::MacroF1).unwrap();
    assert_eq!(cv.points[0].mean_score, cv.points[1].mean_score);
    assert_eq!(cv.best_index, 0);
}

#[test]
fn all_infeasible_grid_is_an_error() {
    let data = clusters(2, 6, 3, 2.0, 0.1, 4);
    let err = grid_search(&knn_grid(&[json!(0)]), &data, 2, 0, Scoring::Accuracy).unwrap_err();
    assert_eq!(err.code(), "all_infeasible");
}

#[test]
fn search_is_deterministic() {
    let data = clusters(3, 10, 4, 1.0, 0.7, 5);
    let grid = GridSpec::default_for(ClassifierKind::RandomForest);
    let small = GridSpec {
        kind: grid.kind,
        axes: grid.axes.into_iter().map(|a| Axis { values: a.values[..1].to_vec(), ..a }).collect(),
    };
    let a = grid_search(&small, &data, 3, 9, Scoring::Accuracy).unwrap();
    let b = grid_search(&small, &data, 3, 9, Scoring::Accuracy).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn folds_need_enough_samples() {
    let data = clusters(2, 3, 2, 1.0, 0.1, 6);
    assert_eq!(stratified_kfold(&data, 4, 0).unwrap_err().code(), "class_too_small");
    assert!(stratified_kfold(&data, 1, 0).is_err());
}

proptest! {
    #[test]
    fn folds_partition_and_stratify(per_class in 5usize..15, n_classes in 2usize..4, k in 2usize..5, seed in 0u64..200) {
        let data = clusters(n_classes, per_class, 4, 1.0, 1.0, seed);
        let folds = stratified_kfold(&data, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0usize; data.len()];
        for (train, val) in &folds {
            prop_assert_eq!(train.len() + val.len(), data.len());
            for &i in val {
                seen[i] += 1;
            }
            for c in 0..n_classes {
                let n = val.iter().filter(|&&i| data.labels()[i] == c).count();
                prop_assert!(n.abs_diff(per_class / k) <= 1);
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }
}
