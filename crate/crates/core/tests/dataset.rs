mod common;

use std::collections::BTreeSet;

use common::{clusters, label};
use ontorel::dataset::{partition_disjoint, stratified_split, undersample, LabeledDataset, SplitSpec, UndersampleCap};
use ontorel::embed::VectorStore;
use ontorel::{EmbeddedSample, EmbeddingVector, Error};
use proptest::prelude::*;

fn ids(d: &LabeledDataset) -> BTreeSet<String> {
    d.samples().iter().map(|s| s.sample_id.clone()).collect()
}

fn unbalanced(counts: &[usize]) -> LabeledDataset {
    let mut samples = Vec::new();
    for (c, &n) in counts.iter().enumerate() {
        for i in 0..n {
            let v = EmbeddingVector::new(vec![c as f64, i as f64]).unwrap();
            samples.push(EmbeddedSample::annotation(format!("{c}-{i}"), v, label(c)));
        }
    }
    LabeledDataset::from_samples(samples).unwrap()
}

#[test]
fn split_is_stratified_and_disjoint() {
    let data = unbalanced(&[10, 7, 3]);
    let (train, test) = stratified_split(&data, &SplitSpec { seed: 4, ..SplitSpec::default() }).unwrap();
    assert_eq!(train.class_counts(), [5, 4, 2]);
    assert_eq!(test.class_counts(), [5, 3, 1]);
    assert!(ids(&train).is_disjoint(&ids(&test)));
    assert_eq!(train.label_vocab(), data.label_vocab());
}

#[test]
fn split_needs_two_per_class() {
    let err = stratified_split(&unbalanced(&[4, 1]), &SplitSpec::default()).unwrap_err();
    assert!(matches!(err, Error::ClassTooSmall { count: 1, .. }), "{err}");
    let bad = SplitSpec { train_fraction: 1.0, ..SplitSpec::default() };
    assert_eq!(stratified_split(&unbalanced(&[4, 4]), &bad).unwrap_err().code(), "invalid_parameter");
}

#[test]
fn partitions_cover_the_test_side() {
    let data = clusters(4, 25, 4, 1.0, 1.0, 3);
    let parts = partition_disjoint(&data, 20, 8).unwrap();
    assert_eq!(parts.len(), 20);
    let sizes: Vec<usize> = parts.iter().map(LabeledDataset::len).collect();
    assert!(sizes.iter().all(|&n| n == 5));
    let union: BTreeSet<String> = parts.iter().flat_map(ids).collect();
    assert_eq!(union, ids(&data));
    assert!(partition_disjoint(&data, 101, 0).is_err());
    assert!(partition_disjoint(&data, 0, 0).is_err());
}

#[test]
fn undersampling_caps_classes() {
    let data = unbalanced(&[9, 4, 6]);
    assert_eq!(undersample(&data, UndersampleCap::MinClass, 1).unwrap().class_counts(), [4, 4, 4]);
    assert_eq!(undersample(&data, UndersampleCap::Count(5), 1).unwrap().class_counts(), [5, 4, 5]);
    assert!(undersample(&data, UndersampleCap::Count(0), 1).is_err());
    assert_eq!("min-class".parse::<UndersampleCap>().unwrap(), UndersampleCap::MinClass);
    assert_eq!("7".parse::<UndersampleCap>().unwrap(), UndersampleCap::Count(7));
    assert!("0".parse::<UndersampleCap>().is_err());
}

#[test]
fn label_rows_rejoin_with_a_store() {
    let data = unbalanced(&[3, 2]);
    let mut store = VectorStore::new(2).unwrap();
    for s in data.samples() {
        store.insert(&s.sample_id, s.vector.as_slice()).unwrap();
    }
    let rows = data.label_rows();
    let back = LabeledDataset::from_rows(&rows, data.label_vocab().to_vec(), &store).unwrap();
    assert_eq!(back.labels(), data.labels());
    assert_eq!(ids(&back), ids(&data));

    let empty = VectorStore::new(2).unwrap();
    let err = LabeledDataset::from_rows(&rows, data.label_vocab().to_vec(), &empty).unwrap_err();
    assert_eq!(err.code(), "unknown_sample_id");
}

#[test]
fn mixed_dimensions_are_rejected() {
    let samples = vec![
        EmbeddedSample::annotation("a".into(), EmbeddingVector::new(vec![1.0, 2.0]).unwrap(), label(0)),
        EmbeddedSample::annotation("b".into(), EmbeddingVector::new(vec![1.0]).unwrap(), label(1)),
    ];
    assert_eq!(LabeledDataset::from_samples(samples).unwrap_err().code(), "dimension_mismatch");
}

proptest! {
    #[test]
    fn split_respects_class_proportions(counts in prop::collection::vec(2usize..30, 2..5), seed in 0u64..500) {
        let data = unbalanced(&counts);
        let (train, test) = stratified_split(&data, &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
        for (c, &n) in counts.iter().enumerate() {
            let t = train.class_counts()[c];
            prop_assert!(t >= 1 && t < n);
            prop_assert!((t as f64 - n as f64 / 2.0).abs() <= 0.5);
            prop_assert_eq!(t + test.class_counts()[c], n);
        }
    }

    #[test]
    fn partition_sizes_differ_by_at_most_one(counts in prop::collection::vec(1usize..20, 1..4), k in 1usize..10, seed in 0u64..100) {
        let data = unbalanced(&counts);
        prop_assume!(k <= data.len());
        let parts = partition_disjoint(&data, k, seed).unwrap();
        let sizes: Vec<usize> = parts.iter().map(LabeledDataset::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(sizes.iter().sum::<usize>(), data.len());
    }
}
