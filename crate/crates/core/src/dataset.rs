//! Labeled datasets: stratified train/test split, disjoint test partitions
//! and majority-class undersampling. All shuffles are seeded; outputs keep
//! the input order of the selected samples.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::embed::{vector_store_lookup, VectorStore};
use crate::error::{Error, Result};
use crate::rng;
use crate::types::{EmbeddedSample, OntologyId};

// Stream tags keep the shuffles of different operations independent even
// when they share a seed.
const SPLIT_STREAM: u64 = 0x5350_4c49_5400_0000;
const PARTITION_STREAM: u64 = 0x5041_5254_0000_0000;
const UNDERSAMPLE_STREAM: u64 = 0x554e_4445_5200_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    samples: Vec<EmbeddedSample>,
    label_vocab: Vec<OntologyId>,
    dim: usize,
    #[serde(skip)]
    labels: Vec<usize>,
}

impl LabeledDataset {
    /// Builds a dataset with the given vocabulary order. Every sample must be
    /// labeled with a vocabulary member, share one dimension and have a
    /// distinct id.
    pub fn new(samples: Vec<EmbeddedSample>, label_vocab: Vec<OntologyId>) -> Result<Self> {
        let vocab_set: BTreeSet<&OntologyId> = label_vocab.iter().collect();
        if vocab_set.len() != label_vocab.len() {
            return Err(Error::InvalidInput("label vocabulary has duplicates".into()));
        }
        let dim = samples.first().map(|s| s.vector.dim()).unwrap_or(0);
        let mut ids = HashSet::with_capacity(samples.len());
        let mut labels = Vec::with_capacity(samples.len());
        for sample in &samples {
            let label = sample.label.as_ref().ok_or_else(|| {
                Error::InvalidInput(format!("sample {} is unlabeled", sample.sample_id))
            })?;
            let index = label_vocab.iter().position(|l| l == label).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "sample {} has label {label} outside the vocabulary",
                    sample.sample_id
                ))
            })?;
            if sample.vector.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: sample.vector.dim(),
                    context: Some(format!("sample {}", sample.sample_id)),
                });
            }
            if !ids.insert(sample.sample_id.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate sample id {}",
                    sample.sample_id
                )));
            }
            labels.push(index);
        }
        Ok(LabeledDataset {
            samples,
            label_vocab,
            dim,
            labels,
        })
    }

    /// Builds a dataset whose vocabulary is the sorted set of sample labels.
    pub fn from_samples(samples: Vec<EmbeddedSample>) -> Result<Self> {
        let vocab: BTreeSet<OntologyId> = samples.iter().filter_map(|s| s.label.clone()).collect();
        LabeledDataset::new(samples, vocab.into_iter().collect())
    }

    /// Re-derives the cached label indices after deserialization.
    pub fn revalidate(self) -> Result<Self> {
        LabeledDataset::new(self.samples, self.label_vocab)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[EmbeddedSample] {
        &self.samples
    }

    pub fn label_vocab(&self) -> &[OntologyId] {
        &self.label_vocab
    }

    /// Vocabulary index of each sample's label.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> Vec<&[f64]> {
        self.samples.iter().map(|s| s.vector.as_slice()).collect()
    }

    /// Sample indices of each vocabulary class, in dataset order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.label_vocab.len()];
        for (i, &label) in self.labels.iter().enumerate() {
            by_class[label].push(i);
        }
        by_class
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.class_indices().iter().map(Vec::len).collect()
    }

    /// The samples at `indices` (in the given order), keeping the vocabulary.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            label_vocab: self.label_vocab.clone(),
            dim: self.dim,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// One row of a persisted label table; vectors live in a separate store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub sample_id: String,
    pub label: OntologyId,
}

impl LabeledDataset {
    pub fn label_rows(&self) -> Vec<LabelRow> {
        self.samples
            .iter()
            .zip(&self.labels)
            .map(|(s, &l)| LabelRow {
                sample_id: s.sample_id.clone(),
                label: self.label_vocab[l].clone(),
            })
            .collect()
    }

    /// Joins a label table with the vectors of `store`.
    pub fn from_rows(rows: &[LabelRow], label_vocab: Vec<OntologyId>, store: &VectorStore) -> Result<Self> {
        let ids: Vec<String> = rows.iter().map(|r| r.sample_id.clone()).collect();
        let vectors = vector_store_lookup(&ids, store)?;
        let samples = rows
            .iter()
            .zip(vectors)
            .map(|(r, v)| EmbeddedSample::annotation(r.sample_id.clone(), v, r.label.clone()))
            .collect();
        LabeledDataset::new(samples, label_vocab)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub n_test_partitions: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.5,
            n_test_partitions: 20,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::param("train_fraction", "must lie in (0, 1)"));
        }
        if self.n_test_partitions == 0 {
            return Err(Error::param("n_test_partitions", "must be positive"));
        }
        Ok(())
    }
}

fn shuffled(indices: &[usize], seed: u64, stream: u64) -> Vec<usize> {
    let mut shuffled = indices.to_vec();
    shuffled.shuffle(&mut rng::derived(seed, stream));
    shuffled
}

/// Per class, `round(train_fraction * count)` samples (clamped so both sides
/// get at least one) go to the training side; the rest to the test side.
pub fn stratified_split(data: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, indices) in data.class_indices().iter().enumerate() {
        if indices.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: data.label_vocab[class].to_string(),
                count: indices.len(),
                required: 2,
            });
        }
        let order = shuffled(indices, spec.seed, SPLIT_STREAM + class as u64);
        let n_train = ((spec.train_fraction * indices.len() as f64).round() as usize)
            .clamp(1, indices.len() - 1);
        train.extend_from_slice(&order[..n_train]);
        test.extend_from_slice(&order[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.subset(&train), data.subset(&test)))
}

/// Splits `data` into `k` pairwise disjoint parts: each class is shuffled and
/// dealt round-robin, the dealing position carrying over between classes so
/// that total part sizes also differ by at most one.
pub fn partition_disjoint(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<LabeledDataset>> {
    if k == 0 {
        return Err(Error::param("k", "must be positive"));
    }
    if k > data.len() {
        return Err(Error::InvalidInput(format!(
            "cannot partition {} samples into {k} parts",
            data.len()
        )));
    }
    let mut parts = vec![Vec::new(); k];
    let mut position = 0usize;
    for (class, indices) in data.class_indices().iter().enumerate() {
        for i in shuffled(indices, seed, PARTITION_STREAM + class as u64) {
            parts[position % k].push(i);
            position += 1;
        }
    }
    Ok(parts
        .into_iter()
        .map(|mut part| {
            part.sort_unstable();
            data.subset(&part)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndersampleCap {
    Count(usize),
    MinClass,
}

impl std::str::FromStr for UndersampleCap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "min-class" {
            return Ok(UndersampleCap::MinClass);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(UndersampleCap::Count(n)),
            _ => Err(Error::param("cap", format!("expected a positive count or \"min-class\", got {s:?}"))),
        }
    }
}

/// Keeps `min(count, cap)` samples of each class, chosen uniformly without
/// replacement.
pub fn undersample(data: &LabeledDataset, cap: UndersampleCap, seed: u64) -> Result<LabeledDataset> {
    let classes = data.class_indices();
    let cap = match cap {
        UndersampleCap::Count(0) => return Err(Error::param("cap", "must be at least 1")),
        UndersampleCap::Count(n) => n,
        UndersampleCap::MinClass => classes
            .iter()
            .map(Vec::len)
            .filter(|&n| n > 0)
            .min()
            .unwrap_or(0),
    };
    let mut keep = Vec::new();
    for (class, indices) in classes.iter().enumerate() {
        if indices.len() <= cap {
            keep.extend_from_slice(indices);
        } else {
            let order = shuffled(indices, seed, UNDERSAMPLE_STREAM + class as u64);
            keep.extend_from_slice(&order[..cap]);
        }
    }
    keep.sort_unstable();
    Ok(data.subset(&keep))
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use crate::types::EmbeddingVector;

    /// Dataset with `counts[c]` samples of class `c`, each a 2-d vector
    /// encoding its class and ordinal.
    pub fn counted(counts: &[usize]) -> LabeledDataset {
        let vocab: Vec<OntologyId> = (0..counts.len())
            .map(|c| OntologyId::new(format!("C{c}")).unwrap())
            .collect();
        let mut samples = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                samples.push(EmbeddedSample::annotation(
                    format!("s{c}_{i}"),
                    EmbeddingVector::new(vec![c as f64, i as f64]).unwrap(),
                    vocab[c].clone(),
                ));
            }
        }
        LabeledDataset::new(samples, vocab).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testing::counted;
    use super::*;

    fn ids(d: &LabeledDataset) -> BTreeSet<String> {
        d.samples().iter().map(|s| s.sample_id.clone()).collect()
    }

    #[test]
    fn even_split() {
        let data = counted(&[50, 50]);
        let (train, test) = stratified_split(&data, &SplitSpec::default()).unwrap();
        assert_eq!(train.class_counts(), vec![25, 25]);
        assert_eq!(test.class_counts(), vec![25, 25]);
        assert!(ids(&train).is_disjoint(&ids(&test)));
    }

    #[test]
    fn rounding_split() {
        let data = counted(&[10, 10, 10, 10, 11]);
        let (train, test) = stratified_split(&data, &SplitSpec::default()).unwrap();
        let counts = train.class_counts();
        assert_eq!(&counts[..4], &[5, 5, 5, 5]);
        assert!(counts[4] == 5 || counts[4] == 6);
        let union: BTreeSet<String> = ids(&train).union(&ids(&test)).cloned().collect();
        assert_eq!(union, ids(&data));
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let data = counted(&[30, 40]);
        let spec = SplitSpec { seed: 7, ..SplitSpec::default() };
        let a = stratified_split(&data, &spec).unwrap();
        let b = stratified_split(&data, &spec).unwrap();
        assert_eq!(a, b);
        let c = stratified_split(&data, &SplitSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(ids(&a.0), ids(&c.0));
    }

    #[test]
    fn singleton_class_rejected() {
        let data = counted(&[5, 1]);
        match stratified_split(&data, &SplitSpec::default()).unwrap_err() {
            Error::ClassTooSmall { class, .. } => assert_eq!(class, "C1"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn partitions_of_two() {
        let data = counted(&[20, 20]);
        let parts = partition_disjoint(&data, 20, 3).unwrap();
        assert_eq!(parts.len(), 20);
        assert!(parts.iter().all(|p| p.len() == 2));
        let whole = partition_disjoint(&data, 1, 3).unwrap();
        assert_eq!(whole[0], data);
        assert!(partition_disjoint(&data, 41, 3).is_err());
    }

    #[test]
    fn undersample_min_class() {
        let data = counted(&[3506, 534]);
        let out = undersample(&data, UndersampleCap::MinClass, 1).unwrap();
        assert_eq!(out.class_counts(), vec![534, 534]);
        let same = undersample(&data, UndersampleCap::MinClass, 1).unwrap();
        assert_eq!(out, same);
        let identity = undersample(&data, UndersampleCap::Count(10_000), 1).unwrap();
        assert_eq!(identity, data);
    }

    #[test]
    fn cap_parsing() {
        assert_eq!("min-class".parse::<UndersampleCap>().unwrap(), UndersampleCap::MinClass);
        assert_eq!("12".parse::<UndersampleCap>().unwrap(), UndersampleCap::Count(12));
        assert!("0".parse::<UndersampleCap>().is_err());
    }

    #[test]
    fn dataset_validation() {
        let mut samples = counted(&[2]).samples().to_vec();
        samples[1].sample_id = samples[0].sample_id.clone();
        assert!(LabeledDataset::from_samples(samples).is_err());
    }
}
