#![allow(dead_code)]

use ontorel::dataset::LabeledDataset;
use ontorel::{EmbeddedSample, EmbeddingVector, OntologyId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn label(i: usize) -> OntologyId {
    OntologyId::new(format!("C{i}")).unwrap()
}

/// Gaussian clusters centered at `separation / sqrt 2` times the unit
/// vectors, so every pair of centers is exactly `separation` apart.
pub fn clusters(n_classes: usize, per_class: usize, dim: usize, separation: f64, sigma: f64, seed: u64) -> LabeledDataset {
    assert!(n_classes <= dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let scale = separation / 2f64.sqrt();
    let mut samples = Vec::new();
    for c in 0..n_classes {
        for i in 0..per_class {
            let mut v: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
            v[c] += scale;
            samples.push(EmbeddedSample::annotation(
                format!("c{c}-{i}"),
                EmbeddingVector::new(v).unwrap(),
                label(c),
            ));
        }
    }
    LabeledDataset::from_samples(samples).unwrap()
}

pub fn accuracy(model: &ontorel::classifiers::TrainedModel, data: &LabeledDataset) -> f64 {
    let correct = data
        .samples()
        .iter()
        .zip(data.labels())
        .filter(|(s, &y)| model.predict_index(s.vector.as_slice()).unwrap() == y)
        .count();
    correct as f64 / data.len() as f64
}
