//! k-nearest neighbors over an exact scan of the stored training set.

use serde::{Deserialize, Serialize};

use super::distance::minkowski_unchecked;
use super::params::{KnnParams, KnnWeights};
use super::Design;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    n_neighbors: usize,
    weights: KnnWeights,
    minkowski_c: f64,
    x: Vec<Vec<f64>>,
    y: Vec<usize>,
}

impl KnnModel {
    pub(crate) fn fit(params: &KnnParams, design: &Design<'_>) -> KnnModel {
        KnnModel {
            n_neighbors: params.n_neighbors,
            weights: params.weights,
            minkowski_c: params.minkowski_c,
            x: design.x.iter().map(|r| r.to_vec()).collect(),
            y: design.y.clone(),
        }
    }

    /// The `min(k, n)` nearest training rows as `(distance, index)`, ordered
    /// by distance then index.
    pub fn neighbors(&self, x: &[f64]) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, row)| (minkowski_unchecked(x, row, self.minkowski_c), i))
            .collect();
        let k = self.n_neighbors.min(all.len());
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < all.len() {
            all.select_nth_unstable_by(k - 1, by_distance);
            all.truncate(k);
        }
        all.sort_by(by_distance);
        all
    }

    /// Unnormalized class votes. Distance weighting uses `1/d`; when some
    /// neighbors coincide with `x` they share all of the mass.
    pub(crate) fn votes(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let neighbors = self.neighbors(x);
        let mut votes = vec![0.0; n_classes];
        match self.weights {
            KnnWeights::Uniform => {
                for &(_, i) in &neighbors {
                    votes[self.y[i]] += 1.0;
                }
            }
            KnnWeights::Distance => {
                if neighbors.iter().any(|&(d, _)| d == 0.0) {
                    for &(d, i) in &neighbors {
                        if d == 0.0 {
                            votes[self.y[i]] += 1.0;
                        }
                    }
                } else {
                    for &(d, i) in &neighbors {
                        votes[self.y[i]] += 1.0 / d;
                    }
                }
            }
        }
        votes
    }
}
