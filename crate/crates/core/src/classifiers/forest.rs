//! Random forest of greedy axis-aligned classification trees.

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::params::{Criterion, RandomForestParams};
use super::Design;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class frequencies of the (weighted) training samples in the leaf.
    Leaf { distribution: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

/// Impurity of a weighted class histogram.
pub fn impurity(criterion: Criterion, counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    match criterion {
        Criterion::Gini => 1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>(),
        Criterion::Entropy => -counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|c| {
                let p = c / total;
                p * p.log2()
            })
            .sum::<f64>(),
    }
}

struct TreeBuilder<'a> {
    design: &'a Design<'a>,
    weights: &'a [f64],
    criterion: Criterion,
    max_depth: usize,
    n_split_features: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl TreeBuilder<'_> {
    fn histogram(&self, samples: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.design.n_classes];
        for &i in samples {
            counts[self.design.y[i]] += self.weights[i];
        }
        counts
    }

    fn leaf(&mut self, counts: Vec<f64>) -> usize {
        let total: f64 = counts.iter().sum();
        let distribution = counts.into_iter().map(|c| c / total).collect();
        self.nodes.push(Node::Leaf { distribution });
        self.nodes.len() - 1
    }

    fn best_split(&self, samples: &[usize], features: &[usize], parent_total: f64) -> Option<BestSplit> {
        let n_classes = self.design.n_classes;
        let mut best: Option<BestSplit> = None;
        let mut order = samples.to_vec();
        for &feature in features {
            let x = |i: usize| self.design.x[i][feature];
            order.sort_by(|&a, &b| x(a).total_cmp(&x(b)).then(a.cmp(&b)));
            let mut left = vec![0.0; n_classes];
            let mut right = self.histogram(&order);
            let mut left_total = 0.0;
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                let w = self.weights[i];
                left[self.design.y[i]] += w;
                right[self.design.y[i]] -= w;
                left_total += w;
                let (lo, hi) = (x(i), x(order[pos + 1]));
                if lo == hi {
                    continue;
                }
                let right_total = parent_total - left_total;
                let score = (left_total * impurity(self.criterion, &left)
                    + right_total * impurity(self.criterion, &right))
                    / parent_total;
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                // Strict improvement keeps the lowest feature index, then the
                // lowest threshold, on ties.
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, samples: &[usize], depth: usize, rng: &mut rng::Rng) -> usize {
        let counts = self.histogram(samples);
        let total: f64 = counts.iter().sum();
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if depth >= self.max_depth || pure || samples.len() < 2 {
            return self.leaf(counts);
        }
        let dim = self.design.dim;
        let mut features = if self.n_split_features >= dim {
            (0..dim).collect::<Vec<_>>()
        } else {
            sample(rng, dim, self.n_split_features).into_vec()
        };
        features.sort_unstable();
        let Some(split) = self.best_split(samples, &features, total) else {
            return self.leaf(counts);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.design.x[i][split.feature] <= split.threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            distribution: Vec::new(),
        });
        let left_id = self.grow(&left, depth + 1, rng);
        let right_id = self.grow(&right, depth + 1, rng);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_id,
            right: right_id,
        };
        slot
    }
}

impl DecisionTree {
    /// Grows a tree on `samples` (indices into `design`, repeated for
    /// bootstrap draws via `weights`). Each split considers a random subset of
    /// `n_split_features` features; all of them when it is at least the
    /// dimension, in which case the tree does not depend on `rng`.
    pub(crate) fn fit(
        design: &Design<'_>,
        samples: &[usize],
        weights: &[f64],
        criterion: Criterion,
        max_depth: usize,
        n_split_features: usize,
        rng: &mut rng::Rng,
    ) -> DecisionTree {
        let mut builder = TreeBuilder {
            design,
            weights,
            criterion,
            max_depth,
            n_split_features: n_split_features.max(1),
            nodes: Vec::new(),
        };
        builder.grow(samples, 0, rng);
        DecisionTree {
            nodes: builder.nodes,
        }
    }

    pub fn leaf_distribution(&self, x: &[f64]) -> &[f64] {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { distribution } => return distribution,
            }
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn depth(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Split { left, right, .. } => 1 + depth(nodes, *left).max(depth(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        depth(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub(crate) trees: Vec<DecisionTree>,
}

impl Forest {
    pub(crate) fn fit(params: &RandomForestParams, design: &Design<'_>, seed: u64) -> Forest {
        let n = design.x.len();
        let n_split_features = ((params.max_features_fraction * design.dim as f64).round() as usize).max(1);
        let seeds: Vec<u64> = (0..params.n_estimators as u64).map(|t| rng::derive(seed, t)).collect();
        let trees = crate::par::map(&seeds, |&tree_seed| {
            let mut rng = rng::seeded(tree_seed);
            let mut weights = vec![0.0; n];
            if params.bootstrap {
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weights.iter_mut().for_each(|w| *w = 1.0);
            }
            let samples: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
            DecisionTree::fit(
                design,
                &samples,
                &weights,
                params.criterion,
                params.max_depth,
                n_split_features,
                &mut rng,
            )
        });
        Forest { trees }
    }

    pub fn from_trees(trees: Vec<DecisionTree>) -> Forest {
        Forest { trees }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Mean of the per-tree leaf class frequencies.
    pub(crate) fn proba(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let mut p = vec![0.0; n_classes];
        for tree in &self.trees {
            for (acc, v) in p.iter_mut().zip(tree.leaf_distribution(x)) {
                *acc += v;
            }
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impurities() {
        assert_eq!(impurity(Criterion::Gini, &[5.0, 0.0]), 0.0);
        assert!((impurity(Criterion::Gini, &[1.0, 1.0]) - 0.5).abs() < 1e-15);
        assert!((impurity(Criterion::Entropy, &[1.0, 1.0]) - 1.0).abs() < 1e-15);
        assert_eq!(impurity(Criterion::Entropy, &[3.0, 0.0, 0.0]), 0.0);
        assert!((impurity(Criterion::Entropy, &[1.0, 1.0, 1.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    fn design<'a>(x: &'a [Vec<f64>], y: &'a [usize], n_classes: usize) -> Design<'a> {
        Design {
            x: x.iter().map(Vec::as_slice).collect(),
            y: y.to_vec(),
            n_classes,
            dim: x[0].len(),
        }
    }

    #[test]
    fn threshold_separates_one_dimension() {
        let x: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 10.0, 11.0, 12.0].iter().map(|&v| vec![v]).collect();
        let y = [0, 0, 0, 1, 1, 1];
        let d = design(&x, &y, 2);
        let w = vec![1.0; 6];
        let tree = DecisionTree::fit(&d, &[0, 1, 2, 3, 4, 5], &w, Criterion::Gini, 5, 1, &mut rng::seeded(0));
        assert_eq!(tree.depth(), 1);
        match &tree.nodes()[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 6.0);
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(tree.leaf_distribution(&[4.0]), &[1.0, 0.0]);
    }

    #[test]
    fn tie_prefers_lowest_feature() {
        // Both features separate the classes perfectly.
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let y = [0, 1];
        let d = design(&x, &y, 2);
        let tree = DecisionTree::fit(&d, &[0, 1], &[1.0, 1.0], Criterion::Entropy, 3, 2, &mut rng::seeded(0));
        assert!(matches!(tree.nodes()[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn max_depth_limits_growth() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64]).collect();
        let y: Vec<usize> = (0..16).map(|i| i % 2).collect();
        let d = design(&x, &y, 2);
        let idx: Vec<usize> = (0..16).collect();
        let tree = DecisionTree::fit(&d, &idx, &[1.0; 16], Criterion::Gini, 2, 1, &mut rng::seeded(0));
        assert!(tree.depth() <= 2);
    }

    #[test]
    fn forest_averages_leaves() {
        let leaf = |d: Vec<f64>| DecisionTree {
            nodes: vec![Node::Leaf { distribution: d }],
        };
        let forest = Forest::from_trees(vec![leaf(vec![1.0, 0.0]), leaf(vec![0.0, 1.0])]);
        assert_eq!(forest.proba(&[0.0], 2), vec![0.5, 0.5]);
    }
}
