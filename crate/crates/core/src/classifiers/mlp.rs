//! One-hidden-layer perceptron with softmax output, trained by mini-batch
//! sgd (with momentum) or adam.
//!
//! Parameters live in one flat vector laid out as `W1 (h x d)`, `b1 (h)`,
//! `W2 (k x h)`, `b2 (k)`, matrices row-major. The loss of a batch of `m`
//! rows is mean cross-entropy plus `alpha / (2m) * (|W1|^2 + |W2|^2)`.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::params::{Activation, LearningRateSchedule, MlpParams, Optimizer};
use super::Design;
use crate::error::{Error, Result};
use crate::rng;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;
const STOP_TOL: f64 = 1e-6;
const MAX_BATCH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub activation: Activation,
}

fn activate(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Identity => z,
        Activation::Logistic => 1.0 / (1.0 + (-z).exp()),
        Activation::Tanh => z.tanh(),
        Activation::Relu => z.max(0.0),
    }
}

/// Derivative expressed through the activation value `a = f(z)`.
fn activate_grad(act: Activation, z: f64, a: f64) -> f64 {
    match act {
        Activation::Identity => 1.0,
        Activation::Logistic => a * (1.0 - a),
        Activation::Tanh => 1.0 - a * a,
        Activation::Relu => {
            if z > 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

impl Network {
    pub fn n_params(&self) -> usize {
        let (d, h, k) = (self.inputs, self.hidden, self.outputs);
        h * d + h + k * h + k
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let (d, h, k) = (self.inputs, self.hidden, self.outputs);
        let b1 = h * d;
        let w2 = b1 + h;
        let b2 = w2 + k * h;
        (b1, w2, b2)
    }

    /// Glorot-uniform initialization of weights and biases.
    pub fn init(&self, rng: &mut rng::Rng) -> Vec<f64> {
        let (b1, w2, b2) = self.offsets();
        let factor = if self.activation == Activation::Logistic { 2.0 } else { 6.0 };
        let bound1 = (factor / (self.inputs + self.hidden) as f64).sqrt();
        let bound2 = (factor / (self.hidden + self.outputs) as f64).sqrt();
        let mut theta = vec![0.0; self.n_params()];
        for (i, t) in theta.iter_mut().enumerate() {
            let bound = if i < w2 { bound1 } else { bound2 };
            *t = rng.random_range(-bound..bound);
        }
        debug_assert!(b1 < w2 && w2 < b2);
        theta
    }

    /// Hidden activations and output logits for one input row.
    fn forward_row(&self, theta: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (d, h, k) = (self.inputs, self.hidden, self.outputs);
        let (b1, w2, b2) = self.offsets();
        let z1: Vec<f64> = (0..h)
            .map(|j| {
                let row = &theta[j * d..(j + 1) * d];
                theta[b1 + j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        let a1: Vec<f64> = z1.iter().map(|&z| activate(self.activation, z)).collect();
        let z2: Vec<f64> = (0..k)
            .map(|c| {
                let row = &theta[w2 + c * h..w2 + (c + 1) * h];
                theta[b2 + c] + row.iter().zip(&a1).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        (z1, a1, z2)
    }

    pub fn predict_proba(&self, theta: &[f64], x: &[f64]) -> Vec<f64> {
        softmax(&self.forward_row(theta, x).2)
    }

    fn l2_norm_sq(&self, theta: &[f64]) -> f64 {
        let (b1, w2, b2) = self.offsets();
        theta[..b1].iter().chain(&theta[w2..b2]).map(|w| w * w).sum()
    }

    /// Regularized loss over the rows and its gradient with respect to
    /// `theta`.
    pub fn loss_and_grad(&self, theta: &[f64], x: &[&[f64]], y: &[usize], alpha: f64) -> (f64, Vec<f64>) {
        let (d, h, k) = (self.inputs, self.hidden, self.outputs);
        let (b1, w2, b2) = self.offsets();
        let m = x.len() as f64;
        let mut grad = vec![0.0; theta.len()];
        let mut loss = 0.0;
        for (row, &label) in x.iter().zip(y) {
            let (z1, a1, z2) = self.forward_row(theta, row);
            let lse = log_sum_exp(&z2);
            loss += lse - z2[label];
            let dz2: Vec<f64> = z2
                .iter()
                .enumerate()
                .map(|(c, &z)| ((z - lse).exp() - if c == label { 1.0 } else { 0.0 }) / m)
                .collect();
            for c in 0..k {
                grad[b2 + c] += dz2[c];
                for j in 0..h {
                    grad[w2 + c * h + j] += dz2[c] * a1[j];
                }
            }
            for j in 0..h {
                let da: f64 = (0..k).map(|c| theta[w2 + c * h + j] * dz2[c]).sum();
                let dz = da * activate_grad(self.activation, z1[j], a1[j]);
                grad[b1 + j] += dz;
                for i in 0..d {
                    grad[j * d + i] += dz * row[i];
                }
            }
        }
        loss /= m;
        loss += alpha / (2.0 * m) * self.l2_norm_sq(theta);
        for i in (0..b1).chain(w2..b2) {
            grad[i] += alpha / m * theta[i];
        }
        (loss, grad)
    }
}

enum Stepper {
    Sgd { velocity: Vec<f64>, momentum: f64 },
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl Stepper {
    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        match self {
            Stepper::Sgd { velocity, momentum } => {
                for ((t, v), g) in theta.iter_mut().zip(velocity.iter_mut()).zip(grad) {
                    *v = *momentum * *v - lr * g;
                    *t += *v;
                }
            }
            Stepper::Adam { m, v, t } => {
                *t += 1;
                let lr_t = lr * (1.0 - BETA2.powi(*t)).sqrt() / (1.0 - BETA1.powi(*t));
                for i in 0..theta.len() {
                    m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
                    v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
                    theta[i] -= lr_t * m[i] / (v[i].sqrt() + EPSILON);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    network: Network,
    theta: Vec<f64>,
    epochs: usize,
    final_loss: f64,
    converged: bool,
}

impl MlpModel {
    pub(crate) fn fit(params: &MlpParams, design: &Design<'_>, seed: u64) -> Result<MlpModel> {
        let network = Network {
            inputs: design.dim,
            hidden: params.hidden_size,
            outputs: design.n_classes,
            activation: params.activation,
        };
        let mut rng = rng::seeded(seed);
        let mut theta = network.init(&mut rng);
        let n = design.x.len();
        let batch = params.batch_size.unwrap_or(MAX_BATCH).min(n);
        let mut stepper = match params.optimizer {
            Optimizer::Sgd => Stepper::Sgd {
                velocity: vec![0.0; theta.len()],
                momentum: params.momentum,
            },
            Optimizer::Adam => Stepper::Adam {
                m: vec![0.0; theta.len()],
                v: vec![0.0; theta.len()],
                t: 0,
            },
            Optimizer::Lbfgs => return Err(Error::UnsupportedOptimizer("lbfgs".into())),
        };
        let mut lr = params.base_lr;
        let mut order: Vec<usize> = (0..n).collect();
        let mut previous = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut stale = 0;
        let mut converged = false;
        let mut epochs = 0;
        let mut xs: Vec<&[f64]> = Vec::with_capacity(batch);
        let mut ys: Vec<usize> = Vec::with_capacity(batch);
        while epochs < params.max_epochs {
            epochs += 1;
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(batch) {
                xs.clear();
                ys.clear();
                xs.extend(chunk.iter().map(|&i| design.x[i]));
                ys.extend(chunk.iter().map(|&i| design.y[i]));
                let (loss, grad) = network.loss_and_grad(&theta, &xs, &ys, params.l2_alpha);
                epoch_loss += loss * chunk.len() as f64;
                stepper.step(&mut theta, &grad, lr);
            }
            epoch_loss /= n as f64;
            if !epoch_loss.is_finite() {
                break;
            }
            if (previous - epoch_loss).abs() < STOP_TOL {
                converged = true;
                previous = epoch_loss;
                break;
            }
            previous = epoch_loss;
            if params.learning_rate_schedule == LearningRateSchedule::Adaptive {
                if epoch_loss < best {
                    best = epoch_loss;
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= 2 {
                        lr /= 2.0;
                        stale = 0;
                    }
                }
            }
        }
        Ok(MlpModel {
            network,
            theta,
            epochs,
            final_loss: previous,
            converged,
        })
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        self.network.predict_proba(&self.theta, x)
    }
}
