//! Gaussian process classification with a logistic likelihood, Laplace
//! approximation of the latent posterior, combined one-vs-rest.
//!
//! Predictive class probabilities use the probit approximation of the
//! logistic-Gaussian integral, `sigma(m / sqrt(1 + pi v / 8))`.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::params::GpParams;
use super::Design;
use crate::error::{Error, Result};

pub const JITTER: f64 = 1e-8;
pub const MAX_JITTER_ATTEMPTS: usize = 3;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log sigma(z)` without overflow.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Mode of the latent posterior of one binary problem, reduced to what
/// prediction needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacePosterior {
    /// Gradient of the log likelihood at the mode, `t - pi`.
    pub grad: Vec<f64>,
    /// Square root of the negative log likelihood Hessian diagonal.
    pub sqrt_w: Vec<f64>,
    /// Diagonal jitter added to the kernel matrix.
    pub jitter: f64,
    pub iterations: usize,
    /// Change of the Newton objective in the last iteration.
    pub last_step: f64,
    pub converged: bool,
}

fn factor_b(k: &DMatrix<f64>, sqrt_w: &[f64], jitter: f64) -> Option<Cholesky<f64, Dyn>> {
    let n = sqrt_w.len();
    let b = DMatrix::from_fn(n, n, |i, j| {
        let kij = k[(i, j)] + if i == j { jitter } else { 0.0 };
        sqrt_w[i] * kij * sqrt_w[j] + if i == j { 1.0 } else { 0.0 }
    });
    b.cholesky()
}

fn with_jitter(k: &DMatrix<f64>, jitter: f64) -> DMatrix<f64> {
    let mut k = k.clone();
    for i in 0..k.nrows() {
        k[(i, i)] += jitter;
    }
    k
}

/// Newton iterations for the binary latent mode with labels in {-1, +1}.
pub fn laplace_mode(k: &DMatrix<f64>, y: &[f64], max_iter: usize, tol: f64) -> Result<LaplacePosterior> {
    let n = y.len();
    let targets: Vec<f64> = y.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
    let mut jitter = 0.0;
    let mut attempts = 0;
    let mut k_used = k.clone();
    let mut f = DVector::<f64>::zeros(n);
    let mut objective = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut last_step = f64::INFINITY;
    let mut converged = false;
    while iterations < max_iter {
        let pi: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let w: Vec<f64> = pi.iter().map(|p| p * (1.0 - p)).collect();
        let s: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
        let Some(chol) = factor_b(&k_used, &s, 0.0) else {
            if attempts == MAX_JITTER_ATTEMPTS {
                return Err(Error::SingularKernel { attempts });
            }
            attempts += 1;
            jitter += JITTER;
            k_used = with_jitter(k, jitter);
            continue;
        };
        iterations += 1;
        let b = DVector::from_fn(n, |i, _| w[i] * f[i] + targets[i] - pi[i]);
        let kb = &k_used * &b;
        let c = chol.l().solve_lower_triangular(&DVector::from_fn(n, |i, _| s[i] * kb[i])).expect("triangular");
        let v = chol.l().transpose().solve_upper_triangular(&c).expect("triangular");
        let a = DVector::from_fn(n, |i, _| b[i] - s[i] * v[i]);
        f = &k_used * &a;
        let new_objective = -0.5 * a.dot(&f) + f.iter().zip(y).map(|(&fi, &yi)| log_sigmoid(yi * fi)).sum::<f64>();
        last_step = (new_objective - objective).abs();
        objective = new_objective;
        if last_step < tol {
            converged = true;
            break;
        }
    }
    let pi: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
    Ok(LaplacePosterior {
        grad: targets.iter().zip(&pi).map(|(t, p)| t - p).collect(),
        sqrt_w: pi.iter().map(|p| (p * (1.0 - p)).sqrt()).collect(),
        jitter,
        iterations,
        last_step,
        converged,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpModel {
    kernel: Kernel,
    x: Vec<Vec<f64>>,
    posteriors: Vec<LaplacePosterior>,
    /// Cholesky factors of `I + S K S` per class, rebuilt on first use.
    #[serde(skip)]
    factors: OnceLock<Vec<DMatrix<f64>>>,
}

impl GpModel {
    pub(crate) fn fit(params: &GpParams, design: &Design<'_>) -> Result<GpModel> {
        let kernel = Kernel::for_gp(params.kernel);
        let n = design.x.len();
        let k = DMatrix::from_row_slice(n, n, &kernel.gram(&design.x));
        let classes: Vec<usize> = (0..design.n_classes).collect();
        let posteriors = crate::par::map(&classes, |&class| {
            let y: Vec<f64> = design.y.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            laplace_mode(&k, &y, params.max_newton_iters, params.newton_tol)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(GpModel {
            kernel,
            x: design.x.iter().map(|r| r.to_vec()).collect(),
            posteriors,
            factors: OnceLock::new(),
        })
    }

    pub fn converged(&self) -> bool {
        self.posteriors.iter().all(|p| p.converged)
    }

    pub fn posteriors(&self) -> &[LaplacePosterior] {
        &self.posteriors
    }

    fn factors(&self) -> &[DMatrix<f64>] {
        self.factors.get_or_init(|| {
            let rows: Vec<&[f64]> = self.x.iter().map(Vec::as_slice).collect();
            let n = rows.len();
            let k = DMatrix::from_row_slice(n, n, &self.kernel.gram(&rows));
            self.posteriors
                .iter()
                .map(|p| {
                    factor_b(&k, &p.sqrt_w, p.jitter)
                        .expect("factorization succeeded during fit")
                        .l()
                })
                .collect()
        })
    }

    /// Latent predictive mean and variance of each class-vs-rest problem.
    pub fn latent(&self, x: &[f64]) -> Vec<(f64, f64)> {
        let kx: Vec<f64> = self.x.iter().map(|r| self.kernel.eval_unchecked(r, x)).collect();
        let kxx = self.kernel.eval_unchecked(x, x);
        self.posteriors
            .iter()
            .zip(self.factors())
            .map(|(p, l)| {
                let mean: f64 = kx.iter().zip(&p.grad).map(|(a, b)| a * b).sum();
                let sk = DVector::from_fn(kx.len(), |i, _| p.sqrt_w[i] * kx[i]);
                let v = l.solve_lower_triangular(&sk).expect("triangular");
                let var = (kxx - v.dot(&v)).max(0.0);
                (mean, var)
            })
            .collect()
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        self.latent(x)
            .into_iter()
            .map(|(mean, var)| sigmoid(mean / (1.0 + std::f64::consts::PI * var / 8.0).sqrt()))
            .collect()
    }
}
