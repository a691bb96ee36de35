//! Soft-margin SVM: binary dual problems solved by SMO, combined one-vs-rest
//! and calibrated per class with a Platt sigmoid.
//!
//! After SMO reaches the requested KKT tolerance the solution is polished:
//! with the free and bounded sets fixed, the optimality conditions are a
//! linear system whose solution is the exact optimum whenever the sets are
//! right. If the polished point fails the KKT check, SMO continues with a
//! tighter tolerance and polishing is retried.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::params::{SvmKernel, SvmParams};
use super::Design;
use crate::error::Result;
use crate::rng;

const TAU: f64 = 1e-12;
const PLATT_FOLDS: usize = 3;
/// Tolerances tried after the requested one when polishing fails.
const REFINE_TOLS: [f64; 3] = [1e-6, 1e-9, 1e-12];
const KKT_SLACK: f64 = 1e-9;

/// Dense symmetric kernel matrix.
#[derive(Debug, Clone)]
pub struct Gram {
    n: usize,
    values: Vec<f64>,
}

impl Gram {
    pub fn new(kernel: &Kernel, rows: &[&[f64]]) -> Gram {
        let n = rows.len();
        let upper: Vec<Vec<f64>> = crate::par::map(&(0..n).collect::<Vec<_>>(), |&i| {
            (i..n).map(|j| kernel.eval_unchecked(rows[i], rows[j])).collect()
        });
        let mut values = vec![0.0; n * n];
        for (i, row) in upper.iter().enumerate() {
            for (off, &v) in row.iter().enumerate() {
                let j = i + off;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Gram { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn subset(&self, idx: &[usize]) -> Gram {
        let n = idx.len();
        let mut values = Vec::with_capacity(n * n);
        for &i in idx {
            let row = self.row(i);
            values.extend(idx.iter().map(|&j| row[j]));
        }
        Gram { n, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_i alpha_i y_i K(x_i, x) + bias`.
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the returned point came from the exact active-set solve.
    pub polished: bool,
}

struct Smo<'a> {
    gram: &'a Gram,
    y: &'a [f64],
    c: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    iterations: usize,
}

impl Smo<'_> {
    #[inline]
    fn q(&self, i: usize, j: usize) -> f64 {
        self.y[i] * self.y[j] * self.gram.get(i, j)
    }

    fn is_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn is_low(&self, t: usize) -> bool {
        (self.y[t] < 0.0 && self.alpha[t] < self.c) || (self.y[t] > 0.0 && self.alpha[t] > 0.0)
    }

    /// Second-order working set selection; `None` once the maximal violation
    /// is below `eps`.
    fn select(&self, eps: f64) -> Option<(usize, usize)> {
        let n = self.alpha.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = None;
        for t in 0..n {
            if self.is_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i = Some(t);
                }
            }
        }
        let i = i?;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !self.is_low(t) {
                continue;
            }
            let yg = self.y[t] * self.grad[t];
            gmax2 = gmax2.max(yg);
            let b = gmax + yg;
            if b > 0.0 {
                let mut a = self.gram.get(i, i) + self.gram.get(t, t) - 2.0 * self.gram.get(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = Some(t);
                }
            }
        }
        if gmax + gmax2 < eps {
            return None;
        }
        j.map(|j| (i, j))
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let kii = self.gram.get(i, i);
        let kjj = self.gram.get(j, j);
        let qij = self.q(i, j);
        if self.y[i] != self.y[j] {
            let mut quad = kii + kjj + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = kii + kjj - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        let (yi, yj) = (self.y[i], self.y[j]);
        let (row_i, row_j) = (self.gram.row(i), self.gram.row(j));
        for t in 0..self.grad.len() {
            self.grad[t] += self.y[t] * (yi * row_i[t] * di + yj * row_j[t] * dj);
        }
    }

    /// Runs until the violation drops below `eps` or the iteration budget is
    /// spent; returns whether it converged.
    fn run(&mut self, eps: f64, max_iter: usize) -> bool {
        while self.iterations < max_iter {
            match self.select(eps) {
                Some((i, j)) => self.update(i, j),
                None => return true,
            }
            self.iterations += 1;
        }
        false
    }

    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free_sum, mut n_free) = (0.0, 0usize);
        for t in 0..self.alpha.len() {
            let yg = self.y[t] * self.grad[t];
            if self.alpha[t] >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free_sum += yg;
                n_free += 1;
            }
        }
        let rho = if n_free > 0 {
            free_sum / n_free as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }

    /// Solves the equality-constrained system on the current free set.
    fn polish(&self) -> Option<(Vec<f64>, f64)> {
        let c = self.c;
        let n = self.alpha.len();
        let edge = 1e-8 * c;
        let mut alpha = self.alpha.clone();
        let mut free = Vec::new();
        for t in 0..n {
            if alpha[t] <= edge {
                alpha[t] = 0.0;
            } else if alpha[t] >= c - edge {
                alpha[t] = c;
            } else {
                free.push(t);
            }
        }
        if free.is_empty() {
            return None;
        }
        let m = free.len();
        let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut rhs = DVector::<f64>::zeros(m + 1);
        let bounded: Vec<usize> = (0..n).filter(|&t| alpha[t] == c).collect();
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                a[(r, s)] = self.q(i, j);
            }
            a[(r, m)] = self.y[i];
            a[(m, r)] = self.y[i];
            rhs[r] = 1.0 - bounded.iter().map(|&j| self.q(i, j) * c).sum::<f64>();
        }
        rhs[m] = -bounded.iter().map(|&j| self.y[j] * c).sum::<f64>();
        let solution = a.lu().solve(&rhs)?;
        for (r, &i) in free.iter().enumerate() {
            let v = solution[r];
            if !(v.is_finite() && v > 0.0 && v < c) {
                return None;
            }
            alpha[i] = v;
        }
        let bias = solution[m];
        // KKT conditions of every variable at the polished point.
        let scale = 1.0 + alpha.iter().sum::<f64>();
        for t in 0..n {
            let row = self.gram.row(t);
            let f: f64 = (0..n).map(|s| alpha[s] * self.y[s] * row[s]).sum::<f64>() + bias;
            let margin = self.y[t] * f;
            let ok = if alpha[t] == 0.0 {
                margin >= 1.0 - KKT_SLACK * scale
            } else if alpha[t] == c {
                margin <= 1.0 + KKT_SLACK * scale
            } else {
                (margin - 1.0).abs() <= KKT_SLACK * scale
            };
            if !ok {
                return None;
            }
        }
        Some((alpha, bias))
    }
}

/// Solves `min 1/2 a'Qa - e'a` s.t. `0 <= a <= c`, `y'a = 0` with
/// `Q_ij = y_i y_j K_ij` and labels `y` in {-1, +1}.
pub fn solve_dual(gram: &Gram, y: &[f64], c: f64, tol: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    assert_eq!(gram.len(), n, "gram size must match labels");
    let mut smo = Smo {
        gram,
        y,
        c,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        iterations: 0,
    };
    let converged = smo.run(tol, max_iter);
    if converged {
        for eps in std::iter::once(tol).chain(REFINE_TOLS.into_iter().filter(|&e| e < tol)) {
            if smo.run(eps, max_iter) {
                if let Some((alpha, bias)) = smo.polish() {
                    return DualSolution {
                        alpha,
                        bias,
                        iterations: smo.iterations,
                        converged: true,
                        polished: true,
                    };
                }
            } else {
                // Budget exhausted while refining; the earlier tolerance was met.
                break;
            }
        }
    }
    DualSolution {
        bias: smo.bias(),
        alpha: smo.alpha,
        iterations: smo.iterations,
        converged,
        polished: false,
    }
}

/// A binary decision function over its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub kernel: Kernel,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` of each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
}

impl BinarySvm {
    /// Fits on rows with labels in {-1, +1}.
    pub fn fit(rows: &[&[f64]], y: &[f64], kernel: Kernel, c: f64, tol: f64, max_iter: usize) -> (BinarySvm, DualSolution) {
        let gram = Gram::new(&kernel, rows);
        let dual = solve_dual(&gram, y, c, tol, max_iter);
        let mut support_vectors = Vec::new();
        let mut coef = Vec::new();
        for (i, &a) in dual.alpha.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(rows[i].to_vec());
                coef.push(a * y[i]);
            }
        }
        let svm = BinarySvm {
            kernel,
            support_vectors,
            coef,
            bias: dual.bias,
        };
        (svm, dual)
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sigmoid {
    pub a: f64,
    pub b: f64,
}

impl Sigmoid {
    /// `1 / (1 + exp(a f + b))`, evaluated without overflow.
    pub fn probability(&self, f: f64) -> f64 {
        let t = self.a * f + self.b;
        if t >= 0.0 {
            (-t).exp() / (1.0 + (-t).exp())
        } else {
            1.0 / (1.0 + t.exp())
        }
    }
}

/// Platt sigmoid fit by the regularized-target Newton method of Lin, Lin and
/// Weng.
pub fn platt_fit(decision: &[f64], positive: &[bool]) -> Sigmoid {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    let targets: Vec<f64> = positive.iter().map(|&p| if p { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        decision
            .iter()
            .zip(&targets)
            .map(|(&f, &t)| {
                let z = f * a + b;
                if z >= 0.0 {
                    t * z + (-z).exp().ln_1p()
                } else {
                    (t - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (1e-12, 1e-12, 0.0, 0.0, 0.0);
        for (&f, &t) in decision.iter().zip(&targets) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    Sigmoid { a, b }
}

/// One class-vs-rest machine, indexing into the model's shared support set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrMachine {
    pub support: Vec<usize>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub sigmoid: Sigmoid,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    kernel: Kernel,
    support_vectors: Vec<Vec<f64>>,
    machines: Vec<OvrMachine>,
}

pub fn svm_kernel(params: &SvmParams) -> Kernel {
    match params.kernel {
        SvmKernel::Linear => Kernel::Linear,
        SvmKernel::Rbf => Kernel::Rbf { gamma: params.gamma },
    }
}

/// Decision values of each training row predicted by a machine fit without
/// that row's fold.
fn out_of_fold_decisions(gram: &Gram, y: &[f64], params: &SvmParams, seed: u64) -> Vec<f64> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] < 0.0).collect();
    let folds = PLATT_FOLDS.min(pos.len()).min(neg.len());
    if folds < 2 {
        let dual = solve_dual(gram, y, params.c, params.tol, params.max_iter);
        return (0..y.len())
            .map(|t| {
                let row = gram.row(t);
                (0..y.len()).map(|s| dual.alpha[s] * y[s] * row[s]).sum::<f64>() + dual.bias
            })
            .collect();
    }
    let mut rng = rng::seeded(seed);
    let mut fold_of = vec![0usize; y.len()];
    let mut offset = 0;
    for class in [pos, neg] {
        let mut class = class;
        class.shuffle(&mut rng);
        for (p, &i) in class.iter().enumerate() {
            fold_of[i] = (offset + p) % folds;
        }
        offset += class.len();
    }
    let mut out = vec![0.0; y.len()];
    for fold in 0..folds {
        let train: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != fold).collect();
        let sub = gram.subset(&train);
        let sub_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let dual = solve_dual(&sub, &sub_y, params.c, params.tol, params.max_iter);
        for t in (0..y.len()).filter(|&i| fold_of[i] == fold) {
            let row = gram.row(t);
            out[t] = train
                .iter()
                .enumerate()
                .map(|(s, &i)| dual.alpha[s] * sub_y[s] * row[i])
                .sum::<f64>()
                + dual.bias;
        }
    }
    out
}

impl SvmModel {
    pub(crate) fn fit(params: &SvmParams, design: &Design<'_>, seed: u64) -> Result<SvmModel> {
        let kernel = svm_kernel(params);
        let gram = Gram::new(&kernel, &design.x);
        let classes: Vec<usize> = (0..design.n_classes).collect();
        let fitted = crate::par::map(&classes, |&class| {
            let y: Vec<f64> = design.y.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            let dual = solve_dual(&gram, &y, params.c, params.tol, params.max_iter);
            let oof = out_of_fold_decisions(&gram, &y, params, rng::derive(seed, class as u64));
            let positive: Vec<bool> = y.iter().map(|&v| v > 0.0).collect();
            (dual, y, platt_fit(&oof, &positive))
        });
        let n = design.x.len();
        let mut shared: Vec<Option<usize>> = vec![None; n];
        let mut support_vectors = Vec::new();
        let mut machines = Vec::with_capacity(fitted.len());
        for (dual, y, sigmoid) in fitted {
            let mut support = Vec::new();
            let mut coef = Vec::new();
            for i in (0..n).filter(|&i| dual.alpha[i] > 0.0) {
                let slot = *shared[i].get_or_insert_with(|| {
                    support_vectors.push(design.x[i].to_vec());
                    support_vectors.len() - 1
                });
                support.push(slot);
                coef.push(dual.alpha[i] * y[i]);
            }
            machines.push(OvrMachine {
                support,
                coef,
                bias: dual.bias,
                sigmoid,
                iterations: dual.iterations,
                converged: dual.converged,
            });
        }
        Ok(SvmModel {
            kernel,
            support_vectors,
            machines,
        })
    }

    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }

    pub fn machines(&self) -> &[OvrMachine] {
        &self.machines
    }

    /// Raw decision value of each class-vs-rest machine.
    pub fn decisions(&self, x: &[f64]) -> Vec<f64> {
        let k: Vec<f64> = self
            .support_vectors
            .iter()
            .map(|sv| self.kernel.eval_unchecked(sv, x))
            .collect();
        self.machines
            .iter()
            .map(|m| m.support.iter().zip(&m.coef).map(|(&s, c)| c * k[s]).sum::<f64>() + m.bias)
            .collect()
    }

    pub(crate) fn proba(&self, x: &[f64]) -> Vec<f64> {
        self.decisions(x)
            .into_iter()
            .zip(&self.machines)
            .map(|(f, m)| m.sigmoid.probability(f))
            .collect()
    }
}
