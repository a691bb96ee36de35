//! Hyperparameter records of the five classifier kinds, with the values
//! selected by cross-validated grid search as presets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomForestParams {
    pub max_depth: usize,
    pub criterion: Criterion,
    pub n_estimators: usize,
    pub max_features_fraction: f64,
    pub bootstrap: bool,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        RandomForestParams {
            max_depth: 11,
            criterion: Criterion::Gini,
            n_estimators: 20,
            max_features_fraction: 0.5,
            bootstrap: true,
        }
    }
}

impl RandomForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::param("max_depth", "must be at least 1"));
        }
        if self.n_estimators == 0 {
            return Err(Error::param("n_estimators", "must be at least 1"));
        }
        if !(self.max_features_fraction > 0.0 && self.max_features_fraction <= 1.0) {
            return Err(Error::param("max_features_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvmKernel {
    Linear,
    Rbf,
}

fn default_svm_tol() -> f64 {
    1e-3
}

fn default_svm_max_iter() -> usize {
    10_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: SvmKernel,
    pub gamma: f64,
    /// Stopping tolerance on the maximal KKT violation.
    #[serde(default = "default_svm_tol")]
    pub tol: f64,
    #[serde(default = "default_svm_max_iter")]
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 100.0,
            kernel: SvmKernel::Rbf,
            gamma: 0.001,
            tol: default_svm_tol(),
            max_iter: default_svm_max_iter(),
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param("c", "must be positive"));
        }
        if self.kernel == SvmKernel::Rbf && !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("gamma", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpKernel {
    Rbf,
    DotProduct,
    Matern,
    RationalQuadratic,
    White,
}

fn default_matern_nu() -> f64 {
    1.5
}

fn default_newton_iters() -> usize {
    100
}

fn default_newton_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpParams {
    pub kernel: GpKernel,
    #[serde(default = "default_matern_nu")]
    pub matern_nu: f64,
    #[serde(default = "default_newton_iters")]
    pub max_newton_iters: usize,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    /// Accepted for grid compatibility; the Laplace fit is deterministic and
    /// ignores it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_state: Option<u64>,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            kernel: GpKernel::Matern,
            matern_nu: default_matern_nu(),
            max_newton_iters: default_newton_iters(),
            newton_tol: default_newton_tol(),
            random_state: None,
        }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<()> {
        if self.matern_nu != 1.5 {
            return Err(Error::param("matern_nu", "only nu = 1.5 is supported"));
        }
        if self.max_newton_iters == 0 {
            return Err(Error::param("max_newton_iters", "must be at least 1"));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::param("newton_tol", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnWeights {
    Uniform,
    Distance,
}

/// Neighbor search strategy. All values run the same exact scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnnAlgorithm {
    Auto,
    BallTree,
    KdTree,
    Brute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnParams {
    pub n_neighbors: usize,
    pub weights: KnnWeights,
    pub algorithm: KnnAlgorithm,
    pub minkowski_c: f64,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            n_neighbors: 9,
            weights: KnnWeights::Distance,
            algorithm: KnnAlgorithm::Auto,
            minkowski_c: 2.0,
        }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_neighbors == 0 {
            return Err(Error::param("n_neighbors", "must be at least 1"));
        }
        if !(self.minkowski_c >= 1.0 && self.minkowski_c.is_finite()) {
            return Err(Error::param("minkowski_c", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Logistic,
    Tanh,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Listed for grid compatibility; rejected at fit time.
    Lbfgs,
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRateSchedule {
    Constant,
    Adaptive,
}

fn default_base_lr() -> f64 {
    0.001
}

fn default_max_epochs() -> usize {
    200
}

fn default_momentum() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpParams {
    pub hidden_size: usize,
    pub activation: Activation,
    pub optimizer: Optimizer,
    pub l2_alpha: f64,
    pub learning_rate_schedule: LearningRateSchedule,
    #[serde(default = "default_base_lr")]
    pub base_lr: f64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    /// `None` means `min(200, n_samples)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    /// Momentum of the sgd optimizer.
    #[serde(default = "default_momentum")]
    pub momentum: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_size: 4,
            activation: Activation::Tanh,
            optimizer: Optimizer::Adam,
            l2_alpha: 0.05,
            learning_rate_schedule: LearningRateSchedule::Constant,
            base_lr: default_base_lr(),
            max_epochs: default_max_epochs(),
            batch_size: None,
            momentum: default_momentum(),
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 {
            return Err(Error::param("hidden_size", "must be at least 1"));
        }
        if !(self.l2_alpha >= 0.0 && self.l2_alpha.is_finite()) {
            return Err(Error::param("l2_alpha", "must be >= 0"));
        }
        if !(self.base_lr > 0.0) {
            return Err(Error::param("base_lr", "must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::param("max_epochs", "must be at least 1"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::param("batch_size", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::param("momentum", "must lie in [0, 1)"));
        }
        if self.optimizer == Optimizer::Lbfgs {
            return Err(Error::UnsupportedOptimizer("lbfgs".into()));
        }
        Ok(())
    }
}
