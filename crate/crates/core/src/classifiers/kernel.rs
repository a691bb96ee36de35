//! Covariance functions shared by the SVM and Gaussian process classifiers.

use serde::{Deserialize, Serialize};

use super::distance::{dot, squared_euclidean};
use super::params::GpKernel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// `x . y`
    Linear,
    /// `exp(-gamma ||x - y||^2)`
    Rbf { gamma: f64 },
    /// `sigma0^2 + x . y`
    DotProduct { sigma0: f64 },
    /// Matern with smoothness 3/2: `(1 + sqrt(3) r / l) exp(-sqrt(3) r / l)`
    Matern15 { length_scale: f64 },
    /// `(1 + r^2 / (2 alpha l^2))^(-alpha)`
    RationalQuadratic { alpha: f64, length_scale: f64 },
    /// `noise * 1[x == y]`
    White { noise: f64 },
}

impl Kernel {
    /// Kernel of a Gaussian process kind with unit length scales, unit
    /// `sigma0`, `alpha = 1` and unit noise.
    pub fn for_gp(kind: GpKernel) -> Kernel {
        match kind {
            GpKernel::Rbf => Kernel::Rbf { gamma: 0.5 },
            GpKernel::DotProduct => Kernel::DotProduct { sigma0: 1.0 },
            GpKernel::Matern => Kernel::Matern15 { length_scale: 1.0 },
            GpKernel::RationalQuadratic => Kernel::RationalQuadratic {
                alpha: 1.0,
                length_scale: 1.0,
            },
            GpKernel::White => Kernel::White { noise: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, "must be positive"))
            }
        };
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Rbf { gamma } => positive("gamma", gamma),
            Kernel::DotProduct { sigma0 } => {
                if sigma0 >= 0.0 && sigma0.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("sigma0", "must be >= 0"))
                }
            }
            Kernel::Matern15 { length_scale } => positive("length_scale", length_scale),
            Kernel::RationalQuadratic {
                alpha,
                length_scale,
            } => positive("alpha", alpha).and(positive("length_scale", length_scale)),
            Kernel::White { noise } => positive("noise", noise),
        }
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(x, y),
            Kernel::Rbf { gamma } => (-gamma * squared_euclidean(x, y)).exp(),
            Kernel::DotProduct { sigma0 } => sigma0 * sigma0 + dot(x, y),
            Kernel::Matern15 { length_scale } => {
                let s = 3f64.sqrt() * squared_euclidean(x, y).sqrt() / length_scale;
                (1.0 + s) * (-s).exp()
            }
            Kernel::RationalQuadratic {
                alpha,
                length_scale,
            } => (1.0 + squared_euclidean(x, y) / (2.0 * alpha * length_scale * length_scale)).powf(-alpha),
            Kernel::White { noise } => {
                if x == y {
                    noise
                } else {
                    0.0
                }
            }
        }
    }

    /// Symmetric Gram matrix of `rows`, row-major.
    pub(crate) fn gram(&self, rows: &[&[f64]]) -> Vec<f64> {
        let n = rows.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval_unchecked(rows[i], rows[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

/// Evaluates `kernel` on one pair of vectors.
pub fn kernel_eval(kernel: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    kernel.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
            context: None,
        });
    }
    Ok(kernel.eval_unchecked(x, y))
}
