use crate::error::{Error, Result};

/// `(sum |x_i - y_i|^c)^(1/c)`: Manhattan for `c = 1`, Euclidean for `c = 2`.
pub fn minkowski_distance(x: &[f64], y: &[f64], c: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
            context: None,
        });
    }
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::param("c", "Minkowski exponent must be >= 1"));
    }
    Ok(minkowski_unchecked(x, y, c))
}

pub(crate) fn minkowski_unchecked(x: &[f64], y: &[f64], c: f64) -> f64 {
    if c == 1.0 {
        x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
    } else if c == 2.0 {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    } else {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b).abs().powf(c))
            .sum::<f64>()
            .powf(1.0 / c)
    }
}

pub(crate) fn squared_euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
