//! Browser demo over two-dimensional toy data: classifier probability and
//! margin fields, Minkowski unit balls and nearest-neighbor queries.

use ontorel::classifiers::{fit, minkowski_distance, ClassifierKind, ClassifierParams, ClassifierSpec};
use ontorel::dataset::LabeledDataset;
use ontorel::report::confidence_margin;
use ontorel::{EmbeddedSample, EmbeddingVector, Error, OntologyId, Result};
use wasm_bindgen::prelude::*;

/// Per-cell predicted class, confidence and top-two margin on a square grid,
/// row-major from the top-left corner.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Field {
    resolution: usize,
    predicted: Vec<u32>,
    confidence: Vec<f64>,
    margin: Vec<f64>,
    converged: bool,
}

#[wasm_bindgen]
impl Field {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn predicted(&self) -> Vec<u32> {
        self.predicted.clone()
    }

    pub fn confidence(&self) -> Vec<f64> {
        self.confidence.clone()
    }

    pub fn margin(&self) -> Vec<f64> {
        self.margin.clone()
    }

    pub fn converged(&self) -> bool {
        self.converged
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    /// Center of cell `(row, col)`; row 0 is the top (largest y).
    pub fn cell_center(&self, row: usize, col: usize, resolution: usize) -> (f64, f64) {
        let n = resolution as f64;
        let x = self.x_min + (col as f64 + 0.5) / n * (self.x_max - self.x_min);
        let y = self.y_max - (row as f64 + 0.5) / n * (self.y_max - self.y_min);
        (x, y)
    }
}

fn pairs(points: &[f64]) -> Result<Vec<[f64; 2]>> {
    if points.len() % 2 != 0 {
        return Err(Error::InvalidInput("points must be interleaved x,y pairs".into()));
    }
    Ok(points.chunks_exact(2).map(|p| [p[0], p[1]]).collect())
}

fn class_name(c: u32) -> OntologyId {
    OntologyId::new(format!("class-{c}")).expect("non-empty")
}

/// Fits `kind` with its selected parameters, overridden by `params_json`
/// (a JSON object, or empty), and scores every grid cell.
pub fn field(
    kind: &str,
    params_json: &str,
    points: &[f64],
    labels: &[u32],
    bounds: Bounds,
    resolution: usize,
    seed: u64,
) -> Result<Field> {
    let kind: ClassifierKind = kind.parse()?;
    let points = pairs(points)?;
    if points.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    if resolution == 0 || resolution > 512 {
        return Err(Error::param("resolution", "must lie in 1..=512"));
    }
    if !(bounds.x_min < bounds.x_max && bounds.y_min < bounds.y_max) {
        return Err(Error::param("bounds", "must be non-empty"));
    }
    let mut params = ClassifierParams::selected(kind);
    if !params_json.trim().is_empty() {
        let overrides: serde_json::Map<String, serde_json::Value> = serde_json::from_str(params_json)?;
        params = params.with_overrides(&overrides)?;
    }
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let vocab: Vec<OntologyId> = (0..n_classes).map(class_name).collect();
    let samples = points
        .iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (p, &l))| {
            Ok(EmbeddedSample::annotation(
                format!("p{i}"),
                EmbeddingVector::new(p.to_vec())?,
                class_name(l),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let data = LabeledDataset::new(samples, vocab)?;
    let model = fit(&ClassifierSpec::new(params, seed), &data)?;

    let cells = resolution * resolution;
    let mut out = Field {
        resolution,
        predicted: Vec::with_capacity(cells),
        confidence: Vec::with_capacity(cells),
        margin: Vec::with_capacity(cells),
        converged: model.converged,
    };
    for row in 0..resolution {
        for col in 0..resolution {
            let (x, y) = bounds.cell_center(row, col, resolution);
            let proba = model.predict_proba_slice(&[x, y])?;
            let (best, confidence, margin) = confidence_margin(&proba);
            out.predicted.push(best as u32);
            out.confidence.push(confidence);
            out.margin.push(margin);
        }
    }
    Ok(out)
}

/// Boundary of the Minkowski ball of exponent `c` and `radius` around the
/// origin, as interleaved x,y points.
pub fn ball(c: f64, radius: f64, segments: usize) -> Result<Vec<f64>> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::param("c", "must be finite and at least 1"));
    }
    if !(radius > 0.0) || segments < 4 {
        return Err(Error::param("segments", "need a positive radius and at least 4 segments"));
    }
    let mut out = Vec::with_capacity(2 * segments);
    for s in 0..segments {
        let theta = std::f64::consts::TAU * s as f64 / segments as f64;
        let u = [theta.cos(), theta.sin()];
        let norm = minkowski_distance(&u, &[0.0, 0.0], c)?;
        out.push(radius * u[0] / norm);
        out.push(radius * u[1] / norm);
    }
    Ok(out)
}

/// Indices of the `k` points nearest to `(qx, qy)` under exponent `c`,
/// nearest first, ties by index.
pub fn nearest(points: &[f64], qx: f64, qy: f64, c: f64, k: usize) -> Result<Vec<u32>> {
    if !(c >= 1.0) {
        return Err(Error::param("c", "must be at least 1"));
    }
    let points = pairs(points)?;
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| Ok((minkowski_distance(p, &[qx, qy], c)?, i)))
        .collect::<Result<_>>()?;
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(order.into_iter().take(k).map(|(_, i)| i as u32).collect())
}

fn js(e: Error) -> JsError {
    JsError::new(&format!("{}: {e}", e.code()))
}

#[wasm_bindgen(js_name = probabilityField)]
#[allow(clippy::too_many_arguments)]
pub fn probability_field(
    kind: &str,
    params_json: &str,
    points: &[f64],
    labels: &[u32],
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    resolution: usize,
    seed: u32,
) -> std::result::Result<Field, JsError> {
    let bounds = Bounds {
        x_min,
        x_max,
        y_min,
        y_max,
    };
    field(kind, params_json, points, labels, bounds, resolution, seed as u64).map_err(js)
}

#[wasm_bindgen(js_name = minkowskiBall)]
pub fn minkowski_ball(c: f64, radius: f64, segments: usize) -> std::result::Result<Vec<f64>, JsError> {
    ball(c, radius, segments).map_err(js)
}

#[wasm_bindgen(js_name = nearestNeighbors)]
pub fn nearest_neighbors(points: &[f64], qx: f64, qy: f64, c: f64, k: usize) -> std::result::Result<Vec<u32>, JsError> {
    nearest(points, qx, qy, c, k).map_err(js)
}
