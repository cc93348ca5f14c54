//! Readout of velocity-map predictions from quantum states, and the two
//! training losses.
//!
//! The pixel path reads an N x N map from the magnitudes of the lowest N^2
//! basis probabilities (renormalized over that subset); the layer path reads
//! one velocity per depth row from single-qubit Z expectations. Both losses
//! are plain sums of squared differences in normalized velocity units, and
//! the layer loss is definitionally the pixel loss of the row-broadcast
//! prediction.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::qsim::{ProbLoss, Statevector};

/// 2D grid of subsurface wave speeds; row index is depth.
pub type VelocityMap = Array2<f64>;

/// Map side length in the scaled pipeline.
pub const MAP_SIDE: usize = 8;

/// Pixel-wise decode: D[i][j] = scale * sqrt(p'[N*i + j]) where p' is the
/// first N^2 basis probabilities renormalized to sum 1, row-major.
pub fn decode_pixelwise(state: &Statevector, scale: f64) -> Result<VelocityMap> {
    if state.n_qubits() < 6 {
        return Err(Error::config(format!(
            "pixel decode needs at least 6 qubits, got {}",
            state.n_qubits()
        )));
    }
    let probs = state.basis_probabilities();
    Ok(pixels_from_probs(&probs, scale))
}

fn pixels_from_probs(probs: &[f64], scale: f64) -> VelocityMap {
    let n_px = MAP_SIDE * MAP_SIDE;
    let mass: f64 = probs[..n_px].iter().sum();
    Array2::from_shape_fn((MAP_SIDE, MAP_SIDE), |(i, j)| {
        scale * (probs[MAP_SIDE * i + j] / mass).sqrt()
    })
}

/// Layer-wise decode: one value in [0, 1] per depth row, row r read from
/// qubit r as (<Z_r> + 1) / 2.
pub fn decode_layerwise(state: &Statevector) -> Result<Vec<f64>> {
    if state.n_qubits() < MAP_SIDE {
        return Err(Error::config(format!(
            "layer decode reads {MAP_SIDE} qubits but the state has {}",
            state.n_qubits()
        )));
    }
    let qubits: Vec<usize> = (0..MAP_SIDE).collect();
    let z = state.z_expectations(&qubits)?;
    Ok(z.iter().map(|z| (z + 1.0) / 2.0).collect())
}

/// Sum of squared per-pixel differences.
pub fn loss_pixel(truth: &VelocityMap, prediction: &VelocityMap) -> Result<f64> {
    if truth.dim() != prediction.dim() {
        return Err(Error::config(format!(
            "pixel loss shape mismatch: {:?} vs {:?}",
            truth.dim(),
            prediction.dim()
        )));
    }
    Ok(truth
        .iter()
        .zip(prediction.iter())
        .map(|(g, d)| (g - d) * (g - d))
        .sum())
}

/// Broadcast one value per depth row across its columns.
pub fn broadcast_rows(rows: &[f64], n_cols: usize) -> VelocityMap {
    Array2::from_shape_fn((rows.len(), n_cols), |(i, _)| rows[i])
}

/// Sum of squared differences with the per-row prediction broadcast across
/// each row's horizontal coordinate.
pub fn loss_layer(truth: &VelocityMap, rows: &[f64]) -> Result<f64> {
    if truth.nrows() != rows.len() {
        return Err(Error::config(format!(
            "layer loss needs {} row predictions, got {}",
            truth.nrows(),
            rows.len()
        )));
    }
    loss_pixel(truth, &broadcast_rows(rows, truth.ncols()))
}

/// Pixel loss as a differentiable readout over basis probabilities.
#[derive(Clone, Debug)]
pub struct PixelReadout {
    pub target: VelocityMap,
    pub scale: f64,
}

impl ProbLoss for PixelReadout {
    fn loss(&self, probs: &[f64]) -> f64 {
        let prediction = pixels_from_probs(probs, self.scale);
        loss_pixel(&self.target, &prediction).expect("target is built 8x8")
    }

    fn prob_grad(&self, probs: &[f64]) -> Vec<f64> {
        let n_px = MAP_SIDE * MAP_SIDE;
        let mass: f64 = probs[..n_px].iter().sum();
        let mut grad = vec![0.0; probs.len()];
        // dL/dq_k = -s(G_k - D_k)/sqrt(q_k m) + (1/m) sum_p (G_p - D_p) D_p,
        // the second term from the renormalizing mass m.
        let mut mass_term = 0.0;
        let mut residual = vec![0.0; n_px];
        for (p, g) in self.target.iter().enumerate() {
            let d = self.scale * (probs[p] / mass).sqrt();
            let r = g - d;
            residual[p] = r;
            mass_term += r * d;
        }
        mass_term /= mass;
        for k in 0..n_px {
            grad[k] = -self.scale * residual[k] / (probs[k] * mass).sqrt() + mass_term;
        }
        grad
    }
}

/// Layer loss as a differentiable readout over basis probabilities.
#[derive(Clone, Debug)]
pub struct LayerReadout {
    pub target: VelocityMap,
}

impl LayerReadout {
    fn row_values(&self, probs: &[f64]) -> Vec<f64> {
        z_from_probs(probs).iter().map(|z| (z + 1.0) / 2.0).collect()
    }
}

fn z_from_probs(probs: &[f64]) -> [f64; MAP_SIDE] {
    let mut z = [0.0; MAP_SIDE];
    for (i, &q) in probs.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        for (r, zr) in z.iter_mut().enumerate() {
            if (i >> r) & 1 == 0 {
                *zr += q;
            } else {
                *zr -= q;
            }
        }
    }
    z
}

impl ProbLoss for LayerReadout {
    fn loss(&self, probs: &[f64]) -> f64 {
        loss_layer(&self.target, &self.row_values(probs)).expect("target is built 8x8")
    }

    fn prob_grad(&self, probs: &[f64]) -> Vec<f64> {
        let rows = self.row_values(probs);
        let n_cols = self.target.ncols() as f64;
        // dL/dD'_r = -2 (rowsum_r - n_cols D'_r); dD'_r/dq_i = sign_r(i)/2.
        let coeff: Vec<f64> = (0..MAP_SIDE)
            .map(|r| {
                let rowsum: f64 = self.target.row(r).sum();
                -(rowsum - n_cols * rows[r])
            })
            .collect();
        (0..probs.len())
            .map(|i| {
                let mut g = 0.0;
                for (r, c) in coeff.iter().enumerate() {
                    if (i >> r) & 1 == 0 {
                        g += c;
                    } else {
                        g -= c;
                    }
                }
                g
            })
            .collect()
    }
}
