//! The coordinate-wise prediction network.
//!
//! Each row of the `n × 3` input goes through a bias-free block
//! `3 → 6 → 12 → 3`; the block outputs are averaged over the rows, and the
//! average is concatenated in front of every input row. A second block
//! `6 → 12 → 1` plus a linear skip `6 → 1` on that augmented row gives the
//! prediction for the coordinate. Rectifiers follow every layer except the
//! last layer of each block and the skip.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Eager, Matrix, Rng, TensorOps, Vector};

pub const FORMAT_VERSION: u32 = 1;
pub const INPUT_WIDTH: usize = 3;
pub const PARAMETER_COUNT: usize = 216;

/// `(name, fan_in, fan_out)` in storage order.
pub const LAYERS: [(&str, usize, usize); 6] = [
    ("block1.fc1", 3, 6),
    ("block1.fc2", 6, 12),
    ("block1.fc3", 12, 3),
    ("block2.fc1", 6, 12),
    ("block2.fc2", 12, 1),
    ("skip", 6, 1),
];

pub const SKIP: usize = 5;
const BLOCK2_LAST: usize = 4;

/// Layer matrices stored `fan_in × fan_out`, applied as `h ↦ h·W`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    layers: Vec<Matrix>,
}

fn uniform_layer(rng: &mut Rng, fan_in: usize, fan_out: usize) -> Matrix {
    let bound = (1.0 / fan_in as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.uniform(-bound, bound)).collect();
    Matrix::from_vec(fan_in, fan_out, data)
}

impl ModelWeights {
    pub fn new(layers: Vec<Matrix>) -> Result<Self> {
        if layers.len() != LAYERS.len() {
            return Err(Error::Format(format!("expected 6 layers, got {}", layers.len())));
        }
        for (m, (name, r, c)) in layers.iter().zip(LAYERS) {
            if m.shape() != (r, c) {
                return Err(Error::Format(format!(
                    "layer {name} has shape {:?}, expected ({r}, {c})",
                    m.shape()
                )));
            }
            if !m.is_finite() {
                return Err(Error::Format(format!("layer {name} has non-finite entries")));
            }
        }
        let w = Self { layers };
        assert_eq!(w.param_count(), PARAMETER_COUNT);
        Ok(w)
    }

    /// Weights for which the network outputs its second input column
    /// exactly: the last layer of the second block is zero and the skip
    /// selects the fifth augmented feature. The remaining layers are drawn
    /// uniformly in `±1/√fan_in`.
    pub fn init_bfgs_coincident(rng: &mut Rng) -> Self {
        let mut w = Self::init_random(rng);
        w.layers[BLOCK2_LAST] = Matrix::zeros(12, 1);
        w.layers[SKIP] = Matrix::from_vec(6, 1, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        w
    }

    /// Every layer uniform in `±1/√fan_in`.
    pub fn init_random(rng: &mut Rng) -> Self {
        let mut gen = rng.split("weights");
        let layers = LAYERS
            .iter()
            .map(|(_, r, c)| uniform_layer(&mut gen, *r, *c))
            .collect();
        Self { layers }
    }

    /// Copy with independent `N(0, scale²)` noise added to every entry.
    pub fn perturbed(&self, rng: &mut Rng, scale: f64) -> Self {
        let layers = self
            .layers
            .iter()
            .map(|m| {
                let noise: Vec<f64> = (0..m.as_slice().len()).map(|_| scale * rng.standard_normal()).collect();
                let mut out = m.clone();
                for (v, e) in out.as_mut_slice().iter_mut().zip(noise) {
                    *v += e;
                }
                out
            })
            .collect();
        Self { layers }
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn layer(&self, i: usize) -> &Matrix {
        &self.layers[i]
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|m| m.as_slice().len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|m| m.as_slice().iter().copied()).collect()
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != PARAMETER_COUNT {
            return Err(Error::Format(format!("expected {PARAMETER_COUNT} values, got {}", flat.len())));
        }
        let mut off = 0;
        let layers = LAYERS
            .iter()
            .map(|(_, r, c)| {
                let m = Matrix::from_vec(*r, *c, flat[off..off + r * c].to_vec());
                off += r * c;
                m
            })
            .collect();
        Self::new(layers)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WeightFile::from_weights(self, None)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.into_weights()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// On-disk weight format; checkpoints also carry the epoch and loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub version: u32,
    pub layers: Vec<LayerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<Checkpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: usize,
    pub mean_loss: f64,
}

impl WeightFile {
    pub fn from_weights(w: &ModelWeights, checkpoint: Option<Checkpoint>) -> Self {
        Self {
            version: FORMAT_VERSION,
            layers: w
                .layers
                .iter()
                .zip(LAYERS)
                .map(|(m, (name, r, c))| LayerRecord {
                    name: name.to_string(),
                    rows: r,
                    cols: c,
                    data: m.as_slice().to_vec(),
                })
                .collect(),
            checkpoint,
        }
    }

    pub fn into_weights(self) -> Result<ModelWeights> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unknown format version {}", self.version)));
        }
        if self.layers.len() != LAYERS.len() {
            return Err(Error::Format(format!("expected 6 layers, got {}", self.layers.len())));
        }
        let mut layers = Vec::new();
        for (rec, (name, r, c)) in self.layers.into_iter().zip(LAYERS) {
            if rec.name != name || rec.rows != r || rec.cols != c || rec.data.len() != r * c {
                return Err(Error::Format(format!(
                    "layer '{}' {}×{} ({} values) does not match {name} {r}×{c}",
                    rec.name,
                    rec.rows,
                    rec.cols,
                    rec.data.len()
                )));
            }
            layers.push(Matrix::from_vec(r, c, rec.data));
        }
        ModelWeights::new(layers)
    }
}

/// Network output for an `n × 3` input, on any backend. `w` holds the six
/// layer tensors in storage order.
pub fn forward_with<O: TensorOps>(ops: &mut O, w: &[O::T], input: &O::T) -> O::T {
    let n = ops.value(input).rows();
    let h = ops.matmul(input, &w[0]);
    let h = ops.relu(&h);
    let h = ops.matmul(&h, &w[1]);
    let h = ops.relu(&h);
    let h = ops.matmul(&h, &w[2]);
    let avg = ops.mean_rows(&h);
    let avg = ops.broadcast_rows(&avg, n);
    let aug = ops.concat_cols(&[avg, input.clone()]);
    let z = ops.matmul(&aug, &w[3]);
    let z = ops.relu(&z);
    let block = ops.matmul(&z, &w[4]);
    let skip = ops.matmul(&aug, &w[5]);
    ops.add(&block, &skip)
}

/// `y_k` for the oracle features `I_k = (BΔg, d, −γB∇f)`.
pub fn forward(w: &ModelWeights, input: &Matrix) -> Result<Vector> {
    if input.cols() != INPUT_WIDTH || input.rows() == 0 {
        return Err(Error::Shape(format!(
            "model input must be n × {INPUT_WIDTH}, got {:?}",
            input.shape()
        )));
    }
    Ok(forward_with(&mut Eager, &w.layers, input).to_vector())
}
