//! One-hidden-layer binary classifier trained with plain SGD.
//!
//! `p = sigmoid(w2 . relu(W1 x + b1) + b2)`, clamped to `[1e-7, 1 - 1e-7]`
//! before the BCE loss is taken.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    input_dim: usize,
    hidden: usize,
    /// `hidden x input_dim`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn bce_loss(p: f64, y: f64) -> f64 {
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

impl ModelParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w1: vec![0.0; hidden * input_dim],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    /// Weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
    pub fn init(input_dim: usize, hidden: usize, run_seed: u64) -> Self {
        let mut rng = seed::rng(run_seed, &[seed::STREAM_INIT]);
        let mut p = Self::zeros(input_dim, hidden);
        let a1 = 1.0 / (input_dim as f64).sqrt();
        let a2 = 1.0 / (hidden as f64).sqrt();
        p.w1.iter_mut()
            .for_each(|w| *w = seed::uniform(&mut rng, -a1, a1));
        p.w2.iter_mut()
            .for_each(|w| *w = seed::uniform(&mut rng, -a2, a2));
        p
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Flat view in the order `w1, b1, w2, b2`.
    pub fn param_mut(&mut self, i: usize) -> &mut f64 {
        let (n1, h) = (self.w1.len(), self.hidden);
        match i {
            i if i < n1 => &mut self.w1[i],
            i if i < n1 + h => &mut self.b1[i - n1],
            i if i < n1 + 2 * h => &mut self.w2[i - n1 - h],
            i if i == n1 + 2 * h => &mut self.b2,
            _ => panic!("parameter index {i} out of range"),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        v.extend(&self.w1);
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn hidden_pre(&self, x: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.w1[j * self.input_dim..(j + 1) * self.input_dim];
            *o = self.b1[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    fn output(&self, pre: &[f64]) -> f64 {
        let z = self.b2
            + pre
                .iter()
                .zip(&self.w2)
                .map(|(a, w)| a.max(0.0) * w)
                .sum::<f64>();
        sigmoid(z).clamp(PROB_EPS, 1.0 - PROB_EPS)
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let mut pre = vec![0.0; self.hidden];
        self.hidden_pre(x, &mut pre);
        Ok(self.output(&pre))
    }

    /// Per-item losses under the current parameters together with the
    /// batch-mean gradient, from a single forward pass.
    pub fn forward_backward(&self, batch: &[(&[f64], f64)]) -> Result<(Vec<f64>, Gradients)> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mut grads = Self::zeros(self.input_dim, self.hidden);
        let mut losses = Vec::with_capacity(batch.len());
        let mut pre = vec![0.0; self.hidden];
        let scale = 1.0 / batch.len() as f64;
        for &(x, y) in batch {
            self.check_input(x)?;
            self.hidden_pre(x, &mut pre);
            let p = self.output(&pre);
            losses.push(bce_loss(p, y));
            let dz = (p - y) * scale;
            grads.b2 += dz;
            for (j, &a) in pre.iter().enumerate() {
                if a <= 0.0 {
                    continue;
                }
                grads.w2[j] += dz * a;
                let delta = dz * self.w2[j];
                grads.b1[j] += delta;
                let row = &mut grads.w1[j * self.input_dim..(j + 1) * self.input_dim];
                row.iter_mut().zip(x).for_each(|(g, v)| *g += delta * v);
            }
        }
        Ok((losses, grads))
    }

    pub fn gradients(&self, batch: &[(&[f64], f64)]) -> Result<Gradients> {
        self.forward_backward(batch).map(|(_, g)| g)
    }

    pub fn mean_loss(&self, batch: &[(&[f64], f64)]) -> Result<f64> {
        let mut total = 0.0;
        for &(x, y) in batch {
            total += bce_loss(self.forward(x)?, y);
        }
        Ok(total / batch.len() as f64)
    }

    pub fn sgd_step(&mut self, grads: &Gradients, eta: f64) {
        self.axpy(-eta, grads);
    }

    fn axpy(&mut self, a: f64, g: &Gradients) {
        let upd = |p: &mut [f64], g: &[f64]| p.iter_mut().zip(g).for_each(|(p, g)| *p += a * g);
        upd(&mut self.w1, &g.w1);
        upd(&mut self.b1, &g.b1);
        upd(&mut self.w2, &g.w2);
        self.b2 += a * g.b2;
    }

    fn scale(&mut self, a: f64) {
        self.w1.iter_mut().for_each(|p| *p *= a);
        self.b1.iter_mut().for_each(|p| *p *= a);
        self.w2.iter_mut().for_each(|p| *p *= a);
        self.b2 *= a;
    }
}

/// SGD with optional heavy-ball momentum; `momentum = 0` is the plain update.
#[derive(Debug, Clone)]
pub struct Sgd {
    momentum: f64,
    velocity: Option<Gradients>,
}

impl Sgd {
    pub fn new(momentum: f64) -> Self {
        Self {
            momentum,
            velocity: None,
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients, eta: f64) {
        if self.momentum == 0.0 {
            params.sgd_step(grads, eta);
            return;
        }
        let v = self
            .velocity
            .get_or_insert_with(|| ModelParams::zeros(params.input_dim, params.hidden));
        v.scale(self.momentum);
        v.axpy(1.0, grads);
        params.sgd_step(v, eta);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub eta_max: f64,
    pub eta_min: f64,
    pub total_epochs: usize,
}

impl LrSchedule {
    pub fn new(eta_max: f64, eta_min: f64, total_epochs: usize) -> Result<Self> {
        if !(eta_min > 0.0 && eta_min <= eta_max && eta_max.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "need 0 < eta_min <= eta_max, got eta_min={eta_min}, eta_max={eta_max}"
            )));
        }
        if total_epochs == 0 {
            return Err(Error::InvalidSchedule(
                "total_epochs must be positive".into(),
            ));
        }
        Ok(Self {
            eta_max,
            eta_min,
            total_epochs,
        })
    }

    /// Cosine decay from `eta_max` at epoch 1 to `eta_min` at the last epoch.
    pub fn cosine_lr(&self, t: usize) -> Result<f64> {
        let total = self.total_epochs;
        if t == 0 || t > total {
            return Err(Error::InvalidSchedule(format!(
                "epoch {t} outside 1..={total}"
            )));
        }
        if total == 1 {
            return Ok(self.eta_max);
        }
        let phase = std::f64::consts::PI * (t - 1) as f64 / (total - 1) as f64;
        let eta = self.eta_min + 0.5 * (self.eta_max - self.eta_min) * (1.0 + phase.cos());
        Ok(eta.clamp(self.eta_min, self.eta_max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub input_dim: usize,
    pub hidden: usize,
    pub num_params: usize,
    pub layout: Vec<String>,
    pub seed: u64,
    pub epoch: usize,
}

const CHECKPOINT_FORMAT: &str = "dffc-mlp-f64le-v1";

/// Writes `<stem>.json` (header) and `<stem>.bin` (little-endian `f64`
/// parameters in `w1, b1, w2, b2` order).
pub fn save_checkpoint(
    dir: &Path,
    stem: &str,
    params: &ModelParams,
    seed: u64,
    epoch: usize,
) -> Result<()> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        input_dim: params.input_dim,
        hidden: params.hidden,
        num_params: params.num_params(),
        layout: ["w1", "b1", "w2", "b2"].map(String::from).to_vec(),
        seed,
        epoch,
    };
    let header_path = dir.join(format!("{stem}.json"));
    fs::write(&header_path, serde_json::to_string_pretty(&header)?)
        .map_err(|e| Error::io(&header_path, e))?;
    let blob: Vec<u8> = params
        .to_flat()
        .iter()
        .flat_map(|v| v.to_le_bytes())
        .collect();
    let blob_path = dir.join(format!("{stem}.bin"));
    fs::write(&blob_path, blob).map_err(|e| Error::io(&blob_path, e))
}

pub fn load_checkpoint(dir: &Path, stem: &str) -> Result<(CheckpointHeader, ModelParams)> {
    let header_path = dir.join(format!("{stem}.json"));
    let text = fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let header: CheckpointHeader = serde_json::from_str(&text)?;
    let blob_path = dir.join(format!("{stem}.bin"));
    let bytes = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    let mut params = ModelParams::zeros(header.input_dim, header.hidden);
    if header.format != CHECKPOINT_FORMAT || bytes.len() != params.num_params() * 8 {
        return Err(Error::Format {
            path: blob_path,
            reason: format!("expected {} f64 parameters", params.num_params()),
        });
    }
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        *params.param_mut(i) = f64::from_le_bytes(chunk.try_into().unwrap());
    }
    Ok((header, params))
}
