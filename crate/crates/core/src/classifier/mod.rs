//! Single-layer softmax readout trained with cross-entropy and AdaGrad.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checksum::sha256_hex;
use crate::error::{Error, Result};
use crate::labeler::PhaseLabel;

pub const CLASSES: usize = PhaseLabel::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adagrad_epsilon: f64,
    pub l2_normalize_inputs: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 300,
            batch_size: 32,
            adagrad_epsilon: 1e-8,
            l2_normalize_inputs: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// `softmax(W x + b)` over the four phase classes; `W` is row-major `4 x dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: [f64; CLASSES],
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            weights: vec![0.0; CLASSES * dim],
            bias: [0.0; CLASSES],
        }
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn logits(&self, x: &[f64]) -> [f64; CLASSES] {
        let mut z = self.bias;
        for (c, zc) in z.iter_mut().enumerate() {
            *zc += self.row(c).iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        z
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Unit Euclidean normalization when `normalize` is set.
pub fn normalize_input(x: &[f64], normalize: bool) -> Result<Vec<f64>> {
    if !normalize {
        return Ok(x.to_vec());
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

pub fn softmax(z: &[f64; CLASSES]) -> [f64; CLASSES] {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = z.map(|v| (v - max).exp());
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    p
}

pub fn forward(model: &LinearModel, x: &[f64]) -> Result<[f64; CLASSES]> {
    if x.len() != model.dim {
        return Err(Error::Shape(format!("input of length {}, model expects {}", x.len(), model.dim)));
    }
    Ok(softmax(&model.logits(x)))
}

/// One labeled input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub label: PhaseLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub bias: [f64; CLASSES],
}

/// Mean cross-entropy over the batch and its gradient.
pub fn loss_and_grad(model: &LinearModel, batch: &[&Example]) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let mut grad = Gradients {
        weights: vec![0.0; model.weights.len()],
        bias: [0.0; CLASSES],
    };
    let mut loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    for ex in batch {
        let p = forward(model, &ex.input)?;
        let y = ex.label.code();
        // log-sum-exp form avoids log(0) for confident wrong predictions
        let z = model.logits(&ex.input);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += (lse - z[y]) * scale;
        for c in 0..CLASSES {
            let delta = (p[c] - if c == y { 1.0 } else { 0.0 }) * scale;
            grad.bias[c] += delta;
            for (g, v) in grad.weights[c * model.dim..(c + 1) * model.dim].iter_mut().zip(&ex.input) {
                *g += delta * v;
            }
        }
    }
    Ok((loss, grad))
}

/// Squared-gradient accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaGrad {
    pub weights: Vec<f64>,
    pub bias: [f64; CLASSES],
}

impl AdaGrad {
    pub fn new(model: &LinearModel) -> Self {
        Self {
            weights: vec![0.0; model.weights.len()],
            bias: [0.0; CLASSES],
        }
    }
}

pub fn adagrad_step(model: &mut LinearModel, grad: &Gradients, acc: &mut AdaGrad, config: &TrainConfig) -> Result<()> {
    if grad.weights.len() != model.weights.len() || acc.weights.len() != model.weights.len() {
        return Err(Error::Shape("gradient or accumulator shape differs from the model".into()));
    }
    let (lr, eps) = (config.learning_rate, config.adagrad_epsilon);
    let update = |p: &mut f64, g: f64, a: &mut f64| {
        *a += g * g;
        *p -= lr * g / (a.sqrt() + eps);
    };
    for ((p, g), a) in model.weights.iter_mut().zip(&grad.weights).zip(acc.weights.iter_mut()) {
        update(p, *g, a);
    }
    for ((p, g), a) in model.bias.iter_mut().zip(&grad.bias).zip(acc.bias.iter_mut()) {
        update(p, *g, a);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean minibatch loss over each epoch, measured before each update.
    pub loss: Vec<f64>,
    /// Training accuracy after each epoch.
    pub accuracy: Vec<f64>,
    pub updates: usize,
}

/// Minibatch AdaGrad with a seeded shuffle each epoch.
pub fn train(initial: &LinearModel, data: &[Example], config: &TrainConfig) -> Result<(LinearModel, TrainHistory)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("no training examples".into()));
    }
    let mut model = initial.clone();
    let mut acc = AdaGrad::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = TrainHistory {
        loss: Vec::with_capacity(config.epochs),
        accuracy: Vec::with_capacity(config.epochs),
        updates: 0,
    };
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &data[i]).collect();
            let (loss, grad) = loss_and_grad(&model, &batch)?;
            epoch_loss += loss * batch.len() as f64;
            adagrad_step(&mut model, &grad, &mut acc, config)?;
            history.updates += 1;
        }
        if !model.is_finite() {
            return Err(Error::Degenerate("classifier weights became non-finite".into()));
        }
        history.loss.push(epoch_loss / data.len() as f64);
        history.accuracy.push(evaluate(&model, data)?.accuracy);
    }
    Ok((model, history))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; CLASSES]; CLASSES],
    pub predictions: Vec<PhaseLabel>,
}

pub fn predict(model: &LinearModel, x: &[f64]) -> Result<PhaseLabel> {
    let p = forward(model, x)?;
    let mut best = 0;
    for c in 1..CLASSES {
        if p[c] > p[best] {
            best = c;
        }
    }
    Ok(PhaseLabel::from_code(best).expect("class index in range"))
}

pub fn evaluate(model: &LinearModel, data: &[Example]) -> Result<Evaluation> {
    let mut confusion = [[0; CLASSES]; CLASSES];
    let mut predictions = Vec::with_capacity(data.len());
    for ex in data {
        let p = predict(model, &ex.input)?;
        confusion[ex.label.code()][p.code()] += 1;
        predictions.push(p);
    }
    let correct: usize = (0..CLASSES).map(|c| confusion[c][c]).sum();
    Ok(Evaluation {
        accuracy: if data.is_empty() { 0.0 } else { correct as f64 / data.len() as f64 },
        confusion,
        predictions,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    dim: usize,
    config: TrainConfig,
    checksum: String,
}

/// JSON header line followed by little-endian f64 weights then bias.
pub fn save_checkpoint(model: &LinearModel, config: &TrainConfig, path: impl AsRef<Path>) -> Result<()> {
    let payload: Vec<u8> = model
        .weights
        .iter()
        .chain(&model.bias)
        .flat_map(|v| v.to_le_bytes())
        .collect();
    let header = CheckpointHeader {
        dim: model.dim,
        config: config.clone(),
        checksum: sha256_hex(&payload),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.write_all(&payload)?;
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(LinearModel, TrainConfig)> {
    let bytes = std::fs::read(path)?;
    let split = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("checkpoint has no header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..split])?;
    let payload = &bytes[split + 1..];
    if payload.len() != (CLASSES * header.dim + CLASSES) * 8 || sha256_hex(payload) != header.checksum {
        return Err(Error::Format("checkpoint payload is corrupt".into()));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let (w, b) = values.split_at(CLASSES * header.dim);
    let model = LinearModel {
        dim: header.dim,
        weights: w.to_vec(),
        bias: b.try_into().expect("four biases"),
    };
    Ok((model, header.config))
}
