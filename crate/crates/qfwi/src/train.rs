//! End-to-end training of the variational model with Adam and a cosine
//! learning-rate schedule, plus held-out evaluation.
//!
//! Without batch qubits an epoch accumulates the mean gradient over the full
//! training set (deterministic reduction order) and takes one Adam step;
//! with N batch qubits, consecutive groups of 2^N samples run as one lifted
//! circuit and each group takes its own step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, init_params, AnsatzConfig};
use crate::batch::{batched_prep_circuit, lift_circuit, BatchConfig, BatchLayout, BatchedReadout};
use crate::decode::{
    broadcast_rows, decode_layerwise, decode_pixelwise, LayerReadout, PixelReadout, VelocityMap,
};
use crate::encode::{encode_input, EncodedInput};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricReport};
use crate::qsim::{gradients, run_circuit, Circuit, ProbLoss, Statevector};

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Pixel,
    Layer,
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecoderKind::Pixel => write!(f, "pixel"),
            DecoderKind::Layer => write!(f, "layer"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub initial_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub decoder: DecoderKind,
    /// Batch-index qubits per group (batch size 2^N).
    pub batch_qubits: usize,
    pub n_groups: usize,
    pub n_blocks: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            initial_lr: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            decoder: DecoderKind::Layer,
            batch_qubits: 0,
            n_groups: 1,
            n_blocks: 12,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_lr <= 0.0 {
            return Err(Error::config("learning rate must be positive"));
        }
        if self.n_groups == 0 {
            return Err(Error::config("need at least one group"));
        }
        Ok(())
    }
}

/// Scaled samples ready for training: 256-value inputs and 8x8 labels in
/// normalized [0, 1] velocity units.
#[derive(Clone, Debug)]
pub struct ScaledDataset {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<VelocityMap>,
    pub v_min: f64,
    pub v_max: f64,
    pub pixel_scale: f64,
    pub n_train: usize,
}

impl ScaledDataset {
    pub fn n_samples(&self) -> usize {
        self.inputs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.labels.len() {
            return Err(Error::config(format!(
                "{} inputs but {} labels",
                self.inputs.len(),
                self.labels.len()
            )));
        }
        if self.n_train > self.inputs.len() {
            return Err(Error::config(format!(
                "train split {} exceeds {} samples",
                self.n_train,
                self.inputs.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_mse: f64,
    pub test_ssim: f64,
}

/// Trained model state plus everything needed to decode its predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub ansatz: AnsatzConfig,
    pub params: Vec<f64>,
    pub decoder: DecoderKind,
    pub v_min: f64,
    pub v_max: f64,
    pub pixel_scale: f64,
    pub epoch: usize,
    pub batch_qubits: usize,
    /// G x N extra qubits the batched training circuits used.
    pub extra_qubits: usize,
    pub history: Vec<EpochRecord>,
}

/// Cosine annealing from the initial rate to zero across `total` epochs.
pub fn cosine_lr(initial: f64, epoch: usize, total: usize) -> f64 {
    initial * (1.0 + (std::f64::consts::PI * epoch as f64 / total as f64).cos()) / 2.0
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl Adam {
    fn new(n: usize, config: &TrainConfig) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

enum SampleReadout {
    Pixel(PixelReadout),
    Layer(LayerReadout),
}

impl ProbLoss for SampleReadout {
    fn loss(&self, probs: &[f64]) -> f64 {
        match self {
            SampleReadout::Pixel(r) => r.loss(probs),
            SampleReadout::Layer(r) => r.loss(probs),
        }
    }

    fn prob_grad(&self, probs: &[f64]) -> Vec<f64> {
        match self {
            SampleReadout::Pixel(r) => r.prob_grad(probs),
            SampleReadout::Layer(r) => r.prob_grad(probs),
        }
    }
}

fn make_readout(decoder: DecoderKind, label: &VelocityMap, pixel_scale: f64) -> SampleReadout {
    match decoder {
        DecoderKind::Pixel => SampleReadout::Pixel(PixelReadout {
            target: label.clone(),
            scale: pixel_scale,
        }),
        DecoderKind::Layer => SampleReadout::Layer(LayerReadout {
            target: label.clone(),
        }),
    }
}

/// Consecutive chunks of at most 2^N samples, remainders split into smaller
/// powers of two so every chunk is batchable.
fn power_two_chunks(total: usize, batch: usize) -> Vec<(usize, usize)> {
    let mut chunks = Vec::new();
    let mut start = 0;
    while start < total {
        let mut size = batch.min(total - start);
        while !size.is_power_of_two() {
            size = size.next_power_of_two() >> 1;
        }
        chunks.push((start, size));
        start += size;
    }
    chunks
}

/// One training unit: a fixed circuit (encoder + model) and its readout.
struct Unit {
    circuit: Circuit,
    readout: BatchedReadout<SampleReadout>,
    n_samples: usize,
}

fn build_units(
    data: &ScaledDataset,
    encodings: &[EncodedInput],
    ansatz_circuit: &Circuit,
    config: &TrainConfig,
    indices: std::ops::Range<usize>,
) -> Result<Vec<Unit>> {
    let group_qubits = encodings[0].group_qubits;
    let batch = 1usize << config.batch_qubits;
    let mut units = Vec::new();
    for (offset, size) in power_two_chunks(indices.len(), batch) {
        let start = indices.start + offset;
        let chunk: Vec<usize> = (start..start + size).collect();
        let n = size.trailing_zeros() as usize;
        let batch_config = BatchConfig::new(n, config.n_groups);
        let layout = BatchLayout::new(group_qubits, batch_config);

        let group_samples: Vec<Vec<Vec<f64>>> = (0..config.n_groups)
            .map(|g| chunk.iter().map(|&i| encodings[i].groups[g].clone()).collect())
            .collect();
        let mut circuit = batched_prep_circuit(&group_samples, &layout)?;
        let lifted = lift_circuit(ansatz_circuit, batch_config)?;
        circuit.append_shifted(&lifted, 0)?;

        let per_sample: Vec<SampleReadout> = chunk
            .iter()
            .map(|&i| make_readout(config.decoder, &data.labels[i], data.pixel_scale))
            .collect();
        units.push(Unit {
            circuit,
            readout: BatchedReadout {
                per_sample,
                layout,
            },
            n_samples: size,
        });
    }
    Ok(units)
}

/// Inference wrapper around a checkpoint: encode, run, decode.
pub struct Predictor {
    ansatz_circuit: Circuit,
    params: Vec<f64>,
    decoder: DecoderKind,
    pixel_scale: f64,
    n_groups: usize,
}

impl Predictor {
    pub fn from_checkpoint(checkpoint: &Checkpoint) -> Result<Self> {
        Ok(Predictor {
            ansatz_circuit: build_ansatz(&checkpoint.ansatz)?,
            params: checkpoint.params.clone(),
            decoder: checkpoint.decoder,
            pixel_scale: checkpoint.pixel_scale,
            n_groups: checkpoint.ansatz.n_groups,
        })
    }

    /// Predicted 8x8 map in normalized [0, 1] units.
    pub fn predict(&self, input: &[f64]) -> Result<VelocityMap> {
        let encoding = encode_input(input, self.n_groups)?;
        let mut circuit = encoding.prep_circuit()?;
        circuit.append_shifted(&self.ansatz_circuit, 0)?;
        let state = run_circuit(&circuit, &self.params, &Statevector::zero(circuit.n_qubits()))?;
        match self.decoder {
            DecoderKind::Pixel => decode_pixelwise(&state, self.pixel_scale),
            DecoderKind::Layer => {
                let rows = decode_layerwise(&state)?;
                Ok(broadcast_rows(&rows, rows.len()))
            }
        }
    }
}

/// Mean MSE/SSIM of a predictor over paired inputs and normalized labels.
pub fn evaluate(
    predictor: &Predictor,
    inputs: &[Vec<f64>],
    labels: &[VelocityMap],
) -> Result<MetricReport> {
    if inputs.len() != labels.len() {
        return Err(Error::config(format!(
            "{} inputs vs {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if inputs.is_empty() {
        return Err(Error::config("cannot evaluate on an empty set"));
    }
    let reports: Vec<MetricReport> = inputs
        .par_iter()
        .zip(labels.par_iter())
        .map(|(input, label)| {
            let prediction = predictor.predict(input)?;
            metrics::report(label, &prediction)
        })
        .collect::<Result<_>>()?;
    let n = reports.len() as f64;
    Ok(MetricReport {
        mse: reports.iter().map(|r| r.mse).sum::<f64>() / n,
        ssim: reports.iter().map(|r| r.ssim).sum::<f64>() / n,
    })
}

/// Train on the dataset's train split, recording test metrics every epoch.
pub fn train(data: &ScaledDataset, config: &TrainConfig) -> Result<Checkpoint> {
    config.validate()?;
    data.validate()?;
    if data.n_train == 0 {
        return Err(Error::config("empty training split"));
    }

    let encodings: Vec<EncodedInput> = data
        .inputs
        .iter()
        .map(|x| encode_input(x, config.n_groups))
        .collect::<Result<_>>()?;
    let n_qubits = encodings[0].n_qubits();
    let ansatz_config = AnsatzConfig::new(n_qubits, config.n_blocks, config.n_groups);
    let ansatz_circuit = build_ansatz(&ansatz_config)?;
    let mut params = init_params(ansatz_config.param_count(), config.seed);

    let units = build_units(data, &encodings, &ansatz_circuit, config, 0..data.n_train)?;
    let full_batch = config.batch_qubits == 0;

    let test_inputs = &data.inputs[data.n_train..];
    let test_labels = &data.labels[data.n_train..];

    let mut adam = Adam::new(params.len(), config);
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = cosine_lr(config.initial_lr, epoch, config.epochs);
        let mut epoch_loss = 0.0;

        if full_batch {
            // Every unit holds one sample; reduce the mean gradient in
            // index order so results do not depend on scheduling.
            let results: Vec<crate::qsim::Gradients> = units
                .par_iter()
                .enumerate()
                .map(|(i, unit)| {
                    gradients(
                        &unit.circuit,
                        &params,
                        &Statevector::zero(unit.circuit.n_qubits()),
                        &unit.readout,
                    )
                    .map_err(|e| {
                        Error::numeric(format!("epoch {epoch}, sample {i}: {e}"))
                    })
                })
                .collect::<Result<_>>()?;
            let n = results.len() as f64;
            let mut mean_grad = vec![0.0; params.len()];
            for g in &results {
                epoch_loss += g.loss;
                for (acc, d) in mean_grad.iter_mut().zip(&g.grad) {
                    *acc += d;
                }
            }
            epoch_loss /= n;
            for g in &mut mean_grad {
                *g /= n;
            }
            adam.step(&mut params, &mean_grad, lr);
        } else {
            for (i, unit) in units.iter().enumerate() {
                let g = gradients(
                    &unit.circuit,
                    &params,
                    &Statevector::zero(unit.circuit.n_qubits()),
                    &unit.readout,
                )
                .map_err(|e| Error::numeric(format!("epoch {epoch}, group {i}: {e}")))?;
                epoch_loss += g.loss * unit.n_samples as f64;
                adam.step(&mut params, &g.grad, lr);
            }
            epoch_loss /= data.n_train as f64;
        }

        let (test_mse, test_ssim) = if test_inputs.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let predictor = Predictor {
                ansatz_circuit: ansatz_circuit.clone(),
                params: params.clone(),
                decoder: config.decoder,
                pixel_scale: data.pixel_scale,
                n_groups: config.n_groups,
            };
            let report = evaluate(&predictor, test_inputs, test_labels)?;
            (report.mse, report.ssim)
        };
        history.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: epoch_loss,
            test_mse,
            test_ssim,
        });
    }

    Ok(Checkpoint {
        ansatz: ansatz_config,
        params,
        decoder: config.decoder,
        v_min: data.v_min,
        v_max: data.v_max,
        pixel_scale: data.pixel_scale,
        epoch: config.epochs,
        batch_qubits: config.batch_qubits,
        extra_qubits: config.batch_qubits * config.n_groups,
        history,
    })
}
