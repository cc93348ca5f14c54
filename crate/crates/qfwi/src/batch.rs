//! Parallel-batch circuit construction: process 2^N samples in one
//! superposition by adding N batch-index qubits per group.
//!
//! The batch register rides above each group's data register. Encoding
//! loads the concatenation [D_1; ...; D_B] / sqrt(B), so the batch index
//! occupies the high-order qubits of each group. Gates of the base circuit
//! map unchanged onto the data qubits (identity on batch qubits), which
//! realizes the block-diagonal duplication of the operator at zero gate
//! cost; per-sample results come back by partitioning basis probabilities on
//! the batch-index bits and renormalizing each partition by its mass.
//!
//! With several groups, gates bridging two groups are wrapped in a swap
//! alignment of the two groups' batch registers. The alignment gates touch
//! no data qubit and no trainable parameter, so the per-sample identity is
//! preserved exactly.

use crate::encode::state_prep_circuit;
use crate::error::{Error, Result};
use crate::qsim::{Circuit, GateOp, ProbLoss, Statevector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchConfig {
    /// N: batch-index qubits per group; batch size B = 2^N.
    pub batch_qubits: usize,
    pub n_groups: usize,
}

impl BatchConfig {
    pub fn new(batch_qubits: usize, n_groups: usize) -> Self {
        BatchConfig {
            batch_qubits,
            n_groups,
        }
    }

    pub fn batch_size(&self) -> usize {
        1 << self.batch_qubits
    }

    /// Total extra qubits over the unbatched circuit.
    pub fn extra_qubits(&self) -> usize {
        self.n_groups * self.batch_qubits
    }
}

/// Qubit/index bookkeeping for a lifted register: per group, k data qubits
/// followed by N batch qubits.
#[derive(Clone, Copy, Debug)]
pub struct BatchLayout {
    pub group_data_qubits: usize,
    pub batch_qubits: usize,
    pub n_groups: usize,
}

impl BatchLayout {
    pub fn new(group_data_qubits: usize, config: BatchConfig) -> Self {
        BatchLayout {
            group_data_qubits,
            batch_qubits: config.batch_qubits,
            n_groups: config.n_groups,
        }
    }

    pub fn batch_size(&self) -> usize {
        1 << self.batch_qubits
    }

    pub fn n_data_qubits(&self) -> usize {
        self.group_data_qubits * self.n_groups
    }

    pub fn total_qubits(&self) -> usize {
        (self.group_data_qubits + self.batch_qubits) * self.n_groups
    }

    /// Lifted position of a base-circuit qubit.
    pub fn lifted_qubit(&self, base_qubit: usize) -> usize {
        let g = base_qubit / self.group_data_qubits;
        let offset = base_qubit % self.group_data_qubits;
        g * (self.group_data_qubits + self.batch_qubits) + offset
    }

    /// j-th batch qubit of group g.
    pub fn batch_qubit(&self, group: usize, j: usize) -> usize {
        group * (self.group_data_qubits + self.batch_qubits) + self.group_data_qubits + j
    }

    /// Basis index holding sample `b`'s amplitude for data index `d`
    /// (d runs over all groups' data bits in base-circuit order). Every
    /// group's batch register carries the same sample index.
    pub fn lifted_index(&self, b: usize, d: usize) -> usize {
        let k = self.group_data_qubits;
        let span = k + self.batch_qubits;
        let mut idx = 0usize;
        for g in 0..self.n_groups {
            let data_bits = (d >> (g * k)) & ((1 << k) - 1);
            idx |= data_bits << (g * span);
            idx |= b << (g * span + k);
        }
        idx
    }
}

/// Concatenate B unit sample vectors with uniform 1/sqrt(B) weighting.
pub fn batch_concat(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    if samples.is_empty() || !samples.len().is_power_of_two() {
        return Err(Error::config(format!(
            "batch size {} is not a power of two",
            samples.len()
        )));
    }
    let len = samples[0].len();
    let weight = 1.0 / (samples.len() as f64).sqrt();
    let mut out = Vec::with_capacity(len * samples.len());
    for s in samples {
        if s.len() != len {
            return Err(Error::config(
                "batched samples must share one length".to_string(),
            ));
        }
        out.extend(s.iter().map(|x| x * weight));
    }
    Ok(out)
}

/// Prepare B = 2^N unit vectors of length 2^k as one state on k+N qubits:
/// amplitudes equal [D_1; ...; D_B] / sqrt(B).
pub fn batch_encode(samples: &[Vec<f64>]) -> Result<Statevector> {
    let concat = batch_concat(samples)?;
    let circuit = state_prep_circuit(&concat)?;
    let n_qubits = concat.len().trailing_zeros() as usize;
    crate::qsim::run_circuit(&circuit, &[], &Statevector::zero(n_qubits))
}

/// State-preparation circuit for a whole lifted register.
/// `group_samples[g][b]` is sample b's unit vector for group g; each group's
/// batched vector is prepared on its own data+batch register.
pub fn batched_prep_circuit(
    group_samples: &[Vec<Vec<f64>>],
    layout: &BatchLayout,
) -> Result<Circuit> {
    if group_samples.len() != layout.n_groups {
        return Err(Error::config(format!(
            "expected {} groups of samples, got {}",
            layout.n_groups,
            group_samples.len()
        )));
    }
    let span = layout.group_data_qubits + layout.batch_qubits;
    let mut circuit = Circuit::new(layout.total_qubits());
    for (g, samples) in group_samples.iter().enumerate() {
        if samples.len() != layout.batch_size() {
            return Err(Error::config(format!(
                "group {g} has {} samples, expected batch size {}",
                samples.len(),
                layout.batch_size()
            )));
        }
        let concat = batch_concat(samples)?;
        let prep = state_prep_circuit(&concat)?;
        circuit.append_shifted(&prep, g * span)?;
    }
    Ok(circuit)
}

/// Map a base circuit onto the lifted register: every gate lands on the same
/// data qubits (identity on batch qubits), and gates bridging two groups are
/// wrapped in the swap alignment of those groups' batch registers.
pub fn lift_circuit(base: &Circuit, config: BatchConfig) -> Result<Circuit> {
    if config.n_groups == 0 || base.n_qubits() % config.n_groups != 0 {
        return Err(Error::config(format!(
            "base circuit on {} qubits cannot split into {} groups",
            base.n_qubits(),
            config.n_groups
        )));
    }
    let layout = BatchLayout::new(base.n_qubits() / config.n_groups, config);
    let mut lifted = Circuit::new(layout.total_qubits());
    let group_of = |q: usize| q / layout.group_data_qubits;

    for op in base.ops() {
        let mapped = match op.clone() {
            GateOp::U3 { target, angles } => GateOp::U3 {
                target: layout.lifted_qubit(target),
                angles,
            },
            GateOp::CU3 {
                control,
                target,
                angles,
            } => GateOp::CU3 {
                control: layout.lifted_qubit(control),
                target: layout.lifted_qubit(target),
                angles,
            },
            GateOp::Swap { a, b } => GateOp::Swap {
                a: layout.lifted_qubit(a),
                b: layout.lifted_qubit(b),
            },
            GateOp::StatePrepRotation {
                target,
                controls,
                angles,
            } => GateOp::StatePrepRotation {
                target: layout.lifted_qubit(target),
                controls: controls.iter().map(|&c| layout.lifted_qubit(c)).collect(),
                angles,
            },
        };

        let bridge = match op {
            GateOp::CU3 {
                control, target, ..
            } if group_of(*control) != group_of(*target) => {
                Some((group_of(*control), group_of(*target)))
            }
            GateOp::Swap { a, b } if group_of(*a) != group_of(*b) => {
                Some((group_of(*a), group_of(*b)))
            }
            _ => None,
        };

        match bridge {
            Some((ga, gb)) if layout.batch_qubits > 0 => {
                for j in 0..layout.batch_qubits {
                    lifted.push(GateOp::Swap {
                        a: layout.batch_qubit(ga, j),
                        b: layout.batch_qubit(gb, j),
                    })?;
                }
                lifted.push(mapped)?;
                for j in 0..layout.batch_qubits {
                    lifted.push(GateOp::Swap {
                        a: layout.batch_qubit(ga, j),
                        b: layout.batch_qubit(gb, j),
                    })?;
                }
            }
            _ => lifted.push(mapped)?,
        }
    }
    Ok(lifted)
}

/// Split a lifted state into per-sample states on the data qubits. Sample b
/// is the partition whose batch registers all read b, renormalized by its
/// probability mass.
pub fn batch_decode(state: &Statevector, layout: &BatchLayout) -> Result<Vec<Statevector>> {
    if state.n_qubits() != layout.total_qubits() {
        return Err(Error::config(format!(
            "lifted state has {} qubits, layout expects {}",
            state.n_qubits(),
            layout.total_qubits()
        )));
    }
    let amps = state.amplitudes();
    let data_dim = 1usize << layout.n_data_qubits();
    let mut out = Vec::with_capacity(layout.batch_size());
    for b in 0..layout.batch_size() {
        let mut sub: Vec<num_complex::Complex64> = Vec::with_capacity(data_dim);
        for d in 0..data_dim {
            sub.push(amps[layout.lifted_index(b, d)]);
        }
        let mass: f64 = sub.iter().map(|a| a.norm_sqr()).sum();
        if mass < 1e-12 {
            return Err(Error::numeric(format!(
                "batch partition {b} has vanishing probability mass {mass}"
            )));
        }
        let inv = 1.0 / mass.sqrt();
        for a in &mut sub {
            *a *= inv;
        }
        out.push(Statevector::from_amplitudes(sub)?);
    }
    Ok(out)
}

/// Probability mass of each batch partition.
pub fn partition_masses(state: &Statevector, layout: &BatchLayout) -> Vec<f64> {
    let amps = state.amplitudes();
    let data_dim = 1usize << layout.n_data_qubits();
    (0..layout.batch_size())
        .map(|b| {
            (0..data_dim)
                .map(|d| amps[layout.lifted_index(b, d)].norm_sqr())
                .sum()
        })
        .collect()
}

/// Mean of per-sample losses, each computed on its renormalized partition.
/// Gradients flow through the partition gather and mass renormalization, so
/// batched training differentiates exactly like unbatched training.
pub struct BatchedReadout<R: ProbLoss> {
    pub per_sample: Vec<R>,
    pub layout: BatchLayout,
}

impl<R: ProbLoss> ProbLoss for BatchedReadout<R> {
    fn loss(&self, probs: &[f64]) -> f64 {
        let data_dim = 1usize << self.layout.n_data_qubits();
        let inv_b = 1.0 / self.per_sample.len() as f64;
        let mut total = 0.0;
        for (b, readout) in self.per_sample.iter().enumerate() {
            let sub: Vec<f64> = (0..data_dim)
                .map(|d| probs[self.layout.lifted_index(b, d)])
                .collect();
            let mass: f64 = sub.iter().sum();
            let renorm: Vec<f64> = sub.iter().map(|q| q / mass).collect();
            total += readout.loss(&renorm) * inv_b;
        }
        total
    }

    fn prob_grad(&self, probs: &[f64]) -> Vec<f64> {
        let data_dim = 1usize << self.layout.n_data_qubits();
        let inv_b = 1.0 / self.per_sample.len() as f64;
        let mut grad = vec![0.0; probs.len()];
        for (b, readout) in self.per_sample.iter().enumerate() {
            let sub: Vec<f64> = (0..data_dim)
                .map(|d| probs[self.layout.lifted_index(b, d)])
                .collect();
            let mass: f64 = sub.iter().sum();
            let renorm: Vec<f64> = sub.iter().map(|q| q / mass).collect();
            let inner = readout.prob_grad(&renorm);
            // d p_e / d q_d = (delta_ed - p_e) / m for indices inside the
            // partition; amplitudes outside it never enter the loss.
            let dot: f64 = inner.iter().zip(&renorm).map(|(g, p)| g * p).sum();
            for d in 0..data_dim {
                grad[self.layout.lifted_index(b, d)] = inv_b * (inner[d] - dot) / mass;
            }
        }
        grad
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostEstimate {
    pub extra_qubits: usize,
    /// Time-space estimator for the batched construction: X * max(1, G N^2).
    pub batched_cost: f64,
    /// Cost of running the B samples as independent circuits: B * X.
    pub independent_cost: f64,
}

/// Qubit and time-space overhead of batching relative to a base circuit of
/// cost X (qubits times depth).
pub fn complexity_estimate(config: BatchConfig, base_cost: f64) -> CostEstimate {
    let g = config.n_groups as f64;
    let n = config.batch_qubits as f64;
    let factor = (g * n * n).max(1.0);
    CostEstimate {
        extra_qubits: config.extra_qubits(),
        batched_cost: factor * base_cost,
        independent_cost: config.batch_size() as f64 * base_cost,
    }
}
