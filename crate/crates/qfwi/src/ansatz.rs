//! Trainable circuit construction: per-group sub-circuits of U3+CU3 blocks
//! with optional entangling gates bridging groups.
//!
//! One block over m qubits is a U3 on every qubit followed by a ring of CU3
//! gates (control i, target (i+1) mod m), 6m parameter slots in all; a
//! single-qubit block degenerates to the lone U3. Blocks repeat `n_blocks`
//! times per group, and after each round one CU3 per configured pair bridges
//! the first qubits of the two groups. Parameter slots are assigned in
//! construction order; see [`PARAM_LAYOUT`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qsim::{Angle, Circuit, GateOp};

/// Human-readable description of the parameter-slot order, recorded in
/// checkpoints so stored parameter vectors stay interpretable.
pub const PARAM_LAYOUT: &str = "per block round: for each group ascending: U3(theta,phi,lambda) \
per qubit ascending, then ring CU3(theta,phi,lambda) per control qubit ascending; then one CU3 \
per inter-group pair in order (when groups > 1); rounds sequential";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AnsatzConfig {
    pub n_qubits: usize,
    pub n_blocks: usize,
    pub n_groups: usize,
    /// Group pairs bridged after each block round, in order.
    pub inter_group_order: Vec<(usize, usize)>,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig::new(8, 12, 1)
    }
}

impl AnsatzConfig {
    /// Config with the canonical sequential bridge order (0,1),(1,2),...
    pub fn new(n_qubits: usize, n_blocks: usize, n_groups: usize) -> Self {
        let inter_group_order = (1..n_groups).map(|g| (g - 1, g)).collect();
        AnsatzConfig {
            n_qubits,
            n_blocks,
            n_groups,
            inter_group_order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_groups == 0 {
            return Err(Error::config("ansatz needs at least one qubit and group"));
        }
        if self.n_qubits % self.n_groups != 0 {
            return Err(Error::config(format!(
                "{} qubits not divisible into {} groups",
                self.n_qubits, self.n_groups
            )));
        }
        for &(a, b) in &self.inter_group_order {
            if a >= self.n_groups || b >= self.n_groups || a == b {
                return Err(Error::config(format!(
                    "invalid inter-group pair ({a},{b}) for {} groups",
                    self.n_groups
                )));
            }
        }
        Ok(())
    }

    pub fn group_qubits(&self) -> usize {
        self.n_qubits / self.n_groups
    }

    /// Trainable parameter count: 6 per qubit per block round, plus 3 per
    /// inter-group bridge per round when more than one group exists.
    pub fn param_count(&self) -> usize {
        let block_params = 6 * self.n_qubits * self.n_blocks;
        let bridge_params = if self.n_groups > 1 {
            3 * self.inter_group_order.len() * self.n_blocks
        } else {
            0
        };
        block_params + bridge_params
    }
}

/// Gates of one U3+CU3 block over the contiguous range `qubits`, using
/// parameter slots starting at `param_offset`. Returns the ops and the
/// number of slots consumed.
pub fn build_block(qubits: std::ops::Range<usize>, param_offset: usize) -> Result<(Vec<GateOp>, usize)> {
    let m = qubits.len();
    if m == 0 {
        return Err(Error::config("block over an empty qubit range"));
    }
    let q0 = qubits.start;
    let mut ops = Vec::with_capacity(2 * m);
    let mut slot = param_offset;
    for i in 0..m {
        ops.push(GateOp::u3(
            q0 + i,
            Angle::Slot(slot),
            Angle::Slot(slot + 1),
            Angle::Slot(slot + 2),
        ));
        slot += 3;
    }
    if m >= 2 {
        for i in 0..m {
            ops.push(GateOp::cu3(
                q0 + i,
                q0 + (i + 1) % m,
                Angle::Slot(slot),
                Angle::Slot(slot + 1),
                Angle::Slot(slot + 2),
            ));
            slot += 3;
        }
    }
    Ok((ops, slot - param_offset))
}

/// Assemble the full trainable circuit for `config`.
pub fn build_ansatz(config: &AnsatzConfig) -> Result<Circuit> {
    config.validate()?;
    let k = config.group_qubits();
    let mut circuit = Circuit::new(config.n_qubits);
    let mut slot = 0;
    for _round in 0..config.n_blocks {
        for g in 0..config.n_groups {
            let (ops, used) = build_block(g * k..(g + 1) * k, slot)?;
            for op in ops {
                circuit.push(op)?;
            }
            slot += used;
        }
        if config.n_groups > 1 {
            for &(a, b) in &config.inter_group_order {
                circuit.push(GateOp::cu3(
                    a * k,
                    b * k,
                    Angle::Slot(slot),
                    Angle::Slot(slot + 1),
                    Angle::Slot(slot + 2),
                ))?;
                slot += 3;
            }
        }
    }
    debug_assert_eq!(slot, config.param_count());
    if circuit.n_params() != config.param_count() {
        return Err(Error::config(format!(
            "ansatz built {} parameter slots, expected {}",
            circuit.n_params(),
            config.param_count()
        )));
    }
    Ok(circuit)
}

/// Seeded uniform initialization in [-pi, pi).
pub fn init_params(n_params: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_params).map(|_| rng.gen_range(-PI..PI)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{run_circuit, Statevector};

    #[test]
    fn block_of_eight_has_48_slots() {
        let (_, used) = build_block(0..8, 0).unwrap();
        assert_eq!(used, 48);
    }

    #[test]
    fn single_qubit_block_is_one_u3() {
        let (ops, used) = build_block(3..4, 10).unwrap();
        assert_eq!(used, 3);
        assert_eq!(ops.len(), 1);
        assert!(matches!(ops[0], GateOp::U3 { target: 3, .. }));
    }

    #[test]
    fn two_qubit_block_has_12_slots() {
        let (ops, used) = build_block(0..2, 0).unwrap();
        assert_eq!(used, 12);
        // 2 U3 + 2 CU3 (both ring directions).
        assert_eq!(ops.len(), 4);
    }

    #[test]
    fn empty_range_rejected() {
        assert!(build_block(2..2, 0).is_err());
    }

    #[test]
    fn default_ansatz_has_576_params() {
        let circuit = build_ansatz(&AnsatzConfig::default()).unwrap();
        assert_eq!(circuit.n_params(), 576);
        assert_eq!(circuit.n_qubits(), 8);
    }

    #[test]
    fn zero_blocks_is_identity_with_no_params() {
        let config = AnsatzConfig::new(4, 0, 1);
        let circuit = build_ansatz(&config).unwrap();
        assert_eq!(circuit.n_params(), 0);
        assert!(circuit.ops().is_empty());
    }

    #[test]
    fn two_group_count_includes_bridges() {
        // 2 groups x 2 blocks x 12 params + 2 bridge CU3 x 3 = 54.
        let config = AnsatzConfig::new(4, 2, 2);
        let circuit = build_ansatz(&config).unwrap();
        assert_eq!(config.param_count(), 54);
        assert_eq!(circuit.n_params(), 54);
        // Count slots by enumerating gates as an independent check.
        let mut enumerated: std::collections::HashSet<usize> = Default::default();
        for op in circuit.ops() {
            enumerated.extend(op.slots());
        }
        assert_eq!(enumerated.len(), 54);
    }

    #[test]
    fn zero_params_act_as_identity() {
        let config = AnsatzConfig::new(4, 3, 2);
        let circuit = build_ansatz(&config).unwrap();
        let params = vec![0.0; config.param_count()];
        let initial = {
            // Arbitrary product state so identity is non-trivial to satisfy.
            let mut s = Statevector::zero(4);
            for q in 0..4 {
                crate::qsim::apply_gate(
                    &mut s,
                    &GateOp::u3(
                        q,
                        Angle::Fixed(0.3 + q as f64),
                        Angle::Fixed(0.1),
                        Angle::Fixed(-0.4),
                    ),
                    &[],
                )
                .unwrap();
            }
            s
        };
        let out = run_circuit(&circuit, &params, &initial).unwrap();
        for (a, b) in out.amplitudes().iter().zip(initial.amplitudes()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn init_params_reproducible_and_in_range() {
        let a = init_params(576, 42);
        let b = init_params(576, 42);
        assert_eq!(a, b);
        assert!(a.iter().all(|&p| (-PI..PI).contains(&p)));
        assert_ne!(a, init_params(576, 43));
    }

    #[test]
    fn invalid_group_split_rejected() {
        assert!(AnsatzConfig::new(8, 2, 3).validate().is_err());
        let mut config = AnsatzConfig::new(4, 1, 2);
        config.inter_group_order = vec![(0, 5)];
        assert!(config.validate().is_err());
    }
}
