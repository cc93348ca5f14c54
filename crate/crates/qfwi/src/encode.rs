//! Classical-to-quantum data encoding.
//!
//! Seismic vectors are grouped by source, L2-normalized per group, and
//! loaded into qubit amplitudes by a tree of uniformly controlled Ry
//! rotations. Traces are real-valued, so sign information rides on the
//! rotation-angle sign and the prepared state equals the input vector
//! exactly (no global phase).

use crate::error::{Error, Result};
use crate::qsim::{Circuit, GateOp};

/// Raw multi-source gather in source-major, time-major, receiver-minor
/// layout: `data[s * n_time * n_receivers + t * n_receivers + r]`.
#[derive(Clone, Debug)]
pub struct SeismicTensor {
    pub n_sources: usize,
    pub n_time: usize,
    pub n_receivers: usize,
    pub data: Vec<f64>,
}

impl SeismicTensor {
    pub fn new(n_sources: usize, n_time: usize, n_receivers: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_sources * n_time * n_receivers {
            return Err(Error::config(format!(
                "seismic tensor {}x{}x{} needs {} values, got {}",
                n_sources,
                n_time,
                n_receivers,
                n_sources * n_time * n_receivers,
                data.len()
            )));
        }
        Ok(SeismicTensor {
            n_sources,
            n_time,
            n_receivers,
            data,
        })
    }

    /// A bare vector without a source axis (already-scaled samples).
    pub fn from_vector(data: Vec<f64>) -> Self {
        SeismicTensor {
            n_sources: 1,
            n_time: 1,
            n_receivers: data.len(),
            data,
        }
    }
}

/// Per-group unit vectors ready for amplitude encoding.
#[derive(Clone, Debug)]
pub struct EncodedInput {
    pub groups: Vec<Vec<f64>>,
    pub group_qubits: usize,
    /// Original L2 norm of each group, kept for bookkeeping.
    pub norm_factors: Vec<f64>,
}

impl EncodedInput {
    /// Total data qubits across all groups.
    pub fn n_qubits(&self) -> usize {
        self.group_qubits * self.groups.len()
    }

    /// State-preparation circuit over all groups on disjoint registers:
    /// group g occupies qubits [g*k, (g+1)*k). The combined state is the
    /// tensor product of the per-group states.
    pub fn prep_circuit(&self) -> Result<Circuit> {
        let k = self.group_qubits;
        let mut circuit = Circuit::new(self.n_qubits());
        for (g, group) in self.groups.iter().enumerate() {
            let prep = state_prep_circuit(group)?;
            circuit.append_shifted(&prep, g * k)?;
        }
        Ok(circuit)
    }
}

/// Split a tensor into `n_groups` equal contiguous vectors. Because the
/// layout is source-major, asking for one group per source yields exactly
/// the per-source gathers; other divisors fall back to contiguous splits of
/// the same flattening.
pub fn partition_by_source(seismic: &SeismicTensor, n_groups: usize) -> Result<Vec<Vec<f64>>> {
    if n_groups == 0 {
        return Err(Error::config("cannot partition into zero groups"));
    }
    let total = seismic.data.len();
    if total % n_groups != 0 {
        return Err(Error::config(format!(
            "{total} values cannot be split into {n_groups} equal groups"
        )));
    }
    let size = total / n_groups;
    Ok(seismic
        .data
        .chunks_exact(size)
        .map(|c| c.to_vec())
        .collect())
}

/// Scale a vector to unit L2 norm, returning the original norm.
pub fn normalize_group(v: &[f64]) -> Result<(Vec<f64>, f64)> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::numeric("non-finite norm in input group".to_string()));
    }
    if norm == 0.0 {
        return Err(Error::data(
            "all-zero input group cannot be amplitude-encoded".to_string(),
        ));
    }
    Ok((v.iter().map(|x| x / norm).collect(), norm))
}

/// Partition and normalize a raw sample vector.
pub fn encode_input(raw: &[f64], n_groups: usize) -> Result<EncodedInput> {
    let tensor = SeismicTensor::from_vector(raw.to_vec());
    let parts = partition_by_source(&tensor, n_groups)?;
    let size = parts[0].len();
    if !size.is_power_of_two() {
        return Err(Error::config(format!(
            "group size {size} is not a power of two"
        )));
    }
    let group_qubits = size.trailing_zeros() as usize;
    let mut groups = Vec::with_capacity(n_groups);
    let mut norm_factors = Vec::with_capacity(n_groups);
    for part in parts {
        let (unit, norm) = normalize_group(&part)?;
        groups.push(unit);
        norm_factors.push(norm);
    }
    Ok(EncodedInput {
        groups,
        group_qubits,
        norm_factors,
    })
}

/// Circuit preparing a unit real vector of length 2^k as the amplitudes of a
/// k-qubit register starting from |0...0>.
///
/// Level l (l = 0 is the most significant qubit, k-1) rotates qubit k-1-l
/// conditioned on the pattern of the l more significant qubits. Interior
/// levels split subtree norms; the last level uses the signed leaf values,
/// which places every sign of a real vector without extra phase gates.
/// Levels whose angles are all exactly zero are omitted, so basis vectors
/// produce an empty circuit.
pub fn state_prep_circuit(v: &[f64]) -> Result<Circuit> {
    if v.len() < 2 || !v.len().is_power_of_two() {
        return Err(Error::config(format!(
            "state preparation needs a power-of-two length >= 2, got {}",
            v.len()
        )));
    }
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    if (norm_sq - 1.0).abs() > 1e-8 {
        return Err(Error::data(format!(
            "state preparation input has squared norm {norm_sq}, expected 1"
        )));
    }
    let k = v.len().trailing_zeros() as usize;

    // subtree_norms[l][c] = L2 norm of the leaves whose top l bits equal c.
    let mut subtree_norms: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    subtree_norms.push(v.iter().map(|x| x.abs()).collect());
    for _ in 0..k {
        let prev = subtree_norms.last().unwrap();
        let next: Vec<f64> = prev
            .chunks_exact(2)
            .map(|pair| (pair[0] * pair[0] + pair[1] * pair[1]).sqrt())
            .collect();
        subtree_norms.push(next);
    }
    subtree_norms.reverse(); // subtree_norms[l] now has 2^l entries.

    let mut circuit = Circuit::new(k);
    for level in 0..k {
        let target = k - 1 - level;
        let controls: Vec<usize> = (0..level).map(|j| k - 1 - j).collect();
        let mut angles = Vec::with_capacity(1 << level);
        for c in 0..(1 << level) {
            let angle = if level == k - 1 {
                // Leaves carry signs; atan2 reaches the full circle.
                (2.0 * f64::atan2(v[2 * c + 1], v[2 * c])) as f64
            } else {
                let left = subtree_norms[level + 1][2 * c];
                let right = subtree_norms[level + 1][2 * c + 1];
                2.0 * f64::atan2(right, left)
            };
            angles.push(angle);
        }
        if angles.iter().all(|&a| a == 0.0) {
            continue;
        }
        circuit.push(GateOp::StatePrepRotation {
            target,
            controls,
            angles,
        })?;
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{run_circuit, Statevector};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prep_and_run(v: &[f64]) -> Statevector {
        let circuit = state_prep_circuit(v).unwrap();
        let k = v.len().trailing_zeros() as usize;
        run_circuit(&circuit, &[], &Statevector::zero(k)).unwrap()
    }

    #[test]
    fn partition_single_group_is_whole_vector() {
        let t = SeismicTensor::from_vector((0..256).map(|i| i as f64).collect());
        let parts = partition_by_source(&t, 1).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].len(), 256);
    }

    #[test]
    fn partition_two_sources_splits_on_source_boundary() {
        // 2 sources x 32 time x 8 receivers.
        let data: Vec<f64> = (0..512).map(|i| i as f64).collect();
        let t = SeismicTensor::new(2, 32, 8, data.clone()).unwrap();
        let parts = partition_by_source(&t, 2).unwrap();
        assert_eq!(parts[0], data[..256].to_vec());
        assert_eq!(parts[1], data[256..].to_vec());
        // Concatenation reproduces the flattened input.
        let recon: Vec<f64> = parts.concat();
        assert_eq!(recon, data);
    }

    #[test]
    fn partition_rejects_non_divisible() {
        let t = SeismicTensor::from_vector(vec![0.0; 10]);
        assert_eq!(
            partition_by_source(&t, 3).unwrap_err().category(),
            "config"
        );
    }

    #[test]
    fn normalize_analytic_example() {
        let (unit, norm) = normalize_group(&[3.0, 4.0, 0.0, 0.0]).unwrap();
        assert_eq!(unit, vec![0.6, 0.8, 0.0, 0.0]);
        assert_eq!(norm, 5.0);
    }

    #[test]
    fn normalize_unit_vector_unchanged() {
        let (unit, norm) = normalize_group(&[1.0, 0.0]).unwrap();
        assert_eq!(unit, vec![1.0, 0.0]);
        assert_eq!(norm, 1.0);
    }

    #[test]
    fn normalize_random_vector_has_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (unit, _) = normalize_group(&v).unwrap();
        let norm: f64 = unit.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normalize_rejects_zero_vector() {
        assert_eq!(
            normalize_group(&[0.0, 0.0]).unwrap_err().category(),
            "data"
        );
    }

    #[test]
    fn basis_vector_needs_no_gates() {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let circuit = state_prep_circuit(&v).unwrap();
        assert!(circuit.ops().is_empty());
        let state = prep_and_run(&v);
        assert_abs_diff_eq!(state.amplitudes()[0].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn equal_pair_gives_half_half_probabilities() {
        let inv = 1.0 / 2.0f64.sqrt();
        let state = prep_and_run(&[inv, inv]);
        let probs = state.basis_probabilities();
        assert_abs_diff_eq!(probs[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(probs[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn random_256_vector_prepared_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (unit, _) = normalize_group(&v).unwrap();
        let state = prep_and_run(&unit);
        for (a, want) in state.amplitudes().iter().zip(&unit) {
            assert!(
                (a.re - want).abs() < 1e-9 && a.im.abs() < 1e-12,
                "amplitude {a} vs {want}"
            );
        }
    }

    #[test]
    fn signed_amplitudes_survive() {
        let v = vec![-0.5, 0.5, -0.5, 0.5];
        let state = prep_and_run(&v);
        for (a, want) in state.amplitudes().iter().zip(&v) {
            assert_abs_diff_eq!(a.re, *want, epsilon = 1e-12);
        }
    }

    #[test]
    fn prep_rejects_bad_lengths() {
        assert_eq!(
            state_prep_circuit(&[0.6, 0.8, 0.0]).unwrap_err().category(),
            "config"
        );
    }

    #[test]
    fn encode_input_round_trip_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw: Vec<f64> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let enc = encode_input(&raw, 1).unwrap();
        assert_eq!(enc.group_qubits, 8);
        assert_eq!(enc.n_qubits(), 8);
        assert_eq!(enc.norm_factors.len(), 1);
        assert!(enc.norm_factors[0] > 0.0);

        let enc2 = encode_input(&raw, 2).unwrap();
        assert_eq!(enc2.group_qubits, 7);
        assert_eq!(enc2.n_qubits(), 14);
    }
}
