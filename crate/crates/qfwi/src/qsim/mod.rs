//! Exact dense statevector simulation of parameterized circuits.
//!
//! Basis-state indexing is little-endian: qubit 0 is the least-significant
//! bit of the amplitude index, so basis index `i` assigns qubit `q` the bit
//! `(i >> q) & 1`. All arithmetic is double-precision complex.
//!
//! The gate set is deliberately small: `U3` (general single-qubit rotation),
//! `CU3` (its controlled version, identity on the control-0 subspace),
//! `Swap`, and the fixed-angle multiplexed Ry rotations emitted by amplitude
//! state preparation. Gate angles are either trainable parameter slots or
//! fixed values, which lets one circuit hold both the data-dependent encoder
//! and the trainable model.

mod adjoint;

pub use adjoint::{gradients, Gradients, ProbLoss};

use num_complex::Complex64;

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-10;

/// Dense register of `2^n_qubits` complex amplitudes with unit L2 norm.
#[derive(Clone, Debug)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// The all-zeros computational basis state |0...0>.
    pub fn zero(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1, "statevector needs at least one qubit");
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Statevector { n_qubits, amps }
    }

    /// Wrap an explicit amplitude vector. The length must be a power of two
    /// and the norm must already be 1 within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 || !amps.len().is_power_of_two() {
            return Err(Error::config(format!(
                "amplitude vector length {} is not a power of two >= 2",
                amps.len()
            )));
        }
        let n_qubits = amps.len().trailing_zeros() as usize;
        let state = Statevector { n_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::numeric(format!(
                "amplitude vector has norm {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// p_i = |a_i|^2 for every basis state.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// <Z_q> for each requested qubit: +1 weight where bit q of the basis
    /// index is 0, -1 where it is 1.
    pub fn z_expectations(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        for &q in qubits {
            if q >= self.n_qubits {
                return Err(Error::config(format!(
                    "qubit {q} out of range for {}-qubit state",
                    self.n_qubits
                )));
            }
        }
        let mut out = vec![0.0; qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (k, &q) in qubits.iter().enumerate() {
                if (i >> q) & 1 == 0 {
                    out[k] += p;
                } else {
                    out[k] -= p;
                }
            }
        }
        Ok(out)
    }
}

/// A gate angle: either a trainable slot index or a fixed value in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Slot(usize),
    Fixed(f64),
}

impl Angle {
    fn resolve(self, params: &[f64]) -> Result<f64> {
        let value = match self {
            Angle::Slot(s) => *params.get(s).ok_or_else(|| {
                Error::config(format!(
                    "parameter slot {s} out of range (vector has {})",
                    params.len()
                ))
            })?,
            Angle::Fixed(v) => v,
        };
        if !value.is_finite() {
            return Err(Error::numeric(format!("non-finite gate angle {value}")));
        }
        Ok(value)
    }

    fn slot(self) -> Option<usize> {
        match self {
            Angle::Slot(s) => Some(s),
            Angle::Fixed(_) => None,
        }
    }
}

/// One gate in a circuit.
#[derive(Clone, Debug)]
pub enum GateOp {
    U3 {
        target: usize,
        angles: [Angle; 3],
    },
    CU3 {
        control: usize,
        target: usize,
        angles: [Angle; 3],
    },
    Swap {
        a: usize,
        b: usize,
    },
    /// Uniformly controlled Ry used by amplitude state preparation: rotates
    /// `target` by `angles[c]` where `c` is the bit pattern of the control
    /// qubits (`controls[0]` contributes the most significant pattern bit).
    /// Angles are always fixed; the encoder is not trainable.
    StatePrepRotation {
        target: usize,
        controls: Vec<usize>,
        angles: Vec<f64>,
    },
}

impl GateOp {
    pub fn u3(target: usize, theta: Angle, phi: Angle, lambda: Angle) -> Self {
        GateOp::U3 {
            target,
            angles: [theta, phi, lambda],
        }
    }

    pub fn cu3(control: usize, target: usize, theta: Angle, phi: Angle, lambda: Angle) -> Self {
        GateOp::CU3 {
            control,
            target,
            angles: [theta, phi, lambda],
        }
    }

    /// Largest qubit index the gate touches.
    pub fn max_qubit(&self) -> usize {
        match self {
            GateOp::U3 { target, .. } => *target,
            GateOp::CU3 {
                control, target, ..
            } => (*control).max(*target),
            GateOp::Swap { a, b } => (*a).max(*b),
            GateOp::StatePrepRotation {
                target, controls, ..
            } => controls.iter().copied().max().unwrap_or(0).max(*target),
        }
    }

    /// Trainable slot indices referenced by this gate.
    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        let angles: &[Angle] = match self {
            GateOp::U3 { angles, .. } | GateOp::CU3 { angles, .. } => angles,
            _ => &[],
        };
        angles.iter().filter_map(|a| a.slot())
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        match self {
            GateOp::U3 { .. } => {}
            GateOp::CU3 {
                control, target, ..
            } => {
                if control == target {
                    return Err(Error::config(format!(
                        "CU3 control and target coincide at qubit {control}"
                    )));
                }
            }
            GateOp::Swap { a, b } => {
                if a == b {
                    return Err(Error::config(format!("swap of qubit {a} with itself")));
                }
            }
            GateOp::StatePrepRotation {
                target,
                controls,
                angles,
            } => {
                if controls.contains(target) {
                    return Err(Error::config(
                        "state-prep rotation target listed among its controls".to_string(),
                    ));
                }
                if angles.len() != 1 << controls.len() {
                    return Err(Error::config(format!(
                        "state-prep rotation with {} controls needs {} angles, got {}",
                        controls.len(),
                        1usize << controls.len(),
                        angles.len()
                    )));
                }
            }
        }
        if self.max_qubit() >= n_qubits {
            return Err(Error::config(format!(
                "gate touches qubit {} but the circuit has {} qubits",
                self.max_qubit(),
                n_qubits
            )));
        }
        Ok(())
    }
}

/// Ordered gate list over a fixed register width, with a declared count of
/// distinct trainable slots.
#[derive(Clone, Debug)]
pub struct Circuit {
    n_qubits: usize,
    n_params: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            n_params: 0,
            ops: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of distinct trainable parameter slots.
    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        for slot in op.slots() {
            self.n_params = self.n_params.max(slot + 1);
        }
        self.ops.push(op);
        Ok(())
    }

    /// Append every op of `other`, shifting its qubit indices by `offset`.
    /// Parameter slots are taken as-is; callers lay out slot ranges.
    pub fn append_shifted(&mut self, other: &Circuit, offset: usize) -> Result<()> {
        for op in &other.ops {
            let shifted = match op.clone() {
                GateOp::U3 { target, angles } => GateOp::U3 {
                    target: target + offset,
                    angles,
                },
                GateOp::CU3 {
                    control,
                    target,
                    angles,
                } => GateOp::CU3 {
                    control: control + offset,
                    target: target + offset,
                    angles,
                },
                GateOp::Swap { a, b } => GateOp::Swap {
                    a: a + offset,
                    b: b + offset,
                },
                GateOp::StatePrepRotation {
                    target,
                    controls,
                    angles,
                } => GateOp::StatePrepRotation {
                    target: target + offset,
                    controls: controls.into_iter().map(|c| c + offset).collect(),
                    angles,
                },
            };
            self.push(shifted)?;
        }
        Ok(())
    }
}

/// 2x2 matrix of U3(theta, phi, lambda):
/// [[cos(t/2), -e^{i l} sin(t/2)], [e^{i p} sin(t/2), e^{i(p+l)} cos(t/2)]].
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> [Complex64; 4] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        Complex64::new(c, 0.0),
        -Complex64::from_polar(s, lambda),
        Complex64::from_polar(s, phi),
        Complex64::from_polar(c, phi + lambda),
    ]
}

/// Elementwise derivative of `u3_matrix` with respect to angle `which`
/// (0 = theta, 1 = phi, 2 = lambda).
pub(crate) fn u3_matrix_deriv(theta: f64, phi: f64, lambda: f64, which: usize) -> [Complex64; 4] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let i = Complex64::new(0.0, 1.0);
    match which {
        0 => [
            Complex64::new(-s / 2.0, 0.0),
            -Complex64::from_polar(c / 2.0, lambda),
            Complex64::from_polar(c / 2.0, phi),
            -Complex64::from_polar(s / 2.0, phi + lambda),
        ],
        1 => [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            i * Complex64::from_polar(s, phi),
            i * Complex64::from_polar(c, phi + lambda),
        ],
        2 => [
            Complex64::new(0.0, 0.0),
            -i * Complex64::from_polar(s, lambda),
            Complex64::new(0.0, 0.0),
            i * Complex64::from_polar(c, phi + lambda),
        ],
        _ => unreachable!("U3 has 3 angles"),
    }
}

fn conj_transpose(m: &[Complex64; 4]) -> [Complex64; 4] {
    [m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()]
}

/// Apply a 2x2 matrix to `target` across the whole register.
fn kernel_1q(amps: &mut [Complex64], target: usize, m: &[Complex64; 4]) {
    let step = 1usize << target;
    let mut base = 0;
    while base < amps.len() {
        for i in base..base + step {
            let j = i + step;
            let a = amps[i];
            let b = amps[j];
            amps[i] = m[0] * a + m[1] * b;
            amps[j] = m[2] * a + m[3] * b;
        }
        base += step << 1;
    }
}

/// Apply a 2x2 matrix to `target` on the subspace where `control` is |1>.
fn kernel_controlled_1q(amps: &mut [Complex64], control: usize, target: usize, m: &[Complex64; 4]) {
    let step = 1usize << target;
    let cmask = 1usize << control;
    let mut base = 0;
    while base < amps.len() {
        for i in base..base + step {
            if i & cmask == 0 {
                continue;
            }
            let j = i + step;
            let a = amps[i];
            let b = amps[j];
            amps[i] = m[0] * a + m[1] * b;
            amps[j] = m[2] * a + m[3] * b;
        }
        base += step << 1;
    }
}

fn kernel_swap(amps: &mut [Complex64], a: usize, b: usize) {
    let (ma, mb) = (1usize << a, 1usize << b);
    for i in 0..amps.len() {
        if i & ma != 0 && i & mb == 0 {
            amps.swap(i, i ^ ma ^ mb);
        }
    }
}

/// Multiplexed Ry: rotate `target` by `sign * angles[c]` where `c` is the
/// control-bit pattern of each basis pair. `sign = -1` applies the inverse.
fn kernel_multiplexed_ry(
    amps: &mut [Complex64],
    target: usize,
    controls: &[usize],
    angles: &[f64],
    sign: f64,
) {
    let step = 1usize << target;
    let mut base = 0;
    while base < amps.len() {
        for i in base..base + step {
            let mut pattern = 0usize;
            for &cq in controls {
                pattern = (pattern << 1) | ((i >> cq) & 1);
            }
            let half = sign * angles[pattern] / 2.0;
            let (c, s) = (half.cos(), half.sin());
            let j = i + step;
            let a = amps[i];
            let b = amps[j];
            amps[i] = c * a - s * b;
            amps[j] = s * a + c * b;
        }
        base += step << 1;
    }
}

/// Transform `state` in place by one gate. `forward = false` applies the
/// gate's inverse (used by the adjoint backward sweep).
fn apply_op(state: &mut Statevector, op: &GateOp, params: &[f64], forward: bool) -> Result<()> {
    op.validate(state.n_qubits)?;
    match op {
        GateOp::U3 { target, angles } => {
            let m = u3_matrix(
                angles[0].resolve(params)?,
                angles[1].resolve(params)?,
                angles[2].resolve(params)?,
            );
            let m = if forward { m } else { conj_transpose(&m) };
            kernel_1q(&mut state.amps, *target, &m);
        }
        GateOp::CU3 {
            control,
            target,
            angles,
        } => {
            let m = u3_matrix(
                angles[0].resolve(params)?,
                angles[1].resolve(params)?,
                angles[2].resolve(params)?,
            );
            let m = if forward { m } else { conj_transpose(&m) };
            kernel_controlled_1q(&mut state.amps, *control, *target, &m);
        }
        GateOp::Swap { a, b } => kernel_swap(&mut state.amps, *a, *b),
        GateOp::StatePrepRotation {
            target,
            controls,
            angles,
        } => {
            for &a in angles {
                if !a.is_finite() {
                    return Err(Error::numeric(format!(
                        "non-finite state-prep angle {a}"
                    )));
                }
            }
            let sign = if forward { 1.0 } else { -1.0 };
            kernel_multiplexed_ry(&mut state.amps, *target, controls, angles, sign);
        }
    }
    Ok(())
}

/// Apply one gate to a state.
pub fn apply_gate(state: &mut Statevector, op: &GateOp, params: &[f64]) -> Result<()> {
    apply_op(state, op, params, true)
}

pub(crate) fn apply_gate_inverse(
    state: &mut Statevector,
    op: &GateOp,
    params: &[f64],
) -> Result<()> {
    apply_op(state, op, params, false)
}

/// Run a whole circuit on a copy of `initial`.
pub fn run_circuit(circuit: &Circuit, params: &[f64], initial: &Statevector) -> Result<Statevector> {
    if circuit.n_qubits != initial.n_qubits {
        return Err(Error::config(format!(
            "circuit acts on {} qubits but the state has {}",
            circuit.n_qubits, initial.n_qubits
        )));
    }
    if params.len() < circuit.n_params {
        return Err(Error::config(format!(
            "circuit references {} parameter slots but only {} values given",
            circuit.n_params,
            params.len()
        )));
    }
    let mut state = initial.clone();
    for op in &circuit.ops {
        apply_op(&mut state, op, params, true)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn h_equivalent(target: usize) -> GateOp {
        // U3(pi/2, 0, pi) realizes the Hadamard matrix exactly.
        GateOp::u3(
            target,
            Angle::Fixed(PI / 2.0),
            Angle::Fixed(0.0),
            Angle::Fixed(PI),
        )
    }

    #[test]
    fn u3_identity_leaves_state_unchanged() {
        let mut state = Statevector::zero(2);
        apply_gate(
            &mut state,
            &h_equivalent(0),
            &[],
        )
        .unwrap();
        let before = state.amplitudes().to_vec();
        let id = GateOp::u3(0, Angle::Fixed(0.0), Angle::Fixed(0.0), Angle::Fixed(0.0));
        apply_gate(&mut state, &id, &[]).unwrap();
        for (a, b) in state.amplitudes().iter().zip(&before) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn u3_pi_0_pi_is_x() {
        // U3(pi,0,pi) = [[0,1],[1,0]] maps |0> to |1>.
        let mut state = Statevector::zero(1);
        let x = GateOp::u3(0, Angle::Fixed(PI), Angle::Fixed(0.0), Angle::Fixed(PI));
        apply_gate(&mut state, &x, &[]).unwrap();
        assert!(state.amplitudes()[0].norm() < 1e-15);
        assert_abs_diff_eq!(state.amplitudes()[1].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn u3_matrix_matches_convention() {
        let m = u3_matrix(0.7, -1.3, 2.1);
        let (c, s) = ((0.7f64 / 2.0).cos(), (0.7f64 / 2.0).sin());
        assert_abs_diff_eq!(m[0].re, c, epsilon = 1e-15);
        assert_abs_diff_eq!(m[1].re, -s * (2.1f64).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[1].im, -s * (2.1f64).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[2].re, s * (-1.3f64).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[3].norm(), c, epsilon = 1e-15);
    }

    #[test]
    fn gate_matrices_are_unitary() {
        for &(t, p, l) in &[(0.3, 1.1, -0.7), (2.9, -2.2, 0.4), (PI, 0.0, PI)] {
            let m = u3_matrix(t, p, l);
            let mt = conj_transpose(&m);
            // m^dagger * m
            let prod = [
                mt[0] * m[0] + mt[1] * m[2],
                mt[0] * m[1] + mt[1] * m[3],
                mt[2] * m[0] + mt[3] * m[2],
                mt[2] * m[1] + mt[3] * m[3],
            ];
            assert!((prod[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(prod[1].norm() < 1e-12);
            assert!(prod[2].norm() < 1e-12);
            assert!((prod[3] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_circuit_is_identity() {
        let circuit = Circuit::new(3);
        let initial = Statevector::zero(3);
        let out = run_circuit(&circuit, &[], &initial).unwrap();
        assert_eq!(out.amplitudes(), initial.amplitudes());
    }

    #[test]
    fn circuit_then_inverse_restores_state() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut circuit = Circuit::new(3);
        for k in 0..15 {
            let t = rng.gen_range(0..3);
            if k % 3 == 2 {
                let c = (t + 1 + rng.gen_range(0..2)) % 3;
                circuit
                    .push(GateOp::cu3(
                        c,
                        t,
                        Angle::Fixed(rng.gen_range(-PI..PI)),
                        Angle::Fixed(rng.gen_range(-PI..PI)),
                        Angle::Fixed(rng.gen_range(-PI..PI)),
                    ))
                    .unwrap();
            } else {
                circuit
                    .push(GateOp::u3(
                        t,
                        Angle::Fixed(rng.gen_range(-PI..PI)),
                        Angle::Fixed(rng.gen_range(-PI..PI)),
                        Angle::Fixed(rng.gen_range(-PI..PI)),
                    ))
                    .unwrap();
            }
        }
        let initial = Statevector::zero(3);
        let mut state = run_circuit(&circuit, &[], &initial).unwrap();
        for op in circuit.ops().iter().rev() {
            apply_gate_inverse(&mut state, op, &[]).unwrap();
        }
        let fid: Complex64 = state
            .amplitudes()
            .iter()
            .zip(initial.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!(fid.norm_sqr() > 1.0 - 1e-10);
    }

    #[test]
    fn z_expectations_on_basis_states() {
        let state = Statevector::zero(3);
        let z = state.z_expectations(&[0, 1, 2]).unwrap();
        assert_eq!(z, vec![1.0, 1.0, 1.0]);

        // Uniform superposition via H-equivalent U3 on every qubit.
        let mut state = Statevector::zero(3);
        for q in 0..3 {
            apply_gate(&mut state, &h_equivalent(q), &[]).unwrap();
        }
        for z in state.z_expectations(&[0, 1, 2]).unwrap() {
            assert!(z.abs() < 1e-10);
        }
    }

    #[test]
    fn z_expectation_index_out_of_range_is_config_error() {
        let state = Statevector::zero(2);
        let err = state.z_expectations(&[2]).unwrap_err();
        assert_eq!(err.category(), "config");
    }

    #[test]
    fn basis_probabilities_sum_to_one() {
        let mut state = Statevector::zero(4);
        for q in 0..4 {
            apply_gate(&mut state, &h_equivalent(q), &[]).unwrap();
        }
        let probs = state.basis_probabilities();
        assert_abs_diff_eq!(probs.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        for p in probs {
            assert_abs_diff_eq!(p, 1.0 / 16.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn probabilities_of_zero_state() {
        let probs = Statevector::zero(3).basis_probabilities();
        assert_eq!(probs[0], 1.0);
        assert!(probs[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn gate_indices_validated() {
        let mut state = Statevector::zero(2);
        let bad = GateOp::u3(5, Angle::Fixed(0.1), Angle::Fixed(0.0), Angle::Fixed(0.0));
        assert_eq!(
            apply_gate(&mut state, &bad, &[]).unwrap_err().category(),
            "config"
        );
        let mut circuit = Circuit::new(2);
        assert!(circuit.push(bad).is_err());
    }

    #[test]
    fn non_finite_parameter_is_numeric_error() {
        let mut state = Statevector::zero(1);
        let op = GateOp::u3(0, Angle::Slot(0), Angle::Fixed(0.0), Angle::Fixed(0.0));
        let err = apply_gate(&mut state, &op, &[f64::NAN]).unwrap_err();
        assert_eq!(err.category(), "numeric");
    }

    #[test]
    fn swap_exchanges_bits() {
        let mut state = Statevector::zero(2);
        let x = GateOp::u3(0, Angle::Fixed(PI), Angle::Fixed(0.0), Angle::Fixed(PI));
        apply_gate(&mut state, &x, &[]).unwrap();
        apply_gate(&mut state, &GateOp::Swap { a: 0, b: 1 }, &[]).unwrap();
        // |01> (index 1) became |10> (index 2).
        assert!(state.amplitudes()[2].norm() > 1.0 - 1e-12);
    }
}
