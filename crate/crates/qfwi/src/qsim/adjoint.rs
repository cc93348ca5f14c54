//! Reverse-mode (adjoint) differentiation of real-valued circuit readouts.
//!
//! Every readout used in training is a function of the final basis
//! probabilities q_i = |a_i|^2 alone, so its costate is
//! lambda_i = (dL/dq_i) * a_i. The backward sweep walks the circuit once in
//! reverse, undoing each gate on the state while accumulating
//! dL/dtheta = 2 Re[lambda^dag (dU/dtheta) psi] for every trainable slot.
//! This is exact for a noiseless simulator; finite differences exist only as
//! a test oracle.

use num_complex::Complex64;

use super::{
    apply_gate_inverse, run_circuit, u3_matrix_deriv, Angle, Circuit, GateOp, Statevector,
};
use crate::error::{Error, Result};

/// A scalar training loss expressed over basis probabilities.
pub trait ProbLoss {
    fn loss(&self, probs: &[f64]) -> f64;

    /// dL/dq_i for every basis probability, same length as `probs`.
    fn prob_grad(&self, probs: &[f64]) -> Vec<f64>;
}

#[derive(Clone, Debug)]
pub struct Gradients {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Exact derivative of `readout` with respect to every trainable slot of
/// `circuit`, evaluated at `params` from `initial`.
pub fn gradients(
    circuit: &Circuit,
    params: &[f64],
    initial: &Statevector,
    readout: &dyn ProbLoss,
) -> Result<Gradients> {
    if let Some(bad) = params.iter().position(|p| !p.is_finite()) {
        return Err(Error::numeric(format!(
            "non-finite value in parameter slot {bad}"
        )));
    }

    let mut psi = run_circuit(circuit, params, initial)?;
    let probs = psi.basis_probabilities();
    let loss = readout.loss(&probs);
    if !loss.is_finite() {
        return Err(Error::numeric(format!("non-finite loss value {loss}")));
    }
    let mut grad = vec![0.0; circuit.n_params()];
    if circuit.n_params() == 0 {
        return Ok(Gradients { loss, grad });
    }

    let weights = readout.prob_grad(&probs);
    assert_eq!(
        weights.len(),
        probs.len(),
        "probability gradient length mismatch"
    );
    let lam_amps: Vec<Complex64> = weights
        .iter()
        .zip(psi.amplitudes())
        .map(|(&w, &a)| w * a)
        .collect();
    let mut lam = Statevector {
        n_qubits: psi.n_qubits(),
        amps: lam_amps,
    };

    for op in circuit.ops().iter().rev() {
        // psi currently holds the state after `op`; undo it first so the
        // derivative sees the state the gate actually acted on.
        apply_gate_inverse(&mut psi, op, params)?;

        let (target, control, angles) = match op {
            GateOp::U3 { target, angles } => (*target, None, angles),
            GateOp::CU3 {
                control,
                target,
                angles,
            } => (*target, Some(*control), angles),
            // Swaps and state-prep rotations carry no trainable slots.
            _ => {
                apply_gate_inverse(&mut lam, op, params)?;
                continue;
            }
        };

        let mut derivs: Vec<(usize, [Complex64; 4])> = Vec::with_capacity(3);
        if angles.iter().any(|a| matches!(a, Angle::Slot(_))) {
            let theta = angles[0].resolve(params)?;
            let phi = angles[1].resolve(params)?;
            let lambda = angles[2].resolve(params)?;
            for (which, angle) in angles.iter().enumerate() {
                if let Angle::Slot(slot) = angle {
                    derivs.push((*slot, u3_matrix_deriv(theta, phi, lambda, which)));
                }
            }
        }
        if !derivs.is_empty() {
            accumulate_contributions(
                lam.amplitudes(),
                psi.amplitudes(),
                target,
                control,
                &derivs,
                &mut grad,
            );
        }

        apply_gate_inverse(&mut lam, op, params)?;
    }

    if let Some(bad) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::numeric(format!(
            "non-finite gradient for parameter slot {bad}"
        )));
    }
    Ok(Gradients { loss, grad })
}

/// grad[slot] += 2 Re[lambda^dag (dM on target/control) psi] for each
/// derivative matrix, fused into one pass over the register.
fn accumulate_contributions(
    lam: &[Complex64],
    psi: &[Complex64],
    target: usize,
    control: Option<usize>,
    derivs: &[(usize, [Complex64; 4])],
    grad: &mut [f64],
) {
    let step = 1usize << target;
    let cmask = control.map(|c| 1usize << c);
    let mut base = 0;
    while base < psi.len() {
        for i in base..base + step {
            if let Some(mask) = cmask {
                if i & mask == 0 {
                    continue;
                }
            }
            let j = i + step;
            let p0 = psi[i];
            let p1 = psi[j];
            let l0 = lam[i].conj();
            let l1 = lam[j].conj();
            for (slot, dm) in derivs {
                let v = l0 * (dm[0] * p0 + dm[1] * p1) + l1 * (dm[2] * p0 + dm[3] * p1);
                grad[*slot] += 2.0 * v.re;
            }
        }
        base += step << 1;
    }
}
