//! Dense statevector simulation for few-qubit circuits.
//!
//! Amplitudes live in a flat `Vec<Complex64>` of length `2^n`. Basis index `b`
//! stores the value of qubit `q` in bit `q`, so qubit 0 is the least
//! significant bit: for two qubits the order is |00>, |10>, |01>, |11> when
//! kets are written with qubit 0 leftmost. All gate applications update the
//! buffer in place and preserve the 2-norm to machine precision.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Upper limit on the qubit count. Keeps the dense buffer (and every O(4^n)
/// helper in the test oracles) comfortably small.
pub const MAX_QUBITS: usize = 12;

/// A pure state on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// All-zeros computational basis state |0...0>.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Builds a state from raw amplitudes; the length must be `2^n_qubits`.
    /// No normalization is enforced, so callers can hold derivative states.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::Shape { expected: 1 << n_qubits, got: amps.len() });
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitIndex { index: qubit, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    /// RY(theta) = exp(-i theta Y / 2) on one qubit:
    /// [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]].
    pub fn apply_ry(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let bit = 1usize << qubit;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                let a0 = self.amps[b];
                let a1 = self.amps[b | bit];
                self.amps[b] = c * a0 - s * a1;
                self.amps[b | bit] = s * a0 + c * a1;
            }
        }
        Ok(())
    }

    /// RZ(theta) = exp(-i theta Z / 2): phases e^{-i theta/2} on the qubit's
    /// |0> component and e^{+i theta/2} on its |1> component.
    pub fn apply_rz(&mut self, qubit: usize, theta: f64) -> Result<()> {
        self.check_qubit(qubit)?;
        let p0 = Complex64::from_polar(1.0, -theta / 2.0);
        let p1 = Complex64::from_polar(1.0, theta / 2.0);
        let bit = 1usize << qubit;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                self.amps[b] *= p0;
                self.amps[b | bit] *= p1;
            }
        }
        Ok(())
    }

    /// CNOT: flips the target bit on every basis state whose control bit is 1.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Config(format!(
                "cnot control and target must differ, both are {control}"
            )));
        }
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for b in 0..self.amps.len() {
            // Visit each swapped pair once: control set, target clear.
            if b & cbit != 0 && b & tbit == 0 {
                self.amps.swap(b, b | tbit);
            }
        }
        Ok(())
    }

    /// Pauli Y on one qubit: |0> -> i|1>, |1> -> -i|0>. Used when assembling
    /// metric tensors from generator-applied states.
    pub fn apply_pauli_y(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let i = Complex64::new(0.0, 1.0);
        let bit = 1usize << qubit;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                let a0 = self.amps[b];
                let a1 = self.amps[b | bit];
                self.amps[b] = -i * a1;
                self.amps[b | bit] = i * a0;
            }
        }
        Ok(())
    }

    /// Pauli Z on one qubit: negates every amplitude whose qubit bit is 1.
    pub fn apply_pauli_z(&mut self, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        for b in 0..self.amps.len() {
            if b & bit != 0 {
                self.amps[b] = -self.amps[b];
            }
        }
        Ok(())
    }

    /// <Z_qubit> = sum over basis states of +/- |amplitude|^2, positive when
    /// the qubit bit is 0. Summed in basis-index order so the result is
    /// bit-stable across runs.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let mut sum = 0.0;
        for (b, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if b & bit == 0 {
                sum += p;
            } else {
                sum -= p;
            }
        }
        Ok(sum)
    }

    /// Inner product <self|other> (self is conjugated).
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.amps.len() != other.amps.len() {
            return Err(Error::Shape { expected: self.amps.len(), got: other.amps.len() });
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (a, b) in self.amps.iter().zip(other.amps.iter()) {
            sum += a.conj() * b;
        }
        Ok(sum)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Angle source for a scheduled rotation gate: either a slot in the trainable
/// parameter vector or a fixed literal angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateAngle {
    Slot(usize),
    Fixed(f64),
}

/// One gate in a circuit schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    Ry { target: usize, angle: GateAngle },
    Rz { target: usize, angle: GateAngle },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    pub fn ry(target: usize, slot: usize) -> Self {
        GateOp::Ry { target, angle: GateAngle::Slot(slot) }
    }

    pub fn ry_fixed(target: usize, angle: f64) -> Self {
        GateOp::Ry { target, angle: GateAngle::Fixed(angle) }
    }

    pub fn rz(target: usize, slot: usize) -> Self {
        GateOp::Rz { target, angle: GateAngle::Slot(slot) }
    }

    pub fn rz_fixed(target: usize, angle: f64) -> Self {
        GateOp::Rz { target, angle: GateAngle::Fixed(angle) }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::Cnot { control, target }
    }

    /// The parameter slot this gate reads, if any.
    pub fn slot(&self) -> Option<usize> {
        match self {
            GateOp::Ry { angle: GateAngle::Slot(s), .. }
            | GateOp::Rz { angle: GateAngle::Slot(s), .. } => Some(*s),
            _ => None,
        }
    }

    /// Checks qubit indices against `n_qubits` and slot indices against
    /// `param_count`.
    pub fn validate(&self, n_qubits: usize, param_count: usize) -> Result<()> {
        let check_q = |q: usize| {
            if q >= n_qubits {
                Err(Error::QubitIndex { index: q, n_qubits })
            } else {
                Ok(())
            }
        };
        match self {
            GateOp::Ry { target, angle } | GateOp::Rz { target, angle } => {
                check_q(*target)?;
                match angle {
                    GateAngle::Slot(s) if *s >= param_count => {
                        Err(Error::ParamIndex { index: *s, len: param_count })
                    }
                    GateAngle::Fixed(a) if !a.is_finite() => {
                        Err(Error::Domain(format!("non-finite fixed gate angle {a}")))
                    }
                    _ => Ok(()),
                }
            }
            GateOp::Cnot { control, target } => {
                check_q(*control)?;
                check_q(*target)?;
                if control == target {
                    Err(Error::Config(format!(
                        "cnot control and target must differ, both are {control}"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Applies one scheduled gate, resolving slot angles from `theta`.
pub fn apply_gate(state: &mut StateVector, gate: &GateOp, theta: &[f64]) -> Result<()> {
    let resolve = |angle: &GateAngle| -> Result<f64> {
        match angle {
            GateAngle::Fixed(a) => Ok(*a),
            GateAngle::Slot(s) => theta
                .get(*s)
                .copied()
                .ok_or(Error::ParamIndex { index: *s, len: theta.len() }),
        }
    };
    match gate {
        GateOp::Ry { target, angle } => state.apply_ry(*target, resolve(angle)?),
        GateOp::Rz { target, angle } => state.apply_rz(*target, resolve(angle)?),
        GateOp::Cnot { control, target } => state.apply_cnot(*control, *target),
    }
}
