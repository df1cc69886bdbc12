//! The regression circuit family: a fixed data-encoding layer followed by a
//! trainable schedule of RY layers and CNOT entanglers.
//!
//! Encoding applies RZ(acos x^2) then RY(asin x) to every qubit, so inputs
//! must lie in [-1, 1]. The trainable block repeats `depth` times: one RY per
//! qubit (each reading its own parameter slot), then the layout's CNOT
//! pattern. A single trailing RY on the measured qubit closes the circuit,
//! giving `n_qubits * depth + 1` parameters. The model output is the Pauli-Z
//! expectation of the measured qubit, so predictions lie in [-1, 1].
//!
//! Parameter slots are numbered in schedule order: block `d` owns slots
//! `d*n_qubits .. (d+1)*n_qubits` with slot `d*n_qubits + q` on qubit `q`,
//! and the trailing RY is the last slot.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{apply_gate, GateOp, StateVector};

/// CNOT entangler pattern of the trainable block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Nearest-neighbor line: (0,1), (1,2), ..., (n-2, n-1).
    Chain,
    /// Closed ring: the chain plus the wrap-around (n-1, 0).
    Cycle,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layout::Chain => write!(f, "chain"),
            Layout::Cycle => write!(f, "cycle"),
        }
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Layout::Chain),
            "cycle" => Ok(Layout::Cycle),
            other => Err(Error::Config(format!(
                "unknown layout {other:?}, expected \"chain\" or \"cycle\""
            ))),
        }
    }
}

/// Control/target pairs of one entangler round, in application order.
/// Single-qubit circuits have no entangler under either layout.
pub fn entangler_pairs(layout: Layout, n_qubits: usize) -> Vec<(usize, usize)> {
    if n_qubits < 2 {
        return Vec::new();
    }
    match layout {
        Layout::Chain => (0..n_qubits - 1).map(|q| (q, q + 1)).collect(),
        Layout::Cycle => (0..n_qubits).map(|q| (q, (q + 1) % n_qubits)).collect(),
    }
}

/// Pauli generator of a parameterized rotation (RY -> Y, RZ -> Z).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliGen {
    Y,
    Z,
}

/// One maximal run of consecutive parameterized rotations whose generators
/// all commute (distinct qubits, or repeats of the same axis). This is the
/// block structure used by the layered metric approximation.
#[derive(Debug, Clone)]
pub struct ParamLayer {
    /// Schedule index of the first gate in the run.
    pub start: usize,
    /// (parameter slot, qubit, generator) per gate, in schedule order.
    pub gates: Vec<(usize, usize, PauliGen)>,
}

/// A fully specified circuit: qubit count, gate schedule, parameter count,
/// and which qubit is read out.
///
/// Circuits built through [`build_ansatz`] carry their family coordinates
/// (layout and depth); hand-assembled schedules do not.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    n_qubits: usize,
    depth: Option<usize>,
    layout: Option<Layout>,
    measured_qubit: usize,
    param_count: usize,
    schedule: Vec<GateOp>,
}

impl CircuitSpec {
    /// Builds a circuit from an explicit schedule. Every parameter slot in
    /// `0..param_count` must be read by exactly one gate.
    pub fn custom(
        n_qubits: usize,
        param_count: usize,
        measured_qubit: usize,
        schedule: Vec<GateOp>,
    ) -> Result<Self> {
        StateVector::zero(n_qubits)?; // reuse the qubit-count bounds check
        if measured_qubit >= n_qubits {
            return Err(Error::QubitIndex { index: measured_qubit, n_qubits });
        }
        let mut seen = vec![false; param_count];
        for gate in &schedule {
            gate.validate(n_qubits, param_count)?;
            if let Some(slot) = gate.slot() {
                if seen[slot] {
                    return Err(Error::Config(format!(
                        "parameter slot {slot} is read by more than one gate"
                    )));
                }
                seen[slot] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!(
                "parameter slot {missing} is not read by any gate"
            )));
        }
        Ok(CircuitSpec {
            n_qubits,
            depth: None,
            layout: None,
            measured_qubit,
            param_count,
            schedule,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Number of trainable block repetitions, for family-built circuits.
    pub fn depth(&self) -> Option<usize> {
        self.depth
    }

    pub fn layout(&self) -> Option<Layout> {
        self.layout
    }

    pub fn measured_qubit(&self) -> usize {
        self.measured_qubit
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn schedule(&self) -> &[GateOp] {
        &self.schedule
    }

    /// Validates a parameter vector: exact length and finite entries.
    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count {
            return Err(Error::Shape { expected: self.param_count, got: theta.len() });
        }
        for (i, t) in theta.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::Domain(format!("non-finite parameter {t} at index {i}")));
            }
        }
        Ok(())
    }

    /// The state after encoding `x` and applying the full schedule.
    pub fn state(&self, x: f64, theta: &[f64]) -> Result<StateVector> {
        self.check_theta(theta)?;
        let mut state = encode(x, self.n_qubits)?;
        for gate in &self.schedule {
            apply_gate(&mut state, gate, theta)?;
        }
        Ok(state)
    }

    /// Model prediction: <Z> on the measured qubit after the full circuit.
    pub fn forward(&self, x: f64, theta: &[f64]) -> Result<f64> {
        self.state(x, theta)?.expectation_z(self.measured_qubit)
    }

    /// Splits the schedule's parameterized rotations into maximal commuting
    /// runs (see [`ParamLayer`]). Non-parameterized gates end the current run.
    pub fn param_layers(&self) -> Vec<ParamLayer> {
        let mut layers: Vec<ParamLayer> = Vec::new();
        let mut current: Option<ParamLayer> = None;
        for (idx, gate) in self.schedule.iter().enumerate() {
            let gen = match (gate, gate.slot()) {
                (GateOp::Ry { target, .. }, Some(slot)) => Some((slot, *target, PauliGen::Y)),
                (GateOp::Rz { target, .. }, Some(slot)) => Some((slot, *target, PauliGen::Z)),
                _ => None,
            };
            match gen {
                Some((slot, qubit, pauli)) => {
                    let commutes = current.as_ref().is_some_and(|layer| {
                        layer
                            .gates
                            .iter()
                            .all(|&(_, q, p)| q != qubit || p == pauli)
                    });
                    if commutes {
                        current.as_mut().unwrap().gates.push((slot, qubit, pauli));
                    } else {
                        if let Some(layer) = current.take() {
                            layers.push(layer);
                        }
                        current = Some(ParamLayer { start: idx, gates: vec![(slot, qubit, pauli)] });
                    }
                }
                None => {
                    if let Some(layer) = current.take() {
                        layers.push(layer);
                    }
                }
            }
        }
        if let Some(layer) = current.take() {
            layers.push(layer);
        }
        layers
    }
}

/// Encodes a sample: RZ(acos x^2) then RY(asin x) on every qubit, starting
/// from |0...0>. Requires x in [-1, 1].
///
/// Gate order matters. Applied this way the RZ acts on |0> as a pure phase,
/// so each qubit carries the Bloch vector (x, 0, sqrt(1-x^2)) — an X
/// component linear in x. The reversed order would rotate that component to
/// x^3, and since RY/CNOT conjugation keeps the measured observable in the
/// real Pauli span, predictions would then be stuck in a function basis
/// whose best mean-square fit to the parabola target is ~0.038 at any
/// depth. With the order used here a depth-1 circuit represents x^2
/// exactly.
pub fn encode(x: f64, n_qubits: usize) -> Result<StateVector> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("input {x} outside [-1, 1]")));
    }
    let ry_angle = x.asin();
    let rz_angle = (x * x).acos();
    let mut state = StateVector::zero(n_qubits)?;
    for q in 0..n_qubits {
        state.apply_rz(q, rz_angle)?;
        state.apply_ry(q, ry_angle)?;
    }
    Ok(state)
}

/// Builds the family circuit for a layout and depth. The measured qubit is
/// index 1 (index 0 on single-qubit circuits); the trailing RY acts on it.
pub fn build_ansatz(layout: Layout, depth: usize, n_qubits: usize) -> Result<CircuitSpec> {
    StateVector::zero(n_qubits)?; // qubit-count bounds check
    if depth == 0 {
        return Err(Error::Config("depth must be at least 1".into()));
    }
    let measured_qubit = if n_qubits >= 2 { 1 } else { 0 };
    let param_count = n_qubits * depth + 1;
    let mut schedule = Vec::with_capacity(depth * (n_qubits + n_qubits) + 1);
    for d in 0..depth {
        for q in 0..n_qubits {
            schedule.push(GateOp::ry(q, d * n_qubits + q));
        }
        for (control, target) in entangler_pairs(layout, n_qubits) {
            schedule.push(GateOp::cnot(control, target));
        }
    }
    schedule.push(GateOp::ry(measured_qubit, n_qubits * depth));
    let mut spec = CircuitSpec::custom(n_qubits, param_count, measured_qubit, schedule)?;
    spec.depth = Some(depth);
    spec.layout = Some(layout);
    Ok(spec)
}
