//! Optimizer steps: plain gradient descent, Adam, and natural gradient
//! preconditioned by a Fubini-Study metric.
//!
//! The exact metric is assembled from parameter-shifted derivative states:
//! for a rotation gate with a half-turn generator, |d_i psi> =
//! (|psi(theta + pi/2 e_i)> - |psi(theta - pi/2 e_i)>) / (2 sqrt(2)), and
//! g_ij = Re<d_i psi|d_j psi> - Re(<d_i psi|psi><psi|d_j psi>). The training
//! loop uses a cheaper layered approximation: one exact block per commuting
//! rotation layer, computed on the state entering that layer and averaged
//! over the batch. A diagonal-only variant is available as well.
//!
//! The natural-gradient solve is an explicit Cholesky factorization on the
//! regularized metric — never a pseudo-inverse — so a singular system with no
//! regularization fails loudly with an eigenvalue report. With an identity
//! metric and zero regularization the solve is exact and `qng_step`
//! reproduces `sgd_step` bit for bit.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::ansatz::{CircuitSpec, ParamLayer, PauliGen};
use crate::error::{Error, Result};
use crate::simulator::{apply_gate, StateVector};

pub const ADAM_BETA1_DEFAULT: f64 = 0.9;
pub const ADAM_BETA2_DEFAULT: f64 = 0.999;
pub const ADAM_EPS_DEFAULT: f64 = 1e-8;
/// Tikhonov term added to the metric diagonal before the natural-gradient solve.
pub const QNG_REG_DEFAULT: f64 = 1e-6;

fn check_lr(lr: f64) -> Result<()> {
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    Ok(())
}

fn check_same_len(theta: &[f64], grad: &[f64]) -> Result<()> {
    if theta.len() != grad.len() {
        return Err(Error::Shape { expected: theta.len(), got: grad.len() });
    }
    Ok(())
}

/// theta' = theta - lr * grad.
pub fn sgd_step(theta: &[f64], grad: &[f64], lr: f64) -> Result<Vec<f64>> {
    check_lr(lr)?;
    check_same_len(theta, grad)?;
    Ok(theta.iter().zip(grad).map(|(t, g)| t - lr * g).collect())
}

/// Adam moment accumulators with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        Self::with_params(param_count, ADAM_BETA1_DEFAULT, ADAM_BETA2_DEFAULT, ADAM_EPS_DEFAULT)
            .expect("default Adam hyperparameters are valid")
    }

    pub fn with_params(param_count: usize, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::Config(format!(
                "adam decay rates must lie in [0, 1), got beta1={beta1}, beta2={beta2}"
            )));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Config(format!("adam epsilon must be positive, got {eps}")));
        }
        Ok(AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
            beta1,
            beta2,
            eps,
        })
    }

    /// Number of steps taken so far.
    pub fn step_count(&self) -> u32 {
        self.t
    }

    /// One Adam update; mutates the moment estimates and returns the new
    /// parameter vector.
    pub fn step(&mut self, theta: &[f64], grad: &[f64], lr: f64) -> Result<Vec<f64>> {
        check_lr(lr)?;
        check_same_len(theta, grad)?;
        if theta.len() != self.m.len() {
            return Err(Error::Shape { expected: self.m.len(), got: theta.len() });
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut out = Vec::with_capacity(theta.len());
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            out.push(theta[i] - lr * m_hat / (v_hat.sqrt() + self.eps));
        }
        Ok(out)
    }
}

/// Symmetric matrix over the parameter space, stored dense row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl MetricMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("metric dimension must be at least 1".into()));
        }
        Ok(MetricMatrix { n, data: vec![0.0; n * n] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Writes both (i, j) and (j, i).
    pub fn set_sym(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
        self.data[j * self.n + i] = value;
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    /// Eigenvalues in ascending order (the matrix is symmetric by
    /// construction). Used for positive-semidefiniteness checks and for the
    /// failure report of the natural-gradient solve.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.n, self.n, &self.data);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Solves (G + reg I) x = rhs by Cholesky factorization. Fails with an
    /// eigenvalue report when the regularized matrix is not positive
    /// definite; nothing is ever pseudo-inverted.
    pub fn solve_regularized(&self, rhs: &[f64], reg: f64) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::Shape { expected: self.n, got: rhs.len() });
        }
        if !(reg.is_finite() && reg >= 0.0) {
            return Err(Error::Config(format!("regularization must be >= 0, got {reg}")));
        }
        let n = self.n;
        let mut a = self.data.clone();
        for i in 0..n {
            a[i * n + i] += reg;
        }
        // In-place lower-triangular factorization.
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d.is_finite() && d > 0.0) {
                let ev = self.eigenvalues();
                return Err(Error::Numerical(format!(
                    "metric solve failed at pivot {j} (value {d:.3e}) with regularization \
                     {reg:.1e}; metric eigenvalue range [{:.6e}, {:.6e}]",
                    ev.first().copied().unwrap_or(f64::NAN),
                    ev.last().copied().unwrap_or(f64::NAN),
                )));
            }
            let l = d.sqrt();
            a[j * n + j] = l;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / l;
            }
        }
        // L y = rhs, then L^T x = y.
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= a[i * n + k] * y[k];
            }
            y[i] = s / a[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= a[k * n + i] * x[k];
            }
            x[i] = s / a[i * n + i];
        }
        Ok(x)
    }
}

/// Natural-gradient step: theta' = theta - lr * (G + reg I)^{-1} grad,
/// computed through a linear solve.
pub fn qng_step(
    theta: &[f64],
    grad: &[f64],
    metric: &MetricMatrix,
    lr: f64,
    reg: f64,
) -> Result<Vec<f64>> {
    check_lr(lr)?;
    check_same_len(theta, grad)?;
    if metric.dim() != theta.len() {
        return Err(Error::Shape { expected: theta.len(), got: metric.dim() });
    }
    let nat = metric.solve_regularized(grad, reg)?;
    Ok(theta.iter().zip(&nat).map(|(t, g)| t - lr * g).collect())
}

/// Derivative state |d_i psi> for slot `i` via the state-level shift rule.
fn derivative_state(spec: &CircuitSpec, x: f64, theta: &[f64], i: usize) -> Result<StateVector> {
    let mut shifted = theta.to_vec();
    shifted[i] = theta[i] + FRAC_PI_2;
    let plus = spec.state(x, &shifted)?;
    shifted[i] = theta[i] - FRAC_PI_2;
    let minus = spec.state(x, &shifted)?;
    let scale = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    let amps = plus
        .amplitudes()
        .iter()
        .zip(minus.amplitudes())
        .map(|(p, m)| (p - m) * scale)
        .collect();
    StateVector::from_amplitudes(plus.n_qubits(), amps)
}

/// Exact Fubini-Study metric at one input:
/// g_ij = Re<d_i psi|d_j psi> - Re(<d_i psi|psi><psi|d_j psi>).
pub fn fubini_metric_exact(spec: &CircuitSpec, x: f64, theta: &[f64]) -> Result<MetricMatrix> {
    spec.check_theta(theta)?;
    let p = spec.param_count();
    let psi = spec.state(x, theta)?;
    let derivs: Vec<StateVector> = (0..p)
        .map(|i| derivative_state(spec, x, theta, i))
        .collect::<Result<_>>()?;
    let overlaps: Vec<_> = derivs.iter().map(|d| psi.inner(d)).collect::<Result<Vec<_>>>()?;
    let mut g = MetricMatrix::zeros(p)?;
    for i in 0..p {
        for j in i..p {
            let dd = derivs[i].inner(&derivs[j])?.re;
            let phase = (overlaps[i].conj() * overlaps[j]).re;
            g.set_sym(i, j, dd - phase);
        }
    }
    Ok(g)
}

/// Which within-layer structure the approximate metric keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricApprox {
    /// One exact block per commuting rotation layer.
    #[default]
    BlockDiag,
    /// Diagonal entries only.
    Diag,
}

/// Covariance block of one rotation layer evaluated on the state entering it:
/// g_ab = (<P_a P_b> - <P_a><P_b>) / 4 over the layer's generators.
fn layer_block(state: &StateVector, layer: &ParamLayer) -> Result<Vec<Vec<f64>>> {
    let k = layer.gates.len();
    let mut gen_states = Vec::with_capacity(k);
    for &(_, qubit, pauli) in &layer.gates {
        let mut s = state.clone();
        match pauli {
            PauliGen::Y => s.apply_pauli_y(qubit)?,
            PauliGen::Z => s.apply_pauli_z(qubit)?,
        }
        gen_states.push(s);
    }
    let means: Vec<f64> = gen_states
        .iter()
        .map(|gs| state.inner(gs).map(|v| v.re))
        .collect::<Result<_>>()?;
    let mut block = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in a..k {
            let corr = gen_states[a].inner(&gen_states[b])?.re;
            let v = 0.25 * (corr - means[a] * means[b]);
            block[a][b] = v;
            block[b][a] = v;
        }
    }
    Ok(block)
}

fn fubini_metric_layered(
    spec: &CircuitSpec,
    xs: &[f64],
    theta: &[f64],
    approx: MetricApprox,
) -> Result<MetricMatrix> {
    spec.check_theta(theta)?;
    if xs.is_empty() {
        return Err(Error::Domain("metric batch must contain at least one input".into()));
    }
    let layers = spec.param_layers();
    let mut acc = MetricMatrix::zeros(spec.param_count())?;
    for &x in xs {
        let mut state = crate::ansatz::encode(x, spec.n_qubits())?;
        let mut next_layer = 0;
        for (idx, gate) in spec.schedule().iter().enumerate() {
            // The block is evaluated on the state entering the layer; the
            // layer's own rotation angles drop out because their generators
            // commute with the layer unitary.
            if next_layer < layers.len() && layers[next_layer].start == idx {
                let layer = &layers[next_layer];
                let block = layer_block(&state, layer)?;
                for (a, &(slot_a, _, _)) in layer.gates.iter().enumerate() {
                    for (b, &(slot_b, _, _)) in layer.gates.iter().enumerate() {
                        if approx == MetricApprox::Diag && a != b {
                            continue;
                        }
                        acc.data[slot_a * acc.n + slot_b] += block[a][b];
                    }
                }
                next_layer += 1;
            }
            apply_gate(&mut state, gate, theta)?;
        }
    }
    acc.scale(1.0 / xs.len() as f64);
    Ok(acc)
}

/// Layered (block-diagonal) metric approximation averaged over a batch of
/// inputs. Cross-layer couplings are dropped; within-layer blocks are exact.
pub fn fubini_metric_blockdiag(
    spec: &CircuitSpec,
    xs: &[f64],
    theta: &[f64],
) -> Result<MetricMatrix> {
    fubini_metric_layered(spec, xs, theta, MetricApprox::BlockDiag)
}

/// Diagonal-only metric approximation averaged over a batch of inputs.
pub fn fubini_metric_diag(spec: &CircuitSpec, xs: &[f64], theta: &[f64]) -> Result<MetricMatrix> {
    fubini_metric_layered(spec, xs, theta, MetricApprox::Diag)
}

fn default_beta1() -> f64 {
    ADAM_BETA1_DEFAULT
}

fn default_beta2() -> f64 {
    ADAM_BETA2_DEFAULT
}

fn default_adam_eps() -> f64 {
    ADAM_EPS_DEFAULT
}

fn default_qng_reg() -> f64 {
    QNG_REG_DEFAULT
}

/// Serializable optimizer choice with hyperparameters. Echoed verbatim into
/// run records so results stay attributable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerConfig {
    Sgd,
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_adam_eps")]
        eps: f64,
    },
    Qng {
        #[serde(default = "default_qng_reg")]
        reg: f64,
        #[serde(default)]
        metric: MetricApprox,
    },
}

impl OptimizerConfig {
    pub fn adam() -> Self {
        OptimizerConfig::Adam {
            beta1: ADAM_BETA1_DEFAULT,
            beta2: ADAM_BETA2_DEFAULT,
            eps: ADAM_EPS_DEFAULT,
        }
    }

    pub fn qng() -> Self {
        OptimizerConfig::Qng { reg: QNG_REG_DEFAULT, metric: MetricApprox::default() }
    }

    /// Short name used in summaries and file names.
    pub fn kind_name(&self) -> &'static str {
        match self {
            OptimizerConfig::Sgd => "sgd",
            OptimizerConfig::Adam { .. } => "adam",
            OptimizerConfig::Qng { .. } => "qng",
        }
    }
}

/// Live optimizer state for a training run.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd,
    Adam(AdamState),
    Qng { reg: f64, metric: MetricApprox },
}

impl Optimizer {
    pub fn from_config(config: &OptimizerConfig, param_count: usize) -> Result<Self> {
        Ok(match config {
            OptimizerConfig::Sgd => Optimizer::Sgd,
            OptimizerConfig::Adam { beta1, beta2, eps } => {
                Optimizer::Adam(AdamState::with_params(param_count, *beta1, *beta2, *eps)?)
            }
            OptimizerConfig::Qng { reg, metric } => {
                if !(reg.is_finite() && *reg >= 0.0) {
                    return Err(Error::Config(format!(
                        "qng regularization must be >= 0, got {reg}"
                    )));
                }
                Optimizer::Qng { reg: *reg, metric: *metric }
            }
        })
    }

    /// Applies one update. The natural-gradient variant rebuilds its metric
    /// on the same batch inputs the gradient was computed from.
    pub fn step(
        &mut self,
        spec: &CircuitSpec,
        theta: &[f64],
        grad: &[f64],
        batch_xs: &[f64],
        lr: f64,
    ) -> Result<Vec<f64>> {
        match self {
            Optimizer::Sgd => sgd_step(theta, grad, lr),
            Optimizer::Adam(state) => state.step(theta, grad, lr),
            Optimizer::Qng { reg, metric } => {
                let g = fubini_metric_layered(spec, batch_xs, theta, *metric)?;
                qng_step(theta, grad, &g, lr, *reg)
            }
        }
    }
}
