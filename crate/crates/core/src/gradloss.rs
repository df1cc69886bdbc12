//! Mean-squared-error loss and its gradients.
//!
//! Prediction gradients use the exact parameter-shift rule for half-turn
//! generators: d y / d theta_i = (y(theta + pi/2 e_i) - y(theta - pi/2 e_i)) / 2.
//! Central finite-difference versions of both gradients are provided as
//! independent oracles; they share nothing with the shift rule beyond the
//! forward evaluator itself.
//!
//! All per-sample reductions run left to right in batch order, so identical
//! inputs give bit-identical results regardless of thread count elsewhere.

use std::f64::consts::FRAC_PI_2;

use crate::ansatz::CircuitSpec;
use crate::error::{Error, Result};

/// Step size for the finite-difference oracles.
pub const FD_STEP: f64 = 1e-5;

/// A borrowed mini-batch of samples. Construction checks that inputs and
/// targets have equal, nonzero length.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
}

impl<'a> Batch<'a> {
    pub fn new(xs: &'a [f64], ys: &'a [f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Shape { expected: xs.len(), got: ys.len() });
        }
        if xs.is_empty() {
            return Err(Error::Domain("batch must contain at least one sample".into()));
        }
        Ok(Batch { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        self.xs
    }

    pub fn ys(&self) -> &[f64] {
        self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false // enforced nonempty at construction
    }
}

/// L = (1/n) sum_i (y_i - yhat_i)^2.
pub fn mse_loss(spec: &CircuitSpec, theta: &[f64], batch: Batch<'_>) -> Result<f64> {
    let mut sum = 0.0;
    for (&x, &y) in batch.xs.iter().zip(batch.ys) {
        let r = y - spec.forward(x, theta)?;
        sum += r * r;
    }
    Ok(sum / batch.len() as f64)
}

/// Exact gradient of the prediction with respect to every parameter, via the
/// parameter-shift rule.
pub fn predict_gradient(spec: &CircuitSpec, theta: &[f64], x: f64) -> Result<Vec<f64>> {
    spec.check_theta(theta)?;
    let mut grad = vec![0.0; theta.len()];
    let mut shifted = theta.to_vec();
    for i in 0..theta.len() {
        shifted[i] = theta[i] + FRAC_PI_2;
        let plus = spec.forward(x, &shifted)?;
        shifted[i] = theta[i] - FRAC_PI_2;
        let minus = spec.forward(x, &shifted)?;
        shifted[i] = theta[i];
        grad[i] = 0.5 * (plus - minus);
    }
    Ok(grad)
}

/// Central finite-difference estimate of the prediction gradient.
pub fn predict_gradient_fd(spec: &CircuitSpec, theta: &[f64], x: f64, h: f64) -> Result<Vec<f64>> {
    spec.check_theta(theta)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
    }
    let mut grad = vec![0.0; theta.len()];
    let mut shifted = theta.to_vec();
    for i in 0..theta.len() {
        shifted[i] = theta[i] + h;
        let plus = spec.forward(x, &shifted)?;
        shifted[i] = theta[i] - h;
        let minus = spec.forward(x, &shifted)?;
        shifted[i] = theta[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Gradient of the batch MSE: -(2/n) sum_i (y_i - yhat_i) * grad yhat_i.
pub fn loss_gradient(spec: &CircuitSpec, theta: &[f64], batch: Batch<'_>) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(spec, theta, batch)?.1)
}

/// Batch loss and its gradient in one pass, sharing the forward evaluations
/// between the residuals and the shift rule's weighting.
pub fn loss_and_gradient(
    spec: &CircuitSpec,
    theta: &[f64],
    batch: Batch<'_>,
) -> Result<(f64, Vec<f64>)> {
    spec.check_theta(theta)?;
    let n = batch.len() as f64;
    let mut loss_sum = 0.0;
    let mut acc = vec![0.0; theta.len()];
    for (&x, &y) in batch.xs.iter().zip(batch.ys) {
        let r = y - spec.forward(x, theta)?;
        loss_sum += r * r;
        let g = predict_gradient(spec, theta, x)?;
        for (a, gi) in acc.iter_mut().zip(&g) {
            *a += r * gi;
        }
    }
    let grad = acc.into_iter().map(|a| -2.0 / n * a).collect();
    Ok((loss_sum / n, grad))
}

/// Central finite-difference estimate of the batch-MSE gradient.
pub fn loss_gradient_fd(
    spec: &CircuitSpec,
    theta: &[f64],
    batch: Batch<'_>,
    h: f64,
) -> Result<Vec<f64>> {
    spec.check_theta(theta)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Domain(format!("finite-difference step must be positive, got {h}")));
    }
    let mut grad = vec![0.0; theta.len()];
    let mut shifted = theta.to_vec();
    for i in 0..theta.len() {
        shifted[i] = theta[i] + h;
        let plus = mse_loss(spec, &shifted, batch)?;
        shifted[i] = theta[i] - h;
        let minus = mse_loss(spec, &shifted, batch)?;
        shifted[i] = theta[i];
        grad[i] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}
