//! Loss-landscape probes: straight-line interpolation cuts between two
//! parameter vectors, 2-D projections onto the plane through three of them,
//! and rotation-dropout comparisons along a segment.
//!
//! Exactness contract: the defining parameter vectors are reproduced bit for
//! bit. [`interpolate`] returns the endpoints themselves at alpha 0 and 1,
//! and [`PlaneBasis::point`] snaps coordinates that match a defining point
//! to the stored vector, so losses at grid corners equal direct evaluation
//! exactly rather than within rounding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::CircuitSpec;
use crate::error::{Error, Result};
use crate::gradloss::mse_loss;
use crate::harness::DataSplit;

/// (1 - alpha) * a + alpha * b, with exact endpoints at alpha in {0, 1}.
/// `alpha` may lie outside [0, 1] for extrapolation.
pub fn interpolate(theta_a: &[f64], theta_b: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if theta_a.len() != theta_b.len() {
        return Err(Error::Shape { expected: theta_a.len(), got: theta_b.len() });
    }
    if alpha == 0.0 {
        return Ok(theta_a.to_vec());
    }
    if alpha == 1.0 {
        return Ok(theta_b.to_vec());
    }
    Ok(theta_a.iter().zip(theta_b).map(|(a, b)| (1.0 - alpha) * a + alpha * b).collect())
}

/// `n` equally spaced values from `lo` to `hi` inclusive; both endpoints are
/// stored exactly, not reconstructed from the step size.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Config(format!("linspace needs at least 2 points, got {n}")));
    }
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::Config(format!("bad linspace range [{lo}, {hi}]")));
    }
    let denom = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * (i as f64) / denom
            }
        })
        .collect())
}

/// One sample of a 1-D landscape cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutPoint {
    pub alpha: f64,
    pub train_loss: f64,
    pub test_loss: f64,
}

/// Train and test MSE along the segment from `theta_a` to `theta_b` at
/// `n_points` equally spaced alphas in [0, 1].
pub fn cut_1d(
    spec: &CircuitSpec,
    theta_a: &[f64],
    theta_b: &[f64],
    n_points: usize,
    split: &DataSplit,
) -> Result<Vec<CutPoint>> {
    spec.check_theta(theta_a)?;
    spec.check_theta(theta_b)?;
    let alphas = linspace(0.0, 1.0, n_points)?;
    alphas
        .into_iter()
        .map(|alpha| {
            let theta = interpolate(theta_a, theta_b, alpha)?;
            Ok(CutPoint {
                alpha,
                train_loss: mse_loss(spec, &theta, split.train_batch())?,
                test_loss: mse_loss(spec, &theta, split.test_batch())?,
            })
        })
        .collect()
}

/// Orthonormal 2-D frame through three parameter vectors, anchored at
/// theta_a. theta_b sits at coordinates (scale1, 0); theta_c at
/// (theta_c_w1, scale2) — its w1 coordinate is generally nonzero because
/// the triple need not be orthogonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneBasis {
    pub origin: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub scale1: f64,
    pub scale2: f64,
    pub theta_c_w1: f64,
    pub theta_b: Vec<f64>,
    pub theta_c: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Gram-Schmidt frame: w1 along theta_b - theta_a, w2 the normalized
/// residual of theta_c - theta_a. Collinear or coincident inputs are
/// rejected with the residual norm in the message.
pub fn plane_basis(theta_a: &[f64], theta_b: &[f64], theta_c: &[f64]) -> Result<PlaneBasis> {
    if theta_b.len() != theta_a.len() {
        return Err(Error::Shape { expected: theta_a.len(), got: theta_b.len() });
    }
    if theta_c.len() != theta_a.len() {
        return Err(Error::Shape { expected: theta_a.len(), got: theta_c.len() });
    }
    let d1: Vec<f64> = theta_b.iter().zip(theta_a).map(|(b, a)| b - a).collect();
    let scale1 = norm(&d1);
    if scale1 < 1e-12 {
        return Err(Error::DegeneratePlane(format!(
            "first two points coincide (separation {scale1:.3e})"
        )));
    }
    let w1: Vec<f64> = d1.iter().map(|v| v / scale1).collect();
    let d2: Vec<f64> = theta_c.iter().zip(theta_a).map(|(c, a)| c - a).collect();
    let theta_c_w1 = dot(&d2, &w1);
    let residual: Vec<f64> = d2.iter().zip(&w1).map(|(d, w)| d - theta_c_w1 * w).collect();
    let res_norm = norm(&residual);
    if res_norm <= 1e-12 * norm(&d2).max(1.0) {
        return Err(Error::DegeneratePlane(format!(
            "three points are collinear (off-axis residual norm {res_norm:.3e})"
        )));
    }
    let w2: Vec<f64> = residual.iter().map(|v| v / res_norm).collect();
    let scale2 = dot(&d2, &w2);
    Ok(PlaneBasis {
        origin: theta_a.to_vec(),
        w1,
        w2,
        scale1,
        scale2,
        theta_c_w1,
        theta_b: theta_b.to_vec(),
        theta_c: theta_c.to_vec(),
    })
}

impl PlaneBasis {
    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    /// Parameter vector at plane coordinates (alpha, beta). Coordinates that
    /// exactly match a defining point return the stored vector itself, so
    /// grid corners reproduce the original losses bit for bit.
    pub fn point(&self, alpha: f64, beta: f64) -> Vec<f64> {
        if alpha == 0.0 && beta == 0.0 {
            return self.origin.clone();
        }
        if alpha == self.scale1 && beta == 0.0 {
            return self.theta_b.clone();
        }
        if alpha == self.theta_c_w1 && beta == self.scale2 {
            return self.theta_c.clone();
        }
        self.origin
            .iter()
            .zip(self.w1.iter().zip(&self.w2))
            .map(|(o, (u, v))| o + alpha * u + beta * v)
            .collect()
    }

    /// In-plane coordinates of an arbitrary parameter vector (its component
    /// off the plane is discarded).
    pub fn coords(&self, theta: &[f64]) -> Result<(f64, f64)> {
        if theta.len() != self.dim() {
            return Err(Error::Shape { expected: self.dim(), got: theta.len() });
        }
        let rel: Vec<f64> = theta.iter().zip(&self.origin).map(|(t, o)| t - o).collect();
        Ok((dot(&rel, &self.w1), dot(&rel, &self.w2)))
    }
}

/// Default axis extent: a quarter-span margin beyond the defining points so
/// the walls around them stay visible.
pub fn default_range(scale: f64) -> (f64, f64) {
    (-0.25 * scale, 1.25 * scale)
}

/// Loss samples over a plane mesh, row-major: `train_losses[ai * n_beta + bi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeGrid {
    pub basis: PlaneBasis,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub train_losses: Vec<f64>,
    pub test_losses: Option<Vec<f64>>,
}

impl LandscapeGrid {
    pub fn train_at(&self, ai: usize, bi: usize) -> f64 {
        self.train_losses[ai * self.betas.len() + bi]
    }

    pub fn test_at(&self, ai: usize, bi: usize) -> Option<f64> {
        self.test_losses.as_ref().map(|m| m[ai * self.betas.len() + bi])
    }
}

/// Evaluates the train (and optionally test) MSE over a mesh in the plane.
/// Points are independent, so evaluation parallelizes; assembly is ordered
/// by grid index and therefore deterministic.
pub fn cut_2d(
    spec: &CircuitSpec,
    basis: &PlaneBasis,
    alpha_range: (f64, f64),
    beta_range: (f64, f64),
    resolution: (usize, usize),
    split: &DataSplit,
    with_test: bool,
) -> Result<LandscapeGrid> {
    if basis.dim() != spec.param_count() {
        return Err(Error::Shape { expected: spec.param_count(), got: basis.dim() });
    }
    let (n_alpha, n_beta) = resolution;
    if n_alpha < 2 || n_beta < 2 {
        return Err(Error::Config(format!(
            "grid resolution must be at least 2 per axis, got {n_alpha}x{n_beta}"
        )));
    }
    let alphas = linspace(alpha_range.0, alpha_range.1, n_alpha)?;
    let betas = linspace(beta_range.0, beta_range.1, n_beta)?;
    let samples: Vec<(f64, f64)> = (0..n_alpha * n_beta)
        .into_par_iter()
        .map(|idx| {
            let theta = basis.point(alphas[idx / n_beta], betas[idx % n_beta]);
            let train = mse_loss(spec, &theta, split.train_batch())?;
            let test =
                if with_test { mse_loss(spec, &theta, split.test_batch())? } else { 0.0 };
            Ok((train, test))
        })
        .collect::<Result<_>>()?;
    let train_losses: Vec<f64> = samples.iter().map(|&(t, _)| t).collect();
    let test_losses =
        if with_test { Some(samples.iter().map(|&(_, t)| t).collect()) } else { None };
    Ok(LandscapeGrid { basis: basis.clone(), alphas, betas, train_losses, test_losses })
}

/// Copy of `theta` with the listed components forced to zero (turning those
/// rotations into identity gates). Indices are 0-based parameter slots.
pub fn clamp_params(theta: &[f64], zero_indices: &[usize]) -> Result<Vec<f64>> {
    let mut out = theta.to_vec();
    for &i in zero_indices {
        if i >= theta.len() {
            return Err(Error::ParamIndex { index: i, len: theta.len() });
        }
        out[i] = 0.0;
    }
    Ok(out)
}

/// One sample of a dropout comparison curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutPoint {
    pub alpha: f64,
    pub loss_free: f64,
    pub loss_clamped: f64,
}

/// Train loss along the segment from `theta_a` to `theta_b`, unmodified
/// versus with `zero_indices` clamped to zero at every alpha. An empty index
/// list makes the two curves bit-identical.
pub fn dropout_curve(
    spec: &CircuitSpec,
    theta_a: &[f64],
    theta_b: &[f64],
    zero_indices: &[usize],
    n_points: usize,
    split: &DataSplit,
) -> Result<Vec<DropoutPoint>> {
    spec.check_theta(theta_a)?;
    spec.check_theta(theta_b)?;
    for &i in zero_indices {
        if i >= spec.param_count() {
            return Err(Error::ParamIndex { index: i, len: spec.param_count() });
        }
    }
    let alphas = linspace(0.0, 1.0, n_points)?;
    alphas
        .into_iter()
        .map(|alpha| {
            let theta = interpolate(theta_a, theta_b, alpha)?;
            let clamped = clamp_params(&theta, zero_indices)?;
            Ok(DropoutPoint {
                alpha,
                loss_free: mse_loss(spec, &theta, split.train_batch())?,
                loss_clamped: mse_loss(spec, &clamped, split.train_batch())?,
            })
        })
        .collect()
}
