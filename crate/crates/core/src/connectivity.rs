//! Minima aggregation and path search: flat-kernel mean-shift clustering of
//! trained parameter vectors, the aggregate minima set built from the lowest
//! histogram bin, and a stochastic nudged-elastic-band search for low-loss
//! paths between minima.
//!
//! The band algorithm works against the [`LossSurface`] trait so it can be
//! exercised on cheap analytic landscapes; [`QclSurface`] adapts a circuit
//! plus data split, drawing a fresh training mini-batch per pivot per step
//! for the noisy loss and gradient estimates, while reporting metrics from
//! deterministic full-train-set evaluations.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::CircuitSpec;
use crate::error::{Error, Result};
use crate::gradloss::{loss_and_gradient, mse_loss, Batch};
use crate::harness::{DataSplit, Histogram, TrainRecord};
use crate::landscape::interpolate;

pub const MEAN_SHIFT_TOL: f64 = 1e-4;
pub const MEAN_SHIFT_MAX_ITER: usize = 300;
pub const BANDWIDTH_QUANTILE_DEFAULT: f64 = 0.3;
pub const NEB_K_DEFAULT: f64 = 1.0;
pub const NEB_LR_DEFAULT: f64 = 0.05;
pub const NEB_BATCH_DEFAULT: usize = 32;
/// Excess barrier height below which two minima count as connected.
pub const EPSILON_CONN_DEFAULT: f64 = 0.02;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let first = points.first().ok_or_else(|| Error::Domain("empty point set".into()))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::Domain("zero-dimensional points".into()));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::Shape { expected: dim, got: p.len() });
        }
    }
    Ok(dim)
}

/// Componentwise wrap into [0, 2 pi); optional preprocessing before
/// clustering angle vectors.
pub fn wrap_to_two_pi(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| t.rem_euclid(std::f64::consts::TAU)).collect()
}

/// Bandwidth heuristic: the given quantile of the sorted pairwise distance
/// list. Zero entries from duplicate points are skipped upward; if every
/// pair coincides the estimate falls back to 1.0 (any positive bandwidth
/// clusters a degenerate cloud into one center).
pub fn estimate_bandwidth(points: &[Vec<f64>], quantile: f64) -> Result<f64> {
    check_points(points)?;
    if points.len() < 2 {
        return Err(Error::Domain("bandwidth estimation needs at least two points".into()));
    }
    if !(quantile.is_finite() && quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::Config(format!("quantile must lie in (0, 1], got {quantile}")));
    }
    let mut dists = Vec::with_capacity(points.len() * (points.len() - 1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            dists.push(dist(&points[i], &points[j]));
        }
    }
    dists.sort_by(f64::total_cmp);
    let idx = ((dists.len() as f64 * quantile) as usize).min(dists.len() - 1);
    match dists[idx..].iter().find(|&&d| d > 0.0) {
        Some(&d) => Ok(d),
        None => Ok(1.0),
    }
}

/// Flat-kernel mean shift. Every point seeds a trajectory that repeatedly
/// moves to the mean of the points within `bandwidth` until it shifts less
/// than [`MEAN_SHIFT_TOL`]. Converged positions closer than the bandwidth
/// are merged, larger windows winning; returns the centers and each point's
/// nearest-center label.
pub fn mean_shift(points: &[Vec<f64>], bandwidth: f64) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let dim = check_points(points)?;
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::Config(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let bw2 = bandwidth * bandwidth;

    // (converged position, window occupancy) per seed.
    let mut converged = Vec::with_capacity(points.len());
    for seed in points {
        let mut pos = seed.clone();
        let mut count = 1usize;
        for _ in 0..MEAN_SHIFT_MAX_ITER {
            let mut mean = vec![0.0; dim];
            count = 0;
            for p in points {
                if sq_dist(&pos, p) <= bw2 {
                    for (m, v) in mean.iter_mut().zip(p) {
                        *m += v;
                    }
                    count += 1;
                }
            }
            for m in &mut mean {
                *m /= count as f64;
            }
            let moved = dist(&mean, &pos);
            pos = mean;
            if moved < MEAN_SHIFT_TOL {
                break;
            }
        }
        converged.push((pos, count));
    }

    // Merge: biggest windows claim their neighborhoods first; ties broken by
    // seed order so the result is deterministic.
    let mut order: Vec<usize> = (0..converged.len()).collect();
    order.sort_by(|&a, &b| converged[b].1.cmp(&converged[a].1).then(a.cmp(&b)));
    let mut centers: Vec<Vec<f64>> = Vec::new();
    for &i in &order {
        let (pos, _) = &converged[i];
        if centers.iter().all(|c| dist(c, pos) >= bandwidth) {
            centers.push(pos.clone());
        }
    }

    let labels = points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (ci, c) in centers.iter().enumerate() {
                let d = sq_dist(p, c);
                if d < best_d {
                    best_d = d;
                    best = ci;
                }
            }
            best
        })
        .collect();
    Ok((centers, labels))
}

/// One surviving aggregate minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmsCenter {
    pub center: Vec<f64>,
    pub test_mse: f64,
    pub cluster_size: usize,
}

/// Aggregate minima set with the funnel counts: `n_points` parameter
/// vectors selected from the lowest occupied bin collapse to `n_centers`
/// cluster centers, of which `centers` pass the loss filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ams {
    pub centers: Vec<AmsCenter>,
    pub n_points: usize,
    pub n_centers: usize,
}

/// Settings for AMS construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AmsParams {
    pub hist_lo: f64,
    pub hist_hi: f64,
    pub n_bins: usize,
    /// Explicit bandwidth; estimated from the selected points when absent.
    pub bandwidth: Option<f64>,
    /// Wrap parameters into [0, 2 pi) before clustering.
    pub wrap_angles: bool,
}

impl Default for AmsParams {
    fn default() -> Self {
        AmsParams {
            hist_lo: crate::harness::HIST_LO,
            hist_hi: crate::harness::HIST_HI,
            n_bins: crate::harness::HIST_BINS,
            bandwidth: None,
            wrap_angles: false,
        }
    }
}

/// Core AMS pipeline over arbitrary points and loss values: histogram the
/// values, keep the points in the lowest occupied bin, cluster them, then
/// re-evaluate each center through `eval` and discard centers whose loss
/// leaves that bin.
pub fn ams_from_points<F>(
    points: &[Vec<f64>],
    values: &[f64],
    mut eval: F,
    params: &AmsParams,
) -> Result<Ams>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    check_points(points)?;
    if points.len() != values.len() {
        return Err(Error::Shape { expected: points.len(), got: values.len() });
    }
    let mut hist = Histogram::new(params.hist_lo, params.hist_hi, params.n_bins)?;
    for &v in values {
        hist.add(v)?;
    }
    let low_bin = hist.lowest_occupied().expect("non-empty value set occupies a bin");

    let selected: Vec<Vec<f64>> = points
        .iter()
        .zip(values)
        .filter(|(_, &v)| hist.bin_index(v) == low_bin)
        .map(|(p, _)| if params.wrap_angles { wrap_to_two_pi(p) } else { p.clone() })
        .collect();
    let n_points = selected.len();

    let (raw_centers, labels) = if n_points == 1 {
        (vec![selected[0].clone()], vec![0])
    } else {
        let bandwidth = match params.bandwidth {
            Some(b) => b,
            None => estimate_bandwidth(&selected, BANDWIDTH_QUANTILE_DEFAULT)?,
        };
        mean_shift(&selected, bandwidth)?
    };
    let n_centers = raw_centers.len();

    let mut centers = Vec::new();
    for (ci, center) in raw_centers.into_iter().enumerate() {
        let test_mse = eval(&center)?;
        if hist.bin_index(test_mse) == low_bin {
            let cluster_size = labels.iter().filter(|&&l| l == ci).count();
            centers.push(AmsCenter { center, test_mse, cluster_size });
        }
    }
    Ok(Ams { centers, n_points, n_centers })
}

/// AMS over training records: clusters the final parameter vectors of the
/// runs whose best test MSE sits in the lowest occupied bin, evaluating
/// centers on the test set of the records' shared dataset. All records must
/// come from the same circuit and data configuration.
pub fn build_ams(records: &[TrainRecord], params: &AmsParams) -> Result<Ams> {
    let first = records.first().ok_or_else(|| Error::Domain("empty record set".into()))?;
    for r in records {
        if r.config.circuit != first.config.circuit || r.config.data != first.config.data {
            return Err(Error::Config(
                "aggregate minima need records from a single circuit and dataset".into(),
            ));
        }
    }
    let spec = first.config.circuit.to_spec()?;
    let split = first.config.data.realize()?;
    let points: Vec<Vec<f64>> = records.iter().map(|r| r.theta_final.clone()).collect();
    let values: Vec<f64> = records.iter().map(|r| r.best_test_mse).collect();
    ams_from_points(&points, &values, |theta| mse_loss(&spec, theta, split.test_batch()), params)
}

/// A loss landscape the band algorithm can query: stochastic per-call
/// samples for the update dynamics and a deterministic mean for reporting.
/// Analytic test surfaces implement the sampled calls without noise.
pub trait LossSurface {
    fn dim(&self) -> usize;
    /// Noisy loss estimate; each call may draw fresh randomness.
    fn sample_loss(&mut self, theta: &[f64]) -> Result<f64>;
    /// Noisy loss and gradient from one draw.
    fn sample_loss_grad(&mut self, theta: &[f64]) -> Result<(f64, Vec<f64>)>;
    /// Deterministic full evaluation.
    fn mean_loss(&self, theta: &[f64]) -> Result<f64>;
}

/// Circuit + data split as a [`LossSurface`]: sampled calls draw a fresh
/// mini-batch of training points from an owned ChaCha8 stream.
pub struct QclSurface<'a> {
    spec: &'a CircuitSpec,
    split: &'a DataSplit,
    batch_size: usize,
    rng: ChaCha8Rng,
}

impl<'a> QclSurface<'a> {
    pub fn new(
        spec: &'a CircuitSpec,
        split: &'a DataSplit,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Config("surface batch size must be at least 1".into()));
        }
        Ok(QclSurface { spec, split, batch_size, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    fn draw_batch(&mut self) -> (Vec<f64>, Vec<f64>) {
        let n = self.split.n_train();
        let k = self.batch_size.min(n);
        let idx = rand::seq::index::sample(&mut self.rng, n, k);
        let mut xs = Vec::with_capacity(k);
        let mut ys = Vec::with_capacity(k);
        for i in idx {
            xs.push(self.split.train_xs()[i]);
            ys.push(self.split.train_ys()[i]);
        }
        (xs, ys)
    }
}

impl LossSurface for QclSurface<'_> {
    fn dim(&self) -> usize {
        self.spec.param_count()
    }

    fn sample_loss(&mut self, theta: &[f64]) -> Result<f64> {
        let (xs, ys) = self.draw_batch();
        mse_loss(self.spec, theta, Batch::new(&xs, &ys)?)
    }

    fn sample_loss_grad(&mut self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (xs, ys) = self.draw_batch();
        loss_and_gradient(self.spec, theta, Batch::new(&xs, &ys)?)
    }

    fn mean_loss(&self, theta: &[f64]) -> Result<f64> {
        mse_loss(self.spec, theta, self.split.train_batch())
    }
}

/// An elastic band: ordered pivots from one minimum to another. The first
/// and last pivot are fixed; [`neb_step`] only ever moves the interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NebPath {
    pub pivots: Vec<Vec<f64>>,
}

impl NebPath {
    pub fn n_pivots(&self) -> usize {
        self.pivots.len()
    }

    pub fn dim(&self) -> usize {
        self.pivots.first().map_or(0, Vec::len)
    }

    /// Endpoints and only endpoints are fixed.
    pub fn is_fixed(&self, i: usize) -> bool {
        i == 0 || i + 1 == self.pivots.len()
    }

    pub fn endpoints(&self) -> (&[f64], &[f64]) {
        (&self.pivots[0], self.pivots.last().unwrap())
    }
}

/// Equally spaced pivots along the straight segment; endpoints are the given
/// vectors themselves.
pub fn neb_init(theta_a: &[f64], theta_b: &[f64], n_pivots: usize) -> Result<NebPath> {
    if theta_a.len() != theta_b.len() {
        return Err(Error::Shape { expected: theta_a.len(), got: theta_b.len() });
    }
    if n_pivots < 3 {
        return Err(Error::Config(format!("a band needs at least 3 pivots, got {n_pivots}")));
    }
    let denom = (n_pivots - 1) as f64;
    let pivots = (0..n_pivots)
        .map(|i| interpolate(theta_a, theta_b, i as f64 / denom))
        .collect::<Result<_>>()?;
    Ok(NebPath { pivots })
}

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Improved-tangent estimate at interior pivot `i`: the segment toward the
/// higher-loss neighbor, or a loss-difference-weighted blend of both
/// segments at a local extremum along the path; normalized. On a loss
/// plateau the chord pi(i+1) - pi(i-1) serves as fallback direction.
pub fn neb_tangent(path: &NebPath, i: usize, losses: &[f64]) -> Result<Vec<f64>> {
    let t = path.n_pivots();
    if losses.len() != t {
        return Err(Error::Shape { expected: t, got: losses.len() });
    }
    if i == 0 || i + 1 >= t {
        return Err(Error::Domain(format!(
            "tangent needs an interior pivot, got {i} of {t}"
        )));
    }
    let (prev, here, next) = (&path.pivots[i - 1], &path.pivots[i], &path.pivots[i + 1]);
    let (l_prev, l_here, l_next) = (losses[i - 1], losses[i], losses[i + 1]);
    let d_next: Vec<f64> = next.iter().zip(here).map(|(n, h)| n - h).collect();
    let d_prev: Vec<f64> = here.iter().zip(prev).map(|(h, p)| h - p).collect();

    let is_extremum = (l_here > l_prev && l_here > l_next) || (l_here < l_prev && l_here < l_next);
    let mut tau: Vec<f64> = if !is_extremum {
        if l_next > l_prev {
            d_next.clone()
        } else {
            d_prev.clone()
        }
    } else {
        let d_hi = (l_next - l_here).abs().max((l_prev - l_here).abs());
        let d_lo = (l_next - l_here).abs().min((l_prev - l_here).abs());
        let (w_next, w_prev) = if l_next > l_prev { (d_hi, d_lo) } else { (d_lo, d_hi) };
        d_next.iter().zip(&d_prev).map(|(n, p)| w_next * n + w_prev * p).collect()
    };

    let mut n = vec_norm(&tau);
    if n < 1e-15 {
        // Degenerate (weights cancelled); fall back to the chord.
        tau = next.iter().zip(prev).map(|(a, b)| a - b).collect();
        n = vec_norm(&tau);
        if n < 1e-15 {
            return Err(Error::Numerical(format!(
                "band tangent vanished at pivot {i}: neighbors coincide"
            )));
        }
    }
    for v in &mut tau {
        *v /= n;
    }
    Ok(tau)
}

/// One synchronous band update. Each pivot's loss (and, for the interior,
/// gradient) is estimated from one fresh draw of the surface; forces are
/// computed from the pre-update geometry and applied at once:
/// F_i = k (|d_next| - |d_prev|) tau_i - (grad - (grad . tau_i) tau_i).
/// Returns the sampled per-pivot losses. Endpoints never move.
pub fn neb_step<S: LossSurface + ?Sized>(
    surface: &mut S,
    path: &mut NebPath,
    k: f64,
    lr: f64,
) -> Result<Vec<f64>> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::Config(format!("spring constant must be >= 0, got {k}")));
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    let t = path.n_pivots();
    let mut losses = vec![0.0; t];
    let mut grads: Vec<Option<Vec<f64>>> = vec![None; t];
    for i in 0..t {
        if path.is_fixed(i) {
            losses[i] = surface.sample_loss(&path.pivots[i])?;
        } else {
            let (l, g) = surface.sample_loss_grad(&path.pivots[i])?;
            losses[i] = l;
            grads[i] = Some(g);
        }
    }

    let mut updated = Vec::with_capacity(t - 2);
    for i in 1..t - 1 {
        let d_next: f64 = dist(&path.pivots[i + 1], &path.pivots[i]);
        let d_prev: f64 = dist(&path.pivots[i], &path.pivots[i - 1]);
        if d_next < 1e-15 && d_prev < 1e-15 {
            // Collapsed neighborhood (e.g. a band between identical
            // endpoints): no direction to move along.
            updated.push(path.pivots[i].clone());
            continue;
        }
        let tau = neb_tangent(path, i, &losses)?;
        let spring = k * (d_next - d_prev);
        let grad = grads[i].as_ref().expect("interior pivot has a gradient");
        let g_par: f64 = grad.iter().zip(&tau).map(|(g, t)| g * t).sum();
        let pivot = &path.pivots[i];
        let new: Vec<f64> = (0..pivot.len())
            .map(|d| {
                let force = spring * tau[d] - (grad[d] - g_par * tau[d]);
                pivot[d] + lr * force
            })
            .collect();
        updated.push(new);
    }
    for (i, new) in updated.into_iter().enumerate() {
        path.pivots[i + 1] = new;
    }
    Ok(losses)
}

/// Preset band sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NebProfile {
    /// 10 pivots, 10 steps: cheap probe that stays near the segment.
    Localized,
    /// 12 pivots, 100 steps: thorough search.
    Long,
    /// 9 pivots, 50 steps.
    Medium,
}

impl NebProfile {
    pub fn n_pivots(&self) -> usize {
        match self {
            NebProfile::Localized => 10,
            NebProfile::Long => 12,
            NebProfile::Medium => 9,
        }
    }

    pub fn n_steps(&self) -> usize {
        match self {
            NebProfile::Localized => 10,
            NebProfile::Long => 100,
            NebProfile::Medium => 50,
        }
    }
}

impl fmt::Display for NebProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NebProfile::Localized => write!(f, "localized"),
            NebProfile::Long => write!(f, "long"),
            NebProfile::Medium => write!(f, "medium"),
        }
    }
}

impl FromStr for NebProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "localized" => Ok(NebProfile::Localized),
            "long" => Ok(NebProfile::Long),
            "medium" => Ok(NebProfile::Medium),
            other => Err(Error::Config(format!(
                "unknown band profile {other:?}, expected \"localized\", \"long\" or \"medium\""
            ))),
        }
    }
}

/// Band-search settings; [`NebParams::from_profile`] fills the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NebParams {
    pub n_pivots: usize,
    pub n_steps: usize,
    pub k: f64,
    pub lr: f64,
    /// Mini-batch size used by [`QclSurface`]-backed runs.
    pub batch_size: usize,
}

impl NebParams {
    pub fn from_profile(profile: NebProfile) -> Self {
        NebParams {
            n_pivots: profile.n_pivots(),
            n_steps: profile.n_steps(),
            k: NEB_K_DEFAULT,
            lr: NEB_LR_DEFAULT,
            batch_size: NEB_BATCH_DEFAULT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pivots < 3 {
            return Err(Error::Config(format!(
                "a band needs at least 3 pivots, got {}",
                self.n_pivots
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("band search needs at least one step".into()));
        }
        if !(self.k.is_finite() && self.k >= 0.0) {
            return Err(Error::Config(format!("spring constant must be >= 0, got {}", self.k)));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("band batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Path quality figures reported per band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMetrics {
    /// Highest loss along the path.
    pub max_loss: f64,
    /// Trapezoidal area under loss vs pivot index (unit spacing).
    pub auc: f64,
    /// Worse of max_loss / L(endpoint) over the two endpoints.
    pub endpoint_ratio: f64,
    pub endpoint_losses: (f64, f64),
}

/// Reduces per-pivot losses to [`PathMetrics`]. `endpoint_losses` are passed
/// separately so callers can use exact endpoint evaluations alongside
/// sampled interior ones when they choose to.
pub fn path_metrics(
    path: &NebPath,
    losses: &[f64],
    endpoint_losses: (f64, f64),
) -> Result<PathMetrics> {
    if losses.len() != path.n_pivots() {
        return Err(Error::Shape { expected: path.n_pivots(), got: losses.len() });
    }
    let max_loss = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let auc = losses.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    let ratio_to = |l: f64| {
        if l > 0.0 {
            max_loss / l
        } else if max_loss == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    };
    Ok(PathMetrics {
        max_loss,
        auc,
        endpoint_ratio: ratio_to(endpoint_losses.0).max(ratio_to(endpoint_losses.1)),
        endpoint_losses,
    })
}

/// Connected means the path's barrier exceeds the higher endpoint loss by at
/// most `epsilon_conn`.
pub fn classify_connected(metrics: &PathMetrics, epsilon_conn: f64) -> bool {
    let (la, lb) = metrics.endpoint_losses;
    metrics.max_loss - la.max(lb) <= epsilon_conn
}

/// Full output of a band search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NebRun {
    pub initial: NebPath,
    pub best: NebPath,
    /// Step index (0 = initial straight line) whose path won the AUC
    /// selection.
    pub best_step: usize,
    /// Deterministic per-pivot mean losses, one row per step including the
    /// initial path.
    pub train_history: Vec<Vec<f64>>,
    /// Path after each step, aligned with `train_history`.
    pub path_history: Vec<NebPath>,
    pub initial_train: PathMetrics,
    pub best_train: PathMetrics,
    /// Test-set metrics; filled by circuit-backed runs, absent for analytic
    /// surfaces.
    pub initial_test: Option<PathMetrics>,
    pub best_test: Option<PathMetrics>,
}

fn mean_losses<S: LossSurface + ?Sized>(surface: &S, path: &NebPath) -> Result<Vec<f64>> {
    path.pivots.iter().map(|p| surface.mean_loss(p)).collect()
}

fn trapezoid(losses: &[f64]) -> f64 {
    losses.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum()
}

/// Runs the band update loop on an arbitrary surface, scoring the path after
/// every step by its deterministic mean-loss AUC and keeping the best
/// (earliest on ties; the initial straight line competes too, so the winner
/// never scores worse than it).
pub fn neb_run_surface<S: LossSurface + ?Sized>(
    surface: &mut S,
    theta_a: &[f64],
    theta_b: &[f64],
    params: &NebParams,
) -> Result<NebRun> {
    params.validate()?;
    let mut path = neb_init(theta_a, theta_b, params.n_pivots)?;
    let initial = path.clone();

    let losses0 = mean_losses(surface, &path)?;
    let mut best = path.clone();
    let mut best_step = 0;
    let mut best_auc = trapezoid(&losses0);
    let mut train_history = vec![losses0];
    let mut path_history = vec![path.clone()];

    for step in 1..=params.n_steps {
        neb_step(surface, &mut path, params.k, params.lr)?;
        let losses = mean_losses(surface, &path)?;
        let auc = trapezoid(&losses);
        if auc < best_auc {
            best_auc = auc;
            best = path.clone();
            best_step = step;
        }
        train_history.push(losses);
        path_history.push(path.clone());
    }

    let endpoints0 = (train_history[0][0], *train_history[0].last().unwrap());
    let initial_train = path_metrics(&initial, &train_history[0], endpoints0)?;
    let best_train = path_metrics(&best, &train_history[best_step], endpoints0)?;
    Ok(NebRun {
        initial,
        best,
        best_step,
        train_history,
        path_history,
        initial_train,
        best_train,
        initial_test: None,
        best_test: None,
    })
}

/// Band search between two trained minima of a circuit. Update dynamics use
/// stochastic mini-batches seeded by `seed`; selection and metrics use the
/// full train set, and test-set metrics are attached for both the initial
/// and the best path.
pub fn neb_run(
    spec: &CircuitSpec,
    theta_a: &[f64],
    theta_b: &[f64],
    params: &NebParams,
    split: &DataSplit,
    seed: u64,
) -> Result<NebRun> {
    spec.check_theta(theta_a)?;
    spec.check_theta(theta_b)?;
    let mut surface = QclSurface::new(spec, split, params.batch_size, seed)?;
    let mut run = neb_run_surface(&mut surface, theta_a, theta_b, params)?;

    let test_losses = |path: &NebPath| -> Result<Vec<f64>> {
        path.pivots.iter().map(|p| mse_loss(spec, p, split.test_batch())).collect()
    };
    let t0 = test_losses(&run.initial)?;
    let tb = test_losses(&run.best)?;
    let endpoints = (t0[0], *t0.last().unwrap());
    run.initial_test = Some(path_metrics(&run.initial, &t0, endpoints)?);
    run.best_test = Some(path_metrics(&run.best, &tb, endpoints)?);
    Ok(run)
}
