//! Experiment harness: dataset synthesis, train/test splitting, parameter
//! initialization, the mini-batch training loop, grid sweeps, and the
//! histogram summaries used in reports.
//!
//! Everything is deterministic from explicit seeds. A training run's RNG
//! stream is a single ChaCha8 generator seeded from the run seed; the
//! initial parameters are drawn first, then epoch shuffles, so
//! [`init_params`] with the same seed reproduces exactly the theta_init
//! recorded by [`train`].

use std::collections::HashSet;
use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, CircuitSpec, Layout};
use crate::error::{Error, Result};
use crate::gradloss::{loss_and_gradient, mse_loss, Batch};
use crate::optim::{Optimizer, OptimizerConfig};

pub const DATASET_SIZE_DEFAULT: usize = 500;
pub const NOISE_DEFAULT: f64 = 0.1;
pub const TRAIN_RATIO_DEFAULT: f64 = 0.8;
pub const LR_DEFAULT: f64 = 0.05;
pub const STEPS_DEFAULT: usize = 300;
pub const BATCH_SIZES_DEFAULT: [usize; 6] = [1, 2, 4, 8, 16, 32];

/// Width of the Gaussian initialization, sqrt(2 / (n_in + n_out)) with both
/// fan counts replaced by the qubit count 3.
pub fn init_sigma_default() -> f64 {
    (2.0f64 / 6.0).sqrt()
}

/// Synthetic regression target: y = x^2 plus bounded uniform noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub seed: u64,
}

pub fn generate_dataset(seed: u64) -> Dataset {
    generate_dataset_with(seed, DATASET_SIZE_DEFAULT, NOISE_DEFAULT)
        .expect("default dataset parameters are valid")
}

/// `n_points` equally spaced xs on [-1, 1] (endpoints exact), labels
/// y = x^2 + noise * u with u ~ Uniform[-1, 1] drawn from a ChaCha8 stream.
pub fn generate_dataset_with(seed: u64, n_points: usize, noise: f64) -> Result<Dataset> {
    if n_points < 2 {
        return Err(Error::Config(format!("dataset needs at least 2 points, got {n_points}")));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::Config(format!("noise amplitude must be >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let denom = (n_points - 1) as f64;
    let mut xs = Vec::with_capacity(n_points);
    let mut ys = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let x = -1.0 + 2.0 * (i as f64) / denom;
        let u: f64 = rng.random_range(-1.0..=1.0);
        xs.push(x);
        ys.push(x * x + noise * u);
    }
    Ok(Dataset { xs, ys, seed })
}

/// A dataset with train/test membership. Points stay in x order; the
/// separated views are kept alongside for direct batch access.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    xs: Vec<f64>,
    ys: Vec<f64>,
    is_test: Vec<bool>,
    train_xs: Vec<f64>,
    train_ys: Vec<f64>,
    test_xs: Vec<f64>,
    test_ys: Vec<f64>,
}

impl DataSplit {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn is_test(&self) -> &[bool] {
        &self.is_test
    }

    pub fn train_xs(&self) -> &[f64] {
        &self.train_xs
    }

    pub fn train_ys(&self) -> &[f64] {
        &self.train_ys
    }

    pub fn test_xs(&self) -> &[f64] {
        &self.test_xs
    }

    pub fn test_ys(&self) -> &[f64] {
        &self.test_ys
    }

    pub fn n_train(&self) -> usize {
        self.train_xs.len()
    }

    pub fn n_test(&self) -> usize {
        self.test_xs.len()
    }

    pub fn train_batch(&self) -> Batch<'_> {
        Batch::new(&self.train_xs, &self.train_ys).expect("split holds a non-empty train set")
    }

    pub fn test_batch(&self) -> Batch<'_> {
        Batch::new(&self.test_xs, &self.test_ys).expect("split holds a non-empty test set")
    }

    /// Rebuilds a split from per-point membership flags (used by the CSV
    /// reader). Both sides must be non-empty.
    pub fn from_flags(xs: Vec<f64>, ys: Vec<f64>, is_test: Vec<bool>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() != is_test.len() {
            return Err(Error::Shape { expected: xs.len(), got: ys.len().min(is_test.len()) });
        }
        let mut split = DataSplit {
            xs,
            ys,
            is_test,
            train_xs: Vec::new(),
            train_ys: Vec::new(),
            test_xs: Vec::new(),
            test_ys: Vec::new(),
        };
        for i in 0..split.xs.len() {
            if split.is_test[i] {
                split.test_xs.push(split.xs[i]);
                split.test_ys.push(split.ys[i]);
            } else {
                split.train_xs.push(split.xs[i]);
                split.train_ys.push(split.ys[i]);
            }
        }
        if split.train_xs.is_empty() || split.test_xs.is_empty() {
            return Err(Error::Config("split leaves an empty train or test set".into()));
        }
        Ok(split)
    }
}

/// Uniform random assignment: shuffle indices with a seeded stream, first
/// floor(n * ratio) go to the train set.
pub fn split_dataset(dataset: &Dataset, ratio: f64, seed: u64) -> Result<DataSplit> {
    if !(ratio.is_finite() && ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    let n = dataset.xs.len();
    let n_train = (n as f64 * ratio).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Config(format!(
            "ratio {ratio} leaves a degenerate split ({n_train} train of {n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut is_test = vec![true; n];
    for &i in &order[..n_train] {
        is_test[i] = false;
    }
    DataSplit::from_flags(dataset.xs.clone(), dataset.ys.clone(), is_test)
}

/// How theta_init is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum InitScheme {
    Gaussian { mu: f64, sigma: f64 },
    Uniform,
}

impl InitScheme {
    /// Gaussian centered at `mu` with the default width.
    pub fn gaussian(mu: f64) -> Self {
        InitScheme::Gaussian { mu, sigma: init_sigma_default() }
    }

    fn validate(&self) -> Result<()> {
        if let InitScheme::Gaussian { mu, sigma } = self {
            if !mu.is_finite() {
                return Err(Error::Config(format!("init mean must be finite, got {mu}")));
            }
            if !(sigma.is_finite() && *sigma > 0.0) {
                return Err(Error::Config(format!("init sigma must be positive, got {sigma}")));
            }
        }
        Ok(())
    }

    /// Short label for reports, e.g. `gauss(1.571)` or `uniform`.
    pub fn label(&self) -> String {
        match self {
            InitScheme::Gaussian { mu, .. } => format!("gauss({mu:.3})"),
            InitScheme::Uniform => "uniform".to_string(),
        }
    }
}

/// The six initialization schemes swept by default: Gaussians centered at
/// multiples of pi/4 from 0 to pi, plus uniform angles.
pub fn standard_inits() -> Vec<InitScheme> {
    let mut inits: Vec<InitScheme> =
        [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0, PI].iter().map(|&mu| InitScheme::gaussian(mu)).collect();
    inits.push(InitScheme::Uniform);
    inits
}

pub fn init_params(scheme: &InitScheme, param_count: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_params_with(scheme, param_count, &mut rng)
}

/// Draws from the caller's stream; [`train`] uses this so its theta_init is
/// reproducible through [`init_params`] with the run seed.
pub fn init_params_with<R: Rng>(
    scheme: &InitScheme,
    param_count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    scheme.validate()?;
    match scheme {
        InitScheme::Gaussian { mu, sigma } => {
            let normal = Normal::new(*mu, *sigma)
                .map_err(|e| Error::Config(format!("invalid gaussian init: {e}")))?;
            Ok((0..param_count).map(|_| normal.sample(rng)).collect())
        }
        InitScheme::Uniform => Ok((0..param_count).map(|_| rng.random_range(0.0..TAU)).collect()),
    }
}

/// Circuit shape in serializable form; `param_count` is stored redundantly
/// and cross-checked so records can be validated without rebuilding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitDesc {
    pub n_qubits: usize,
    pub depth: usize,
    pub layout: Layout,
    pub param_count: usize,
}

impl CircuitDesc {
    pub fn new(layout: Layout, depth: usize, n_qubits: usize) -> Result<Self> {
        let spec = build_ansatz(layout, depth, n_qubits)?;
        Ok(CircuitDesc { n_qubits, depth, layout, param_count: spec.param_count() })
    }

    pub fn to_spec(&self) -> Result<CircuitSpec> {
        let spec = build_ansatz(self.layout, self.depth, self.n_qubits)?;
        if spec.param_count() != self.param_count {
            return Err(Error::Config(format!(
                "circuit description claims {} parameters but the ansatz has {}",
                self.param_count,
                spec.param_count()
            )));
        }
        Ok(spec)
    }
}

/// Dataset + split settings, carried inside every run config so records are
/// self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub seed: u64,
    pub n_points: usize,
    pub noise: f64,
    pub train_ratio: f64,
    pub split_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            seed: 1,
            n_points: DATASET_SIZE_DEFAULT,
            noise: NOISE_DEFAULT,
            train_ratio: TRAIN_RATIO_DEFAULT,
            split_seed: 1,
        }
    }
}

impl DataConfig {
    pub fn dataset(&self) -> Result<Dataset> {
        generate_dataset_with(self.seed, self.n_points, self.noise)
    }

    pub fn realize(&self) -> Result<DataSplit> {
        let dataset = self.dataset()?;
        split_dataset(&dataset, self.train_ratio, self.split_seed)
    }
}

/// Full specification of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub circuit: CircuitDesc,
    pub data: DataConfig,
    pub optimizer: OptimizerConfig,
    pub lr: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub init: InitScheme,
    /// Test MSE is evaluated at step 0, every `test_eval_stride` steps, and
    /// always at the final step.
    pub test_eval_stride: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.steps == 0 {
            return Err(Error::Config("step count must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.test_eval_stride == 0 {
            return Err(Error::Config("test evaluation stride must be at least 1".into()));
        }
        self.init.validate()
    }
}

/// Everything recorded about one training run. `train_loss[0]` is the
/// full-train-set MSE at theta_init; entries 1..=steps are the pre-update
/// mini-batch losses. `test_mse` holds the full test-set MSE at each
/// evaluated step (every step under the default stride of 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub config: TrainConfig,
    pub theta_init: Vec<f64>,
    pub theta_final: Vec<f64>,
    pub train_loss: Vec<f64>,
    pub test_mse: Vec<f64>,
    pub best_test_mse: f64,
    pub best_step: usize,
    pub seed: u64,
    pub duration_s: f64,
}

/// Mini-batch training: epochs are shuffled partitions of the train set
/// (short final batch when the size does not divide), one optimizer step per
/// batch, no early stopping. Best test MSE is the strict minimum over
/// evaluated steps, earliest step on ties.
pub fn train(spec: &CircuitSpec, config: &TrainConfig, split: &DataSplit) -> Result<TrainRecord> {
    config.validate()?;
    if spec.param_count() != config.circuit.param_count {
        return Err(Error::Shape {
            expected: config.circuit.param_count,
            got: spec.param_count(),
        });
    }
    let started = Instant::now();
    let p = spec.param_count();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let theta_init = init_params_with(&config.init, p, &mut rng)?;
    let mut theta = theta_init.clone();
    let mut optimizer = Optimizer::from_config(&config.optimizer, p)?;

    let mut train_loss = Vec::with_capacity(config.steps + 1);
    train_loss.push(mse_loss(spec, &theta, split.train_batch())?);

    let mut test_mse = Vec::new();
    let mut best_step = 0;
    let mut best_test_mse = mse_loss(spec, &theta, split.test_batch())?;
    test_mse.push(best_test_mse);

    let n_train = split.n_train();
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut cursor = n_train; // forces a shuffle before the first batch
    let mut batch_xs = Vec::with_capacity(config.batch_size);
    let mut batch_ys = Vec::with_capacity(config.batch_size);

    for step in 1..=config.steps {
        if cursor >= n_train {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let take = config.batch_size.min(n_train - cursor);
        batch_xs.clear();
        batch_ys.clear();
        for &i in &order[cursor..cursor + take] {
            batch_xs.push(split.train_xs()[i]);
            batch_ys.push(split.train_ys()[i]);
        }
        cursor += take;

        let batch = Batch::new(&batch_xs, &batch_ys)?;
        let (batch_loss, grad) = loss_and_gradient(spec, &theta, batch)?;
        train_loss.push(batch_loss);
        theta = optimizer.step(spec, &theta, &grad, &batch_xs, config.lr)?;

        if step % config.test_eval_stride == 0 || step == config.steps {
            let mse = mse_loss(spec, &theta, split.test_batch())?;
            test_mse.push(mse);
            if mse < best_test_mse {
                best_test_mse = mse;
                best_step = step;
            }
        }
    }

    Ok(TrainRecord {
        config: config.clone(),
        theta_init,
        theta_final: theta,
        train_loss,
        test_mse,
        best_test_mse,
        best_step,
        seed: config.seed,
        duration_s: started.elapsed().as_secs_f64(),
    })
}

/// splitmix64 finalizer; spreads consecutive ordinals into decorrelated run
/// seeds.
pub fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a. (The standard library hasher is not stable across
/// releases, so identifiers persisted to disk go through this instead.)
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Hash of the canonical JSON form of a run config; keys the sweep resume
/// logic.
pub fn config_hash(config: &TrainConfig) -> u64 {
    let json = serde_json::to_string(config).expect("run config serializes");
    fnv1a(json.as_bytes())
}

/// Cartesian sweep grid. Every run shares the dataset defined by `data`;
/// run seeds are derived from `base_seed` and the enumeration ordinal.
/// Deserialization fills missing fields from `Default`, so a config file
/// only needs the settings it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub n_qubits: usize,
    pub layouts: Vec<Layout>,
    pub depths: Vec<usize>,
    pub optimizers: Vec<OptimizerConfig>,
    pub inits: Vec<InitScheme>,
    pub batch_sizes: Vec<usize>,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub data: DataConfig,
    pub lr: f64,
    pub steps: usize,
    pub test_eval_stride: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_qubits: 3,
            layouts: vec![Layout::Chain, Layout::Cycle],
            depths: vec![1, 2, 3, 4],
            optimizers: vec![OptimizerConfig::Sgd, OptimizerConfig::adam(), OptimizerConfig::qng()],
            inits: standard_inits(),
            batch_sizes: BATCH_SIZES_DEFAULT.to_vec(),
            n_seeds: 1,
            base_seed: 1,
            data: DataConfig::default(),
            lr: LR_DEFAULT,
            steps: STEPS_DEFAULT,
            test_eval_stride: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let axes: [(&str, usize); 5] = [
            ("layouts", self.layouts.len()),
            ("depths", self.depths.len()),
            ("optimizers", self.optimizers.len()),
            ("inits", self.inits.len()),
            ("batch_sizes", self.batch_sizes.len()),
        ];
        for (name, len) in axes {
            if len == 0 {
                return Err(Error::Config(format!("sweep grid axis `{name}` is empty")));
            }
        }
        if self.n_seeds == 0 {
            return Err(Error::Config("sweep needs at least one seed".into()));
        }
        Ok(())
    }

    /// Expands the grid in deterministic order: layout, depth, optimizer,
    /// seed index, init, batch size (innermost). One (layout, depth,
    /// optimizer, seed) block is |inits| x |batch_sizes| runs.
    pub fn enumerate_runs(&self) -> Result<Vec<TrainConfig>> {
        self.validate()?;
        let mut runs = Vec::new();
        let mut ordinal: u64 = 0;
        for &layout in &self.layouts {
            for &depth in &self.depths {
                let circuit = CircuitDesc::new(layout, depth, self.n_qubits)?;
                for optimizer in &self.optimizers {
                    for _seed_idx in 0..self.n_seeds {
                        for init in &self.inits {
                            for &batch_size in &self.batch_sizes {
                                let seed = splitmix64(self.base_seed.wrapping_add(ordinal));
                                ordinal += 1;
                                runs.push(TrainConfig {
                                    circuit: circuit.clone(),
                                    data: self.data.clone(),
                                    optimizer: optimizer.clone(),
                                    lr: self.lr,
                                    steps: self.steps,
                                    batch_size,
                                    init: *init,
                                    test_eval_stride: self.test_eval_stride,
                                    seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(runs)
    }
}

/// Outcome counts of a sweep invocation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepStats {
    pub total: usize,
    pub completed: usize,
    pub skipped: usize,
    /// (config hash, error message) for runs that failed; failures do not
    /// abort the sweep.
    pub failed: Vec<(u64, String)>,
}

/// Runs every grid point not already present in `existing` (keyed by
/// [`config_hash`]). Work is parallelized in chunks; `on_record` receives
/// completed records in enumeration order so output files are appended
/// deterministically and incrementally.
pub fn run_sweep<F>(config: &SweepConfig, existing: &HashSet<u64>, mut on_record: F) -> Result<SweepStats>
where
    F: FnMut(&TrainRecord) -> Result<()>,
{
    let runs = config.enumerate_runs()?;
    let split = config.data.realize()?;
    let mut stats = SweepStats { total: runs.len(), ..Default::default() };

    let pending: Vec<&TrainConfig> =
        runs.iter().filter(|rc| !existing.contains(&config_hash(rc))).collect();
    stats.skipped = stats.total - pending.len();

    let chunk_size = (2 * rayon::current_num_threads()).max(1);
    for chunk in pending.chunks(chunk_size) {
        let results: Vec<(u64, Result<TrainRecord>)> = chunk
            .par_iter()
            .map(|rc| {
                let hash = config_hash(rc);
                let record = rc.circuit.to_spec().and_then(|spec| train(&spec, rc, &split));
                (hash, record)
            })
            .collect();
        for (hash, result) in results {
            match result {
                Ok(record) => {
                    on_record(&record)?;
                    stats.completed += 1;
                }
                Err(e) => stats.failed.push((hash, e.to_string())),
            }
        }
    }
    Ok(stats)
}

pub const HIST_LO: f64 = 0.007;
pub const HIST_HI: f64 = 0.16;
pub const HIST_BINS: usize = 50;

/// Fixed-range histogram. Out-of-range values are clamped into the edge
/// bins (so every value occupies a bin) and additionally tallied in
/// `below_range` / `above_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub below_range: u64,
    pub above_range: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, n_bins: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::Config(format!("bad histogram range [{lo}, {hi}]")));
        }
        if n_bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        Ok(Histogram { lo, hi, counts: vec![0; n_bins], below_range: 0, above_range: 0 })
    }

    /// The report histogram: 50 equal bins on [0.007, 0.16].
    pub fn standard() -> Self {
        Histogram::new(HIST_LO, HIST_HI, HIST_BINS).expect("standard histogram range is valid")
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn bin_midpoint(&self, bin: usize) -> f64 {
        self.lo + (bin as f64 + 0.5) * self.bin_width()
    }

    /// Bin receiving `value`, after clamping into range.
    pub fn bin_index(&self, value: f64) -> usize {
        let last = self.counts.len() - 1;
        if value <= self.lo {
            return 0;
        }
        if value >= self.hi {
            return last;
        }
        (((value - self.lo) / self.bin_width()) as usize).min(last)
    }

    pub fn add(&mut self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Domain(format!("cannot bin non-finite value {value}")));
        }
        if value < self.lo {
            self.below_range += 1;
        } else if value > self.hi {
            self.above_range += 1;
        }
        let bin = self.bin_index(value);
        self.counts[bin] += 1;
        Ok(())
    }

    pub fn lowest_occupied(&self) -> Option<usize> {
        self.counts.iter().position(|&c| c > 0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Median with the even-count convention of averaging the middle two.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("median of an empty set".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) })
}

/// Per-(layout, depth, optimizer) statistics over best test MSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub layout: Layout,
    pub depth: usize,
    pub optimizer: String,
    pub n_runs: usize,
    pub median_best_test_mse: f64,
    pub lowest_bin_midpoint: f64,
    pub lowest_bin_count: u64,
    pub mean_steps_to_best: f64,
    pub below_range: u64,
    pub above_range: u64,
}

/// Groups records by (layout, depth, optimizer kind) and reduces each group
/// against the standard histogram. Output is sorted by the group key.
pub fn summarize(records: &[TrainRecord]) -> Result<Vec<GroupSummary>> {
    if records.is_empty() {
        return Err(Error::Domain("cannot summarize an empty record set".into()));
    }
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(String, usize, String), Vec<&TrainRecord>> = BTreeMap::new();
    for r in records {
        let key = (
            r.config.circuit.layout.to_string(),
            r.config.circuit.depth,
            r.config.optimizer.kind_name().to_string(),
        );
        groups.entry(key).or_default().push(r);
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((layout_name, depth, optimizer), rs) in groups {
        let layout: Layout = layout_name.parse()?;
        let best: Vec<f64> = rs.iter().map(|r| r.best_test_mse).collect();
        let mut hist = Histogram::standard();
        for &v in &best {
            hist.add(v)?;
        }
        let low_bin = hist.lowest_occupied().expect("non-empty group occupies a bin");
        let mean_steps =
            rs.iter().map(|r| r.best_step as f64).sum::<f64>() / rs.len() as f64;
        out.push(GroupSummary {
            layout,
            depth,
            optimizer,
            n_runs: rs.len(),
            median_best_test_mse: median(&best)?,
            lowest_bin_midpoint: hist.bin_midpoint(low_bin),
            lowest_bin_count: hist.counts[low_bin],
            mean_steps_to_best: mean_steps,
            below_range: hist.below_range,
            above_range: hist.above_range,
        });
    }
    Ok(out)
}
