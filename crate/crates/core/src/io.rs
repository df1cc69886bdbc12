//! File formats: dataset CSV, run-record JSONL with resume support, the run
//! manifest, and the CSV/JSON-sidecar outputs for cuts, grids, dropout
//! curves, band traces and aggregate minima.
//!
//! Floats are written with Rust's shortest-round-trip formatting, so every
//! file re-reads to bit-identical values and rewriting unchanged data
//! reproduces the file byte for byte.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::connectivity::{Ams, AmsCenter, NebParams, NebRun, PathMetrics};
use crate::error::{Error, Result};
use crate::harness::{config_hash, fnv1a, DataSplit, SweepConfig, TrainRecord};
use crate::landscape::{CutPoint, DropoutPoint, LandscapeGrid, PlaneBasis};

fn parse_field<T: std::str::FromStr>(raw: &str, path: &Path, line: usize) -> Result<T> {
    raw.trim().parse().map_err(|_| {
        Error::Parse(format!("{}:{line}: bad field {raw:?}", path.display()))
    })
}

fn split_columns<'a>(
    line: &'a str,
    n_cols: usize,
    path: &Path,
    lineno: usize,
) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != n_cols {
        return Err(Error::Parse(format!(
            "{}:{lineno}: expected {n_cols} columns, got {}",
            path.display(),
            cols.len()
        )));
    }
    Ok(cols)
}

/// Writes `x,y,split` rows in dataset order.
pub fn write_dataset_csv(path: &Path, split: &DataSplit) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,y,split")?;
    for ((x, y), &test) in split.xs().iter().zip(split.ys()).zip(split.is_test()) {
        writeln!(w, "{x},{y},{}", if test { "test" } else { "train" })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<DataSplit> {
    let reader = BufReader::new(File::open(path)?);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut is_test = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "x,y,split" {
                return Err(Error::Parse(format!(
                    "{}: expected header \"x,y,split\", got {line:?}",
                    path.display()
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols = split_columns(&line, 3, path, i + 1)?;
        xs.push(parse_field(cols[0], path, i + 1)?);
        ys.push(parse_field(cols[1], path, i + 1)?);
        is_test.push(match cols[2].trim() {
            "train" => false,
            "test" => true,
            other => {
                return Err(Error::Parse(format!(
                    "{}:{}: split must be \"train\" or \"test\", got {other:?}",
                    path.display(),
                    i + 1
                )))
            }
        });
    }
    DataSplit::from_flags(xs, ys, is_test)
}

/// Appends one record as a JSON line; creates the file if needed. Opening in
/// append mode per call keeps interrupted sweeps resumable at line
/// granularity.
pub fn append_record(path: &Path, record: &TrainRecord) -> Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<TrainRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| {
            Error::Parse(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Config hashes already present in a record file; a missing file is an
/// empty set, so fresh and resumed sweeps share one code path.
pub fn existing_hashes(path: &Path) -> Result<HashSet<u64>> {
    if !path.exists() {
        return Ok(HashSet::new());
    }
    Ok(read_records(path)?.iter().map(|r| config_hash(&r.config)).collect())
}

/// Identity of one sweep invocation, written to the output directory before
/// any record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Hash of the canonical sweep config; names the record file.
    pub experiment: String,
    pub config_path: String,
    pub out_dir: String,
    pub seed: u64,
    pub version: String,
}

impl RunManifest {
    pub fn new(config: &SweepConfig, config_path: &str, out_dir: &str) -> Self {
        let json = serde_json::to_string(config).expect("sweep config serializes");
        RunManifest {
            experiment: format!("{:016x}", fnv1a(json.as_bytes())),
            config_path: config_path.to_string(),
            out_dir: out_dir.to_string(),
            seed: config.base_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn manifest_path(&self, out_dir: &Path) -> PathBuf {
        out_dir.join(format!("manifest-{}.json", self.experiment))
    }

    pub fn records_path(&self, out_dir: &Path) -> PathBuf {
        out_dir.join(format!("records-{}.jsonl", self.experiment))
    }
}

pub fn write_manifest(manifest: &RunManifest, out_dir: &Path) -> Result<PathBuf> {
    let path = manifest.manifest_path(out_dir);
    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    std::fs::write(&path, json)?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let json = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&json)?)
}

/// Interpolation cut: `alpha,train_loss,test_loss`.
pub fn write_cut_csv(path: &Path, points: &[CutPoint]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "alpha,train_loss,test_loss")?;
    for p in points {
        writeln!(w, "{},{},{}", p.alpha, p.train_loss, p.test_loss)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cut_csv(path: &Path) -> Result<Vec<CutPoint>> {
    let reader = BufReader::new(File::open(path)?);
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols = split_columns(&line, 3, path, i + 1)?;
        points.push(CutPoint {
            alpha: parse_field(cols[0], path, i + 1)?,
            train_loss: parse_field(cols[1], path, i + 1)?,
            test_loss: parse_field(cols[2], path, i + 1)?,
        });
    }
    Ok(points)
}

/// Gate-dropout comparison curve: `alpha,loss_free,loss_clamped`.
pub fn write_dropout_csv(path: &Path, points: &[DropoutPoint]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "alpha,loss_free,loss_clamped")?;
    for p in points {
        writeln!(w, "{},{},{}", p.alpha, p.loss_free, p.loss_clamped)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dropout_csv(path: &Path) -> Result<Vec<DropoutPoint>> {
    let reader = BufReader::new(File::open(path)?);
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols = split_columns(&line, 3, path, i + 1)?;
        points.push(DropoutPoint {
            alpha: parse_field(cols[0], path, i + 1)?,
            loss_free: parse_field(cols[1], path, i + 1)?,
            loss_clamped: parse_field(cols[2], path, i + 1)?,
        });
    }
    Ok(points)
}

/// Companion to the grid CSV: the plane definition (which embeds the three
/// defining parameter vectors) and the orientation convention of the first
/// axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub basis: PlaneBasis,
    /// Always "theta_b_minus_theta_a": w1 points from the first minimum to
    /// the second.
    pub w1_direction: String,
    pub seed: u64,
}

impl GridSidecar {
    pub fn new(basis: PlaneBasis, seed: u64) -> Self {
        GridSidecar { basis, w1_direction: "theta_b_minus_theta_a".to_string(), seed }
    }
}

/// Plane scan as `alpha,beta,train_loss[,test_loss]` in row-major order
/// (alpha outer), with the sidecar written next to it as `<stem>.json`.
pub fn write_grid_csv(path: &Path, grid: &LandscapeGrid, seed: u64) -> Result<PathBuf> {
    let mut w = BufWriter::new(File::create(path)?);
    if grid.test_losses.is_some() {
        writeln!(w, "alpha,beta,train_loss,test_loss")?;
    } else {
        writeln!(w, "alpha,beta,train_loss")?;
    }
    for (ai, a) in grid.alphas.iter().enumerate() {
        for (bi, b) in grid.betas.iter().enumerate() {
            match grid.test_at(ai, bi) {
                Some(t) => writeln!(w, "{a},{b},{},{t}", grid.train_at(ai, bi))?,
                None => writeln!(w, "{a},{b},{}", grid.train_at(ai, bi))?,
            }
        }
    }
    w.flush()?;

    let sidecar_path = path.with_extension("json");
    let mut json =
        serde_json::to_string_pretty(&GridSidecar::new(grid.basis.clone(), seed))?;
    json.push('\n');
    std::fs::write(&sidecar_path, json)?;
    Ok(sidecar_path)
}

pub fn read_grid_sidecar(path: &Path) -> Result<GridSidecar> {
    let json = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&json)?)
}

/// Companion to the band trace CSV: the initial and best paths with their
/// settings and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NebSidecar {
    pub initial_pivots: Vec<Vec<f64>>,
    pub best_pivots: Vec<Vec<f64>>,
    pub best_step: usize,
    pub k: f64,
    pub lr: f64,
    pub profile: Option<String>,
    pub seed: u64,
    pub initial_train: PathMetrics,
    pub best_train: PathMetrics,
    pub initial_test: Option<PathMetrics>,
    pub best_test: Option<PathMetrics>,
}

/// Band trace as `step,pivot_index,loss_train[,loss_test]`, one row per
/// pivot per step (step 0 is the straight line), with the sidecar at
/// `<stem>.json`. `test_history` must match the train history's shape when
/// given.
pub fn write_neb_trace(
    path: &Path,
    run: &NebRun,
    params: &NebParams,
    profile: Option<&str>,
    seed: u64,
    test_history: Option<&[Vec<f64>]>,
) -> Result<PathBuf> {
    if let Some(test) = test_history {
        if test.len() != run.train_history.len() {
            return Err(Error::Shape { expected: run.train_history.len(), got: test.len() });
        }
        for (train_row, test_row) in run.train_history.iter().zip(test) {
            if test_row.len() != train_row.len() {
                return Err(Error::Shape { expected: train_row.len(), got: test_row.len() });
            }
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    if test_history.is_some() {
        writeln!(w, "step,pivot_index,loss_train,loss_test")?;
    } else {
        writeln!(w, "step,pivot_index,loss_train")?;
    }
    for (step, row) in run.train_history.iter().enumerate() {
        for (pivot, loss) in row.iter().enumerate() {
            match test_history {
                Some(test) => writeln!(w, "{step},{pivot},{loss},{}", test[step][pivot])?,
                None => writeln!(w, "{step},{pivot},{loss}")?,
            }
        }
    }
    w.flush()?;

    let sidecar = NebSidecar {
        initial_pivots: run.initial.pivots.clone(),
        best_pivots: run.best.pivots.clone(),
        best_step: run.best_step,
        k: params.k,
        lr: params.lr,
        profile: profile.map(str::to_string),
        seed,
        initial_train: run.initial_train.clone(),
        best_train: run.best_train.clone(),
        initial_test: run.initial_test.clone(),
        best_test: run.best_test.clone(),
    };
    let sidecar_path = path.with_extension("json");
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    std::fs::write(&sidecar_path, json)?;
    Ok(sidecar_path)
}

pub fn read_neb_sidecar(path: &Path) -> Result<NebSidecar> {
    let json = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&json)?)
}

/// Aggregate minima as a JSON array of `{center, test_mse, cluster_size}`.
pub fn write_ams_json(path: &Path, ams: &Ams) -> Result<()> {
    let mut json = serde_json::to_string_pretty(&ams.centers)?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_ams_json(path: &Path) -> Result<Vec<AmsCenter>> {
    let json = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&json)?)
}
