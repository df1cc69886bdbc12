//! `qcl` — train small quantum-circuit regression models and map their loss
//! landscapes: sweeps, summary statistics, minima aggregation, elastic-band
//! path searches, interpolation cuts, and gate-dropout curves.
//!
//! Outputs land in `--out-dir` (or `$QCL_OUT_DIR`, default `.`); every
//! command takes `--seed` and the seed is recorded in the produced file when
//! its format has a slot for it, and echoed on stdout always.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 I/O error,
//! 4 numerical failure.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qcl_core::ansatz::{build_ansatz, CircuitSpec, Layout};
use qcl_core::connectivity::{build_ams, neb_run, AmsParams, NebParams, NebProfile};
use qcl_core::gradloss::mse_loss;
use qcl_core::harness::{
    generate_dataset_with, split_dataset, summarize, run_sweep, DataConfig, DataSplit,
    SweepConfig,
};
use qcl_core::landscape::{
    cut_1d, cut_2d, default_range, dropout_curve, plane_basis,
};
use qcl_core::{io, Error};

#[derive(Parser)]
#[command(name = "qcl", version, about = "Quantum-circuit regression trainer and loss-landscape mapper")]
struct Cli {
    /// Directory for output files (relative --out paths resolve against it)
    #[arg(long, global = true, env = "QCL_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Worker threads for parallel sections; 0 means one per core
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the noisy-parabola dataset and write it as x,y,split CSV
    #[command(name = "gen-data")]
    GenData {
        /// Dataset noise seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Train/test assignment seed (defaults to --seed)
        #[arg(long)]
        split_seed: Option<u64>,
        #[arg(long, default_value_t = 500)]
        n_points: usize,
        /// Uniform noise amplitude added to x^2
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Train fraction
        #[arg(long, default_value_t = 0.8)]
        ratio: f64,
        #[arg(long, default_value = "dataset.csv")]
        out: PathBuf,
    },

    /// Run a training sweep from a JSON config, appending JSONL records
    Sweep {
        /// Sweep config file; missing fields take the built-in defaults,
        /// no file at all means the full default grid
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print the run count and the resolved config, write nothing
        #[arg(long)]
        dry_run: bool,
    },

    /// Summarize a records file per (layout, depth, optimizer) group
    Report {
        #[arg(long)]
        records: PathBuf,
        /// Also write the table as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Cluster the lowest-loss-bin minima of a records file into an
    /// aggregate minima set (JSON array of centers)
    Ams {
        #[arg(long)]
        records: PathBuf,
        /// Flat-kernel bandwidth; estimated from the data when omitted
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Wrap parameters into [0, 2*pi) before clustering
        #[arg(long)]
        wrap: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "ams.json")]
        out: PathBuf,
    },

    /// Elastic-band path search between two minima; writes a trace CSV plus
    /// a JSON sidecar with pivots, settings, and path metrics
    Neb {
        /// Aggregate-minima JSON to draw endpoints from
        #[arg(long, requires = "pair")]
        ams: Option<PathBuf>,
        /// Endpoint indices into the --ams file, e.g. 0,3
        #[arg(long, value_parser = parse_index_pair)]
        pair: Option<(usize, usize)>,
        /// First endpoint as a JSON array or @file (alternative to --ams)
        #[arg(long, conflicts_with = "ams")]
        theta_a: Option<String>,
        /// Second endpoint as a JSON array or @file
        #[arg(long, conflicts_with = "ams", requires = "theta_a")]
        theta_b: Option<String>,
        /// Band size preset: localized, medium, or long
        #[arg(long, default_value = "localized")]
        profile: NebProfile,
        /// Override the profile's pivot count
        #[arg(long)]
        pivots: Option<usize>,
        /// Override the profile's update-step count
        #[arg(long)]
        steps: Option<usize>,
        /// Spring constant
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        /// Mini-batch size for the stochastic pivot updates
        #[arg(long, default_value_t = 32)]
        batch: usize,
        /// Also trace per-step test losses into the CSV
        #[arg(long)]
        trace_test: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        circuit: CircuitArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "neb.csv")]
        out: PathBuf,
    },

    /// Loss along the straight segment between two parameter vectors
    #[command(name = "cut1d")]
    Cut1d {
        /// Endpoint as a JSON array or @file
        #[arg(long)]
        theta_a: String,
        #[arg(long)]
        theta_b: String,
        /// Sample count along the segment
        #[arg(long, default_value_t = 101)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        circuit: CircuitArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "cut1d.csv")]
        out: PathBuf,
    },

    /// Loss on the plane through three parameter vectors (grid CSV plus a
    /// JSON sidecar holding the plane frame)
    #[command(name = "cut2d")]
    Cut2d {
        #[arg(long)]
        theta_a: String,
        #[arg(long)]
        theta_b: String,
        /// Third point defining the plane
        #[arg(long)]
        theta_c: String,
        /// Grid resolution per axis
        #[arg(long, default_value_t = 41)]
        grid: usize,
        /// Alpha (w1) range as lo,hi; default pads the defining points
        #[arg(long, value_parser = parse_range)]
        alpha_range: Option<(f64, f64)>,
        /// Beta (w2) range as lo,hi
        #[arg(long, value_parser = parse_range)]
        beta_range: Option<(f64, f64)>,
        /// Also evaluate test-set loss per grid point
        #[arg(long)]
        with_test: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        circuit: CircuitArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "grid.csv")]
        out: PathBuf,
    },

    /// Compare the segment loss with the same segment under clamped
    /// (zeroed) parameter indices
    Dropout {
        #[arg(long)]
        theta_a: String,
        #[arg(long)]
        theta_b: String,
        /// 0-based parameter slots to clamp, e.g. 2,6 (the last slot is the
        /// trailing rotation)
        #[arg(long, value_parser = parse_indices, value_delimiter = ',')]
        indices: Vec<usize>,
        #[arg(long, default_value_t = 101)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        circuit: CircuitArgs,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "dropout.csv")]
        out: PathBuf,
    },
}

/// Circuit selection shared by the landscape commands.
#[derive(Args)]
struct CircuitArgs {
    /// Entangler layout: chain or cycle
    #[arg(long, default_value = "cycle")]
    layout: Layout,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    #[arg(long, default_value_t = 3)]
    n_qubits: usize,
}

impl CircuitArgs {
    fn to_spec(&self) -> Result<CircuitSpec, Error> {
        build_ansatz(self.layout, self.depth, self.n_qubits)
    }
}

/// Dataset selection shared by the landscape commands; mirrors the sweep
/// config's data block.
#[derive(Args)]
struct DataArgs {
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
    #[arg(long, default_value_t = 500)]
    data_points: usize,
    #[arg(long, default_value_t = 0.1)]
    data_noise: f64,
    #[arg(long, default_value_t = 0.8)]
    data_ratio: f64,
    /// Train/test assignment seed (defaults to --data-seed)
    #[arg(long)]
    data_split_seed: Option<u64>,
}

impl DataArgs {
    fn realize(&self) -> Result<DataSplit, Error> {
        DataConfig {
            seed: self.data_seed,
            n_points: self.data_points,
            noise: self.data_noise,
            train_ratio: self.data_ratio,
            split_seed: self.data_split_seed.unwrap_or(self.data_seed),
        }
        .realize()
    }
}

fn parse_index_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two indices as i,j")?;
    let a = a.trim().parse().map_err(|e| format!("bad index {a:?}: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("bad index {b:?}: {e}"))?;
    Ok((a, b))
}

fn parse_indices(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|e| format!("bad index {s:?}: {e}"))
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected a range as lo,hi")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad bound {lo:?}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad bound {hi:?}: {e}"))?;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(format!("range [{lo}, {hi}] is empty or non-finite"));
    }
    Ok((lo, hi))
}

/// A parameter vector given inline as a JSON array, or as `@path` naming a
/// file that contains one.
fn parse_theta(arg: &str) -> Result<Vec<f64>, Error> {
    let json = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)?,
        None => arg.to_string(),
    };
    let theta: Vec<f64> = serde_json::from_str(&json)
        .map_err(|e| Error::Parse(format!("parameter vector: {e}")))?;
    if theta.is_empty() {
        return Err(Error::Parse("parameter vector is empty".into()));
    }
    Ok(theta)
}

fn resolve(out_dir: &Path, out: &Path) -> PathBuf {
    if out.is_absolute() {
        out.to_path_buf()
    } else {
        out_dir.join(out)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::Numerical(_) | Error::DegeneratePlane(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // Sizes the global worker pool once, before any parallel section.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let out_dir = cli.out_dir;
    match cli.command {
        Command::GenData { seed, split_seed, n_points, noise, ratio, out } => {
            let dataset = generate_dataset_with(seed, n_points, noise)?;
            let split = split_dataset(&dataset, ratio, split_seed.unwrap_or(seed))?;
            let path = resolve(&out_dir, &out);
            io::write_dataset_csv(&path, &split)?;
            println!(
                "wrote {} ({} train / {} test, seed {seed})",
                path.display(),
                split.n_train(),
                split.n_test()
            );
            Ok(())
        }

        Command::Sweep { config, dry_run } => cmd_sweep(&out_dir, config.as_deref(), dry_run),

        Command::Report { records, out } => {
            let recs = io::read_records(&records)?;
            let groups = summarize(&recs)?;
            println!(
                "{:<6} {:>5} {:>9} {:>6} {:>12} {:>12} {:>8} {:>11}",
                "layout", "depth", "optimizer", "n", "median_mse", "low_bin_mid", "low_bin", "steps_best"
            );
            for g in &groups {
                println!(
                    "{:<6} {:>5} {:>9} {:>6} {:>12.6} {:>12.6} {:>8} {:>11.1}",
                    g.layout.to_string(),
                    g.depth,
                    g.optimizer,
                    g.n_runs,
                    g.median_best_test_mse,
                    g.lowest_bin_midpoint,
                    g.lowest_bin_count,
                    g.mean_steps_to_best
                );
            }
            if let Some(out) = out {
                let path = resolve(&out_dir, &out);
                write_report_csv(&path, &groups)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }

        Command::Ams { records, bandwidth, wrap, seed, out } => {
            let recs = io::read_records(&records)?;
            let params = AmsParams { bandwidth, wrap_angles: wrap, ..AmsParams::default() };
            let ams = build_ams(&recs, &params)?;
            let path = resolve(&out_dir, &out);
            io::write_ams_json(&path, &ams)?;
            println!(
                "wrote {} ({} lowest-bin minima -> {} clusters -> {} surviving centers, seed {seed})",
                path.display(),
                ams.n_points,
                ams.n_centers,
                ams.centers.len()
            );
            Ok(())
        }

        Command::Neb {
            ams,
            pair,
            theta_a,
            theta_b,
            profile,
            pivots,
            steps,
            k,
            lr,
            batch,
            trace_test,
            seed,
            circuit,
            data,
            out,
        } => {
            let (a, b) = match (&ams, pair, &theta_a, &theta_b) {
                (Some(ams_path), Some((i, j)), _, _) => {
                    let centers = io::read_ams_json(ams_path)?;
                    let pick = |idx: usize| -> Result<Vec<f64>, Error> {
                        centers
                            .get(idx)
                            .map(|c| c.center.clone())
                            .ok_or_else(|| Error::Config(format!(
                                "pair index {idx} out of range for {} centers",
                                centers.len()
                            )))
                    };
                    (pick(i)?, pick(j)?)
                }
                (None, _, Some(ta), Some(tb)) => (parse_theta(ta)?, parse_theta(tb)?),
                _ => {
                    return Err(Error::Config(
                        "endpoints required: either --ams with --pair, or --theta-a with --theta-b"
                            .into(),
                    ))
                }
            };
            let spec = circuit.to_spec_checked(&a)?;
            let split = data.realize()?;
            let mut params = NebParams::from_profile(profile);
            params.k = k;
            params.lr = lr;
            params.batch_size = batch;
            if let Some(p) = pivots {
                params.n_pivots = p;
            }
            if let Some(s) = steps {
                params.n_steps = s;
            }
            let run = neb_run(&spec, &a, &b, &params, &split, seed)?;
            let test_history = if trace_test {
                let rows: Result<Vec<Vec<f64>>, Error> = run
                    .path_history
                    .iter()
                    .map(|p| {
                        p.pivots
                            .iter()
                            .map(|t| mse_loss(&spec, t, split.test_batch()))
                            .collect()
                    })
                    .collect();
                Some(rows?)
            } else {
                None
            };
            let path = resolve(&out_dir, &out);
            let sidecar = io::write_neb_trace(
                &path,
                &run,
                &params,
                Some(profile_name(profile)),
                seed,
                test_history.as_deref(),
            )?;
            println!(
                "wrote {} and {} (best step {}, max train loss {:.6} -> {:.6}, seed {seed})",
                path.display(),
                sidecar.display(),
                run.best_step,
                run.initial_train.max_loss,
                run.best_train.max_loss
            );
            Ok(())
        }

        Command::Cut1d { theta_a, theta_b, n, seed, circuit, data, out } => {
            let a = parse_theta(&theta_a)?;
            let b = parse_theta(&theta_b)?;
            let spec = circuit.to_spec_checked(&a)?;
            let split = data.realize()?;
            let points = cut_1d(&spec, &a, &b, n, &split)?;
            let path = resolve(&out_dir, &out);
            io::write_cut_csv(&path, &points)?;
            println!("wrote {} ({} samples, seed {seed})", path.display(), points.len());
            Ok(())
        }

        Command::Cut2d {
            theta_a,
            theta_b,
            theta_c,
            grid,
            alpha_range,
            beta_range,
            with_test,
            seed,
            circuit,
            data,
            out,
        } => {
            let a = parse_theta(&theta_a)?;
            let b = parse_theta(&theta_b)?;
            let c = parse_theta(&theta_c)?;
            let spec = circuit.to_spec_checked(&a)?;
            let split = data.realize()?;
            let basis = plane_basis(&a, &b, &c)?;
            let alpha = alpha_range.unwrap_or_else(|| default_range(basis.scale1));
            let beta = beta_range.unwrap_or_else(|| default_range(basis.scale2));
            let grid_data = cut_2d(&spec, &basis, alpha, beta, (grid, grid), &split, with_test)?;
            let path = resolve(&out_dir, &out);
            let sidecar = io::write_grid_csv(&path, &grid_data, seed)?;
            println!(
                "wrote {} and {} ({grid}x{grid} grid, seed {seed})",
                path.display(),
                sidecar.display()
            );
            Ok(())
        }

        Command::Dropout { theta_a, theta_b, indices, n, seed, circuit, data, out } => {
            let a = parse_theta(&theta_a)?;
            let b = parse_theta(&theta_b)?;
            let spec = circuit.to_spec_checked(&a)?;
            let split = data.realize()?;
            let points = dropout_curve(&spec, &a, &b, &indices, n, &split)?;
            let path = resolve(&out_dir, &out);
            io::write_dropout_csv(&path, &points)?;
            println!(
                "wrote {} (clamped slots {:?}, {} samples, seed {seed})",
                path.display(),
                indices,
                points.len()
            );
            Ok(())
        }
    }
}

impl CircuitArgs {
    /// Builds the circuit and checks it against a supplied parameter vector
    /// early so shape errors name the flag mismatch, not a later call site.
    fn to_spec_checked(&self, theta: &[f64]) -> Result<CircuitSpec, Error> {
        let spec = self.to_spec()?;
        if theta.len() != spec.param_count() {
            return Err(Error::Config(format!(
                "parameter vector has {} entries but {} {}-qubit depth-{} needs {}",
                theta.len(),
                self.layout,
                self.n_qubits,
                self.depth,
                spec.param_count()
            )));
        }
        Ok(spec)
    }
}

fn profile_name(p: NebProfile) -> &'static str {
    match p {
        NebProfile::Localized => "localized",
        NebProfile::Medium => "medium",
        NebProfile::Long => "long",
    }
}

fn cmd_sweep(out_dir: &Path, config_path: Option<&Path>, dry_run: bool) -> Result<(), Error> {
    let (config, config_name) = match config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let config: SweepConfig = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
            (config, p.display().to_string())
        }
        None => (SweepConfig::default(), "<defaults>".to_string()),
    };
    config.validate()?;

    let manifest = io::RunManifest::new(&config, &config_name, &out_dir.display().to_string());
    let records_path = manifest.records_path(out_dir);
    let existing: HashSet<u64> = if records_path.exists() {
        io::existing_hashes(&records_path)?
    } else {
        HashSet::new()
    };

    let total = config.enumerate_runs()?.len();
    if dry_run {
        println!(
            "would run {} of {total} configurations (experiment {}, {} already recorded)",
            total - existing.len().min(total),
            manifest.experiment,
            existing.len()
        );
        println!("{}", serde_json::to_string_pretty(&config)?);
        return Ok(());
    }

    let manifest_path = io::write_manifest(&manifest, out_dir)?;
    let stats = run_sweep(&config, &existing, |record| io::append_record(&records_path, record))?;
    println!(
        "wrote {} and {} ({} completed, {} skipped, {} failed of {} total)",
        manifest_path.display(),
        records_path.display(),
        stats.completed,
        stats.skipped,
        stats.failed.len(),
        stats.total
    );
    for (hash, err) in &stats.failed {
        eprintln!("run {hash:016x} failed: {err}");
    }
    Ok(())
}

fn write_report_csv(path: &Path, groups: &[qcl_core::harness::GroupSummary]) -> Result<(), Error> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        w,
        "layout,depth,optimizer,n_runs,median_best_test_mse,lowest_bin_midpoint,lowest_bin_count,mean_steps_to_best,below_range,above_range"
    )?;
    for g in groups {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            g.layout,
            g.depth,
            g.optimizer,
            g.n_runs,
            g.median_best_test_mse,
            g.lowest_bin_midpoint,
            g.lowest_bin_count,
            g.mean_steps_to_best,
            g.below_range,
            g.above_range
        )?;
    }
    w.flush()?;
    Ok(())
}
