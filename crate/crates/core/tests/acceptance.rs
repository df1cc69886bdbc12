//! End-to-end acceptance suite. Each test exercises one release criterion at
//! its stated tolerance and prints a single `criterion N (name): PASS/FAIL`
//! line. Criteria 5, 6 and 10 share one desk-scale training sweep
//! (cycle layout, depth 1, all three optimizers, 36 runs each) built lazily
//! behind a `OnceLock`.

mod common;

use std::collections::HashSet;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use qcl_core::ansatz::{build_ansatz, CircuitSpec, Layout};
use qcl_core::connectivity::{
    ams_from_points, build_ams, classify_connected, estimate_bandwidth, mean_shift, neb_run,
    neb_run_surface, AmsParams, NebParams, NebProfile,
};
use qcl_core::gradloss::{mse_loss, predict_gradient, predict_gradient_fd, Batch};
use qcl_core::harness::{
    config_hash, generate_dataset, median, run_sweep, split_dataset, DataSplit, Histogram,
    SweepConfig, TrainRecord,
};
use qcl_core::landscape::{cut_1d, cut_2d, dropout_curve, plane_basis};
use qcl_core::optim::{
    fubini_metric_blockdiag, fubini_metric_exact, qng_step, sgd_step, MetricMatrix,
    OptimizerConfig,
};
use qcl_core::simulator::GateOp;

use common::{dijkstra_minimax, oracle_forward, DoubleWell};

fn verdict(n: usize, name: &str, pass: bool) -> bool {
    println!("criterion {n} ({name}): {}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn random_circuit(rng: &mut ChaCha8Rng, n_qubits: usize) -> (Layout, usize, CircuitSpec) {
    let layout = if rng.random_range(0..2) == 0 { Layout::Chain } else { Layout::Cycle };
    let depth = rng.random_range(1..=4);
    (layout, depth, build_ansatz(layout, depth, n_qubits).unwrap())
}

fn random_theta(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
}

#[test]
fn criterion_1_parameter_shift_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n_qubits = rng.random_range(1..=4);
        let (_, _, spec) = random_circuit(&mut rng, n_qubits);
        let x = rng.random_range(-1.0..=1.0);
        let theta = random_theta(&mut rng, spec.param_count());
        let shift = predict_gradient(&spec, &theta, x).unwrap();
        let fd = predict_gradient_fd(&spec, &theta, x, 1e-5).unwrap();
        for (a, b) in shift.iter().zip(&fd) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst < 1e-6 && elapsed < 60.0;
    assert!(
        verdict(1, "parameter-shift gradients vs finite differences", pass),
        "worst deviation {worst:.3e}, elapsed {elapsed:.1}s"
    );
}

#[test]
fn criterion_2_forward_matches_dense_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (layout, depth, spec) = random_circuit(&mut rng, 3);
        let x = rng.random_range(-1.0..=1.0);
        let theta = random_theta(&mut rng, spec.param_count());
        let got = spec.forward(x, &theta).unwrap();
        let want = oracle_forward(layout, depth, 3, x, &theta);
        worst = worst.max((got - want).abs());
    }
    let pass = worst < 1e-10;
    assert!(
        verdict(2, "statevector forward vs dense matrix oracle", pass),
        "worst deviation {worst:.3e}"
    );
}

/// Test-set MSE of a fixed predictor, averaged over 20 dataset seeds.
fn mean_predictor_mse(predict: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for seed in 1..=20u64 {
        let ds = generate_dataset(seed);
        let split = split_dataset(&ds, 0.8, seed).unwrap();
        let mse = split
            .test_xs()
            .iter()
            .zip(split.test_ys())
            .map(|(x, y)| {
                let e = y - predict(*x);
                e * e
            })
            .sum::<f64>()
            / split.n_test() as f64;
        total += mse;
    }
    total / 20.0
}

#[test]
fn criterion_3_exact_parabola_predictor_hits_noise_floor() {
    let mse = mean_predictor_mse(|x| x * x);
    let pass = (0.0025..=0.0042).contains(&mse);
    assert!(
        verdict(3, "noise floor of the exact-parabola predictor", pass),
        "mean test MSE {mse:.5}"
    );
}

#[test]
fn criterion_4_constant_predictor_upper_bound() {
    let mse = mean_predictor_mse(|_| -1.0);
    let pass = (1.70..=1.95).contains(&mse);
    assert!(
        verdict(4, "constant minus-one predictor bound", pass),
        "mean test MSE {mse:.4}"
    );
}

struct Fixture {
    records: Vec<TrainRecord>,
    split: DataSplit,
    spec: CircuitSpec,
    sweep_secs: f64,
}

static FIXTURE: OnceLock<Fixture> = OnceLock::new();

/// Cycle layout, depth 1, three optimizers x 36 runs (6 inits x 6 batch
/// sizes) on the standard 500-point dataset.
fn fixture() -> &'static Fixture {
    FIXTURE.get_or_init(|| {
        let config = SweepConfig {
            layouts: vec![Layout::Cycle],
            depths: vec![1],
            base_seed: 7,
            ..SweepConfig::default()
        };
        let start = Instant::now();
        let mut records = Vec::new();
        let stats = run_sweep(&config, &HashSet::new(), |r| {
            records.push(r.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(stats.completed, 108, "failures: {:?}", stats.failed);
        let split = config.data.realize().unwrap();
        let spec = build_ansatz(Layout::Cycle, 1, config.n_qubits).unwrap();
        Fixture { records, split, spec, sweep_secs: start.elapsed().as_secs_f64() }
    })
}

fn runs_for<'a>(records: &'a [TrainRecord], kind: &str) -> Vec<&'a TrainRecord> {
    records.iter().filter(|r| r.config.optimizer.kind_name() == kind).collect()
}

fn bin0_count(runs: &[&TrainRecord]) -> u64 {
    let mut hist = Histogram::standard();
    for r in runs {
        hist.add(r.best_test_mse).unwrap();
    }
    hist.counts[0]
}

#[test]
fn criterion_5_desk_scale_training_statistics() {
    let fx = fixture();
    let sgd = runs_for(&fx.records, "sgd");
    let adam = runs_for(&fx.records, "adam");
    let qng = runs_for(&fx.records, "qng");
    assert_eq!((sgd.len(), adam.len(), qng.len()), (36, 36, 36));

    let med = |runs: &[&TrainRecord]| {
        median(&runs.iter().map(|r| r.best_test_mse).collect::<Vec<_>>()).unwrap()
    };
    let (med_adam, med_qng) = (med(&adam), med(&qng));
    let (bin_sgd, bin_adam) = (bin0_count(&sgd), bin0_count(&adam));

    let pass = med_adam <= 0.02
        && med_qng <= 0.02
        && bin_adam >= 18
        && bin_sgd < bin_adam
        && fx.sweep_secs < 600.0;
    assert!(
        verdict(5, "desk-scale training statistics", pass),
        "adam median {med_adam:.4}, qng median {med_qng:.4}, \
         lowest-bin occupancy sgd {bin_sgd} vs adam {bin_adam}, sweep {:.0}s",
        fx.sweep_secs
    );
}

#[test]
fn criterion_6_band_search_properties() {
    // (b) known detour: the straight line over the double-well crests at
    //     ~1.0023 while the lower ring arc stays near zero; the grid oracle
    //     certifies the detour exists before the band is asked to find it.
    let mut dw = DoubleWell;
    // Analytic gradient sanity against central differences.
    for (u, v) in [(0.3, -0.4), (-0.9, 0.2), (0.1, 0.9)] {
        let g = DoubleWell::grad(u, v);
        let h = 1e-6;
        let fd_u = (DoubleWell::loss(u + h, v) - DoubleWell::loss(u - h, v)) / (2.0 * h);
        let fd_v = (DoubleWell::loss(u, v + h) - DoubleWell::loss(u, v - h)) / (2.0 * h);
        assert!((g[0] - fd_u).abs() < 1e-6 && (g[1] - fd_v).abs() < 1e-6);
    }

    let straight_probe: f64 = (0..=100)
        .map(|i| {
            let u = -1.0 + 2.0 * i as f64 / 100.0;
            DoubleWell::loss(u, 0.0)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let oracle_barrier = dijkstra_minimax(161, -1.6, 1.6, DoubleWell::A, DoubleWell::B);
    assert!(
        oracle_barrier < 0.01 * straight_probe,
        "landscape lost its detour: oracle {oracle_barrier:.3e} vs straight {straight_probe:.4}"
    );

    let params = NebParams {
        n_pivots: 12,
        n_steps: 300,
        ..NebParams::from_profile(NebProfile::Long)
    };
    let toy = neb_run_surface(&mut dw, &DoubleWell::A, &DoubleWell::B, &params).unwrap();
    let detour_found = toy.best_train.max_loss < 0.5 * toy.initial_train.max_loss;

    // (a) endpoints stay bit-identical through every recorded step.
    let mut endpoints_fixed = toy.path_history.iter().all(|p| {
        let (a, b) = p.endpoints();
        a == &DoubleWell::A[..] && b == &DoubleWell::B[..]
    });
    // (d) the straight line competes in the AUC selection.
    let mut auc_ok = toy.best_train.auc <= toy.initial_train.auc;

    // (c) a minima pair from the desk-scale sweep: the long profile must
    //     halve the straight-line barrier for at least one aggregate pair.
    let fx = fixture();
    // An explicit bandwidth: the quantile estimate over 100+ tightly packed
    // minima over-smooths the torus into a single mode, while 2.0 resolves
    // the distinct basins (the funnel lands close to the reference shape of
    // ~16 clusters from ~244 low-bin runs).
    let ams_params = AmsParams { bandwidth: Some(2.0), ..AmsParams::default() };
    let ams = build_ams(&fx.records, &ams_params).unwrap();
    assert!(ams.centers.len() >= 2, "only {} aggregate centers", ams.centers.len());

    // Rank pairs by their straight-line barrier (cheap 12-point probe) and
    // try the worst three.
    let mut pairs = Vec::new();
    for i in 0..ams.centers.len() {
        for j in i + 1..ams.centers.len() {
            let a = &ams.centers[i].center;
            let b = &ams.centers[j].center;
            let probe = qcl_core::landscape::linspace(0.0, 1.0, 12)
                .unwrap()
                .into_iter()
                .map(|alpha| {
                    let theta = qcl_core::landscape::interpolate(a, b, alpha).unwrap();
                    mse_loss(&fx.spec, &theta, fx.split.train_batch()).unwrap()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            pairs.push((probe, i, j));
        }
    }
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0));

    let long = NebParams::from_profile(NebProfile::Long);
    let mut best_ratio: f64 = 0.0;
    for &(_, i, j) in pairs.iter().take(3) {
        let run = neb_run(
            &fx.spec,
            &ams.centers[i].center,
            &ams.centers[j].center,
            &long,
            &fx.split,
            11,
        )
        .unwrap();
        endpoints_fixed &= run.path_history.iter().all(|p| {
            let (a, b) = p.endpoints();
            a == ams.centers[i].center.as_slice() && b == ams.centers[j].center.as_slice()
        });
        auc_ok &= run.best_train.auc <= run.initial_train.auc;
        best_ratio = best_ratio.max(run.initial_train.max_loss / run.best_train.max_loss);
        if classify_connected(run.best_test.as_ref().unwrap(), 0.02) {
            // Informational: the default threshold on the test-set metrics.
            println!("  pair ({i},{j}) classifies connected after the search");
        }
    }
    let pair_halved = best_ratio >= 2.0;

    let pass = detour_found && endpoints_fixed && auc_ok && pair_halved;
    assert!(
        verdict(6, "elastic-band path search properties", pass),
        "detour {} (best {:.4} vs straight {:.4}), endpoints fixed {}, \
         auc ordered {}, best pair ratio {best_ratio:.2}",
        detour_found,
        toy.best_train.max_loss,
        toy.initial_train.max_loss,
        endpoints_fixed,
        auc_ok
    );
}

fn gaussian_blob(rng: &mut ChaCha8Rng, center: &[f64], n: usize, sigma: f64) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, sigma).unwrap();
    (0..n)
        .map(|_| center.iter().map(|c| c + normal.sample(rng)).collect())
        .collect()
}

#[test]
fn criterion_7_mean_shift_recovers_synthetic_blobs() {
    let dim = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut truth2: Vec<Vec<f64>> = vec![vec![0.0; dim], vec![0.0; dim]];
    truth2[1][0] = 5.0;
    let mut truth3 = truth2.clone();
    truth3.push(vec![0.0; dim]);
    truth3[2][1] = 5.0;

    let mut pass = true;
    for truth in [&truth2, &truth3] {
        let per = 500 / truth.len();
        let mut points = Vec::new();
        for (i, c) in truth.iter().enumerate() {
            let n = if i == truth.len() - 1 { 500 - per * (truth.len() - 1) } else { per };
            points.extend(gaussian_blob(&mut rng, c, n, 0.1));
        }
        let bw = estimate_bandwidth(&points, 0.3).unwrap();
        let (centers, labels) = mean_shift(&points, bw).unwrap();
        pass &= centers.len() == truth.len();
        for t in truth {
            let nearest = centers
                .iter()
                .map(|c| c.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
            pass &= nearest < 0.05;
        }
        pass &= labels.len() == points.len();
    }

    // Aggregate-minima funnel shape on synthetic points: selected points >=
    // centers >= surviving centers.
    let mut points = gaussian_blob(&mut rng, &truth2[0], 60, 0.1);
    points.extend(gaussian_blob(&mut rng, &truth2[1], 40, 0.1));
    let values: Vec<f64> = (0..100).map(|i| 0.008 + 0.00001 * i as f64).collect();
    let ams = ams_from_points(
        &points,
        &values,
        |c| Ok(if c[0] < 1.0 { 0.008 } else { 0.15 }),
        &AmsParams::default(),
    )
    .unwrap();
    pass &= ams.n_points == 100;
    pass &= ams.n_points >= ams.n_centers && ams.n_centers >= ams.centers.len();
    pass &= ams.centers.len() == 1;

    assert!(verdict(7, "mean-shift blob recovery and funnel shape", pass));
}

#[test]
fn criterion_8_plane_basis_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let dim = 7;
    let mut pass = true;
    for _ in 0..100 {
        let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let basis = match plane_basis(&a, &b, &c) {
            Ok(basis) => basis,
            Err(_) => continue, // degenerate draw; vanishing probability
        };
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
        pass &= (dot(&basis.w1, &basis.w1) - 1.0).abs() < 1e-10;
        pass &= (dot(&basis.w2, &basis.w2) - 1.0).abs() < 1e-10;
        pass &= dot(&basis.w1, &basis.w2).abs() < 1e-10;
        // Manual reconstruction of both defining minima, bypassing the
        // exact-coordinate snap.
        let recon_b: Vec<f64> = (0..dim)
            .map(|d| basis.origin[d] + basis.scale1 * basis.w1[d])
            .collect();
        let recon_c: Vec<f64> = (0..dim)
            .map(|d| basis.origin[d] + basis.theta_c_w1 * basis.w1[d] + basis.scale2 * basis.w2[d])
            .collect();
        let err_b = recon_b.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let err_c = recon_c.iter().zip(&c).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        pass &= err_b < 1e-9 && err_c < 1e-9;
    }

    // Grid corners reproduce the defining minima's losses bit for bit.
    let spec = build_ansatz(Layout::Cycle, 1, 3).unwrap();
    let split = qcl_core::harness::DataConfig::default().realize().unwrap();
    let a = random_theta(&mut rng, 4);
    let b = random_theta(&mut rng, 4);
    let c = random_theta(&mut rng, 4);
    let basis = plane_basis(&a, &b, &c).unwrap();
    let grid = cut_2d(
        &spec,
        &basis,
        (0.0, basis.scale1),
        (0.0, basis.scale2),
        (3, 3),
        &split,
        false,
    )
    .unwrap();
    let loss_a = mse_loss(&spec, &a, split.train_batch()).unwrap();
    let loss_b = mse_loss(&spec, &b, split.train_batch()).unwrap();
    pass &= grid.train_at(0, 0).to_bits() == loss_a.to_bits();
    pass &= grid.train_at(2, 0).to_bits() == loss_b.to_bits();

    assert!(verdict(8, "interpolation plane geometry", pass));
}

#[test]
fn criterion_9_natural_gradient_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut pass = true;

    // Identity metric reduces the natural-gradient step to plain descent,
    // bit for bit.
    let mut identity_ok = true;
    for _ in 0..50 {
        let p = rng.random_range(1..=9);
        let theta = random_theta(&mut rng, p);
        let grad: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lr = rng.random_range(0.001..0.2);
        let qng = qng_step(&theta, &grad, &MetricMatrix::identity(p).unwrap(), lr, 0.0).unwrap();
        let sgd = sgd_step(&theta, &grad, lr).unwrap();
        identity_ok &= qng.iter().zip(&sgd).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    pass &= identity_ok;

    // Layer blocks of the batched approximation equal the exact metric on
    // single-block circuits (the unitary after a layer cancels inside its
    // block), per input sample.
    let mut worst: f64 = 0.0;
    for layout in [Layout::Chain, Layout::Cycle] {
        let spec = build_ansatz(layout, 1, 3).unwrap();
        for _ in 0..10 {
            let theta = random_theta(&mut rng, spec.param_count());
            let x = rng.random_range(-1.0..=1.0);
            let exact = fubini_metric_exact(&spec, x, &theta).unwrap();
            let approx = fubini_metric_blockdiag(&spec, &[x], &theta).unwrap();
            for layer in spec.param_layers() {
                let slots: Vec<usize> = layer.gates.iter().map(|&(slot, _, _)| slot).collect();
                for &i in &slots {
                    for &j in &slots {
                        worst = worst.max((approx.get(i, j) - exact.get(i, j)).abs());
                    }
                }
            }
        }
    }
    let blocks_ok = worst < 1e-10;
    pass &= blocks_ok;

    // A lone rotation gate on a basis state has the constant metric 1/4,
    // independent of the angle. (x = 0 and x = 1 encode to basis states up
    // to phase; between them the encoded state carries a Y component and
    // the metric legitimately dips below 1/4.)
    let mut quarter_ok = true;
    let single = CircuitSpec::custom(1, 1, 0, vec![GateOp::ry(0, 0)]).unwrap();
    for x in [0.0, 1.0] {
        for t in [-2.0, 0.0, 0.7, 2.9, std::f64::consts::PI, 5.5] {
            let m = fubini_metric_exact(&single, x, &[t]).unwrap();
            quarter_ok &= (m.get(0, 0) - 0.25).abs() < 1e-10;
        }
    }
    pass &= quarter_ok;

    assert!(
        verdict(9, "natural-gradient metric consistency", pass),
        "identity step {identity_ok}, worst block deviation {worst:.3e}, quarter {quarter_ok}"
    );
}

#[test]
fn criterion_10_dropout_clamping_contract() {
    let fx = fixture();
    let spec = &fx.spec;
    let split = &fx.split;

    // Low-loss minima from the sweep, nearest pairs first: candidates for
    // sharing a ravine.
    let mut hist = Histogram::standard();
    for r in &fx.records {
        hist.add(r.best_test_mse).unwrap();
    }
    let low_bin = hist.lowest_occupied().unwrap();
    let minima: Vec<&TrainRecord> = fx
        .records
        .iter()
        .filter(|r| hist.bin_index(r.best_test_mse) == low_bin)
        .collect();
    assert!(minima.len() >= 2, "sweep produced too few low-loss minima");

    let dist = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let mut pairs = Vec::new();
    for i in 0..minima.len() {
        for j in i + 1..minima.len() {
            let d = dist(&minima[i].theta_final, &minima[j].theta_final);
            if d > 1e-6 {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));

    // Empty-index dropout is a bit-identical no-op equal to the plain cut.
    let (_, i0, j0) = pairs[0];
    let a = &minima[i0].theta_final;
    let b = &minima[j0].theta_final;
    let noop = dropout_curve(spec, a, b, &[], 25, split).unwrap();
    let plain = cut_1d(spec, a, b, 25, split).unwrap();
    let mut pass = noop.iter().zip(&plain).all(|(d, c)| {
        d.loss_free.to_bits() == d.loss_clamped.to_bits()
            && d.loss_free.to_bits() == c.train_loss.to_bits()
    });

    // Ravine alignment: among close low-loss pairs there is a single
    // parameter whose clamping barely moves the segment's peak loss.
    let mut best_delta = f64::INFINITY;
    'search: for &(_, i, j) in pairs.iter().take(5) {
        let a = &minima[i].theta_final;
        let b = &minima[j].theta_final;
        let free_max = dropout_curve(spec, a, b, &[], 25, split)
            .unwrap()
            .iter()
            .map(|p| p.loss_free)
            .fold(f64::NEG_INFINITY, f64::max);
        for idx in 0..spec.param_count() {
            let clamped_max = dropout_curve(spec, a, b, &[idx], 25, split)
                .unwrap()
                .iter()
                .map(|p| p.loss_clamped)
                .fold(f64::NEG_INFINITY, f64::max);
            best_delta = best_delta.min((clamped_max - free_max).abs());
            if best_delta < 0.02 {
                break 'search;
            }
        }
    }
    pass &= best_delta < 0.02;

    assert!(
        verdict(10, "gate-dropout clamping contract", pass),
        "smallest single-index peak shift {best_delta:.4}"
    );
}

/// Exploration pass over deeper circuits; slow, so opt-in. Trains a handful
/// of depth-3 runs and reports how single-parameter clamping shifts the
/// barrier between the two best minima.
#[test]
#[ignore]
fn dropout_survey_depth_three() {
    let config = SweepConfig {
        layouts: vec![Layout::Cycle],
        depths: vec![3],
        optimizers: vec![OptimizerConfig::adam()],
        base_seed: 21,
        ..SweepConfig::default()
    };
    let mut records = Vec::new();
    run_sweep(&config, &HashSet::new(), |r| {
        records.push(r.clone());
        Ok(())
    })
    .unwrap();
    records.sort_by(|a, b| a.best_test_mse.total_cmp(&b.best_test_mse));
    let spec = build_ansatz(Layout::Cycle, 3, config.n_qubits).unwrap();
    let split = config.data.realize().unwrap();
    let (a, b) = (&records[0].theta_final, &records[1].theta_final);
    let free_max = dropout_curve(&spec, a, b, &[], 25, &split)
        .unwrap()
        .iter()
        .map(|p| p.loss_free)
        .fold(f64::NEG_INFINITY, f64::max);
    for idx in 0..spec.param_count() {
        let clamped_max = dropout_curve(&spec, a, b, &[idx], 25, &split)
            .unwrap()
            .iter()
            .map(|p| p.loss_clamped)
            .fold(f64::NEG_INFINITY, f64::max);
        println!("clamp {idx}: peak {free_max:.4} -> {clamped_max:.4}");
    }
    // Resume bookkeeping stays consistent at depth 3 as well.
    let hashes: HashSet<u64> = records.iter().map(|r| config_hash(&r.config)).collect();
    assert_eq!(hashes.len(), records.len());
}

#[test]
fn acceptance_support_batch_shapes() {
    // The fixtures above lean on Batch construction; keep its contract
    // pinned here where the suite can see it.
    assert!(Batch::new(&[0.0, 0.5], &[0.1]).is_err());
    let b = Batch::new(&[0.0, 0.5], &[0.1, 0.2]).unwrap();
    assert_eq!(b.len(), 2);
}
