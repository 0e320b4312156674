//! Acceptance suite: one pass/fail line per criterion (run with
//! `--nocapture` to see them all).
//!
//! The desk-scale criteria (6, 7, 10) share one experiment directory under
//! the cargo target tmpdir; stage hashing makes reruns incremental.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rising_cli::manifest::file_sha256;
use rising_cli::{
    cmd_build_ris, cmd_build_targets, cmd_evaluate, cmd_generate_data, cmd_simulate, cmd_train,
    DatasetSource, ExperimentConfig, ExperimentManifest, GeometrySource, Seeds, Split, TrainMode,
};
use rising_metrics::{relative_error, rmse, ssim, MetricsReport};
use rising_neural::{mse_loss, NetworkParams, NetworkSpec, TrainConfig, Tensor4};
use rising_phantom::{generate_phantom, PhantomSpec};
use rising_solver::{
    compose_iterations_check, objective, objective_gradient, sgp_solve, tv_beta, tv_beta_gradient,
    SolveMode, SolveOptions, SolverConfig,
};
use rising_tomo::rng::SeedStream;
use rising_tomo::{
    back_project, dot, forward_project, norm2, simulate_sinogram, trace_ray, GridSpec, Image,
    ScanGeometry, Sinogram,
};

fn report(criterion: &str, pass: bool, details: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {criterion}: {details}");
    assert!(pass, "criterion {criterion} failed: {details}");
}

fn random_values(len: usize, key: u64, shift: f64) -> Vec<f64> {
    let mut rng = SeedStream::new([111, key, 0, 0]);
    (0..len).map(|_| rng.uniform() - shift).collect()
}

#[test]
fn criterion_1_adjoint_exactness() {
    let t0 = Instant::now();
    let grid = GridSpec::unit(32).unwrap();
    let angles: Vec<f64> = (0..40).map(|i| i as f64 * 9.0).collect();
    let geom = ScanGeometry::fan_covering(&grid, angles).unwrap();
    let mut worst = 0.0f64;
    for pair in 0..20u64 {
        let x = random_values(grid.num_pixels(), 2 * pair, 0.3);
        let y = random_values(geom.num_rays(), 2 * pair + 1, 0.5);
        let ax = forward_project(&Image::new(grid, x.clone()).unwrap(), &geom);
        let aty = back_project(&Sinogram::new(geom.clone(), y.clone()).unwrap(), &grid);
        let gap = (dot(ax.values(), &y) - dot(&x, aty.values())).abs();
        let bound = 1e-10 * norm2(ax.values()) * norm2(&y);
        worst = worst.max(gap / bound);
    }
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        "1 (adjoint exactness)",
        worst <= 1.0 && elapsed < 5.0,
        format!("worst gap at {:.2e} of the 1e-10 bound; {elapsed:.2} s", worst),
    );
}

#[test]
fn criterion_2_gradient_consistency() {
    let t0 = Instant::now();
    let grid = GridSpec::unit(12).unwrap();
    let angles: Vec<f64> = (0..10).map(|i| i as f64 * 36.0).collect();
    let geom = ScanGeometry::fan_covering(&grid, angles).unwrap();
    let beta = 1e-3;
    let cfg = SolverConfig::for_lambda(4e-5);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for inst in 0..10u64 {
        let x = Image::new(grid, random_values(144, 100 + inst, 0.0)).unwrap();
        let b = Sinogram::new(
            geom.clone(),
            random_values(geom.num_rays(), 200 + inst, -1.0),
        )
        .unwrap();

        // Smoothed TV gradient.
        let g_tv = tv_beta_gradient(&x, beta);
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for idx in 0..144 {
            let mut plus = x.clone();
            plus.values_mut()[idx] += h;
            let mut minus = x.clone();
            minus.values_mut()[idx] -= h;
            let fd = (tv_beta(&plus, beta) - tv_beta(&minus, beta)) / (2.0 * h);
            err = err.max((g_tv.values()[idx] - fd).abs());
            scale = scale.max(fd.abs());
        }
        worst = worst.max(err / scale);

        // Full objective gradient.
        let g_obj = objective_gradient(&x, &b, &cfg);
        let mut err = 0.0f64;
        let mut scale = 0.0f64;
        for idx in 0..144 {
            let mut plus = x.clone();
            plus.values_mut()[idx] += h;
            let mut minus = x.clone();
            minus.values_mut()[idx] -= h;
            let fd = (objective(&plus, &b, &cfg) - objective(&minus, &b, &cfg)) / (2.0 * h);
            err = err.max((g_obj.values()[idx] - fd).abs());
            scale = scale.max(fd.abs());
        }
        worst = worst.max(err / scale);
    }
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        "2 (TV/objective gradients)",
        worst <= 1e-5 && elapsed < 10.0,
        format!("max relative error {worst:.2e} over 10 instances; {elapsed:.2} s"),
    );
}

#[test]
fn criterion_3_solver_against_dense_least_squares() {
    let t0 = Instant::now();
    let grid = GridSpec::unit(8).unwrap();
    let angles: Vec<f64> = (0..24).map(|i| i as f64 * 7.5).collect();
    let geom = ScanGeometry::parallel_covering(&grid, angles).unwrap();
    let mut spec = PhantomSpec::default_for(grid, 3);
    spec.background = 0.2;
    let gt = generate_phantom(&spec, 0).unwrap();
    let b = forward_project(&gt, &geom);

    // Independent oracle: explicit dense assembly + normal equations via
    // Gauss elimination with partial pivoting, coded here, no solver reuse.
    let npix = grid.num_pixels();
    let m = geom.num_rays();
    let mut a = vec![0.0f64; m * npix];
    for j in 0..npix {
        let mut probe = Image::zeros(grid);
        probe.values_mut()[j] = 1.0;
        for view in 0..geom.num_views() {
            for det in 0..geom.num_detectors {
                let (src, dst) = geom.ray_endpoints(&grid, view, det);
                a[(view * geom.num_detectors + det) * npix + j] =
                    trace_ray(&grid, src, dst, &probe).unwrap();
            }
        }
    }
    let mut ata = vec![0.0f64; npix * npix];
    let mut atb = vec![0.0f64; npix];
    for r in 0..m {
        let row = &a[r * npix..(r + 1) * npix];
        let bv = b.values()[r];
        for i in 0..npix {
            atb[i] += row[i] * bv;
            for j in i..npix {
                ata[i * npix + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..npix {
        for j in 0..i {
            ata[i * npix + j] = ata[j * npix + i];
        }
    }
    // Gaussian elimination with partial pivoting on [AtA | Atb].
    let mut x_dense = atb.clone();
    for col in 0..npix {
        let pivot = (col..npix)
            .max_by(|&p, &q| {
                ata[p * npix + col]
                    .abs()
                    .total_cmp(&ata[q * npix + col].abs())
            })
            .unwrap();
        if pivot != col {
            for j in 0..npix {
                ata.swap(col * npix + j, pivot * npix + j);
            }
            x_dense.swap(col, pivot);
        }
        let d = ata[col * npix + col];
        for r in (col + 1)..npix {
            let f = ata[r * npix + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..npix {
                ata[r * npix + j] -= f * ata[col * npix + j];
            }
            x_dense[r] -= f * x_dense[col];
        }
    }
    for col in (0..npix).rev() {
        let mut acc = x_dense[col];
        for j in (col + 1)..npix {
            acc -= ata[col * npix + j] * x_dense[j];
        }
        x_dense[col] = acc / ata[col * npix + col];
    }

    let mut cfg = SolverConfig::for_lambda(0.0);
    cfg.max_iters = 5000;
    cfg.stop_tol = 1e-14;
    let (x, _) = sgp_solve(&b, &grid, &cfg, SolveMode::ToConvergence, &SolveOptions::default())
        .unwrap();
    let rmse_vs_dense = (x
        .values()
        .iter()
        .zip(&x_dense)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        / npix as f64)
        .sqrt();
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        "3 (solver vs dense least squares)",
        rmse_vs_dense <= 1e-4 && elapsed < 30.0,
        format!("rmse {rmse_vs_dense:.2e} against the dense solution; {elapsed:.2} s"),
    );
}

#[test]
fn criterion_4_decomposition_identity() {
    let grid = GridSpec::unit(32).unwrap();
    let angles: Vec<f64> = (0..20).map(|i| i as f64 * 18.0).collect();
    let geom = ScanGeometry::fan_covering(&grid, angles).unwrap();
    let mut cfg = SolverConfig::for_lambda(4e-5);
    cfg.max_iters = 120;
    let spec = PhantomSpec::default_for(grid, 17);
    let mut all = true;
    for instance in 0..3u64 {
        let gt = generate_phantom(&spec, instance).unwrap();
        let b = simulate_sinogram(&gt, &geom, 0.01, 500 + instance).unwrap();
        for k in [3usize, 10] {
            let ok = compose_iterations_check(&b, &grid, &cfg, k).unwrap();
            all &= ok;
        }
    }
    report(
        "4 (run-to-K-then-resume identity)",
        all,
        "bit-exact for K in {3, 10} on three 32×32 instances".into(),
    );
}

#[test]
fn criterion_5_network_gradients() {
    let t0 = Instant::now();
    let spec = NetworkSpec {
        levels: 2,
        base_channels: 4,
        convs_per_level: 2,
        kernel_size: 3,
    };
    let params = NetworkParams::<f64>::init(spec, 2091).unwrap();
    let mk = |key: u64| {
        Tensor4::new((1, 1, 8, 8), random_values(64, key, -0.0)).unwrap()
    };
    let x = mk(900);
    let t = mk(901);
    let loss_of = |p: &NetworkParams<f64>| {
        let out = p.forward(&x).unwrap();
        mse_loss(&out, &t).unwrap().0
    };
    let (out, trace) = params.forward_trace(&x).unwrap();
    let (_, grad_out) = mse_loss(&out, &t).unwrap();
    let grads = params.backward(&trace, &grad_out).unwrap();

    let h = 1e-6;
    let mut g_scale = 0.0f64;
    for (gw, gb) in &grads.layers {
        for g in gw.data().iter().chain(gb.iter()) {
            g_scale = g_scale.max(g.abs());
        }
    }
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for li in 0..params.layers.len() {
        let wlen = params.layers[li].weights.len();
        let blen = params.layers[li].bias.len();
        for pi in 0..wlen + blen {
            let mut plus = params.clone();
            let mut minus = params.clone();
            if pi < wlen {
                plus.layers[li].weights.data_mut()[pi] += h;
                minus.layers[li].weights.data_mut()[pi] -= h;
            } else {
                plus.layers[li].bias[pi - wlen] += h;
                minus.layers[li].bias[pi - wlen] -= h;
            }
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let analytic = if pi < wlen {
                grads.layers[li].0.data()[pi]
            } else {
                grads.layers[li].1[pi - wlen]
            };
            worst = worst.max((fd - analytic).abs());
            checked += 1;
        }
    }
    let rel = worst / g_scale;
    let elapsed = t0.elapsed().as_secs_f64();
    report(
        "5 (network gradients)",
        checked == spec.param_count() && rel <= 1e-6 && elapsed < 120.0,
        format!("{checked} parameters, max relative error {rel:.2e}; {elapsed:.1} s"),
    );
}

fn desk_dir() -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-desk64")
}

fn mean<T: Copy + Into<f64>>(values: impl Iterator<Item = T>) -> f64 {
    let v: Vec<f64> = values.map(Into::into).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_metric(report: &MetricsReport, role: &str, metric: &str) -> f64 {
    report.aggregate(role, metric).expect("role present").mean
}

#[test]
fn criteria_6_7_10_desk_scale_trends() {
    let dir = desk_dir();
    std::fs::create_dir_all(&dir).unwrap();
    let base = ExperimentConfig::desk_default(&dir);

    // ---- criterion 6: the default desk-scale experiment, K = 10 ----
    let t0 = Instant::now();
    cmd_generate_data(&base, false).unwrap();
    cmd_simulate(&base, false).unwrap();
    let manifest = cmd_build_targets(&base, false).unwrap();

    // Convergence iteration band, frozen from measurements of this exact
    // configuration (observed [40, 432] across the 140 images).
    let kstars: Vec<usize> = manifest.entries.iter().filter_map(|e| e.k_star).collect();
    assert_eq!(kstars.len(), manifest.entries.len(), "every image must converge");
    let (lo, hi) = (
        *kstars.iter().min().unwrap(),
        *kstars.iter().max().unwrap(),
    );
    assert!(
        lo >= 20 && hi <= 490,
        "convergence iterations [{lo}, {hi}] left the frozen band"
    );

    cmd_build_ris(&base, false).unwrap();
    let trained = cmd_train(&base, false).unwrap();
    let ev10 = cmd_evaluate(&base, &trained.checkpoint).unwrap();
    let elapsed6 = t0.elapsed().as_secs_f64();

    let rmse_ris_is = mean(ev10.learnability.iter().map(|(_, a, _)| *a));
    let rmse_ing_is = mean(ev10.learnability.iter().map(|(_, _, b)| *b));
    let ssim_ris = mean_metric(&ev10.report, "x_RIS", "SSIM");
    let ssim_ing = mean_metric(&ev10.report, "x_ING", "SSIM");
    let re_is = mean_metric(&ev10.report, "x_IS", "RE");

    let gap_ok = rmse_ing_is <= 0.5 * rmse_ris_is;
    let ssim_ok = ssim_ing >= ssim_ris + 0.10;
    let re_ok = re_is <= 0.12;
    let time_ok = elapsed6 <= 3600.0;
    report(
        "6 (desk-scale trend)",
        gap_ok && ssim_ok && re_ok && time_ok,
        format!(
            "RMSE(ING,IS) {rmse_ing_is:.4} vs 0.5×RMSE(RIS,IS) {:.4}; SSIM {ssim_ing:.4} vs RIS+0.10 {:.4}; RE(IS) {re_is:.4} ≤ 0.12; {elapsed6:.0} s",
            0.5 * rmse_ris_is,
            ssim_ris + 0.10
        ),
    );

    // ---- criterion 7: K-insensitivity, K = 3 vs K = 10 ----
    let mut cfg3 = base.clone();
    cfg3.k = 3;
    cmd_build_ris(&cfg3, false).unwrap();
    let trained3 = cmd_train(&cfg3, false).unwrap();
    let ev3 = cmd_evaluate(&cfg3, &trained3.checkpoint).unwrap();

    let rmse_gt_10 = mean_metric(&ev10.report, "x_ING", "RMSE");
    let rmse_gt_3 = mean_metric(&ev3.report, "x_ING", "RMSE");
    let diff = (rmse_gt_10 - rmse_gt_3).abs();
    let bound = 0.5 * rmse_gt_10.max(rmse_gt_3);
    report(
        "7 (K-insensitivity)",
        diff <= bound,
        format!("RMSE(ING,GT): K=3 {rmse_gt_3:.4}, K=10 {rmse_gt_10:.4}, |diff| {diff:.4} ≤ {bound:.4}"),
    );

    // ---- criterion 10: LPP harness parity ----
    let mut cfg_lpp = base.clone();
    cfg_lpp.mode = TrainMode::Lpp;
    let trained_lpp = cmd_train(&cfg_lpp, false).unwrap();
    let ev_lpp = cmd_evaluate(&cfg_lpp, &trained_lpp.checkpoint).unwrap();
    let n_test = manifest.entries_for(Split::Test).count();
    let lpp_rows = ev_lpp
        .report
        .records
        .iter()
        .filter(|r| r.role == "x_LPP")
        .count();
    report(
        "10 (LPP baseline parity)",
        ev_lpp.net_role == "x_LPP" && lpp_rows == n_test,
        format!("lpp pipeline produced a full report ({lpp_rows} x_LPP rows over {n_test} test images)"),
    );
}

#[test]
fn criterion_8_determinism() {
    let grid = GridSpec::unit(16).unwrap();
    let make_cfg = |dir: &Path| {
        let mut solver = SolverConfig::for_lambda(4e-5);
        solver.max_iters = 60;
        ExperimentConfig {
            name: "det".into(),
            dataset: DatasetSource::Generate {
                phantom: PhantomSpec::default_for(grid, 0),
                count: 6,
                train_count: 4,
            },
            geometry: GeometrySource::Protocol("P_360_12".into()),
            noise_level: 0.01,
            solver,
            k: 3,
            network: NetworkSpec {
                levels: 2,
                base_channels: 4,
                convs_per_level: 1,
                kernel_size: 3,
            },
            training: TrainConfig::with_epochs(3),
            mode: TrainMode::Rising,
            output_dir: dir.to_path_buf(),
            seeds: Seeds {
                data: 5,
                noise: 6,
                init: 7,
                shuffle: 8,
            },
        }
    };
    let run = |dir: &Path| -> (ExperimentManifest, f64) {
        let cfg = make_cfg(dir);
        cmd_generate_data(&cfg, false).unwrap();
        cmd_simulate(&cfg, false).unwrap();
        cmd_build_targets(&cfg, false).unwrap();
        let m = cmd_build_ris(&cfg, false).unwrap();
        let t = cmd_train(&cfg, false).unwrap();
        (m, t.final_loss)
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (ma, loss_a) = run(dir_a.path());
    let (_, loss_b) = run(dir_b.path());

    let mut all_equal = true;
    let mut compared = 0usize;
    for e in &ma.entries {
        for f in std::iter::once(&e.gt)
            .chain(e.sino.iter())
            .chain(e.is.iter())
            .chain(e.ris.values())
        {
            let ha = file_sha256(&dir_a.path().join(f)).unwrap();
            let hb = file_sha256(&dir_b.path().join(f)).unwrap();
            all_equal &= ha == hb;
            compared += 1;
        }
    }
    report(
        "8 (determinism)",
        all_equal && loss_a == loss_b && compared == 6 * 4,
        format!("{compared} artifact checksums identical; training losses {loss_a:.6e} == {loss_b:.6e}"),
    );
}

#[test]
fn criterion_9_metrics_exactness() {
    let grid = GridSpec::unit(24).unwrap();
    let mk = |key: u64| {
        Image::new(grid, random_values(24 * 24, key, -0.0)).unwrap()
    };
    let x = mk(1);
    let y = mk(2);
    let mut ok = true;
    let mut notes = Vec::new();

    // Identity and homogeneity.
    ok &= relative_error(&x, &x).unwrap() == 0.0;
    let doubled = Image::new(grid, x.values().iter().map(|v| 2.0 * v).collect()).unwrap();
    let re2 = relative_error(&doubled, &x).unwrap();
    ok &= (re2 - 1.0).abs() <= 1e-12;
    notes.push(format!("RE(2x, x) off unity by {:.1e}", (re2 - 1.0).abs()));

    ok &= rmse(&x, &x).unwrap() == 0.0;
    let shifted = Image::new(grid, x.values().iter().map(|v| v - 0.25).collect()).unwrap();
    ok &= (rmse(&x, &shifted).unwrap() - 0.25).abs() <= 1e-12;

    // Naive-oracle agreement.
    let mut num = 0.0;
    let mut den = 0.0;
    let mut sq = 0.0;
    for (a, b) in x.values().iter().zip(y.values()) {
        num += (a - b) * (a - b);
        den += b * b;
        sq += (a - b) * (a - b);
    }
    ok &= (relative_error(&x, &y).unwrap() - num / den).abs() <= 1e-12;
    ok &= (rmse(&x, &y).unwrap() - (sq / 576.0).sqrt()).abs() <= 1e-12;

    // SSIM identity, symmetry, independent-oracle agreement.
    ok &= (ssim(&x, &x).unwrap() - 1.0).abs() <= 1e-12;
    let sxy = ssim(&x, &y).unwrap();
    let syx = ssim(&y, &x).unwrap();
    ok &= (sxy - syx).abs() <= 1e-12;
    let naive = naive_ssim(&x, &y);
    ok &= (sxy - naive).abs() <= 1e-9;
    notes.push(format!("SSIM separable vs naive gap {:.1e}", (sxy - naive).abs()));

    report("9 (metrics exactness)", ok, notes.join("; "));
}

/// Second, independent SSIM implementation: direct 2D windowed sums.
fn naive_ssim(x: &Image, y: &Image) -> f64 {
    let n = x.n();
    let sigma = 1.5f64;
    let mut w1 = [0.0f64; 11];
    for (k, v) in w1.iter_mut().enumerate() {
        let d = k as f64 - 5.0;
        *v = (-d * d / (2.0 * sigma * sigma)).exp();
    }
    let s: f64 = w1.iter().sum();
    for v in &mut w1 {
        *v /= s;
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let m = n - 10;
    let mut acc = 0.0;
    for r0 in 0..m {
        for c0 in 0..m {
            let (mut mx, mut my, mut exx, mut eyy, mut exy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let w = w1[i] * w1[j];
                    let a = x.at(r0 + i, c0 + j);
                    let b = y.at(r0 + i, c0 + j);
                    mx += w * a;
                    my += w * b;
                    exx += w * a * a;
                    eyy += w * b * b;
                    exy += w * a * b;
                }
            }
            let (vx, vy, cov) = (exx - mx * mx, eyy - my * my, exy - mx * my);
            acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    acc / (m * m) as f64
}
