//! End-to-end acceptance checks. Each test prints one `acceptance N ...:
//! pass|FAIL` line (visible with `--nocapture`) and asserts the criterion.
//!
//! Oracles are recomputed here from first principles (dense Sylvester
//! recursion, brute-force sort rule, explicit W matrix) rather than shared
//! with the library under test.

use slci::acquisition::{calibrate, sense_ideal, sense_physical, CalibrationModel};
use slci::hadamard::{fwht, HadamardOperator};
use slci::image::ImagePlane;
use slci::metrics::psnr;
use slci::patch::{
    analyze3d, dct2_analyze, dct2_synthesize, synthesize3d, ClusterAssignment, PatchStack,
    PatchSystem,
};
use slci::rng::Rng;
use slci::scene::synthetic_scene;
use slci::shrinkage::{shrink_set, ShrinkagePolicy};
use slci::solver::{init, solve, SolverConfig, Variant};

fn report(name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "pass" } else { "FAIL" };
    println!("acceptance {name}: {verdict} ({detail})");
    assert!(ok, "acceptance {name} failed: {detail}");
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sylvester recursion, the independent dense oracle for the transform.
fn dense_hadamard(n: usize) -> Vec<Vec<f64>> {
    let mut h = vec![vec![1.0]];
    let mut size = 1;
    while size < n {
        let mut next = vec![vec![0.0; 2 * size]; 2 * size];
        for i in 0..size {
            for j in 0..size {
                next[i][j] = h[i][j];
                next[i][j + size] = h[i][j];
                next[i + size][j] = h[i][j];
                next[i + size][j + size] = -h[i][j];
            }
        }
        h = next;
        size *= 2;
    }
    h
}

#[test]
fn criterion_1_operator_correctness() {
    let started = std::time::Instant::now();
    let mut rng = Rng::new(101);
    // fast transform vs dense oracle
    let mut max_err = 0.0f64;
    let mut n = 2usize;
    while n <= 1024 {
        let h = dense_hadamard(n);
        let x: Vec<f64> = (0..n).map(|_| rng.next_f64() - 0.5).collect();
        let fast = fwht(&x).unwrap();
        for (i, row) in h.iter().enumerate() {
            let dense: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            max_err = max_err.max((dense - fast[i]).abs());
        }
        n *= 2;
    }
    let fwht_ok = max_err < 1e-10;

    // adjoint consistency <Ax, y> = <x, A^T y>, 100 random trials
    let op = HadamardOperator::<f64>::build(16, 16, 0.3, 7).unwrap();
    let mut adj_err = 0.0f64;
    for _ in 0..100 {
        let x: Vec<f64> = (0..op.order()).map(|_| rng.next_f64() - 0.5).collect();
        let y: Vec<f64> = (0..op.measurement_count())
            .map(|_| rng.next_f64() - 0.5)
            .collect();
        let ax = op.forward(&x).unwrap();
        let aty = op.adjoint(&y).unwrap();
        let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&aty).map(|(a, b)| a * b).sum();
        adj_err = adj_err.max((lhs - rhs).abs());
    }
    let adj_ok = adj_err < 1e-10;

    // A A^T = I: forward(adjoint(y)) = y
    let mut aat_err = 0.0f64;
    for seed in [1u64, 2, 3] {
        let op = HadamardOperator::<f64>::build(32, 32, 0.2, seed).unwrap();
        let y: Vec<f64> = (0..op.measurement_count())
            .map(|_| rng.next_f64() - 0.5)
            .collect();
        let back = op.forward(&op.adjoint(&y).unwrap()).unwrap();
        aat_err = aat_err.max(
            y.iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    let aat_ok = aat_err < 1e-12;
    let elapsed = started.elapsed().as_secs_f64();
    report(
        "1 operator correctness",
        fwht_ok && adj_ok && aat_ok && elapsed < 10.0,
        &format!(
            "fwht err {max_err:.2e}, adjoint err {adj_err:.2e}, AA^T err {aat_err:.2e}, {elapsed:.1}s"
        ),
    );
}

#[test]
fn criterion_2_calibration_round_trip() {
    let mut rng = Rng::new(202);
    let op = HadamardOperator::<f64>::build(16, 16, 0.25, 9).unwrap();
    let mut max_err = 0.0f64;
    for _ in 0..50 {
        let f = 0.3 * rng.next_f64();
        let g = f + (1.0 - f) * rng.next_f64().max(1e-3);
        let cal = CalibrationModel::new(g, f).unwrap();
        let img = ImagePlane::from_fn(16, 16, |_, _| rng.next_f64());
        let ideal = sense_ideal(&op, &img, 0.0, 0).unwrap();
        let raw = sense_physical(&op, &img, &cal).unwrap();
        let recovered = calibrate(&raw, &cal, &op).unwrap();
        max_err = max_err.max(
            ideal
                .values
                .iter()
                .zip(&recovered.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
    }
    report(
        "2 calibration round trip",
        max_err < 1e-9,
        &format!("max err {max_err:.2e} over 50 random (g, f)"),
    );
}

#[test]
fn criterion_3_patch_algebra() {
    let mut rng = Rng::new(303);
    // extract -> average is the identity, bitwise
    let mut exact = true;
    for (w, h, e, s) in [
        (16usize, 16usize, 8usize, 4usize),
        (16, 16, 4, 2),
        (15, 13, 4, 3),
        (16, 16, 8, 8),
    ] {
        let img = ImagePlane::from_fn(w, h, |_, _| rng.next_f64());
        let sys = PatchSystem::new(w, h, e, s).unwrap();
        let back = sys.average_synthesize(&sys.extract(&img).unwrap()).unwrap();
        exact &= back == img;
    }

    // diag(W W^T) = 1/c_p by building W explicitly and enumerating
    let mut diag_err = 0.0f64;
    for (w, h, e, s) in [(16usize, 16usize, 8usize, 4usize), (10, 12, 4, 3), (16, 9, 4, 2)] {
        let sys = PatchSystem::new(w, h, e, s).unwrap();
        let n = w * h;
        let stacked = sys.patch_count() * e * e;
        let mut w_mat = vec![vec![0.0f64; stacked]; n];
        for (idx, (px, py)) in sys.positions().enumerate() {
            for dy in 0..e {
                for dx in 0..e {
                    let pixel = (py + dy) * w + px + dx;
                    let col = idx * e * e + dy * e + dx;
                    w_mat[pixel][col] = 1.0 / sys.coverage_counts()[pixel] as f64;
                }
            }
        }
        for (p, row) in w_mat.iter().enumerate() {
            let diag: f64 = row.iter().map(|v| v * v).sum();
            diag_err = diag_err.max((diag - 1.0 / sys.coverage_counts()[p] as f64).abs());
        }
    }

    // 2-D and 3-D transform round trips
    let sys = PatchSystem::new(16, 16, 8, 4).unwrap();
    let img = ImagePlane::from_fn(16, 16, |_, _| rng.next_f64());
    let stack = sys.extract(&img).unwrap();
    let back2 = dct2_synthesize(&dct2_analyze(&stack));
    let err2 = l2(stack.data(), back2.data());
    let assignment = ClusterAssignment::single(stack.n_patches());
    let set = analyze3d(&stack, &assignment, true).unwrap();
    let back3 = synthesize3d(&set, &assignment, 8, true).unwrap();
    let err3 = l2(stack.data(), back3.data());

    report(
        "3 patch algebra",
        exact && diag_err < 1e-12 && err2 < 1e-10 && err3 < 1e-10,
        &format!(
            "identity exact {exact}, diag err {diag_err:.2e}, 2-D {err2:.2e}, 3-D {err3:.2e}"
        ),
    );
}

#[test]
fn criterion_4_shrinkage_oracle() {
    let mut rng = Rng::new(404);
    let mut max_err = 0.0f64;
    let mut nnz_ok = true;
    for trial in 0..1000u64 {
        let n_c = 2 + (rng.next_u64() % 64) as usize;
        let coeffs: Vec<f64> = (0..n_c).map(|_| 4.0 * (rng.next_f64() - 0.5)).collect();
        let csr = 0.05 + 0.9 * rng.next_f64();
        let policy = ShrinkagePolicy::CsrProportional { csr };
        let m_star = policy.keep_count(n_c);

        // brute force: lambda is the (m*+1)-th largest magnitude, then
        // plain soft thresholding
        let mut mags: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let lambda = mags[m_star];
        let expect: Vec<f64> = coeffs
            .iter()
            .map(|&c| c.signum() * (c.abs() - lambda).max(0.0))
            .collect();

        let set = slci::patch::CoefficientSet::new(
            vec![slci::patch::ClusterCoeffs {
                members: (0..n_c).collect(),
                coeffs: coeffs.clone(),
            }],
            1,
        );
        let (beta, lambdas) = shrink_set(&set, &policy).unwrap();
        let got = &beta.clusters[0].coeffs;
        max_err = max_err.max((lambdas[0] - lambda).abs());
        for (g, e) in got.iter().zip(&expect) {
            max_err = max_err.max((g - e).abs());
        }
        let nnz = got.iter().filter(|&&v| v != 0.0).count();
        if nnz > m_star {
            nnz_ok = false;
            println!("trial {trial}: nnz {nnz} > m* {m_star}");
        }
    }
    report(
        "4 shrinkage oracle",
        max_err < 1e-14 && nnz_ok,
        &format!("max err {max_err:.2e}, nnz bound held {nnz_ok}"),
    );
}

/// One solve with full error tracking; returns (initial error, per-iteration
/// errors).
fn tracked_run(
    img: &ImagePlane<f64>,
    csr: f64,
    xi: f64,
    op_seed: u64,
    iters: usize,
) -> (f64, Vec<f64>) {
    let op = HadamardOperator::<f64>::build(img.width(), img.height(), csr, op_seed).unwrap();
    let y = sense_ideal(&op, img, 0.0, 0).unwrap();
    let cfg = SolverConfig {
        variant: Variant::Slope { xi },
        max_iter: iters,
        ground_truth: Some(img.clone()),
        ..SolverConfig::default()
    };
    let x0 = init(&op, &y).unwrap();
    let e0 = l2(x0.as_slice(), img.as_slice());
    let (_rec, trace) = solve(&op, &y, &cfg).unwrap();
    let errs = trace.records.iter().map(|r| r.error.unwrap()).collect();
    (e0, errs)
}

#[test]
fn criterion_5_anytime_property() {
    let img = synthetic_scene::<f64>(128, 128, 7);
    let mut all_ok = true;
    let mut summary = String::new();
    for csr in [0.05, 0.1] {
        for xi in [0.5, 1.0, 1.5] {
            for op_seed in [11u64, 12, 13] {
                let started = std::time::Instant::now();
                let (e0, errs) = tracked_run(&img, csr, xi, op_seed, 100);
                let mut monotone = true;
                let mut prev = e0;
                for &e in &errs {
                    if e > prev * (1.0 + 1e-9) {
                        monotone = false;
                    }
                    prev = e;
                }
                let ratio = e0 / errs[errs.len() - 1];
                let cell_ok = monotone && ratio >= 10.0;
                all_ok &= cell_ok;
                let secs = started.elapsed().as_secs_f64();
                println!(
                    "  anytime csr={csr} xi={xi} seed={op_seed}: monotone={monotone} \
                     ratio={ratio:.2} {secs:.1}s {}",
                    if cell_ok { "ok" } else { "SHORT" }
                );
                assert!(secs < 120.0, "runtime budget exceeded");
                if !cell_ok {
                    summary.push_str(&format!(" [csr={csr} xi={xi} seed={op_seed} ratio={ratio:.2}]"));
                }
            }
        }
    }
    report(
        "5 anytime property",
        all_ok,
        if summary.is_empty() {
            "monotone and >= 10x error reduction in every configuration"
        } else {
            summary.trim()
        },
    );
}

#[test]
fn criterion_6_step_size_ordering() {
    let img = synthetic_scene::<f64>(128, 128, 7);
    let runs: Vec<(f64, Vec<f64>)> = [0.5, 1.0, 1.5]
        .iter()
        .map(|&xi| tracked_run(&img, 0.1, xi, 11, 100))
        .collect();
    let target = 2.0 * runs[2].1.last().unwrap();
    let iters_to: Vec<Option<usize>> = runs
        .iter()
        .map(|(_, errs)| errs.iter().position(|&e| e <= target).map(|p| p + 1))
        .collect();
    let ok = match (iters_to[0], iters_to[1], iters_to[2]) {
        (Some(a), Some(b), Some(c)) => a >= b && b >= c,
        _ => false,
    };
    report(
        "6 step size ordering",
        ok,
        &format!("iterations to 2x the xi=1.5 final error: {iters_to:?} for xi = 0.5, 1.0, 1.5"),
    );
}

#[test]
fn criterion_7_variant_equivalence() {
    let img = synthetic_scene::<f64>(64, 64, 2);
    let op = HadamardOperator::<f64>::build(64, 64, 0.2, 4).unwrap();
    let y = sense_ideal(&op, &img, 0.0, 0).unwrap();
    let variants = [
        Variant::Gap,
        Variant::Slope { xi: 1.0 },
        Variant::Ist { eta: 1.0 },
        Variant::Admm { b: 0.0 },
    ];
    let results: Vec<_> = variants
        .iter()
        .map(|&variant| {
            let cfg = SolverConfig {
                variant,
                max_iter: 20,
                ground_truth: Some(img.clone()),
                ..SolverConfig::default()
            };
            solve(&op, &y, &cfg).unwrap()
        })
        .collect();
    let mut max_div = 0.0f64;
    for (rec, trace) in &results[1..] {
        max_div = max_div.max(
            rec.as_slice()
                .iter()
                .zip(results[0].0.as_slice())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        );
        for (r, r0) in trace.records.iter().zip(&results[0].1.records) {
            max_div = max_div.max((r.residual - r0.residual).abs());
            max_div = max_div.max((r.error.unwrap() - r0.error.unwrap()).abs());
        }
    }
    report(
        "7 variant equivalence",
        max_div <= 1e-12,
        &format!("gap vs slope(1) vs ist(1) vs admm(0): max divergence {max_div:.2e}"),
    );
}

/// Image exactly sparse in the non-overlapping 8x8 patch DCT basis; the
/// solver is run with the same non-overlapping geometry.
fn block_sparse_image(w: usize, h: usize, extra_per_patch: usize, seed: u64) -> ImagePlane<f64> {
    let sys = PatchSystem::new(w, h, 8, 8).unwrap();
    let n_p = sys.patch_count();
    let mut rng = Rng::new(seed);
    let mut data = vec![0.0f64; 64 * n_p];
    for p in 0..n_p {
        data[p * 64] = 2.0 + rng.next_f64();
        for _ in 0..extra_per_patch {
            let row = (rng.next_u64() % 3) as usize;
            let col = (rng.next_u64() % 3) as usize;
            data[p * 64 + row * 8 + col] = 0.6 * (rng.next_f64() - 0.5);
        }
    }
    let stack = PatchStack::new(8, n_p, data).unwrap();
    sys.average_synthesize(&dct2_synthesize(&stack)).unwrap()
}

#[test]
fn criterion_8_exact_recovery() {
    // full sampling: one iteration must reproduce the image
    let img = synthetic_scene::<f64>(64, 64, 5);
    let op = HadamardOperator::<f64>::build(64, 64, 1.0, 6).unwrap();
    let y = sense_ideal(&op, &img, 0.0, 0).unwrap();
    let cfg = SolverConfig {
        max_iter: 1,
        ..SolverConfig::default()
    };
    let (rec, _) = solve(&op, &y, &cfg).unwrap();
    let full = psnr(&rec, &img).unwrap();
    let full_db = full.psnr_db.unwrap_or(f64::INFINITY);
    let full_ok = full_db >= 100.0;

    // sparse ground truth at 30% sampling
    let sparse = block_sparse_image(128, 128, 0, 8);
    let op = HadamardOperator::<f64>::build(128, 128, 0.3, 12).unwrap();
    let k = (128 / 8) * (128 / 8); // one DC coefficient per patch
    assert!(k <= op.measurement_count() / 10, "construction too dense");
    let y = sense_ideal(&op, &sparse, 0.0, 0).unwrap();
    let cfg = SolverConfig {
        variant: Variant::Slope { xi: 1.5 },
        max_iter: 100,
        patch_edge: 8,
        stride: 8,
        keep_mode: slci::solver::KeepMode::FixedFraction(0.05),
        ground_truth: Some(sparse.clone()),
        ..SolverConfig::default()
    };
    let (rec, _) = solve(&op, &y, &cfg).unwrap();
    let rel = l2(rec.as_slice(), sparse.as_slice())
        / sparse.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    report(
        "8 exact recovery",
        full_ok && rel < 1e-3,
        &format!("full-sampling PSNR {full_db:.1} dB, sparse relative error {rel:.2e}"),
    );
}

#[test]
fn criterion_9_table_consistency() {
    let img = synthetic_scene::<f64>(256, 256, 4);
    let op = HadamardOperator::<f64>::build(256, 256, 0.1, 21).unwrap();
    let y = sense_ideal(&op, &img, 0.0, 0).unwrap();

    let run = |variant| {
        let cfg = SolverConfig {
            variant,
            ground_truth: Some(img.clone()),
            ..SolverConfig::default()
        };
        solve(&op, &y, &cfg).unwrap()
    };
    let (slope_rec, slope_trace) = run(Variant::Slope { xi: 1.5 });
    let (gap_rec, _) = run(Variant::Gap);
    let slope_db = psnr(&slope_rec, &img).unwrap().psnr_db.unwrap();
    let gap_db = psnr(&gap_rec, &img).unwrap().psnr_db.unwrap();
    let mean_ms = slope_trace.records.iter().map(|r| r.ms).sum::<f64>()
        / slope_trace.records.len() as f64;
    report(
        "9 quality vs plain projection",
        slope_db >= 23.0 && slope_db >= gap_db && mean_ms <= 1000.0,
        &format!("slope {slope_db:.2} dB, gap {gap_db:.2} dB, {mean_ms:.0} ms/iteration"),
    );
}

#[test]
fn criterion_10_noise_robustness() {
    let img = synthetic_scene::<f64>(128, 128, 6);
    let op = HadamardOperator::<f64>::build(128, 128, 0.1, 31).unwrap();
    let clean = sense_ideal(&op, &img, 0.0, 0).unwrap();
    let mean_mag = clean.values.iter().map(|v| v.abs()).sum::<f64>() / clean.values.len() as f64;
    let sigma = 0.01 * mean_mag;
    let noisy = sense_ideal(&op, &img, sigma, 77).unwrap();

    let cfg = SolverConfig {
        ground_truth: Some(img.clone()),
        ..SolverConfig::default()
    };
    let (rec_clean, _) = solve(&op, &clean, &cfg).unwrap();
    let (rec_noisy, _) = solve(&op, &noisy, &cfg).unwrap();
    let db_clean = psnr(&rec_clean, &img).unwrap().psnr_db.unwrap();
    let db_noisy = psnr(&rec_noisy, &img).unwrap().psnr_db.unwrap();

    // The residual-based noise proxy is informative once the denoiser
    // models the signal well, so it is checked on a signal the patch
    // transform represents exactly.
    let sparse = block_sparse_image(128, 128, 0, 8);
    let clean_s = sense_ideal(&op, &sparse, 0.0, 0).unwrap();
    let mean_s = clean_s.values.iter().map(|v| v.abs()).sum::<f64>() / clean_s.values.len() as f64;
    let sigma_s = 0.01 * mean_s;
    let noisy_s = sense_ideal(&op, &sparse, sigma_s, 78).unwrap();
    let cfg_s = SolverConfig {
        max_iter: 100,
        patch_edge: 8,
        stride: 8,
        keep_mode: slci::solver::KeepMode::FixedFraction(0.05),
        ground_truth: Some(sparse.clone()),
        ..SolverConfig::default()
    };
    let (_, trace) = solve(&op, &noisy_s, &cfg_s).unwrap();
    let sigma_hat = trace.records.last().unwrap().sigma_hat;
    let ratio = sigma_hat / sigma_s;
    report(
        "10 noise robustness",
        db_clean - db_noisy <= 3.0 && (1.0 / 3.0..=3.0).contains(&ratio),
        &format!(
            "clean {db_clean:.2} dB, noisy {db_noisy:.2} dB, sigma {sigma_s:.3e}, \
             estimate {sigma_hat:.3e}"
        ),
    );
}
