//! `slci` command line: simulate compressive acquisition, reconstruct, and
//! evaluate, with a reproducible manifest next to every output.
//!
//! Exit codes: 0 success, 1 validation, 2 I/O, 3 numerical divergence.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use slci::acquisition::{calibrate, sense_ideal, sense_physical, sense_rgb_ideal, CalibrationModel};
use slci::hadamard::{CalibrationTag, HadamardOperator, MeasurementVector};
use slci::image::ImagePlane;
use slci::metrics::{psnr, psnr_rgb};
use slci::scene::synthetic_scene;
use slci::solver::{solve, IterationTrace, KeepMode, SolverConfig, Variant};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "slci", version, about = "Lensless compressive imaging toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate single-sensor acquisition of an image
    Sense(SenseArgs),
    /// Reconstruct an image from a measurement file
    Reconstruct(ReconstructArgs),
    /// Compare a reconstruction against a reference image
    Eval(EvalArgs),
    /// Step-size convergence experiment on a synthetic scene
    Demo(DemoArgs),
}

#[derive(Args)]
struct SenseArgs {
    /// Input image (binary PGM or PPM, 8- or 16-bit)
    image: PathBuf,
    /// Sampling ratio M/N in (0, 1]
    #[arg(long, default_value_t = 0.1)]
    csr: f64,
    /// Seed for the sensing pattern (permutation and row selection)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaussian measurement noise level (ideal model only)
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Seed for the noise stream; defaults to the pattern seed
    #[arg(long)]
    noise_seed: Option<u64>,
    /// Record raw {0,1}-transmittance readings instead of ideal measurements
    #[arg(long)]
    physical: bool,
    /// Open-state transmittance for --physical
    #[arg(long, default_value_t = 0.9)]
    g: f64,
    /// Closed-state transmittance for --physical
    #[arg(long, default_value_t = 0.05)]
    f: f64,
    /// Output measurement file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, ValueEnum)]
enum VariantArg {
    Slope,
    Gap,
    Ist,
    Admm,
}

#[derive(Copy, Clone, PartialEq, ValueEnum)]
enum KeepModeArg {
    CsrProportional,
    FixedFraction,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Measurement file produced by `slci sense`
    measurements: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Slope)]
    variant: VariantArg,
    /// Step size for the slope variant, in (0, 2]
    #[arg(long, default_value_t = 1.5)]
    xi: f64,
    /// Step divisor for the ist variant (>= 1)
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Penalty for the admm variant (>= 0)
    #[arg(long, default_value_t = 0.0)]
    b: f64,
    #[arg(long, default_value_t = 50)]
    iters: usize,
    /// Patch edge length in pixels
    #[arg(long, default_value_t = 8)]
    patch: usize,
    /// Offset between neighboring patches
    #[arg(long, default_value_t = 4)]
    stride: usize,
    /// Number of patch clusters; 1 disables clustering
    #[arg(long, default_value_t = 1)]
    clusters: usize,
    /// Transform along the patch stack within each cluster
    #[arg(long)]
    stack_dct: bool,
    #[arg(long, value_enum, default_value_t = KeepModeArg::CsrProportional)]
    keep_mode: KeepModeArg,
    /// Kept fraction per cluster for --keep-mode fixed-fraction
    #[arg(long, default_value_t = 0.5)]
    keep_fraction: f64,
    /// Stop early once the residual stalls
    #[arg(long)]
    early_stop: bool,
    /// Output image; PGM for one channel, PPM for three
    #[arg(long)]
    out: PathBuf,
    /// Bit depth of the output image
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u16))]
    bits: u16,
    /// Write a per-iteration CSV trace here
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Reference image; enables error and PSNR columns in the trace
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    reconstruction: PathBuf,
    truth: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    /// Directory for the emitted CSV files
    #[arg(long)]
    out: PathBuf,
    /// Sampling ratio for a single run
    #[arg(long, default_value_t = 0.1)]
    csr: f64,
    /// Sweep CSr over 0.05, 0.1, 0.2 and 0.3 instead of a single value
    #[arg(long)]
    csr_sweep: bool,
    /// Scene edge length
    #[arg(long, default_value_t = 128)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    iters: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Sense(args) => cmd_sense(args),
        Command::Reconstruct(args) => cmd_reconstruct(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Demo(args) => cmd_demo(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 1 validation, 2 I/O, 3 divergence; anything untyped counts as I/O.
fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<slci::Error>() {
        return match e {
            slci::Error::Divergence { .. } => 3,
            slci::Error::InvalidArgument(_) | slci::Error::DegenerateCalibration => 1,
            _ => 2,
        };
    }
    2
}

fn read_planes(path: &Path) -> anyhow::Result<Vec<ImagePlane<f64>>> {
    let raster = slci::pnm::read_image::<f64>(path)
        .with_context(|| format!("reading image {}", path.display()))?;
    Ok(raster.planes)
}

fn cmd_sense(args: SenseArgs) -> anyhow::Result<()> {
    if args.physical && args.noise_sigma != 0.0 {
        bail!(slci::Error::InvalidArgument(
            "--noise-sigma applies to the ideal model only".into(),
        ));
    }
    let planes = read_planes(&args.image)?;
    let (w, h) = (planes[0].width(), planes[0].height());
    let op = HadamardOperator::<f64>::build(w, h, args.csr, args.seed)?;
    let noise_seed = args.noise_seed.unwrap_or(args.seed);

    let channels: Vec<MeasurementVector<f64>> = if args.physical {
        let cal = CalibrationModel::new(args.g, args.f)?;
        planes
            .iter()
            .map(|p| sense_physical(&op, p, &cal))
            .collect::<Result<_, _>>()?
    } else if planes.len() == 3 {
        let rgb: [ImagePlane<f64>; 3] = [
            planes[0].clone(),
            planes[1].clone(),
            planes[2].clone(),
        ];
        sense_rgb_ideal(&op, &rgb, args.noise_sigma, noise_seed)?.into()
    } else {
        vec![sense_ideal(&op, &planes[0], args.noise_sigma, noise_seed)?]
    };
    slci::measfile::write_measurements(&args.out, &channels)?;

    let mut manifest = RunManifest::new(
        "sense",
        Some(&args.image),
        json!({
            "width": w,
            "height": h,
            "channels": channels.len(),
            "csr": args.csr,
            "measurements": op.measurement_count(),
            "seed": args.seed,
            "noise_sigma": args.noise_sigma,
            "noise_seed": noise_seed,
            "physical": args.physical,
            "g": args.physical.then_some(args.g),
            "f": args.physical.then_some(args.f),
        }),
    );
    manifest.record_output(&args.out);
    manifest.write_sidecar(&args.out)?;
    println!(
        "sensed {}x{}x{} -> {} measurements/channel ({})",
        w,
        h,
        channels.len(),
        op.measurement_count(),
        args.out.display()
    );
    Ok(())
}

fn resolve_variant(args: &ReconstructArgs) -> Variant {
    match args.variant {
        VariantArg::Slope => Variant::Slope { xi: args.xi },
        VariantArg::Gap => Variant::Gap,
        VariantArg::Ist => Variant::Ist { eta: args.eta },
        VariantArg::Admm => Variant::Admm { b: args.b },
    }
}

/// Sequential fallback for SLCI_THREADS=1; threaded per-channel otherwise.
fn solve_channels(
    op: &HadamardOperator<f64>,
    channels: &[MeasurementVector<f64>],
    cfg: &SolverConfig<f64>,
    truths: Option<&[ImagePlane<f64>]>,
) -> anyhow::Result<Vec<(ImagePlane<f64>, IterationTrace)>> {
    let sequential = std::env::var("SLCI_THREADS").is_ok_and(|v| v.trim() == "1");
    if sequential || channels.len() == 1 {
        channels
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let mut cfg_c = cfg.clone();
                if let Some(t) = truths {
                    cfg_c.ground_truth = Some(t[i].clone());
                }
                Ok(solve(op, y, &cfg_c)?)
            })
            .collect()
    } else {
        Ok(slci::solver::solve_rgb(op, channels, cfg, truths)?)
    }
}

fn cmd_reconstruct(args: ReconstructArgs) -> anyhow::Result<()> {
    let raw = slci::measfile::read_measurements::<f64>(&args.measurements)
        .with_context(|| format!("reading {}", args.measurements.display()))?;
    let meta = raw[0].meta.clone();
    let op = meta.rebuild_operator::<f64>()?;

    let channels: Vec<MeasurementVector<f64>> = match meta.calibration {
        CalibrationTag::Ideal => raw,
        CalibrationTag::Physical { g, f } => {
            let cal = CalibrationModel::new(g, f)?;
            raw.iter()
                .map(|z| calibrate(z, &cal, &op))
                .collect::<Result<_, _>>()?
        }
    };

    let truths = match &args.truth {
        Some(path) => {
            let planes = read_planes(path)?;
            if planes.len() != channels.len() {
                bail!(slci::Error::InvalidArgument(format!(
                    "reference has {} channels, measurements have {}",
                    planes.len(),
                    channels.len()
                )));
            }
            Some(planes)
        }
        None => None,
    };

    let cfg = SolverConfig {
        variant: resolve_variant(&args),
        max_iter: args.iters,
        patch_edge: args.patch,
        stride: args.stride,
        clusters: args.clusters,
        cluster_seed: meta.permutation_seed,
        stack_dct: args.stack_dct,
        keep_mode: match args.keep_mode {
            KeepModeArg::CsrProportional => KeepMode::CsrProportional,
            KeepModeArg::FixedFraction => KeepMode::FixedFraction(args.keep_fraction),
        },
        early_stop: args.early_stop,
        ground_truth: None,
    };
    if args.bits != 8 && args.bits != 16 {
        bail!(slci::Error::InvalidArgument("--bits must be 8 or 16".into()));
    }

    let results = solve_channels(&op, &channels, &cfg, truths.as_deref())?;
    let planes: Vec<ImagePlane<f64>> = results.iter().map(|(img, _)| img.clone()).collect();
    let maxval = if args.bits == 16 { 65535 } else { 255 };
    slci::pnm::write_image(&args.out, &planes, maxval)?;

    let mut trace_paths = Vec::new();
    if let Some(base) = &args.trace {
        for (i, (_, trace)) in results.iter().enumerate() {
            let path = if results.len() == 1 {
                base.clone()
            } else {
                let mut name = base.as_os_str().to_os_string();
                name.push(format!(".ch{i}"));
                PathBuf::from(name)
            };
            std::fs::write(&path, trace.to_csv())?;
            trace_paths.push(path);
        }
    }

    let mut manifest = RunManifest::new(
        "reconstruct",
        Some(&args.measurements),
        json!({
            "variant": match args.variant {
                VariantArg::Slope => "slope",
                VariantArg::Gap => "gap",
                VariantArg::Ist => "ist",
                VariantArg::Admm => "admm",
            },
            "step": cfg.variant.step(),
            "iters": args.iters,
            "patch": args.patch,
            "stride": args.stride,
            "clusters": args.clusters,
            "stack_dct": args.stack_dct,
            "keep_mode": match args.keep_mode {
                KeepModeArg::CsrProportional => "csr-proportional",
                KeepModeArg::FixedFraction => "fixed-fraction",
            },
            "keep_fraction": matches!(args.keep_mode, KeepModeArg::FixedFraction)
                .then_some(args.keep_fraction),
            "early_stop": args.early_stop,
            "bits": args.bits,
            "csr": meta.csr(),
            "pattern_seed": meta.permutation_seed,
            "truth": args.truth,
        }),
    );
    manifest.record_output(&args.out);
    for p in &trace_paths {
        manifest.record_output(p);
    }
    manifest.write_sidecar(&args.out)?;

    let iters_run = results[0].1.records.len();
    println!(
        "reconstructed {} channel(s), {} iterations ({})",
        results.len(),
        iters_run,
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> anyhow::Result<()> {
    let rec = read_planes(&args.reconstruction)?;
    let truth = read_planes(&args.truth)?;
    if rec.len() != truth.len() {
        bail!(slci::Error::InvalidArgument(format!(
            "channel count mismatch: {} vs {}",
            rec.len(),
            truth.len()
        )));
    }
    let fmt = |db: Option<f64>| db.map_or("inf".to_string(), |v| format!("{v:.4}"));
    if rec.len() == 1 {
        let report = psnr(&rec[0], &truth[0])?;
        println!("mse {:.6e}  psnr {} dB", report.mse, fmt(report.psnr_db));
    } else {
        let (per_channel, aggregate) = psnr_rgb(&rec, &truth)?;
        for (i, r) in per_channel.iter().enumerate() {
            println!("channel {i}: mse {:.6e}  psnr {} dB", r.mse, fmt(r.psnr_db));
        }
        println!(
            "aggregate: mse {:.6e}  psnr {} dB",
            aggregate.mse,
            fmt(aggregate.psnr_db)
        );
    }
    Ok(())
}

fn cmd_demo(args: DemoArgs) -> anyhow::Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let ratios: &[f64] = if args.csr_sweep {
        &[0.05, 0.1, 0.2, 0.3]
    } else {
        std::slice::from_ref(&args.csr)
    };
    let steps = [0.5, 1.0, 1.5, 2.0];
    let truth = synthetic_scene::<f64>(args.size, args.size, args.seed);
    let mut manifest = RunManifest::new(
        "demo",
        None,
        json!({
            "size": args.size,
            "seed": args.seed,
            "iters": args.iters,
            "csr_values": ratios,
            "xi_values": steps,
        }),
    );

    let mut first_csv: Option<PathBuf> = None;
    for &csr in ratios {
        let op = HadamardOperator::<f64>::build(args.size, args.size, csr, args.seed)?;
        let y = sense_ideal(&op, &truth, 0.0, args.seed)?;
        let mut traces = Vec::new();
        for &xi in &steps {
            let cfg = SolverConfig {
                variant: Variant::Slope { xi },
                max_iter: args.iters,
                ground_truth: Some(truth.clone()),
                ..SolverConfig::default()
            };
            let (_, trace) = solve(&op, &y, &cfg)?;
            traces.push(trace);
        }

        // one row per iteration, error and PSNR column pair per step size;
        // the xi = 2 pair is labeled: monotone decrease is unproven there
        let mut csv = String::from("k");
        for (&xi, trace) in steps.iter().zip(&traces) {
            let tag = if trace.monotone_not_guaranteed {
                "_not_guaranteed_monotone"
            } else {
                ""
            };
            csv.push_str(&format!(",error_xi{xi}{tag},psnr_xi{xi}{tag}"));
        }
        csv.push('\n');
        for k in 0..traces[0].records.len() {
            csv.push_str(&format!("{}", k + 1));
            for trace in &traces {
                let r = &trace.records[k];
                csv.push_str(&format!(
                    ",{:.10e},{:.4}",
                    r.error.unwrap_or(f64::NAN),
                    r.psnr.unwrap_or(f64::NAN)
                ));
            }
            csv.push('\n');
        }
        let path = args.out.join(format!("demo_csr{csr:.2}.csv"));
        std::fs::write(&path, csv)?;
        manifest.record_output(&path);
        if first_csv.is_none() {
            first_csv = Some(path.clone());
        }

        for (&xi, trace) in steps.iter().zip(&traces) {
            let last = trace.records.last().expect("at least one iteration");
            println!(
                "csr={csr} xi={xi}: final error {:.4e}, psnr {:.2} dB",
                last.error.unwrap_or(f64::NAN),
                last.psnr.unwrap_or(f64::NAN)
            );
        }
    }
    let primary = first_csv.expect("at least one ratio");
    manifest.write_sidecar(&primary)?;
    Ok(())
}
