//! The simulate / image / null / deblur pipelines and their artifacts.

use std::path::PathBuf;

use anyhow::Context;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use doptomo::io;
use doptomo::prelude::*;

use crate::scenario::{ImagingGrid, Scenario};

pub struct RunContext {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub rng: ChaCha8Rng,
}

impl RunContext {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Synthesizes the scenario trace, applying scene noise from the run RNG.
fn build_trace(ctx: &mut RunContext, cfg: &SceneConfig) -> anyhow::Result<SignalTrace> {
    let clean = synthesize_trace(cfg, ctx.scenario.range_model());
    Ok(add_noise(
        &clean,
        ctx.scenario.scene.noise_sigma,
        &mut ctx.rng,
    )?)
}

/// Spectrogram window: 256 samples (or the largest power of two not
/// exceeding the trace length, when shorter), 50% hop.
fn spectrogram_params(p: usize) -> (usize, usize) {
    let pow2 = if p.is_power_of_two() {
        p
    } else {
        p.next_power_of_two() / 2
    };
    let window = 256usize.min(pow2).max(2);
    (window, (window / 2).max(1))
}

fn backproject_grid(trace: &SignalTrace, grid: &ImagingGrid) -> ComplexImage {
    match grid {
        ImagingGrid::Cartesian(g) => backproject_cartesian(trace, g),
        ImagingGrid::Polar(g) => backproject_polar(trace, g),
    }
}

fn write_image_artifacts(ctx: &RunContext, stem: &str, image: &ComplexImage) -> anyhow::Result<()> {
    io::write_image_csv(ctx.path(&format!("{stem}.csv")), image)?;
    io::write_image_pgm(
        ctx.path(&format!("{stem}.pgm")),
        ctx.path(&format!("{stem}.json")),
        image,
    )?;
    Ok(())
}

/// `simulate`: trace.csv plus spectrogram CSV/PGM.
pub fn cmd_simulate(ctx: &mut RunContext) -> anyhow::Result<()> {
    let cfg = ctx.scenario.scene_config()?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let trace = build_trace(ctx, &cfg)?;
    io::write_trace_csv(ctx.path("trace.csv"), &trace)?;

    let (window, hop) = spectrogram_params(trace.len());
    let sg = spectrogram(&trace, window, hop)?;
    io::write_spectrogram_csv(ctx.path("spectrogram.csv"), &sg)?;
    io::write_spectrogram_pgm(
        ctx.path("spectrogram.pgm"),
        ctx.path("spectrogram.json"),
        &sg,
    )?;
    println!(
        "simulate: {} samples, spectrogram {} frames x {} bins -> {}",
        trace.len(),
        sg.frames(),
        sg.bins(),
        ctx.out_dir.display()
    );
    Ok(())
}

/// `image`: image CSV/PGM plus peaks.json (local maxima above -20 dB).
pub fn cmd_image(ctx: &mut RunContext) -> anyhow::Result<()> {
    let cfg = ctx.scenario.scene_config()?;
    let trace = build_trace(ctx, &cfg)?;
    let grid = ctx.scenario.imaging_grid(&cfg)?;
    let image = backproject_grid(&trace, &grid);
    write_image_artifacts(ctx, "image", &image)?;

    let peaks = local_peaks(&image, -20.0);
    let peaks_json = json!({
        "threshold_db": -20.0,
        "peaks": peaks.iter().map(|p| json!({
            "x_m": p.x,
            "y_m": p.y,
            "mag_db": p.mag_db,
        })).collect::<Vec<_>>(),
    });
    std::fs::write(
        ctx.path("peaks.json"),
        serde_json::to_string_pretty(&peaks_json)?,
    )?;
    println!(
        "image: {} x {} cells, {} local peaks above -20 dB -> {}",
        image.rows(),
        image.cols(),
        peaks.len(),
        ctx.out_dir.display()
    );
    Ok(())
}

/// `null`: per-target phase offsets, adapted images, cuts through peak and
/// null, and null_report.json.
pub fn cmd_null(ctx: &mut RunContext) -> anyhow::Result<()> {
    let cfg = ctx.scenario.scene_config()?;
    let targets = ctx.scenario.null_targets()?;
    let joint = ctx.scenario.nulls.as_ref().is_some_and(|n| n.joint);
    let trace = build_trace(ctx, &cfg)?;
    let grid = ctx.scenario.verification_grid(&cfg)?;

    // Each solve is one NullSpec: all targets jointly, or one per target.
    let solves: Vec<Vec<NullTarget>> = if joint {
        vec![targets.clone()]
    } else {
        targets.iter().map(|t| vec![*t]).collect()
    };

    let mut report_entries = Vec::new();
    for (si, solve_targets) in solves.iter().enumerate() {
        let label = if joint {
            "joint".to_string()
        } else {
            format!("{}", si + 1)
        };
        let nulls = NullSpec::new(solve_targets.clone())?;
        let sm = build_steering(&trace, &nulls)?;
        let phi = solve_phase_offset(&sm, cfg.delta_theta())?;
        io::write_phase_csv(ctx.path(&format!("phi_{label}.csv")), trace.theta(), &phi)?;

        let adapted = apply_phase_offset(&trace, &phi)?;
        let adapted_image = backproject_cartesian(&adapted, &grid);
        write_image_artifacts(ctx, &format!("adapted_image_{label}"), &adapted_image)?;

        let verification = verify_null(&trace, &phi, &nulls, &grid)?;

        // Cut along the line through the image peak and each null.
        let peak = verification.pre_peak;
        for (ti, target) in solve_targets.iter().enumerate() {
            let d0 = ((target.x() - peak.x).powi(2) + (target.y() - peak.y).powi(2)).sqrt();
            if d0 > 0.0 {
                let spacing = grid.spacing();
                let pre_cut = line_cut(
                    &trace,
                    (peak.x, peak.y),
                    (target.x(), target.y()),
                    1.25 * d0,
                    spacing,
                )?;
                let post_cut = line_cut(
                    &adapted,
                    (peak.x, peak.y),
                    (target.x(), target.y()),
                    1.25 * d0,
                    spacing,
                )?;
                let cut_name = if solve_targets.len() == 1 {
                    format!("cut_{label}.csv")
                } else {
                    format!("cut_{label}_{}.csv", ti + 1)
                };
                io::write_cut_csv(
                    ctx.path(&cut_name),
                    &pre_cut.offsets,
                    &[
                        ("original_db", pre_cut.db().as_slice()),
                        ("adapted_db", post_cut.db().as_slice()),
                    ],
                )?;
            }
        }

        for (target, check) in solve_targets.iter().zip(&verification.checks) {
            report_entries.push(json!({
                "solve": label,
                "target": {
                    "x_m": target.x(),
                    "y_m": target.y(),
                    "r_m": target.r(),
                    "nu_rad": target.nu(),
                },
                "pre_db": check.pre_db,
                "post_db": check.post_db,
                "suppression_db": check.pre_db - check.post_db,
                "peak_shift_cells": verification.peak_shift_cells,
                "peak_drop_db": verification.peak_drop_db,
                "phi_peak_to_peak_rad": phi.peak_to_peak(),
            }));
        }
        println!(
            "null[{label}]: phi p2p {:.4} rad, suppression {:.1} dB, peak shift {} cells",
            phi.peak_to_peak(),
            verification.checks[0].pre_db - verification.checks[0].post_db,
            verification.peak_shift_cells
        );
    }

    let report = json!({ "joint": joint, "nulls": report_entries });
    std::fs::write(
        ctx.path("null_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(())
}

/// `deblur`: kernel, blurred/deblurred traces, before/after images, radial
/// cuts through the peak, and deblur_report.json.
pub fn cmd_deblur(ctx: &mut RunContext) -> anyhow::Result<()> {
    let cfg = ctx.scenario.scene_config()?;
    let kernel = ctx.scenario.blur_kernel()?;
    let (noise_sigma, ridge, kernel_sigma, kernel_gain) = {
        let section = ctx.scenario.blur.as_ref().expect("checked by blur_kernel");
        (
            section.noise_sigma,
            section.ridge,
            section.kernel.sigma_samples,
            section.kernel.gain,
        )
    };

    let trace = build_trace(ctx, &cfg)?;
    io::write_kernel_csv(ctx.path("kernel.csv"), &kernel)?;

    let blurred = blur(&trace, &kernel, noise_sigma, &mut ctx.rng)?;
    io::write_blurred_trace_csv(ctx.path("blurred_trace.csv"), &blurred)?;
    io::write_blurred_trace_sidecar(ctx.path("blurred_trace.json"), &blurred)?;

    let deblurred = deblur_ls(&blurred, &kernel, ridge)?;
    io::write_trace_csv(ctx.path("deblurred_trace.csv"), &deblurred)?;

    let grid = ctx.scenario.verification_grid(&cfg)?;
    let clean_image = backproject_cartesian(&trace, &grid);
    let blurred_image = backproject_cartesian(&blurred.centered_trace()?, &grid);
    let deblurred_image = backproject_cartesian(&deblurred, &grid);
    write_image_artifacts(ctx, "image_clean", &clean_image)?;
    write_image_artifacts(ctx, "image_blurred", &blurred_image)?;
    write_image_artifacts(ctx, "image_deblurred", &deblurred_image)?;

    // Radial cuts through the clean peak (toward the rotation axis).
    let peak = clean_image.peak();
    if peak.x != 0.0 || peak.y != 0.0 {
        let half = 1.25 * (peak.x.powi(2) + peak.y.powi(2)).sqrt();
        let spacing = grid.spacing();
        let clean_cut = line_cut(&trace, (peak.x, peak.y), (0.0, 0.0), half, spacing)?;
        let blurred_cut = line_cut(
            &blurred.centered_trace()?,
            (peak.x, peak.y),
            (0.0, 0.0),
            half,
            spacing,
        )?;
        let deblurred_cut = line_cut(&deblurred, (peak.x, peak.y), (0.0, 0.0), half, spacing)?;
        let (clean_db, blurred_db, deblurred_db) =
            (clean_cut.db(), blurred_cut.db(), deblurred_cut.db());
        io::write_cut_csv(
            ctx.path("deblur_cuts.csv"),
            &clean_cut.offsets,
            &[
                ("clean_db", clean_db.as_slice()),
                ("blurred_db", blurred_db.as_slice()),
                ("deblurred_db", deblurred_db.as_slice()),
            ],
        )?;
    }

    // Residual and recovery figures.
    let z = build_convolution_matrix(&kernel, trace.len())?;
    let zs = z.mul_vec(deblurred.samples())?;
    let residual_norm: f64 = zs
        .iter()
        .zip(blurred.samples())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let num: f64 = deblurred
        .samples()
        .iter()
        .zip(trace.samples())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = trace
        .samples()
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let recovery_rel_error = num / den.max(1e-300);

    let report = json!({
        "kernel": {
            "length": kernel.len(),
            "sigma_samples": kernel_sigma,
            "gain": kernel_gain,
        },
        "noise_sigma": noise_sigma,
        "ridge": ridge,
        "residual_norm": residual_norm,
        "recovery_rel_error": recovery_rel_error,
    });
    std::fs::write(
        ctx.path("deblur_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    println!(
        "deblur: L={} sigma={} residual {:.3e}, recovery rel err {:.3e} -> {}",
        kernel.len(),
        kernel_sigma,
        residual_norm,
        recovery_rel_error,
        ctx.out_dir.display()
    );
    Ok(())
}

/// `all`: every pipeline whose scenario section is present.
pub fn cmd_all(ctx: &mut RunContext) -> anyhow::Result<()> {
    cmd_simulate(ctx).context("simulate")?;
    reset_rng(ctx);
    cmd_image(ctx).context("image")?;
    if ctx.scenario.nulls.is_some() {
        reset_rng(ctx);
        cmd_null(ctx).context("null")?;
    } else {
        println!("all: no `nulls` section, skipping null synthesis");
    }
    if ctx.scenario.blur.is_some() {
        reset_rng(ctx);
        cmd_deblur(ctx).context("deblur")?;
    } else {
        println!("all: no `blur` section, skipping deblur");
    }
    Ok(())
}

/// Rewinds the RNG so each sub-pipeline of `all` sees the same stream it
/// would see when run as its own subcommand.
fn reset_rng(ctx: &mut RunContext) {
    use rand::SeedableRng;
    ctx.rng = ChaCha8Rng::seed_from_u64(ctx.seed);
}
