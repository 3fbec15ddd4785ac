//! Command-line driver: loads a scenario file and runs the simulate /
//! image / null / deblur pipelines, writing CSV, PGM, and JSON artifacts.
//!
//! Exit codes: 0 success, 1 runtime or solver failure, 2 input error
//! (bad flags, unreadable or invalid scenario, missing scenario section).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod commands;
mod scenario;

use commands::RunContext;
use scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "doptomo",
    about = "Doppler tomography of rotating scenes: simulation, imaging, point nulls, deblurring"
)]
struct Cli {
    /// Path to the scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,

    /// Seed for the run's random generator (noise is the only stochastic
    /// element; identical seeds give byte-identical artifacts).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory (overrides the scenario's `output` field).
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the trace and write trace.csv plus spectrogram artifacts.
    Simulate,
    /// Backproject the trace and write image artifacts plus peaks.json.
    Image,
    /// Solve phase offsets for the scenario's nulls and write adapted
    /// images, cuts, and null_report.json.
    Null,
    /// Blur the trace with the scenario kernel, recover it by least
    /// squares, and write before/after artifacts.
    Deblur,
    /// Run every pipeline whose scenario section is present.
    All,
}

fn load_inputs(cli: &Cli) -> Result<RunContext, anyhow::Error> {
    let scenario = Scenario::load(&cli.scenario)?;
    // Validate the scene eagerly so schema and value errors are input
    // errors regardless of subcommand.
    scenario.scene_config()?;
    let out_dir = cli
        .out
        .clone()
        .or_else(|| scenario.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(RunContext {
        scenario,
        out_dir,
        seed: cli.seed,
        rng: ChaCha8Rng::seed_from_u64(cli.seed),
    })
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    let mut ctx = load_inputs(&cli).map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })?;

    // Missing sections required by an explicit subcommand are input errors.
    let section_check: Result<(), anyhow::Error> = match cli.command {
        Command::Null => ctx.scenario.null_targets().map(|_| ()),
        Command::Deblur => ctx.scenario.blur_kernel().map(|_| ()),
        _ => Ok(()),
    };
    section_check.map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(2)
    })?;

    std::fs::create_dir_all(&ctx.out_dir).map_err(|e| {
        eprintln!("error: cannot create output directory: {e}");
        ExitCode::from(1)
    })?;

    let result = match cli.command {
        Command::Simulate => commands::cmd_simulate(&mut ctx),
        Command::Image => commands::cmd_image(&mut ctx),
        Command::Null => commands::cmd_null(&mut ctx),
        Command::Deblur => commands::cmd_deblur(&mut ctx),
        Command::All => commands::cmd_all(&mut ctx),
    };
    result.map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
