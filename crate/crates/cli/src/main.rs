use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gfm_cli::{
    cmd_bode, cmd_calibrate, cmd_compare, cmd_simulate, cmd_synth, CliError, ControllerChoice,
    ProjectConfig,
};

/// Robust voltage control of single-phase grid-forming inverters.
///
/// Exit codes: 0 success, 1 output I/O failure, 2 configuration error,
/// 3 synthesis or design infeasible, 4 simulation divergence,
/// 5 comparison verdict failure.
#[derive(Parser)]
#[command(name = "gfm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON project configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed recorded in reports, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize, reduce and verify the H-infinity controller.
    Synth,
    /// Search the weight gains for a feasible design.
    Calibrate,
    /// Simulate the event schedule with one controller.
    Simulate {
        /// `hinf`, `baseline` or a controller JSON file.
        #[arg(long, default_value = "hinf")]
        controller: String,
    },
    /// Compare H-infinity against the baseline or a controller file.
    Compare {
        #[arg(long)]
        controller: Option<PathBuf>,
    },
    /// Export Bode data of the H-infinity design or a controller file.
    Bode {
        #[arg(long)]
        controller: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ProjectConfig::read(path)?,
        None => ProjectConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let report = match &cli.command {
        Command::Synth => cmd_synth(&cfg)?,
        Command::Calibrate => cmd_calibrate(&cfg)?,
        Command::Simulate { controller } => {
            cmd_simulate(&cfg, &ControllerChoice::parse(controller))?
        }
        Command::Compare { controller } => cmd_compare(&cfg, controller.as_deref())?,
        Command::Bode { controller } => cmd_bode(&cfg, controller.as_deref())?,
    };
    let mut text = report.summary;
    for f in &report.files {
        text.push_str(&format!("\nwrote {}", f.display()));
    }
    Ok(text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            println!("{}", text);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gfm: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}
