use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use measured_chaos::harness::{presets, run_experiment, validate_config, Task};
use measured_chaos::{Error, Result};

/// Simulate continuously measured quantum, Gaussian-closure and classical
/// dynamics, and write CSV/SVG artifacts with a JSON manifest.
#[derive(Parser)]
#[command(name = "measured-chaos", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write trajectory.csv.
    Simulate(Common),
    /// Run the averaged-divergence Lyapunov protocol.
    Lyapunov(Common),
    /// Record a stroboscopic map (one sample per drive period).
    Strobe(Common),
    /// Write Wigner functions at the configured times (sse / wigner-grid).
    WignerSnapshot(Common),
    /// Evaluate the classicality inequalities for the configured system.
    CheckClassicality(Common),
    /// List the bundled presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct Common {
    /// Configuration file (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Name of a bundled configuration.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(common: &Common) -> Result<String> {
    match (&common.config, &common.preset) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|e| Error::io(path, e)),
        (None, Some(name)) => presets::preset(name).map(str::to_owned).ok_or_else(|| {
            let known: Vec<_> = presets::names().collect();
            Error::config("--preset", format!("unknown preset `{name}`; known: {}", known.join(", ")))
        }),
        (None, None) => Err(Error::config("--config", "give --config or --preset")),
    }
}

fn execute(task: Task, common: &Common) -> Result<()> {
    let mut cfg = validate_config(&load(common)?)?;
    cfg.task = task;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    let art = run_experiment(&cfg)?;
    println!("{}: {} -> {}", task.name(), art.manifest.status, art.dir.display());
    for a in &art.manifest.artifacts {
        println!("  {} ({} bytes)", a.file, a.bytes);
    }
    if task != Task::Simulate {
        println!(
            "{}",
            serde_json::to_string_pretty(&art.manifest.results).unwrap_or_default()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, common) = match &cli.command {
        Command::Simulate(c) => (Task::Simulate, c),
        Command::Lyapunov(c) => (Task::Lyapunov, c),
        Command::Strobe(c) => (Task::Strobe, c),
        Command::WignerSnapshot(c) => (Task::WignerSnapshot, c),
        Command::CheckClassicality(c) => (Task::CheckClassicality, c),
        Command::Presets { name } => {
            match name {
                None => presets::names().for_each(|n| println!("{n}")),
                Some(n) => match presets::preset(n) {
                    Some(text) => print!("{text}"),
                    None => {
                        eprintln!("error: unknown preset `{n}`");
                        return ExitCode::from(2);
                    }
                },
            }
            return ExitCode::SUCCESS;
        }
    };
    match execute(task, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
