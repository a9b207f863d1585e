mod commands;
mod config;
mod output;
mod svg;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

/// Linear stability runs for boundary-layer shear profiles.
#[derive(Parser)]
#[command(name = "shearlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Override one config value, e.g. `--set evolve.dt=0.02` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory (beats output.dir and $SHEARLAB_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<String>,
    /// Shorthand for `--set profile.name=...`.
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Also write SVG plots where the command has any.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Limiting dispersion scan over the wavenumber.
    Dispersion,
    /// Rayleigh point spectrum or Orr–Sommerfeld collocation spectrum.
    Spectrum,
    /// Single-mode time evolution (euler, ns, or contour vs stepper).
    Evolve,
    /// Layer scale table for an instability scenario.
    Cascade,
    /// Green function dump for the Rayleigh or Orr–Sommerfeld operator.
    Green,
    /// Heat flow of the background profile.
    Profile,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Cascade => "cascade",
            Command::Green => "green",
            Command::Profile => "profile",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut sets = Vec::new();
    if let Some(p) = &cli.profile {
        sets.push(format!("profile.name={p}"));
    }
    if cli.svg {
        sets.push("output.svg=true".into());
    }
    sets.extend(cli.sets.iter().cloned());
    let name = cli.command.name();
    let result = config::load(cli.config.as_deref(), &sets)
        .map_err(commands::CliError::from)
        .and_then(|cfg| commands::run(name, &cfg, cli.out.as_deref()));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record(name));
            ExitCode::from(e.exit_code())
        }
    }
}
