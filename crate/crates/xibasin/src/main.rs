use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use xibasin::config::RunConfig;
use xibasin::error::Error;
use xibasin::experiments::{
    cmd_basins, cmd_experiment, cmd_solve, cmd_verify, cmd_voronoi, CmdOutput,
};

/// Root-finding and basin-of-attraction toolkit for meromorphic functions.
#[derive(Parser)]
#[command(name = "xibasin", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (key=value lines, # comments)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default: out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Permit the long-running experiment presets
    #[arg(long, global = true)]
    allow_long: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run trajectories from the configured seeds
    Solve,
    /// Sweep the grid and render basins of attraction
    Basins,
    /// Render the nearest-site diagram of the configured roots
    Voronoi,
    /// Sign-scan the critical line and/or count zeros in a rectangle
    Verify,
    /// Run a named preset (config key preset=...)
    Experiment,
}

fn run(cli: &Cli) -> Result<CmdOutput, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("missing required option --config".into()))?;
    let mut cfg = RunConfig::parse_file(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.explicit.insert("seed".into());
    }
    let out = match &cli.command {
        Command::Solve => cmd_solve(&cfg)?,
        Command::Basins => cmd_basins(&cfg)?,
        Command::Voronoi => cmd_voronoi(&cfg)?,
        Command::Verify => cmd_verify(&cfg)?,
        Command::Experiment => cmd_experiment(&cfg, cli.allow_long)?,
    };
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    out.write_to(&dir)?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::from(0)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                Error::Gated => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
