mod artifacts;
mod audit;
mod config;
mod error;
mod game;
mod run;
mod setup;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use error::CliError;
use setup::AuditSettings;

#[derive(Parser)]
#[command(
    name = "bria",
    version,
    about = "Simulation lab for bounded rational inductive agents"
)]
struct Cli {
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for both the environment and the agent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one agent in one environment.
    Run { config: PathBuf },
    /// Re-audit a run directory.
    Audit {
        dir: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        tail: f64,
        /// A number, or `auto` for the final total allowance.
        #[arg(long, default_value = "auto")]
        margin: String,
    },
    /// Play a two-player game.
    Game {
        game: PathBuf,
        #[arg(long, value_enum)]
        mode: game::Mode,
        config: PathBuf,
    },
    /// Run a config once per value of one key.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`
        #[arg(long)]
        axis: String,
    },
}

fn load(path: &std::path::Path, cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = Config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.set("env.seed", seed.to_string());
        cfg.set("agent.seed", seed.to_string());
    }
    if let Some(out) = &cli.out {
        cfg.set("output.dir", out.to_string_lossy());
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Run { config } => Ok(run::execute(&load(config, cli)?)?.rendered),
        Command::Audit { dir, tail, margin } => {
            let settings = AuditSettings::parse(*tail, margin).map_err(CliError::Validation)?;
            audit::execute(dir, settings, cli.out.clone())
        }
        Command::Game { game, mode, config } => {
            let mut cfg = load(config, cli)?;
            // Game runs have no environment.
            if cli.seed.is_some() {
                cfg.unset("env.seed");
            }
            game::execute(game, *mode, &cfg)
        }
        Command::Sweep { config, axis } => sweep::execute(&load(config, cli)?, axis),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
