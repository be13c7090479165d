use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rodheat_cli::{commands, CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "rodheat",
    version,
    about = "Heat conduction in a rod: simulation, sensitivity and diffusivity estimation"
)]
struct Cli {
    /// Run configuration file (`key = value` lines).
    #[arg(short, long, global = true, default_value = "rodheat.conf")]
    config: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Temperature field and probe histories as CSV.
    Simulate {
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Sensitivity to alpha2, field and probe histories as CSV.
    Sensitivity {
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Least-squares estimate of alpha2 from point measurements.
    Estimate {
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Nearest catalog material to an estimated alpha2.
    Identify {
        #[arg(long)]
        alpha2_hat: f64,
    },
    /// Stability parameter of the explicit scheme.
    Stability {
        /// Run the ungated recurrence for this many steps.
        #[arg(long)]
        demo_steps: Option<usize>,
    },
    /// Effective configuration with defaults filled in.
    ShowConfig,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Simulate { out: dir } => commands::simulate(&cfg, &dir, &mut out),
        Command::Sensitivity { out: dir } => commands::sensitivity(&cfg, &dir, &mut out),
        Command::Estimate { out: dir } => commands::estimate(&cfg, &dir, &mut out).map(|_| ()),
        Command::Identify { alpha2_hat } => commands::identify(&cfg, alpha2_hat, &mut out),
        Command::Stability { demo_steps } => commands::stability(&cfg, demo_steps, &mut out),
        Command::ShowConfig => commands::show_config(&cfg, &mut out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
