mod algos;
mod commands;
mod out;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Exit status contract.
pub const EXIT_OK: u8 = 0;
pub const EXIT_MISMATCH: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "loa", version, about = "Learned quasi-Newton optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Root seed; every random draw derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write problem manifests for training, testing and transfer runs.
    GenData(commands::GenDataArgs),
    /// Train the prediction network against the BFGS reference.
    Train(commands::TrainArgs),
    /// Compare trained weights with BFGS on a problem set.
    Eval(commands::EvalArgs),
    /// Run several algorithms on a problem set and record trajectories.
    Bench(commands::BenchArgs),
    /// Reproduce the invariance table and compare it with the expected one.
    EquivCheck(commands::EquivArgs),
    /// Render charts and a Markdown summary from earlier outputs.
    Report(commands::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Bench(a) => commands::bench(&a),
        Command::EquivCheck(a) => commands::equiv_check(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
