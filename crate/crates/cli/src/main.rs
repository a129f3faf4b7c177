//! `nlfreq`: batch front end for frequency-response sweeps of nonlinear systems.
//!
//! Exit status: 0 on success, 1 on a configuration or I/O error, 2 when any
//! grid point failed (the outputs are still written, with a status column).

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use crate::output::Format;
use crate::run::{Command, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "nlfreq", version, about = "Frequency response of periodically forced nonlinear systems")]
struct Cli {
    /// What to compute
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// Format of tabular outputs
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let config = match config::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    let workers = cli.workers.map_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()), |w| w as usize);
    let options = RunOptions { out: cli.out, workers, format: cli.format };
    match run::run(cli.command, &config, &options) {
        Ok(summary) => {
            if summary.failed > 0 {
                eprintln!("{} of {} point(s) failed; see the status column", summary.failed, summary.points);
            }
            eprintln!("wrote {} to {}", summary.files.join(", "), options.out.display());
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
    }
}
