use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    qbm_core::cli::run(qbm_core::cli::Cli::parse())
}
