use std::process::ExitCode;

use clap::Parser;

use inview::cli::{self, Cli, LOG_ENV};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("inview: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
