use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use tailwave_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TAILWAVE_LOG", "warn")).init();
    let start = Instant::now();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("tailwave: {e}");
            e.exit_code()
        }
    };
    // Timing stays out of the report so reports are reproducible.
    log::info!("finished in {:.3?} with status {code}", start.elapsed());
    ExitCode::from(code)
}
