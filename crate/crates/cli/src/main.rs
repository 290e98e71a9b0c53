use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use phasenoise_cli::{configure_threads, emit, execute, Cli, THREADS_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = configure_threads(std::env::var(THREADS_ENV).ok().as_deref())
        .and_then(|()| execute(&cli))
        .and_then(|out| {
            for line in &out.diagnostics {
                eprintln!("{line}");
            }
            emit(&out, cli.output.as_deref(), &mut std::io::stdout().lock())
        });
    eprintln!("elapsed_s = {:.3}", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
