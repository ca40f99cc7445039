use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use lccp_cli::{run, Cli, EXIT_USAGE};

/// Caps the worker pool when set.
const THREADS_VAR: &str = "LCCP_THREADS";

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(value) = std::env::var(THREADS_VAR) {
        match value.parse::<usize>() {
            Ok(threads) if threads > 0 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global()
                    .expect("global pool configured once");
            }
            _ => {
                eprintln!("error: {THREADS_VAR} must be a positive integer, got {value:?}");
                return ExitCode::from(EXIT_USAGE as u8);
            }
        }
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    };
    let _ = out.flush();
    ExitCode::from(code as u8)
}
