//! `teamrep`: command-line front end.
//!
//! Exit codes: 0 ok, 1 input error, 2 empty result, 3 numeric
//! non-convergence. Log verbosity comes from `RUST_LOG`.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are input errors; exit 2 is reserved for empty results.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();

    let format = cli.format;
    let outcome = match &cli.command {
        Command::Ingest(a) => commands::ingest(a, format),
        Command::Recommend(a) => commands::recommend(a, format),
        Command::Whatif(a) => commands::whatif(a, format),
        Command::Kernel(a) => commands::kernel(a, format),
        Command::Bench(a) => commands::bench(a, format),
        Command::Report(a) => commands::report(a, format),
        Command::Generate(a) => commands::generate(a, format),
        Command::Serve(a) => commands::serve_command(a),
    };
    match outcome {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
