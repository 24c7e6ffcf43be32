mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Ok(t) = std::env::var("COURSETIME_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                coursetime::par::init_thread_pool(n);
            }
            _ => {
                eprintln!("error: COURSETIME_THREADS must be a positive integer, got `{t}`");
                return ExitCode::from(1);
            }
        }
    }
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
