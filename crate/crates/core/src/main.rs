use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use design_certify::cli::{run, RunConfig, EXIT_CONFIG};

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("DESIGN_CERTIFY_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                // Only fails if a pool already exists, which cannot happen here.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: DESIGN_CERTIFY_THREADS must be a positive integer, got {threads:?}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        }
    }
    let config = match RunConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(&config) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            for m in &out.messages {
                eprintln!("{m}");
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
