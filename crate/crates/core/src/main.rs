use std::process::ExitCode;

use clap::Parser;

use qesprob::cli::{run_estimate, Cli, Command, RunConfig};
use qesprob::selftest::run_selftest;
use qesprob::Error;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Estimate(args) => {
            let cfg = match RunConfig::try_from(args) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("qesprob: {e}");
                    return ExitCode::from(2);
                }
            };
            match run_estimate(&cfg) {
                Ok(run) => {
                    let s = &run.summary;
                    eprintln!(
                        "estimate {:.6} ± {:.6} over {} samples ({} excluded)",
                        s.estimate, s.std_error, s.n_total, s.n_excluded
                    );
                    ExitCode::SUCCESS
                }
                Err(Error::Io(e)) => {
                    eprintln!("qesprob: I/O failure: {e}");
                    ExitCode::from(3)
                }
                Err(e @ Error::InvalidConfig(_)) => {
                    eprintln!("qesprob: {e}");
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("qesprob: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Selftest => {
            let results = run_selftest();
            for r in &results {
                println!("{r}");
            }
            let failed: Vec<_> = results
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.name)
                .collect();
            if failed.is_empty() {
                println!("all {} checks passed", results.len());
                ExitCode::SUCCESS
            } else {
                eprintln!("failed: {}", failed.join(", "));
                ExitCode::FAILURE
            }
        }
    }
}
