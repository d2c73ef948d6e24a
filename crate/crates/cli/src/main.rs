use std::process::ExitCode;

use clap::Parser;
use rn_cli::{fetch_uci_breast_cancer, generate_runge_fixture, run, Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Some(Command::RungeFixture { path, n, dx }) => generate_runge_fixture(path, *n, *dx).map(|_| vec![path.clone()]),
        Some(Command::FetchUci { dest_dir }) => fetch_uci_breast_cancer(dest_dir).map(|(a, b)| vec![a, b]),
        None => match cli.run_config() {
            Some(cfg) => run(&cfg),
            None => unreachable!("clap enforces the required flags"),
        },
    };
    match result {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rn: error: {e}");
            ExitCode::FAILURE
        }
    }
}
