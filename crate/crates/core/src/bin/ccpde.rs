//! Config-driven command line front end: `ccpde <config-file>`.
//!
//! The config file selects a subcommand (solve, branch, whyburn, verify,
//! eigen, classify) and the problem data; the JSON summary is printed to
//! stdout and artifacts are written to the configured paths. Exit statuses:
//! 0 success, 1 configuration error, 2 solver non-convergence,
//! 3 verification failure.

use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if args.len() != 2 {
        eprintln!("usage: ccpde <config-file>");
        return ExitCode::from(1);
    }
    let text = match std::fs::read_to_string(&args[1]) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args[1]);
            return ExitCode::from(1);
        }
    };
    match ccpde::config::parse_config(&text).and_then(|plan| ccpde::run::run_plan(&plan)) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ccpde::run::exit_code(&e) as u8)
        }
    }
}
