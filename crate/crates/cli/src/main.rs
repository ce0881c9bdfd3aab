//! `falconc` — command-line front end for the flow-labeling pipeline.
//!
//! Exit codes are part of the contract:
//!
//! * `0` — success (also `--help` / `--version`)
//! * `1` — usage errors: bad flags, missing required options, invalid
//!   parameter values, config-file problems
//! * `2` — data errors: missing or malformed input files
//! * `3` — numeric failures during training or scoring

use clap::Parser;
use falconc_cli::cli::Cli;

fn main() {
    let parsed = match Cli::try_parse() {
        Ok(parsed) => parsed,
        Err(err) => {
            // Help and version requests arrive as "errors" from try_parse
            // but are normal terminations; real parse failures are usage
            // errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = falconc_cli::commands::run(parsed) {
        falconc_cli::report(&err);
        std::process::exit(falconc_cli::exit_code(&err));
    }
}
