//! Library backing the `falconc` binary.
//!
//! The binary is a thin shell around `falconc-core`: every subcommand
//! resolves its options (flags first, then an optional JSON config file,
//! then built-in defaults), calls into the library, writes the library's
//! artifact format, and records a run manifest next to the primary
//! output. Splitting the logic into a library keeps it testable without
//! spawning processes.

pub mod cli;
pub mod commands;
pub mod config;
pub mod runmeta;

use falconc_core::Error;

/// Maps library errors onto the documented exit codes: 1 for usage
/// problems, 3 for numeric failures, 2 for everything else (broken or
/// missing input data).
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParam(_) => 1,
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

/// Prints the error and its cause chain to stderr.
pub fn report(err: &Error) {
    eprintln!("error: {err}");
    let mut cause = std::error::Error::source(err);
    while let Some(inner) = cause {
        eprintln!("  caused by: {inner}");
        cause = inner.source();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn exit_codes_follow_the_error_family() {
        assert_eq!(exit_code(&Error::InvalidParam("bad tau".into())), 1);
        assert_eq!(exit_code(&Error::Numeric("loss diverged".into())), 3);
        assert_eq!(exit_code(&Error::Data("empty table".into())), 2);
        assert_eq!(exit_code(&Error::MissingFile(PathBuf::from("x.csv"))), 2);
    }
}
