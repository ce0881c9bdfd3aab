//! Subcommand implementations and the helpers they share.

mod audit;
mod calibrate;
mod ingest;
mod label;
mod profile;
mod sweep;
mod train;

use std::path::Path;

use falconc_core::{
    apply_encoding, reconstruction_error, standardize, Error, FlowClass, LabeledFlow, ModelFile,
    Result,
};

use crate::cli::{Cli, Command};
use crate::config::Config;

/// Resolves the config file and dispatches to the subcommand.
pub fn run(cli: Cli) -> Result<()> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest(args) => ingest::run(args, &config),
        Command::Train(args) => train::run(args, &config),
        Command::Profile(args) => profile::run(args, &config),
        Command::Calibrate(args) => calibrate::run(args, &config),
        Command::Label(args) => label::run(args, &config),
        Command::Sweep(args) => sweep::run(args, &config),
        Command::Audit(args) => audit::run(args, &config),
    }
}

/// Scores flows with a trained model: encode with the model's feature
/// spec, standardize with its fitted parameters, and take per-row
/// reconstruction errors.
pub(crate) fn score_flows(model: &ModelFile, flows: &[LabeledFlow]) -> Result<Vec<f64>> {
    let matrix = apply_encoding(&model.encoding, flows)?;
    let matrix = standardize(&model.standardizer, &matrix)?;
    let params = model.to_params();
    matrix
        .rows
        .iter()
        .map(|row| reconstruction_error(&params, row))
        .collect()
}

/// Applies `--benign-only` filtering; returns the kept flows and the
/// original row count so callers can report how many were dropped.
pub(crate) fn keep_benign(flows: Vec<LabeledFlow>, benign_only: bool) -> (Vec<LabeledFlow>, usize) {
    let total = flows.len();
    if !benign_only {
        return (flows, total);
    }
    let kept = flows
        .into_iter()
        .filter(|f| {
            f.label
                .as_ref()
                .is_some_and(|l| l.class == FlowClass::Benign)
        })
        .collect();
    (kept, total)
}

/// Writes a small text artifact (the plot-ready CSVs) with IO context.
pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|err| Error::Io {
        path: path.to_path_buf(),
        source: err,
    })
}
