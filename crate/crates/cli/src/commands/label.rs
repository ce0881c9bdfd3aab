//! `falconc label` — classify flows with a model and a boundary.
//!
//! Every input flow gets one output row: its id (the 0-based input row
//! index), reconstruction error, verdict, and the ground-truth class when
//! the input carried one. When every row is labeled, a metrics block is
//! printed against that ground truth.

use falconc_core::{
    evaluate_outcomes, load_flow_table, write_labels, DecisionBoundary, Error, LabelOutcome,
    ModelFile, Result, Verdict,
};
use serde_json::json;

use crate::cli::LabelArgs;
use crate::commands::score_flows;
use crate::config::{require, Config};
use crate::runmeta::RunManifest;

pub fn run(args: LabelArgs, config: &Config) -> Result<()> {
    let model_path = require(args.model.or(config.path_value("model")?), "model")?;
    let boundary_path = require(args.boundary.or(config.path_value("boundary")?), "boundary")?;
    let flows_path = require(args.flows.or(config.path_value("flows")?), "flows")?;
    let out = require(args.out.or(config.path_value("out")?), "out")?;

    let model = ModelFile::load(&model_path)?;
    let boundary = DecisionBoundary::load(&boundary_path)?;
    let report = load_flow_table(&flows_path)?;
    if report.flows.is_empty() {
        return Err(Error::Data(format!(
            "no flows to label in {}",
            flows_path.display()
        )));
    }

    let errors = score_flows(&model, &report.flows)?;
    let mut outcomes = Vec::with_capacity(errors.len());
    for (i, (error, flow)) in errors.iter().zip(&report.flows).enumerate() {
        outcomes.push(LabelOutcome {
            flow_id: i.to_string(),
            error: *error,
            predicted: boundary.classify(*error)?,
            truth: flow.label.as_ref().map(|label| label.class),
        });
    }
    write_labels(&outcomes, &out)?;

    let malicious = outcomes
        .iter()
        .filter(|o| o.predicted == Verdict::Malicious)
        .count();
    println!(
        "labeled {} flows: {} benign, {malicious} malicious",
        outcomes.len(),
        outcomes.len() - malicious
    );
    if outcomes.iter().all(|o| o.truth.is_some()) {
        println!("{}", evaluate_outcomes(&outcomes)?);
    }
    println!("wrote labels to {}", out.display());

    let mut meta = RunManifest::new(
        "label",
        config.path(),
        json!({
            "model": model_path.display().to_string(),
            "boundary": boundary_path.display().to_string(),
            "flows": flows_path.display().to_string(),
            "out": out.display().to_string(),
        }),
    );
    meta.record_output(&out);
    meta.write_beside(&out)?;
    Ok(())
}
