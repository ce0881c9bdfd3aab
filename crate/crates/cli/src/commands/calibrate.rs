//! `falconc calibrate` — build a decision boundary over reconstruction
//! errors.
//!
//! Naive mode needs only the threshold: everything at or below `--tau`
//! is benign. Refined mode additionally scores a benign calibration
//! table with a trained model and carves extra benign intervals around
//! tight clusters of above-threshold calibration errors; every row of
//! the calibration table must be labeled benign.

use falconc_core::{
    calibrate_naive, calibrate_refined, load_flow_table, Error, FlowClass, ModelFile, Result,
};
use serde_json::json;

use crate::cli::CalibrateArgs;
use crate::commands::score_flows;
use crate::config::{require, Config};
use crate::runmeta::RunManifest;

pub fn run(args: CalibrateArgs, config: &Config) -> Result<()> {
    let mode = require(args.mode.or(config.string("mode")?), "mode")?;
    let tau = require(args.tau.or(config.f64("tau")?), "tau")?;
    let out = require(args.out.or(config.path_value("out")?), "out")?;

    let mut options = json!({
        "mode": mode,
        "tau": tau,
        "out": out.display().to_string(),
    });
    let boundary = match mode.to_ascii_lowercase().as_str() {
        "naive" => calibrate_naive(tau)?,
        "refined" => {
            let gap = args.gap.or(config.f64("gap")?).unwrap_or(0.3);
            let margin = args.margin.or(config.f64("margin")?).unwrap_or(0.05);
            let max_width = args.max_width.or(config.f64("max-width")?).unwrap_or(0.5);
            let model_path = require(args.model.or(config.path_value("model")?), "model")?;
            let train_path = require(args.train.or(config.path_value("train")?), "train")?;

            let model = ModelFile::load(&model_path)?;
            let report = load_flow_table(&train_path)?;
            let errors = score_flows(&model, &report.flows)?;
            let mut samples: Vec<(f64, FlowClass)> = Vec::with_capacity(errors.len());
            for (i, (error, flow)) in errors.iter().zip(&report.flows).enumerate() {
                let Some(label) = &flow.label else {
                    return Err(Error::Data(format!(
                        "calibration flow {i} in {} is unlabeled",
                        train_path.display()
                    )));
                };
                samples.push((*error, label.class));
            }
            let above = samples.iter().filter(|(e, _)| *e > tau).count();
            println!(
                "scored {} calibration flows; {above} above tau",
                samples.len()
            );

            let extra = json!({
                "gap": gap,
                "margin": margin,
                "max-width": max_width,
                "model": model_path.display().to_string(),
                "train": train_path.display().to_string(),
            });
            for (key, value) in extra.as_object().expect("literal object") {
                options[key] = value.clone();
            }
            calibrate_refined(&samples, tau, gap, margin, max_width)?
        }
        other => {
            return Err(Error::InvalidParam(format!(
                "mode must be \"naive\" or \"refined\", got \"{other}\""
            )))
        }
    };

    boundary.save(&out)?;
    println!(
        "{mode} boundary with {} benign interval(s):",
        boundary.benign_intervals.len()
    );
    for interval in &boundary.benign_intervals {
        println!("  [{}, {}]", interval.lo, interval.hi);
    }
    println!("wrote boundary to {}", out.display());

    let mut meta = RunManifest::new("calibrate", config.path(), options);
    meta.record_output(&out);
    meta.write_beside(&out)?;
    Ok(())
}
