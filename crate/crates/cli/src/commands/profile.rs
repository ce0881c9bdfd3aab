//! `falconc profile` — score flow tables into a reconstruction-error
//! profile.
//!
//! Each `--input` names one flow table and the tag its rows carry in the
//! profile; per-tag summary statistics go to stdout and the full per-flow
//! profile goes to the output CSV.

use std::path::PathBuf;

use falconc_core::{
    apply_encoding, load_flow_table, profile_errors, standardize, write_profile, Error,
    FeatureMatrix, ModelFile, Result,
};
use serde_json::json;

use crate::cli::ProfileArgs;
use crate::config::{require, Config};
use crate::runmeta::RunManifest;

/// Splits an input spec into its tag and path; a bare path uses the file
/// stem as its tag.
fn parse_input(spec: &str) -> Result<(String, PathBuf)> {
    if let Some((tag, path)) = spec.split_once('=') {
        let (tag, path) = (tag.trim(), path.trim());
        if tag.is_empty() || path.is_empty() {
            return Err(Error::InvalidParam(format!(
                "input \"{spec}\" must look like tag=path"
            )));
        }
        return Ok((tag.to_string(), PathBuf::from(path)));
    }
    let path = PathBuf::from(spec);
    let tag = path
        .file_stem()
        .map(|stem| stem.to_string_lossy().into_owned())
        .filter(|stem| !stem.is_empty())
        .ok_or_else(|| Error::InvalidParam(format!("cannot derive a tag from \"{spec}\"")))?;
    Ok((tag, path))
}

pub fn run(args: ProfileArgs, config: &Config) -> Result<()> {
    let model_path = require(args.model.or(config.path_value("model")?), "model")?;
    let out = require(args.out.or(config.path_value("out")?), "out")?;
    let specs = if args.inputs.is_empty() {
        config.string_list("input")?.unwrap_or_default()
    } else {
        args.inputs
    };
    if specs.is_empty() {
        return Err(Error::InvalidParam(
            "at least one --input is required".into(),
        ));
    }

    let model = ModelFile::load(&model_path)?;
    let params = model.to_params();
    let mut matrices: Vec<(String, FeatureMatrix)> = Vec::new();
    for spec in &specs {
        let (tag, path) = parse_input(spec)?;
        let report = load_flow_table(&path)?;
        println!("{tag}: {} flows from {}", report.flows.len(), path.display());
        let matrix = apply_encoding(&model.encoding, &report.flows)?;
        let matrix = standardize(&model.standardizer, &matrix)?;
        matrices.push((tag, matrix));
    }
    let datasets: Vec<(&str, &FeatureMatrix)> = matrices
        .iter()
        .map(|(tag, matrix)| (tag.as_str(), matrix))
        .collect();
    let profile = profile_errors(&params, &datasets)?;

    write_profile(&profile, &out)?;
    for s in &profile.summaries {
        println!(
            "{}: n={} min={} mean={} p50={} p95={} p99={} max={}",
            s.tag, s.count, s.min, s.mean, s.p50, s.p95, s.p99, s.max
        );
    }
    println!("wrote profile to {}", out.display());

    let mut meta = RunManifest::new(
        "profile",
        config.path(),
        json!({
            "model": model_path.display().to_string(),
            "input": specs,
            "out": out.display().to_string(),
        }),
    );
    meta.record_output(&out);
    meta.write_beside(&out)?;
    Ok(())
}
