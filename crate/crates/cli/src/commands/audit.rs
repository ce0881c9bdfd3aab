//! `falconc audit` — compare an external detector's decision log against
//! reference labels produced by `falconc label`.
//!
//! Decisions and labels are joined on flow id; the agreement breakdown is
//! printed and the full report is written as JSON.

use falconc_core::{audit, load_labels, Error, IdsDecisionLog, Result};
use serde_json::json;

use crate::cli::AuditArgs;
use crate::commands::write_text;
use crate::config::{require, Config};
use crate::runmeta::RunManifest;

pub fn run(args: AuditArgs, config: &Config) -> Result<()> {
    let decisions_path = require(
        args.decisions.or(config.path_value("decisions")?),
        "decisions",
    )?;
    let labels_path = require(args.labels.or(config.path_value("labels")?), "labels")?;
    let out = require(args.out.or(config.path_value("out")?), "out")?;

    let log = IdsDecisionLog::load(&decisions_path)?;
    let reference = load_labels(&labels_path)?;
    let report = audit(&log, &reference)?;

    let mut body = serde_json::to_string_pretty(&report).map_err(|err| Error::Json {
        path: out.clone(),
        source: err,
    })?;
    body.push('\n');
    write_text(&out, &body)?;

    println!("{report}");
    println!("wrote audit report to {}", out.display());

    let mut meta = RunManifest::new(
        "audit",
        config.path(),
        json!({
            "decisions": decisions_path.display().to_string(),
            "labels": labels_path.display().to_string(),
            "out": out.display().to_string(),
        }),
    );
    meta.record_output(&out);
    meta.write_beside(&out)?;
    Ok(())
}
