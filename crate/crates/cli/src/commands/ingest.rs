//! `falconc ingest` — build one normalized flow table from a manifest.
//!
//! The manifest names the input files and the scenario label each one
//! carries. By default every entry is read as a flow table; with
//! `--aggregate` each entry is read as a packet table and rolled up into
//! flows first. Identifier-like columns are dropped unless `--keep-all`
//! is given, and per-file row counts go to stdout.

use falconc_core::{
    aggregate_packets, drop_columns, load_flows, load_packet_table, write_flow_table,
    DatasetManifest, LabeledFlow, Result, DEFAULT_DROP_COLUMNS, DEFAULT_IDLE_TIMEOUT,
};
use serde_json::json;

use crate::cli::IngestArgs;
use crate::config::{require, Config};
use crate::runmeta::RunManifest;

pub fn run(args: IngestArgs, config: &Config) -> Result<()> {
    let manifest_path = require(args.manifest.or(config.path_value("manifest")?), "manifest")?;
    let out = require(args.out.or(config.path_value("out")?), "out")?;
    let aggregate = args.aggregate || config.bool("aggregate")?.unwrap_or(false);
    let idle_timeout = args
        .idle_timeout
        .or(config.f64("idle-timeout")?)
        .unwrap_or(DEFAULT_IDLE_TIMEOUT);
    let keep_all = args.keep_all || config.bool("keep-all")?.unwrap_or(false);
    let extra_drops: Vec<String> = if args.drop.is_empty() {
        config
            .string_list("drop")?
            .unwrap_or_default()
            .iter()
            .flat_map(|item| item.split(','))
            .map(str::trim)
            .filter(|name| !name.is_empty())
            .map(String::from)
            .collect()
    } else {
        args.drop
    };

    let manifest = DatasetManifest::from_path(&manifest_path)?;
    let mut flows: Vec<LabeledFlow> = if aggregate {
        let mut flows = Vec::new();
        for entry in &manifest.entries {
            let (packets, rejected_rows) = load_packet_table(&entry.path)?;
            let outcome = aggregate_packets(&packets, idle_timeout)?;
            println!(
                "{}: {} packets -> {} flows ({} rows rejected, {} packets skipped)",
                entry.path.display(),
                packets.len(),
                outcome.flows.len(),
                rejected_rows,
                outcome.rejected_packets
            );
            flows.extend(outcome.flows.into_iter().map(|flow| LabeledFlow {
                flow,
                label: Some(entry.label.clone()),
            }));
        }
        flows
    } else {
        let report = load_flows(&manifest)?;
        for stats in &report.per_file {
            println!(
                "{}: {} flows loaded ({} rows rejected)",
                stats.path.display(),
                stats.rows_loaded,
                stats.rows_rejected
            );
            if !stats.missing_columns.is_empty() {
                println!("  defaulted columns: {}", stats.missing_columns.join(", "));
            }
        }
        report.flows
    };

    let mut drop_list: Vec<String> = if keep_all {
        Vec::new()
    } else {
        DEFAULT_DROP_COLUMNS.iter().map(|s| s.to_string()).collect()
    };
    drop_list.extend(extra_drops.iter().cloned());
    let drop_report = drop_columns(&mut flows, &drop_list)?;
    if !drop_report.dropped.is_empty() {
        println!("dropped columns: {}", drop_report.dropped.join(", "));
    }
    // The built-in names routinely match nothing (aggregated flows never
    // carry them); only warn about names the user asked for explicitly.
    let requested: Vec<String> = extra_drops
        .iter()
        .map(|n| n.trim().to_ascii_lowercase())
        .collect();
    for name in drop_report.unknown.iter().filter(|n| requested.contains(n)) {
        eprintln!("warning: column {name} not found in any input");
    }

    write_flow_table(&out, &flows)?;
    println!("wrote {} flows to {}", flows.len(), out.display());

    let mut meta = RunManifest::new(
        "ingest",
        config.path(),
        json!({
            "manifest": manifest_path.display().to_string(),
            "aggregate": aggregate,
            "idle-timeout": idle_timeout,
            "drop": extra_drops,
            "keep-all": keep_all,
            "out": out.display().to_string(),
        }),
    );
    meta.record_output(&out);
    meta.write_beside(&out)?;
    Ok(())
}
