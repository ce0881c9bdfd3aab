//! `falconc sweep` — train across a range of latent widths and recommend
//! the narrowest one whose smoothed holdout error is lowest.
//!
//! Writes two plot-ready CSVs: the per-trial table named by `--out`, and
//! a per-width summary table next to it.

use falconc_core::seed::derive_seed;
use falconc_core::{
    apply_encoding, fit_encoding, load_flow_table, run_sweep, write_sweep, Error, Result,
    SweepConfig, TrainConfig,
};
use serde_json::json;

use crate::cli::SweepArgs;
use crate::commands::{keep_benign, write_text};
use crate::config::{require, Config};
use crate::runmeta::RunManifest;

pub fn run(args: SweepArgs, config: &Config) -> Result<()> {
    let flows_path = require(args.flows.or(config.path_value("flows")?), "flows")?;
    let out = require(args.out.or(config.path_value("out")?), "out")?;
    let benign_only = args.benign_only || config.bool("benign-only")?.unwrap_or(false);
    let defaults = SweepConfig::default();
    let train_defaults = TrainConfig::default();
    let train = TrainConfig {
        max_epochs: args
            .epochs
            .or(config.usize("epochs")?)
            .unwrap_or(train_defaults.max_epochs),
        learning_rate: args
            .learning_rate
            .or(config.f64("learning-rate")?)
            .unwrap_or(train_defaults.learning_rate),
        batch_size: args
            .batch_size
            .or(config.usize("batch-size")?)
            .unwrap_or(train_defaults.batch_size),
        linear_output: args.linear_output || config.bool("linear-output")?.unwrap_or(false),
        ..train_defaults
    };
    let sweep_config = SweepConfig {
        latent_min: args
            .latent_min
            .or(config.usize("latent-min")?)
            .unwrap_or(defaults.latent_min),
        latent_max: args
            .latent_max
            .or(config.usize("latent-max")?)
            .unwrap_or(defaults.latent_max),
        trials_per_dim: args
            .trials
            .or(config.usize("trials")?)
            .unwrap_or(defaults.trials_per_dim),
        rolling_window: args
            .window
            .or(config.usize("window")?)
            .unwrap_or(defaults.rolling_window),
        hidden_dim: args
            .hidden
            .or(config.usize("hidden")?)
            .unwrap_or(defaults.hidden_dim),
        holdout_fraction: args
            .holdout
            .or(config.f64("holdout")?)
            .unwrap_or(defaults.holdout_fraction),
        train,
        base_seed: args.seed.or(config.u64("seed")?).unwrap_or(0),
    };

    let load = load_flow_table(&flows_path)?;
    let (flows, total) = keep_benign(load.flows, benign_only);
    if flows.is_empty() {
        return Err(Error::Data(format!(
            "no benign flows to sweep on in {}",
            flows_path.display()
        )));
    }
    println!("sweeping on {} of {} flows", flows.len(), total);
    let encoding = fit_encoding(&flows)?;
    let matrix = apply_encoding(&encoding, &flows)?;

    let report = run_sweep(&matrix, &sweep_config)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    write_sweep(&report, &out)?;

    // Plot-ready per-width summary next to the trial table.
    let summary_path = out.with_extension("summary.csv");
    let mut summary = String::from("latent_dim,mean,min,max,std,rolling_mean\n");
    for s in &report.summaries {
        summary.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.latent_dim, s.mean, s.min, s.max, s.std, s.rolling_mean
        ));
    }
    write_text(&summary_path, &summary)?;

    for s in &report.summaries {
        println!(
            "latent {}: mean={} rolling={}",
            s.latent_dim, s.mean, s.rolling_mean
        );
    }
    println!("grand mean holdout error: {}", report.grand_mean);
    println!("recommended latent width: {}", report.recommended_dim);
    println!(
        "wrote trials to {} and summaries to {}",
        out.display(),
        summary_path.display()
    );

    let mut meta = RunManifest::new(
        "sweep",
        config.path(),
        json!({
            "flows": flows_path.display().to_string(),
            "benign-only": benign_only,
            "latent-min": sweep_config.latent_min,
            "latent-max": sweep_config.latent_max,
            "trials": sweep_config.trials_per_dim,
            "window": sweep_config.rolling_window,
            "hidden": sweep_config.hidden_dim,
            "holdout": sweep_config.holdout_fraction,
            "epochs": sweep_config.train.max_epochs,
            "learning-rate": sweep_config.train.learning_rate,
            "batch-size": sweep_config.train.batch_size,
            "linear-output": sweep_config.train.linear_output,
            "seed": sweep_config.base_seed,
            "out": out.display().to_string(),
        }),
    );
    // Trial seeds land in the trial CSV itself; the holdout split seed is
    // the one derivation not visible there.
    meta.record_seed(
        "sweep-holdout",
        derive_seed(sweep_config.base_seed, "sweep-holdout"),
    );
    meta.record_output(&out);
    meta.record_output(&summary_path);
    meta.write_beside(&out)?;
    Ok(())
}
