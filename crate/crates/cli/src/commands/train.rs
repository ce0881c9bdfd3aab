//! `falconc train` — fit the benign-flow autoencoder and save the model.
//!
//! The run is fully determined by the base seed: the train/test split,
//! weight initialization, and per-epoch shuffles all derive from it.
//! Feature encoding is fitted on every kept flow (so categorical
//! vocabularies cover the whole table), while the standardizer is fitted
//! on the training split only.

use falconc_core::seed::derive_seed;
use falconc_core::{
    apply_encoding, fit_encoding, fit_standardizer, load_flow_table, split_indices, standardize,
    train, write_flow_table, Architecture, Error, ModelFile, Result, SplitConfig, StopReason,
    TrainConfig, DEFAULT_HIDDEN_DIM, DEFAULT_LATENT_DIM,
};
use serde_json::json;

use crate::cli::TrainArgs;
use crate::commands::{keep_benign, write_text};
use crate::config::{require, Config};
use crate::runmeta::RunManifest;

pub fn run(args: TrainArgs, config: &Config) -> Result<()> {
    let flows_path = require(args.flows.or(config.path_value("flows")?), "flows")?;
    let out = require(args.out.or(config.path_value("out")?), "out")?;
    let benign_only = args.benign_only || config.bool("benign-only")?.unwrap_or(false);
    let hidden = args
        .hidden
        .or(config.usize("hidden")?)
        .unwrap_or(DEFAULT_HIDDEN_DIM);
    let latent = args
        .latent
        .or(config.usize("latent")?)
        .unwrap_or(DEFAULT_LATENT_DIM);
    let test_fraction = args
        .test_fraction
        .or(config.f64("test-fraction")?)
        .unwrap_or(0.2);
    let defaults = TrainConfig::default();
    let train_config = TrainConfig {
        max_epochs: args
            .epochs
            .or(config.usize("epochs")?)
            .unwrap_or(defaults.max_epochs),
        learning_rate: args
            .learning_rate
            .or(config.f64("learning-rate")?)
            .unwrap_or(defaults.learning_rate),
        batch_size: args
            .batch_size
            .or(config.usize("batch-size")?)
            .unwrap_or(defaults.batch_size),
        early_stop_patience: args
            .patience
            .or(config.usize("patience")?)
            .unwrap_or(defaults.early_stop_patience),
        early_stop_min_delta: args
            .min_delta
            .or(config.f64("min-delta")?)
            .unwrap_or(defaults.early_stop_min_delta),
        seed: args.seed.or(config.u64("seed")?).unwrap_or(0),
        linear_output: args.linear_output || config.bool("linear-output")?.unwrap_or(false),
        ..defaults
    };
    let train_out = args.train_out.or(config.path_value("train-out")?);
    let test_out = args.test_out.or(config.path_value("test-out")?);

    let report = load_flow_table(&flows_path)?;
    let (flows, total) = keep_benign(report.flows, benign_only);
    if flows.is_empty() {
        return Err(Error::Data(format!(
            "no benign flows to train on in {}",
            flows_path.display()
        )));
    }
    println!("training on {} of {} flows", flows.len(), total);

    let encoding = fit_encoding(&flows)?;
    let matrix = apply_encoding(&encoding, &flows)?;
    let split_seed = derive_seed(train_config.seed, "split");
    let split = SplitConfig {
        test_fraction,
        seed: split_seed,
    };
    let (train_idx, test_idx) = split_indices(matrix.len(), &split)?;
    let train_raw = matrix.select_rows(&train_idx);
    let standardizer = fit_standardizer(&train_raw)?;
    let train_matrix = standardize(&standardizer, &train_raw)?;
    let arch = Architecture::new(matrix.width(), hidden, latent)?;
    println!(
        "architecture {}-{}-{}-{}-{}; training on {} rows, holding out {}",
        matrix.width(),
        hidden,
        latent,
        hidden,
        matrix.width(),
        train_idx.len(),
        test_idx.len()
    );

    let (params, history) = train(&train_matrix, &arch, &train_config)?;
    let reason = match history.stop_reason {
        StopReason::MaxEpochs => "epoch budget exhausted",
        StopReason::EarlyStop => "early stop",
    };
    println!(
        "stopped after {} epochs ({reason}); best epoch {} with loss {}",
        history.stopped_epoch, history.best_epoch, history.best_loss
    );

    let model = ModelFile::new(params, train_config, encoding, standardizer, history.clone())?;
    model.save(&out)?;
    println!("wrote model to {}", out.display());

    // Plot-ready training curve, one row per epoch.
    let curve_path = out.with_extension("curve.csv");
    let mut curve = String::from("epoch,loss\n");
    for (i, loss) in history.losses.iter().enumerate() {
        curve.push_str(&format!("{},{loss}\n", i + 1));
    }
    write_text(&curve_path, &curve)?;

    if let Some(path) = &train_out {
        let subset: Vec<_> = train_idx.iter().map(|&i| flows[i].clone()).collect();
        write_flow_table(path, &subset)?;
    }
    if let Some(path) = &test_out {
        let subset: Vec<_> = test_idx.iter().map(|&i| flows[i].clone()).collect();
        write_flow_table(path, &subset)?;
    }

    let mut meta = RunManifest::new(
        "train",
        config.path(),
        json!({
            "flows": flows_path.display().to_string(),
            "benign-only": benign_only,
            "hidden": hidden,
            "latent": latent,
            "epochs": train_config.max_epochs,
            "learning-rate": train_config.learning_rate,
            "batch-size": train_config.batch_size,
            "patience": train_config.early_stop_patience,
            "min-delta": train_config.early_stop_min_delta,
            "linear-output": train_config.linear_output,
            "test-fraction": test_fraction,
            "seed": train_config.seed,
            "out": out.display().to_string(),
            "train-out": train_out.as_ref().map(|p| p.display().to_string()),
            "test-out": test_out.as_ref().map(|p| p.display().to_string()),
        }),
    );
    meta.record_seed("split", split_seed);
    meta.record_seed("init", derive_seed(train_config.seed, "init"));
    meta.record_seed("shuffle", derive_seed(train_config.seed, "shuffle"));
    meta.record_output(&out);
    meta.record_output(&curve_path);
    if let Some(path) = &train_out {
        meta.record_output(path);
    }
    if let Some(path) = &test_out {
        meta.record_output(path);
    }
    meta.write_beside(&out)?;
    Ok(())
}
