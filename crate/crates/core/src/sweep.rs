//! Latent-width sweep: train the autoencoder at a range of bottleneck sizes,
//! several seeds each, and score the mean reconstruction error on a held-out
//! benign set. A centered rolling average over the per-width means smooths
//! trial noise; the recommended width is its argmin (ties go to the smaller,
//! cheaper bottleneck).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autoencoder::{reconstruction_error, train, Architecture, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{fit_standardizer, split_train_test, standardize, FeatureMatrix, SplitConfig};
use crate::seed::derive_seed;
use crate::tabular;

/// What to sweep and how to train each trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub latent_min: usize,
    pub latent_max: usize,
    /// Training runs per latent width, each with its own derived seed.
    pub trials_per_dim: usize,
    /// Window of the centered rolling average over per-width means.
    pub rolling_window: usize,
    pub hidden_dim: usize,
    /// Fraction of rows held out once for scoring every trial.
    pub holdout_fraction: f64,
    /// Per-trial training settings; the seed field is replaced per trial.
    pub train: TrainConfig,
    /// Root of all derived seeds (holdout split and every trial).
    pub base_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            latent_min: 1,
            latent_max: 8,
            trials_per_dim: 5,
            rolling_window: 5,
            hidden_dim: 80,
            holdout_fraction: 0.2,
            train: TrainConfig::default(),
            base_seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParam(format!("sweep config: {what}")));
        if self.latent_min < 1 {
            return bad("latent_min must be at least 1");
        }
        if self.latent_max < self.latent_min {
            return bad("latent_max must not be below latent_min");
        }
        if self.trials_per_dim < 1 {
            return bad("trials_per_dim must be at least 1");
        }
        if self.rolling_window < 1 {
            return bad("rolling_window must be at least 1");
        }
        if self.hidden_dim < 1 {
            return bad("hidden_dim must be at least 1");
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad("holdout_fraction must lie strictly between 0 and 1");
        }
        self.train.validate()
    }
}

/// One training run at one latent width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub latent_dim: usize,
    pub trial: usize,
    /// Seed this trial was trained with (derived, recorded for replay).
    pub seed: u64,
    /// Mean reconstruction error over the held-out benign rows.
    pub mean_error: f64,
}

/// Trial statistics for one latent width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimSummary {
    pub latent_dim: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation across the width's trials.
    pub std: f64,
    /// Centered rolling average of the per-width means at this width.
    pub rolling_mean: f64,
}

/// Complete sweep outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub trials: Vec<TrialResult>,
    /// One summary per swept width, ascending.
    pub summaries: Vec<DimSummary>,
    /// Mean over every trial's holdout error.
    pub grand_mean: f64,
    /// Width whose rolling mean is smallest; ties go to the smaller width.
    pub recommended_dim: usize,
    /// Advisories (e.g. skipped widths); not persisted in the CSV artifact.
    pub warnings: Vec<String>,
}

/// Centered rolling average with truncation at the edges: position i averages
/// the window reaching floor(w/2) back and floor((w-1)/2) forward, clipped to
/// the slice. Window 1 returns the input unchanged.
pub fn rolling_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 1 {
        return Err(Error::InvalidParam(
            "rolling window must be at least 1".to_string(),
        ));
    }
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let start = i.saturating_sub(window / 2);
            let end = (i + (window - 1) / 2 + 1).min(n);
            values[start..end].iter().sum::<f64>() / (end - start) as f64
        })
        .collect())
}

/// Summaries, grand mean and recommendation, purely from trial rows. Used by
/// both the sweep itself and the CSV loader so the two always agree.
fn summarize(trials: &[TrialResult], rolling_window: usize) -> Result<(Vec<DimSummary>, f64, usize)> {
    if trials.is_empty() {
        return Err(Error::Data("sweep produced no trials".to_string()));
    }
    let mut dims: Vec<usize> = trials.iter().map(|t| t.latent_dim).collect();
    dims.sort_unstable();
    dims.dedup();

    let mut summaries: Vec<DimSummary> = dims
        .iter()
        .map(|&dim| {
            let errors: Vec<f64> = trials
                .iter()
                .filter(|t| t.latent_dim == dim)
                .map(|t| t.mean_error)
                .collect();
            let mean = errors.iter().sum::<f64>() / errors.len() as f64;
            let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
                / errors.len() as f64;
            DimSummary {
                latent_dim: dim,
                mean,
                min: errors.iter().cloned().fold(f64::INFINITY, f64::min),
                max: errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                std: var.sqrt(),
                rolling_mean: 0.0, // filled below
            }
        })
        .collect();

    let means: Vec<f64> = summaries.iter().map(|s| s.mean).collect();
    let rolled = rolling_average(&means, rolling_window)?;
    for (summary, rolling) in summaries.iter_mut().zip(&rolled) {
        summary.rolling_mean = *rolling;
    }

    let grand_mean = trials.iter().map(|t| t.mean_error).sum::<f64>() / trials.len() as f64;
    let recommended = summaries
        .iter()
        .min_by(|a, b| {
            a.rolling_mean
                .total_cmp(&b.rolling_mean)
                .then(a.latent_dim.cmp(&b.latent_dim))
        })
        .expect("non-empty summaries")
        .latent_dim;
    Ok((summaries, grand_mean, recommended))
}

/// Run the sweep on encoded (unstandardized) benign rows.
///
/// The holdout split happens once, from a seed derived off `base_seed`, and
/// the standardizer is fitted on the sweep-train side only — the holdout
/// stays unseen in every respect. Trial seeds are derived per (width, trial),
/// so any single trial can be reproduced in isolation. Widths above the
/// hidden width cannot form a valid bottleneck and are skipped with a
/// warning.
pub fn run_sweep(data: &FeatureMatrix, config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    if config.hidden_dim > data.width() {
        return Err(Error::InvalidParam(format!(
            "hidden width {} exceeds the {} encoded features",
            config.hidden_dim,
            data.width()
        )));
    }

    let (train_raw, holdout_raw) = split_train_test(
        data,
        &SplitConfig {
            test_fraction: config.holdout_fraction,
            seed: derive_seed(config.base_seed, "sweep-holdout"),
        },
    )?;
    let standardizer = fit_standardizer(&train_raw)?;
    let train_set = standardize(&standardizer, &train_raw)?;
    let holdout = standardize(&standardizer, &holdout_raw)?;

    let mut warnings = Vec::new();
    let mut trials = Vec::new();
    for latent_dim in config.latent_min..=config.latent_max {
        if latent_dim > config.hidden_dim {
            warnings.push(format!(
                "latent width {latent_dim} exceeds hidden width {}; skipped",
                config.hidden_dim
            ));
            continue;
        }
        let arch = Architecture::new(data.width(), config.hidden_dim, latent_dim)?;
        for trial in 0..config.trials_per_dim {
            let seed = derive_seed(config.base_seed, &format!("dim{latent_dim}-trial{trial}"));
            let trial_config = TrainConfig {
                seed,
                ..config.train
            };
            let (params, _) = train(&train_set, &arch, &trial_config)?;
            let mut mean_error = 0.0;
            for row in &holdout.rows {
                mean_error += reconstruction_error(&params, row)?;
            }
            mean_error /= holdout.len() as f64;
            trials.push(TrialResult {
                latent_dim,
                trial,
                seed,
                mean_error,
            });
        }
    }

    let (summaries, grand_mean, recommended_dim) = summarize(&trials, config.rolling_window)?;
    Ok(SweepReport {
        trials,
        summaries,
        grand_mean,
        recommended_dim,
        warnings,
    })
}

/// Write the per-trial table: latent_dim, trial, seed, mean_error. Floats use
/// the shortest round-trip form; summaries are derivable and not stored.
pub fn write_sweep(report: &SweepReport, path: &Path) -> Result<()> {
    let mut writer = tabular::writer(path)?;
    let wrap = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    writer
        .write_record(["latent_dim", "trial", "seed", "mean_error"])
        .map_err(wrap)?;
    for trial in &report.trials {
        writer
            .write_record([
                trial.latent_dim.to_string(),
                trial.trial.to_string(),
                trial.seed.to_string(),
                tabular::fmt_float(trial.mean_error),
            ])
            .map_err(wrap)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Reload a sweep table and rebuild the report. Summaries are recomputed
/// with the given window — identical arithmetic to the original run — and
/// run-time warnings come back empty.
pub fn load_sweep(path: &Path, rolling_window: usize) -> Result<SweepReport> {
    let mut reader = tabular::reader(path)?;
    let headers = tabular::headers_lower(&mut reader, path)?;
    for name in ["latent_dim", "trial", "seed", "mean_error"] {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).expect("checked above");
    let (c_dim, c_trial, c_seed, c_err) = (
        col("latent_dim"),
        col("trial"),
        col("seed"),
        col("mean_error"),
    );

    let mut trials = Vec::new();
    for (rownum, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();
        let bad =
            |what: String| Error::Data(format!("{}: row {}: {what}", path.display(), rownum + 2));
        let mean_error: f64 = field(c_err)
            .parse()
            .map_err(|_| bad(format!("bad mean_error {:?}", field(c_err))))?;
        if !(mean_error.is_finite() && mean_error >= 0.0) {
            return Err(bad(format!(
                "mean_error must be finite and non-negative, got {mean_error}"
            )));
        }
        trials.push(TrialResult {
            latent_dim: field(c_dim)
                .parse()
                .map_err(|_| bad(format!("bad latent_dim {:?}", field(c_dim))))?,
            trial: field(c_trial)
                .parse()
                .map_err(|_| bad(format!("bad trial {:?}", field(c_trial))))?,
            seed: field(c_seed)
                .parse()
                .map_err(|_| bad(format!("bad seed {:?}", field(c_seed))))?,
            mean_error,
        });
    }
    let (summaries, grand_mean, recommended_dim) = summarize(&trials, rolling_window)?;
    Ok(SweepReport {
        trials,
        summaries,
        grand_mean,
        recommended_dim,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{ChargingState, ScenarioLabel};
    use crate::seed::seeded_rng;
    use rand::Rng;

    /// Benign rows mixed from two latent factors, shifted positive.
    fn two_factor_data(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = seeded_rng(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let f1: f64 = rng.random_range(-1.0..1.0);
                let f2: f64 = rng.random_range(-1.0..1.0);
                (0..d)
                    .map(|j| 6.0 + f1 * (1.0 + (j % 3) as f64) * 0.4 + f2 * ((j % 4) as f64) * 0.3)
                    .collect()
            })
            .collect();
        FeatureMatrix {
            labels: vec![Some(ScenarioLabel::benign(ChargingState::Charging)); n],
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            rows,
        }
    }

    fn small_config() -> SweepConfig {
        SweepConfig {
            latent_min: 1,
            latent_max: 3,
            trials_per_dim: 2,
            rolling_window: 1,
            hidden_dim: 4,
            holdout_fraction: 0.25,
            train: TrainConfig {
                max_epochs: 10,
                learning_rate: 5e-3,
                ..TrainConfig::default()
            },
            base_seed: 3,
        }
    }

    #[test]
    fn rolling_average_matches_hand_cases() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(rolling_average(&v, 1).unwrap(), v.to_vec());
        assert_eq!(
            rolling_average(&v, 3).unwrap(),
            vec![1.5, 2.0, 3.0, 4.0, 4.5]
        );
        // Window larger than the slice degenerates to the overall mean.
        assert_eq!(rolling_average(&[1.0, 2.0, 3.0], 5).unwrap(), vec![2.0; 3]);
        assert!(rolling_average(&v, 0).is_err());
        assert!(rolling_average(&[], 3).unwrap().is_empty());
    }

    #[test]
    fn rolling_average_even_window_reaches_further_back() {
        // Window 4: two back, one forward.
        let v = [0.0, 4.0, 8.0, 12.0];
        let rolled = rolling_average(&v, 4).unwrap();
        assert_eq!(rolled[2], (0.0 + 4.0 + 8.0 + 12.0) / 4.0);
        assert_eq!(rolled[0], (0.0 + 4.0) / 2.0);
    }

    #[test]
    fn sweep_covers_requested_widths_and_is_deterministic() {
        let data = two_factor_data(40, 6, 11);
        let config = small_config();
        let report = run_sweep(&data, &config).unwrap();

        assert_eq!(report.trials.len(), 6); // 3 widths x 2 trials
        let dims: Vec<usize> = report.summaries.iter().map(|s| s.latent_dim).collect();
        assert_eq!(dims, vec![1, 2, 3]);
        for pair in report.trials.windows(2) {
            assert!(
                (pair[0].latent_dim, pair[0].trial) < (pair[1].latent_dim, pair[1].trial),
                "trials out of order"
            );
        }
        // Distinct derived seeds per trial.
        let mut seeds: Vec<u64> = report.trials.iter().map(|t| t.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 6);
        assert!(report.warnings.is_empty());

        let again = run_sweep(&data, &config).unwrap();
        assert_eq!(again, report);
    }

    #[test]
    fn summaries_are_internally_consistent() {
        let data = two_factor_data(40, 6, 12);
        let report = run_sweep(&data, &small_config()).unwrap();

        // Grand mean re-derives from the trials.
        let grand: f64 = report.trials.iter().map(|t| t.mean_error).sum::<f64>()
            / report.trials.len() as f64;
        assert_eq!(report.grand_mean, grand);

        for summary in &report.summaries {
            let errors: Vec<f64> = report
                .trials
                .iter()
                .filter(|t| t.latent_dim == summary.latent_dim)
                .map(|t| t.mean_error)
                .collect();
            assert_eq!(errors.len(), 2);
            assert!(summary.min <= summary.mean && summary.mean <= summary.max);
            assert!(summary.std >= 0.0);
            assert_eq!(summary.mean, errors.iter().sum::<f64>() / errors.len() as f64);
        }

        // Recommendation is the argmin of the rolling means, smaller width
        // on ties.
        let best = report
            .summaries
            .iter()
            .min_by(|a, b| {
                a.rolling_mean
                    .total_cmp(&b.rolling_mean)
                    .then(a.latent_dim.cmp(&b.latent_dim))
            })
            .unwrap();
        assert_eq!(report.recommended_dim, best.latent_dim);
    }

    #[test]
    fn widths_beyond_the_hidden_layer_are_skipped_with_warnings() {
        let data = two_factor_data(30, 6, 13);
        let config = SweepConfig {
            latent_min: 3,
            latent_max: 6,
            hidden_dim: 4,
            ..small_config()
        };
        let report = run_sweep(&data, &config).unwrap();
        let dims: Vec<usize> = report.summaries.iter().map(|s| s.latent_dim).collect();
        assert_eq!(dims, vec![3, 4]);
        assert_eq!(report.warnings.len(), 2);
        assert!(report.warnings[0].contains("5"));
        assert!(report.warnings[1].contains("6"));
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let data = two_factor_data(30, 6, 14);
        let bad = |mutate: fn(&mut SweepConfig)| {
            let mut config = small_config();
            mutate(&mut config);
            run_sweep(&data, &config).unwrap_err()
        };
        assert!(matches!(bad(|c| c.latent_min = 0), Error::InvalidParam(_)));
        assert!(matches!(bad(|c| c.latent_max = 0), Error::InvalidParam(_)));
        assert!(matches!(bad(|c| c.trials_per_dim = 0), Error::InvalidParam(_)));
        assert!(matches!(bad(|c| c.rolling_window = 0), Error::InvalidParam(_)));
        assert!(matches!(bad(|c| c.holdout_fraction = 1.0), Error::InvalidParam(_)));
        // Hidden width wider than the feature vector cannot bottleneck.
        assert!(matches!(bad(|c| c.hidden_dim = 7), Error::InvalidParam(_)));
    }

    #[test]
    fn csv_round_trip_rebuilds_the_report() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let data = two_factor_data(40, 6, 15);
        let config = small_config();
        let report = run_sweep(&data, &config).unwrap();

        write_sweep(&report, &path).unwrap();
        let reloaded = load_sweep(&path, config.rolling_window).unwrap();
        assert_eq!(reloaded.trials, report.trials);
        assert_eq!(reloaded.summaries, report.summaries);
        assert_eq!(reloaded.grand_mean, report.grand_mean);
        assert_eq!(reloaded.recommended_dim, report.recommended_dim);

        // Writing the reload reproduces the bytes.
        let path2 = dir.path().join("sweep2.csv");
        write_sweep(&reloaded, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn load_rejects_malformed_tables() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, body: &str| {
            let path = dir.path().join(name);
            std::fs::write(&path, body).unwrap();
            path
        };
        let p = write("empty.csv", "latent_dim,trial,seed,mean_error\n");
        assert!(matches!(load_sweep(&p, 3).unwrap_err(), Error::Data(_)));
        let p = write(
            "negative.csv",
            "latent_dim,trial,seed,mean_error\n2,0,9,-1.0\n",
        );
        assert!(load_sweep(&p, 3).is_err());
        let p = write("missing.csv", "latent_dim,trial\n2,0\n");
        assert!(matches!(load_sweep(&p, 3).unwrap_err(), Error::MissingColumn(_)));
    }
}
