//! The trained-model artifact: one JSON file holding everything needed to
//! score new flows exactly as the training run did — architecture, training
//! configuration, feature encoding, standardizer, weights, and the loss
//! history. Reloading reproduces reconstruction errors bit for bit.

use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::autoencoder::{Architecture, AutoencoderParams, LayerParams, TrainConfig, TrainingHistory};
use crate::error::{Error, Result};
use crate::features::{EncodingSpec, StandardizerParams};

/// Provenance details stored alongside the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// Seed the training run was driven by.
    pub seed: u64,
    /// Creation time, RFC 3339 UTC. Honors `SOURCE_DATE_EPOCH` so builds
    /// that need byte-identical artifacts can pin it.
    pub created: String,
    /// Width of the encoded feature vector.
    pub feature_count: usize,
}

/// Serialized form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub architecture: Architecture,
    pub train_config: TrainConfig,
    pub encoding: EncodingSpec,
    pub standardizer: StandardizerParams,
    pub weights: Vec<LayerParams>,
    pub history: TrainingHistory,
    pub metadata: ModelMetadata,
}

impl ModelFile {
    /// Assemble an artifact from the pieces a training run produces.
    pub fn new(
        params: AutoencoderParams,
        train_config: TrainConfig,
        encoding: EncodingSpec,
        standardizer: StandardizerParams,
        history: TrainingHistory,
    ) -> Result<ModelFile> {
        let model = ModelFile {
            architecture: params.arch,
            metadata: ModelMetadata {
                seed: train_config.seed,
                created: timestamp(),
                feature_count: params.arch.input_dim,
            },
            train_config,
            encoding,
            standardizer,
            weights: params.layers,
            history,
        };
        model.validate()?;
        Ok(model)
    }

    /// Rebuild runnable network parameters from the stored weights.
    pub fn to_params(&self) -> AutoencoderParams {
        AutoencoderParams {
            arch: self.architecture,
            layers: self.weights.clone(),
            linear_output: self.train_config.linear_output,
        }
    }

    /// Internal consistency: layer shapes match the architecture, and the
    /// encoding, standardizer and metadata agree on the feature width.
    pub fn validate(&self) -> Result<()> {
        self.architecture.validate()?;
        let dims = self.architecture.layer_dims();
        if self.weights.len() != dims.len() {
            return Err(Error::Data(format!(
                "model stores {} layers, architecture expects {}",
                self.weights.len(),
                dims.len()
            )));
        }
        for (li, (layer, &(fan_in, fan_out))) in self.weights.iter().zip(&dims).enumerate() {
            if layer.weights.len() != fan_in
                || layer.biases.len() != fan_out
                || layer.weights.iter().any(|row| row.len() != fan_out)
            {
                return Err(Error::Data(format!(
                    "layer {} shape does not match the architecture ({}x{})",
                    li + 1,
                    fan_in,
                    fan_out
                )));
            }
        }
        let d = self.architecture.input_dim;
        for (what, width) in [
            ("encoding", self.encoding.feature_count()),
            ("standardizer", self.standardizer.mean.len()),
            ("metadata", self.metadata.feature_count),
        ] {
            if width != d {
                return Err(Error::Data(format!(
                    "{what} covers {width} features, architecture expects {d}"
                )));
            }
        }
        if self.history.losses.is_empty()
            || self.history.best_epoch < 1
            || self.history.best_epoch > self.history.losses.len()
        {
            return Err(Error::Data(
                "training history is empty or its best epoch is out of range".to_string(),
            ));
        }
        Ok(())
    }

    /// Write the artifact as pretty-printed JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let mut body = serde_json::to_string_pretty(self).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        body.push('\n');
        std::fs::write(path, body).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    /// Reload and re-validate an artifact.
    pub fn load(path: &Path) -> Result<ModelFile> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let body = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let model: ModelFile = serde_json::from_str(&body).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        model.validate()?;
        Ok(model)
    }
}

/// RFC 3339 UTC timestamp, overridable through `SOURCE_DATE_EPOCH`.
fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok());
    format_epoch(pinned)
}

fn format_epoch(epoch: Option<i64>) -> String {
    let time: DateTime<Utc> = match epoch.and_then(|e| DateTime::from_timestamp(e, 0)) {
        Some(t) => t,
        None => Utc::now(),
    };
    time.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::{init_params, reconstruction_error, train};
    use crate::features::{fit_standardizer, CategoricalColumn, FeatureMatrix};
    use crate::flow::{ChargingState, ScenarioLabel};
    use crate::seed::seeded_rng;
    use rand::Rng;

    /// Encoding with no IP or categorical columns: d passthrough features.
    fn passthrough_encoding(names: &[String]) -> EncodingSpec {
        EncodingSpec {
            ip_columns: Vec::new(),
            categorical_columns: Vec::new(),
            passthrough_columns: names.to_vec(),
        }
    }

    fn trained_model(seed: u64) -> (ModelFile, FeatureMatrix) {
        let mut rng = seeded_rng(seed);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..6).map(|_| 4.0 + rng.random_range(-1.0..1.0)).collect())
            .collect();
        let data = FeatureMatrix {
            labels: vec![Some(ScenarioLabel::benign(ChargingState::Idle)); rows.len()],
            feature_names: (0..6).map(|j| format!("f{j}")).collect(),
            rows,
        };
        let config = TrainConfig {
            max_epochs: 8,
            seed,
            ..TrainConfig::default()
        };
        let arch = Architecture::new(6, 4, 2).unwrap();
        let (params, history) = train(&data, &arch, &config).unwrap();
        let standardizer = fit_standardizer(&data).unwrap();
        let model = ModelFile::new(
            params,
            config,
            passthrough_encoding(&data.feature_names),
            standardizer,
            history,
        )
        .unwrap();
        (model, data)
    }

    #[test]
    fn save_load_reproduces_scores_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let (model, data) = trained_model(11);
        model.save(&path).unwrap();
        let reloaded = ModelFile::load(&path).unwrap();
        assert_eq!(reloaded, model);

        let before = model.to_params();
        let after = reloaded.to_params();
        for row in &data.rows {
            assert_eq!(
                reconstruction_error(&before, row).unwrap(),
                reconstruction_error(&after, row).unwrap()
            );
        }
    }

    #[test]
    fn load_rejects_missing_file_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            ModelFile::load(&dir.path().join("absent.json")).unwrap_err(),
            Error::MissingFile(_)
        ));
        let path = dir.path().join("garbage.json");
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(
            ModelFile::load(&path).unwrap_err(),
            Error::Json { .. }
        ));
    }

    #[test]
    fn validate_catches_shape_drift() {
        let (mut model, _) = trained_model(12);
        model.weights[1].biases.pop();
        assert!(model.validate().is_err());

        let (mut model, _) = trained_model(12);
        model.metadata.feature_count = 7;
        assert!(model.validate().is_err());

        let (mut model, _) = trained_model(12);
        model.standardizer.mean.push(0.0);
        assert!(model.validate().is_err());

        let (mut model, _) = trained_model(12);
        model.history.best_epoch = 99;
        assert!(model.validate().is_err());
    }

    #[test]
    fn validate_accepts_a_fresh_untrained_shell() {
        // A model assembled straight from init_params is structurally valid.
        let arch = Architecture::new(5, 3, 2).unwrap();
        let params = init_params(&arch, 0).unwrap();
        let names: Vec<String> = (0..5).map(|j| format!("f{j}")).collect();
        let model = ModelFile::new(
            params,
            TrainConfig::default(),
            passthrough_encoding(&names),
            StandardizerParams {
                mean: vec![0.0; 5],
                scale: vec![1.0; 5],
            },
            TrainingHistory {
                losses: vec![1.0],
                stopped_epoch: 1,
                stop_reason: crate::autoencoder::StopReason::MaxEpochs,
                best_epoch: 1,
                best_loss: 1.0,
            },
        );
        assert!(model.is_ok());
    }

    #[test]
    fn encoding_width_mismatch_is_rejected() {
        let (model, _) = trained_model(13);
        let mut bad = model.clone();
        // One IP block (4) plus a 3-word vocabulary: 7 features, not 6.
        bad.encoding = EncodingSpec {
            ip_columns: vec!["src_ip".to_string()],
            categorical_columns: vec![CategoricalColumn {
                name: "proto_name".to_string(),
                vocabulary: vec!["icmp".to_string(), "tcp".to_string(), "udp".to_string()],
            }],
            passthrough_columns: Vec::new(),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn pinned_epoch_formats_as_rfc3339_utc() {
        assert_eq!(format_epoch(Some(0)), "1970-01-01T00:00:00Z");
        assert_eq!(format_epoch(Some(1_700_000_000)), "2023-11-14T22:13:20Z");
        // Unpinned time still renders in the same shape.
        let now = format_epoch(None);
        assert!(now.ends_with('Z') && now.len() == 20, "unexpected shape: {now}");
    }
}
