//! Dense symmetric autoencoder: d → H → L → H → d with ReLU activations,
//! trained by ADAM on batch-mean squared reconstruction error.
//!
//! The per-sample error is the *mean* over features of the squared
//! difference, so error thresholds keep their meaning when the feature
//! count changes. The output layer is ReLU like every other layer; since
//! standardized targets can be negative this floors reconstructable values
//! at 0 — `TrainConfig::linear_output` switches the last layer to identity
//! for experimentation, off by default.
//!
//! Everything here is deliberately deterministic: initialization and the
//! per-epoch shuffle both come from seeds derived from `TrainConfig::seed`,
//! so (data, config) fixes the trained parameters bit for bit.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::flow::FlowClass;
use crate::profile::{ErrorProfile, ProfileEntry};
use crate::seed::{derive_seed, seeded_rng};

/// Hidden width used when the caller does not choose one.
pub const DEFAULT_HIDDEN_DIM: usize = 80;
/// Latent width used when the caller does not choose one.
pub const DEFAULT_LATENT_DIM: usize = 41;

/// Layer sizes of the symmetric network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden_dim: usize, latent_dim: usize) -> Result<Architecture> {
        let arch = Architecture {
            input_dim,
            hidden_dim,
            latent_dim,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// The widths must nest: 1 ≤ L ≤ H ≤ d.
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim < 1
            || self.latent_dim > self.hidden_dim
            || self.hidden_dim > self.input_dim
        {
            return Err(Error::InvalidParam(format!(
                "architecture must satisfy 1 <= latent <= hidden <= input, got {}/{}/{}",
                self.latent_dim, self.hidden_dim, self.input_dim
            )));
        }
        Ok(())
    }

    /// (fan_in, fan_out) of the four affine layers.
    pub(crate) fn layer_dims(&self) -> [(usize, usize); 4] {
        let (d, h, l) = (self.input_dim, self.hidden_dim, self.latent_dim);
        [(d, h), (h, l), (l, h), (h, d)]
    }
}

/// One affine layer. `weights[i][j]` connects input unit i to output unit j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl LayerParams {
    fn zeros(fan_in: usize, fan_out: usize) -> LayerParams {
        LayerParams {
            weights: vec![vec![0.0; fan_out]; fan_in],
            biases: vec![0.0; fan_out],
        }
    }
}

/// Full network state. Also reused as the gradient container, since
/// gradients have exactly the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    pub arch: Architecture,
    /// The four layers, encoder first.
    pub layers: Vec<LayerParams>,
    /// When true the output layer is identity instead of ReLU.
    pub linear_output: bool,
}

impl AutoencoderParams {
    fn zeros_like(&self) -> AutoencoderParams {
        AutoencoderParams {
            arch: self.arch,
            layers: self
                .arch
                .layer_dims()
                .iter()
                .map(|&(fi, fo)| LayerParams::zeros(fi, fo))
                .collect(),
            linear_output: self.linear_output,
        }
    }
}

/// Training hyper-parameters. All values are persisted with the model so a
/// run can be reproduced from its artifact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    /// Clipped to the sample count when larger.
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epochs without a min_delta improvement before stopping.
    pub early_stop_patience: usize,
    pub early_stop_min_delta: f64,
    pub seed: u64,
    pub linear_output: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 100,
            learning_rate: 1e-3,
            batch_size: 32,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            early_stop_patience: 10,
            early_stop_min_delta: 1e-5,
            seed: 0,
            linear_output: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParam(format!("train config: {what}")));
        if self.max_epochs < 1 {
            return bad("max_epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive and finite");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) || !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive and finite");
        }
        if self.early_stop_patience < 1 {
            return bad("early_stop_patience must be at least 1");
        }
        if !(self.early_stop_min_delta > 0.0 && self.early_stop_min_delta.is_finite()) {
            return bad("early_stop_min_delta must be positive and finite");
        }
        Ok(())
    }
}

/// Why training ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    /// Mean per-sample reconstruction error over the full training set,
    /// evaluated after each epoch's updates.
    pub losses: Vec<f64>,
    /// Number of epochs actually run.
    pub stopped_epoch: usize,
    pub stop_reason: StopReason,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub best_loss: f64,
}

/// Glorot-uniform initialization: weights uniform in
/// ±sqrt(6 / (fan_in + fan_out)), biases zero, drawn deterministically from
/// the seed.
pub fn init_params(arch: &Architecture, seed: u64) -> Result<AutoencoderParams> {
    arch.validate()?;
    let mut rng = seeded_rng(seed);
    let layers = arch
        .layer_dims()
        .iter()
        .map(|&(fan_in, fan_out)| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            LayerParams {
                weights: (0..fan_in)
                    .map(|_| (0..fan_out).map(|_| rng.random_range(-bound..bound)).collect())
                    .collect(),
                biases: vec![0.0; fan_out],
            }
        })
        .collect();
    Ok(AutoencoderParams {
        arch: *arch,
        layers,
        linear_output: false,
    })
}

struct ForwardCache {
    /// activations[0] is the input; activations[k] the output of layer k.
    activations: Vec<Vec<f64>>,
    /// pre_acts[k] is layer k+1's affine output before its activation.
    pre_acts: Vec<Vec<f64>>,
}

fn forward_cached(params: &AutoencoderParams, x: &[f64]) -> Result<ForwardCache> {
    if x.len() != params.arch.input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.arch.input_dim,
            actual: x.len(),
        });
    }
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(5);
    activations.push(x.to_vec());
    let mut pre_acts: Vec<Vec<f64>> = Vec::with_capacity(4);
    for (li, layer) in params.layers.iter().enumerate() {
        let mut z = layer.biases.clone();
        let a_prev = activations.last().expect("seeded with the input");
        for (i, &ai) in a_prev.iter().enumerate() {
            if ai != 0.0 {
                for (zj, w) in z.iter_mut().zip(&layer.weights[i]) {
                    *zj += ai * w;
                }
            }
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite activation in layer {}",
                li + 1
            )));
        }
        let output_layer = li == params.layers.len() - 1;
        let act = if output_layer && params.linear_output {
            z.clone()
        } else {
            z.iter().map(|&v| v.max(0.0)).collect()
        };
        pre_acts.push(z);
        activations.push(act);
    }
    Ok(ForwardCache {
        activations,
        pre_acts,
    })
}

/// Reconstruct one sample.
pub fn forward(params: &AutoencoderParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(forward_cached(params, x)?
        .activations
        .pop()
        .expect("forward always yields an output"))
}

/// Per-sample anomaly score: mean over features of the squared
/// reconstruction difference.
pub fn reconstruction_error(params: &AutoencoderParams, x: &[f64]) -> Result<f64> {
    let xhat = forward(params, x)?;
    let d = x.len() as f64;
    Ok(x.iter().zip(&xhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / d)
}

/// Exact analytic gradient of batch-mean MSE. ReLU's subgradient at 0 is 0.
pub fn backward(params: &AutoencoderParams, batch: &[Vec<f64>]) -> Result<AutoencoderParams> {
    let rows: Vec<&[f64]> = batch.iter().map(|r| r.as_slice()).collect();
    backward_rows(params, &rows)
}

fn backward_rows(params: &AutoencoderParams, batch: &[&[f64]]) -> Result<AutoencoderParams> {
    if batch.is_empty() {
        return Err(Error::InvalidParam("gradient of an empty batch".to_string()));
    }
    let d = params.arch.input_dim as f64;
    let scale = 2.0 / (batch.len() as f64 * d);
    let mut grads = params.zeros_like();

    for &x in batch {
        let cache = forward_cached(params, x)?;
        let xhat = cache.activations.last().expect("output present");
        let mut delta: Vec<f64> = xhat.iter().zip(x).map(|(b, a)| scale * (b - a)).collect();
        for li in (0..params.layers.len()).rev() {
            let output_layer = li == params.layers.len() - 1;
            if !(output_layer && params.linear_output) {
                for (dj, &z) in delta.iter_mut().zip(&cache.pre_acts[li]) {
                    if z <= 0.0 {
                        *dj = 0.0;
                    }
                }
            }
            let a_prev = &cache.activations[li];
            let g = &mut grads.layers[li];
            for (gb, &dj) in g.biases.iter_mut().zip(&delta) {
                *gb += dj;
            }
            for (i, &ai) in a_prev.iter().enumerate() {
                if ai != 0.0 {
                    for (gw, &dj) in g.weights[i].iter_mut().zip(&delta) {
                        *gw += ai * dj;
                    }
                }
            }
            if li > 0 {
                let layer = &params.layers[li];
                delta = layer
                    .weights
                    .iter()
                    .map(|row| row.iter().zip(&delta).map(|(w, dj)| w * dj).sum())
                    .collect();
            }
        }
    }
    Ok(grads)
}

/// First/second moment accumulators, one pair per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<LayerParams>,
    v: Vec<LayerParams>,
}

impl AdamState {
    pub fn zeros(arch: &Architecture) -> AdamState {
        let layers: Vec<LayerParams> = arch
            .layer_dims()
            .iter()
            .map(|&(fi, fo)| LayerParams::zeros(fi, fo))
            .collect();
        AdamState {
            m: layers.clone(),
            v: layers,
        }
    }
}

/// Bias-corrected ADAM update of one flat parameter slice, in place.
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: usize,
    config: &TrainConfig,
) -> Result<()> {
    if t < 1 {
        return Err(Error::InvalidParam("adam step index starts at 1".to_string()));
    }
    let bias1 = 1.0 - config.beta1.powi(t as i32);
    let bias2 = 1.0 - config.beta2.powi(t as i32);
    for k in 0..param.len() {
        let g = grad[k];
        if !g.is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient component {g}")));
        }
        m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
        v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
        let m_hat = m[k] / bias1;
        let v_hat = v[k] / bias2;
        param[k] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    Ok(())
}

/// Apply one ADAM step to every layer. `t` counts update steps from 1.
pub fn adam_step(
    params: &mut AutoencoderParams,
    grads: &AutoencoderParams,
    state: &mut AdamState,
    t: usize,
    config: &TrainConfig,
) -> Result<()> {
    if grads.arch != params.arch || state.m.len() != params.layers.len() {
        return Err(Error::InvalidParam(
            "gradient/state shapes do not match the parameters".to_string(),
        ));
    }
    for (li, layer) in params.layers.iter_mut().enumerate() {
        for (i, row) in layer.weights.iter_mut().enumerate() {
            adam_update(
                row,
                &grads.layers[li].weights[i],
                &mut state.m[li].weights[i],
                &mut state.v[li].weights[i],
                t,
                config,
            )?;
        }
        adam_update(
            &mut layer.biases,
            &grads.layers[li].biases,
            &mut state.m[li].biases,
            &mut state.v[li].biases,
            t,
            config,
        )?;
    }
    Ok(())
}

/// Train on benign rows: seeded shuffle each epoch, mini-batch ADAM, early
/// stopping on the full-set loss, parameters returned from the best epoch.
///
/// Every row must carry a Benign label — the model's whole premise is that
/// it has only ever seen normal traffic.
pub fn train(
    data: &FeatureMatrix,
    arch: &Architecture,
    config: &TrainConfig,
) -> Result<(AutoencoderParams, TrainingHistory)> {
    config.validate()?;
    arch.validate()?;
    if data.is_empty() {
        return Err(Error::Data("training set is empty".to_string()));
    }
    if data.width() != arch.input_dim {
        return Err(Error::DimensionMismatch {
            expected: arch.input_dim,
            actual: data.width(),
        });
    }
    for label in &data.labels {
        match label {
            Some(l) if l.class == FlowClass::Benign => {}
            Some(l) => {
                return Err(Error::Data(format!(
                    "training row labeled {}; the model must see benign traffic only",
                    l.class
                )))
            }
            None => {
                return Err(Error::Data(
                    "unlabeled training row; training requires rows labeled benign".to_string(),
                ))
            }
        }
    }

    let n = data.len();
    let mut params = init_params(arch, derive_seed(config.seed, "init"))?;
    params.linear_output = config.linear_output;
    let mut state = AdamState::zeros(arch);
    let mut shuffle_rng = seeded_rng(derive_seed(config.seed, "shuffle"));
    let batch_size = config.batch_size.min(n);

    let mut order: Vec<usize> = (0..n).collect();
    let mut losses: Vec<f64> = Vec::new();
    let mut best: Option<(usize, f64, AutoencoderParams)> = None;
    let mut stall_best = f64::INFINITY;
    let mut stall = 0usize;
    let mut step = 0usize;
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(batch_size) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| data.rows[i].as_slice()).collect();
            let grads = backward_rows(&params, &rows)
                .map_err(|e| at_epoch(e, epoch))?;
            step += 1;
            adam_step(&mut params, &grads, &mut state, step, config)
                .map_err(|e| at_epoch(e, epoch))?;
        }
        // Full-set evaluation after the epoch's updates: the recorded loss
        // is exactly the mean per-sample error at these parameters.
        let mut epoch_loss = 0.0;
        for row in &data.rows {
            epoch_loss += reconstruction_error(&params, row).map_err(|e| at_epoch(e, epoch))?;
        }
        epoch_loss /= n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "training loss became non-finite at epoch {epoch}"
            )));
        }
        losses.push(epoch_loss);

        if best.as_ref().is_none_or(|(_, bl, _)| epoch_loss < *bl) {
            best = Some((epoch, epoch_loss, params.clone()));
        }
        if epoch_loss < stall_best - config.early_stop_min_delta {
            stall_best = epoch_loss;
            stall = 0;
        } else {
            stall += 1;
            if stall >= config.early_stop_patience {
                stop_reason = StopReason::EarlyStop;
                break;
            }
        }
    }

    let (best_epoch, best_loss, best_params) = best.expect("at least one epoch ran");
    let history = TrainingHistory {
        stopped_epoch: losses.len(),
        losses,
        stop_reason,
        best_epoch,
        best_loss,
    };
    Ok((best_params, history))
}

fn at_epoch(err: Error, epoch: usize) -> Error {
    match err {
        Error::Numeric(msg) => Error::Numeric(format!("{msg} (epoch {epoch})")),
        other => other,
    }
}

/// Score every sample of every named dataset with frozen parameters.
pub fn profile_errors(
    params: &AutoencoderParams,
    datasets: &[(&str, &FeatureMatrix)],
) -> Result<ErrorProfile> {
    let mut entries = Vec::new();
    for (tag, matrix) in datasets {
        if matrix.width() != params.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: params.arch.input_dim,
                actual: matrix.width(),
            });
        }
        for (index, row) in matrix.rows.iter().enumerate() {
            entries.push(ProfileEntry {
                tag: tag.to_string(),
                index,
                label: matrix.labels[index].clone(),
                error: reconstruction_error(params, row)?,
            });
        }
    }
    Ok(ErrorProfile::from_entries(entries))
}
