//! Feature encoding, z-score standardization, and train/test splitting.
//!
//! Flows become numeric rows in three deterministic stages. IP columns turn
//! into four octet features each, categorical columns are one-hot encoded
//! against a vocabulary frozen at fit time (unseen categories become an
//! all-zero block), and numeric columns pass through. Standardization is
//! fitted on the training rows only and applied everywhere, so test data
//! never leaks into the model's notion of "normal".

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FeatureValue, FlowRecord, LabeledFlow, ScenarioLabel};
use crate::seed::seeded_rng;

/// A categorical column and its fit-time vocabulary (sorted, deduplicated).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub name: String,
    pub vocabulary: Vec<String>,
}

/// How each retained column is encoded. Column sets are disjoint and each
/// group is sorted by name, so the feature layout is a pure function of the
/// fitting data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingSpec {
    /// Encoded as four octet features each.
    pub ip_columns: Vec<String>,
    /// One-hot encoded against the stored vocabulary.
    pub categorical_columns: Vec<CategoricalColumn>,
    /// Numeric columns copied through unchanged.
    pub passthrough_columns: Vec<String>,
}

impl EncodingSpec {
    /// Total encoded width d.
    pub fn feature_count(&self) -> usize {
        self.ip_columns.len() * 4
            + self
                .categorical_columns
                .iter()
                .map(|c| c.vocabulary.len())
                .sum::<usize>()
            + self.passthrough_columns.len()
    }

    /// Names for every encoded feature, in output order.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.feature_count());
        for col in &self.ip_columns {
            for octet in 1..=4 {
                names.push(format!("{col}_oct{octet}"));
            }
        }
        for col in &self.categorical_columns {
            for value in &col.vocabulary {
                names.push(format!("{}={}", col.name, value));
            }
        }
        names.extend(self.passthrough_columns.iter().cloned());
        names
    }
}

/// Encoded samples: n rows of d finite features, with the scenario label of
/// each row carried alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
    pub labels: Vec<Option<ScenarioLabel>>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Feature count d.
    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    /// Copy out the given rows (in the given order) with their labels.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }
}

/// The value of one named column within one flow.
enum ColumnValue {
    Ip(Ipv4Addr),
    Number(f64),
    Text(String),
}

/// Fixed numeric flow fields, in the order they enter the passthrough block.
const CORE_NUMERIC: &[&str] = &[
    "src_port",
    "dst_port",
    "protocol",
    "start_time",
    "end_time",
    "duration",
    "packets_fwd",
    "packets_bwd",
    "bytes_fwd",
    "bytes_bwd",
    "fwd_min_ps",
    "fwd_max_ps",
    "fwd_mean_ps",
    "bwd_min_ps",
    "bwd_max_ps",
    "bwd_mean_ps",
    "syn_count",
    "ack_count",
    "psh_count",
    "rst_count",
    "fin_count",
    "urg_count",
];

fn core_value(flow: &FlowRecord, name: &str) -> Option<ColumnValue> {
    let v = match name {
        "src_ip" => return Some(ColumnValue::Ip(flow.src_ip())),
        "dst_ip" => return Some(ColumnValue::Ip(flow.dst_ip())),
        "src_port" => f64::from(flow.src_port()),
        "dst_port" => f64::from(flow.dst_port()),
        "protocol" => f64::from(flow.key.protocol),
        "start_time" => flow.start_time,
        "end_time" => flow.end_time,
        "duration" => flow.duration,
        "packets_fwd" => flow.fwd.packets as f64,
        "packets_bwd" => flow.bwd.packets as f64,
        "bytes_fwd" => flow.fwd.bytes as f64,
        "bytes_bwd" => flow.bwd.bytes as f64,
        "fwd_min_ps" => flow.fwd.min_ps,
        "fwd_max_ps" => flow.fwd.max_ps,
        "fwd_mean_ps" => flow.fwd.mean_ps,
        "bwd_min_ps" => flow.bwd.min_ps,
        "bwd_max_ps" => flow.bwd.max_ps,
        "bwd_mean_ps" => flow.bwd.mean_ps,
        "syn_count" => flow.flags.syn as f64,
        "ack_count" => flow.flags.ack as f64,
        "psh_count" => flow.flags.psh as f64,
        "rst_count" => flow.flags.rst as f64,
        "fin_count" => flow.flags.fin as f64,
        "urg_count" => flow.flags.urg as f64,
        _ => return None,
    };
    Some(ColumnValue::Number(v))
}

fn column_value(flow: &FlowRecord, name: &str) -> Option<ColumnValue> {
    if let Some(v) = core_value(flow, name) {
        return Some(v);
    }
    flow.extra.get(name).map(|v| match v {
        FeatureValue::Number(n) => ColumnValue::Number(*n),
        FeatureValue::Text(t) => match t.parse::<Ipv4Addr>() {
            Ok(ip) => ColumnValue::Ip(ip),
            Err(_) => ColumnValue::Text(t.clone()),
        },
    })
}

/// Decide how every retained column will be encoded, from the fitting data.
///
/// An extra column whose values are all numeric passes through; all-text
/// columns where every value parses as an IPv4 address become ip columns;
/// other all-text columns become categoricals with a lexicographic
/// vocabulary. A column mixing numbers and text is a hard error naming the
/// column — drop or clean it first.
pub fn fit_encoding(flows: &[LabeledFlow]) -> Result<EncodingSpec> {
    if flows.is_empty() {
        return Err(Error::InvalidParam(
            "cannot fit an encoding on an empty flow list".to_string(),
        ));
    }
    for lf in flows {
        for name in lf.flow.extra.keys() {
            if !flows[0].flow.extra.contains_key(name) {
                return Err(Error::MissingColumn(format!(
                    "{name} (present in some flows but not the first; unify columns before fitting)"
                )));
            }
        }
    }

    let mut ip_columns = vec!["src_ip".to_string(), "dst_ip".to_string()];
    let mut categorical_columns = Vec::new();
    let mut passthrough_columns: Vec<String> = CORE_NUMERIC.iter().map(|c| c.to_string()).collect();

    // The first flow fixes the extra-column set; every flow must match it.
    let extra_names: Vec<String> = flows[0].flow.extra.keys().cloned().collect();
    for name in &extra_names {
        let mut all_numeric = true;
        let mut all_text = true;
        let mut all_ip = true;
        let mut vocab: BTreeMap<&str, ()> = BTreeMap::new();
        for lf in flows {
            match lf.flow.extra.get(name) {
                Some(FeatureValue::Number(_)) => {
                    all_text = false;
                    all_ip = false;
                }
                Some(FeatureValue::Text(t)) => {
                    all_numeric = false;
                    if t.parse::<Ipv4Addr>().is_err() {
                        all_ip = false;
                    }
                    vocab.insert(t, ());
                }
                None => {
                    return Err(Error::MissingColumn(format!(
                        "{name} (absent from a flow in the fitting data)"
                    )))
                }
            }
        }
        if all_numeric {
            passthrough_columns.push(name.clone());
        } else if all_text && all_ip {
            ip_columns.push(name.clone());
        } else if all_text {
            categorical_columns.push(CategoricalColumn {
                name: name.clone(),
                vocabulary: vocab.keys().map(|k| k.to_string()).collect(),
            });
        } else {
            return Err(Error::MixedColumn(name.clone()));
        }
    }

    // Deterministic layout: sort each group by name (core names keep their
    // canonical positions by sorting only the extras appended after them).
    ip_columns[2..].sort_unstable();
    categorical_columns.sort_unstable_by(|a, b| a.name.cmp(&b.name));
    passthrough_columns[CORE_NUMERIC.len()..].sort_unstable();

    Ok(EncodingSpec {
        ip_columns,
        categorical_columns,
        passthrough_columns,
    })
}

/// Encode flows as numeric rows under a fitted spec. Row order is preserved
/// and labels are carried through.
///
/// Every column the spec names must be present; an in-vocabulary category
/// sets exactly one feature of its block to 1, an unseen category leaves
/// the whole block zero.
pub fn apply_encoding(spec: &EncodingSpec, flows: &[LabeledFlow]) -> Result<FeatureMatrix> {
    let width = spec.feature_count();
    let mut rows = Vec::with_capacity(flows.len());
    for lf in flows {
        let mut row = Vec::with_capacity(width);
        for col in &spec.ip_columns {
            match column_value(&lf.flow, col) {
                Some(ColumnValue::Ip(ip)) => {
                    row.extend(ip.octets().map(f64::from));
                }
                Some(_) => {
                    return Err(Error::Data(format!(
                        "column {col} does not hold an IPv4 address"
                    )))
                }
                None => return Err(Error::MissingColumn(col.clone())),
            }
        }
        for col in &spec.categorical_columns {
            let value = match column_value(&lf.flow, &col.name) {
                Some(ColumnValue::Text(t)) => Some(t),
                // An address or number showing up in a categorical column is
                // still a category — use its textual form.
                Some(ColumnValue::Ip(ip)) => Some(ip.to_string()),
                Some(ColumnValue::Number(_)) => {
                    return Err(Error::Data(format!(
                        "column {} holds a number but was fitted as categorical",
                        col.name
                    )))
                }
                None => return Err(Error::MissingColumn(col.name.clone())),
            };
            let hit = value
                .as_deref()
                .and_then(|v| col.vocabulary.binary_search_by(|probe| probe.as_str().cmp(v)).ok());
            for j in 0..col.vocabulary.len() {
                row.push(if Some(j) == hit { 1.0 } else { 0.0 });
            }
        }
        for col in &spec.passthrough_columns {
            match column_value(&lf.flow, col) {
                Some(ColumnValue::Number(v)) if v.is_finite() => row.push(v),
                Some(ColumnValue::Number(v)) => {
                    return Err(Error::Data(format!("column {col} holds non-finite value {v}")))
                }
                Some(_) => {
                    return Err(Error::Data(format!(
                        "column {col} holds text but was fitted as numeric"
                    )))
                }
                None => return Err(Error::MissingColumn(col.clone())),
            }
        }
        debug_assert_eq!(row.len(), width);
        rows.push(row);
    }
    Ok(FeatureMatrix {
        rows,
        feature_names: spec.feature_names(),
        labels: flows.iter().map(|lf| lf.label.clone()).collect(),
    })
}

/// Per-column centering and scaling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerParams {
    pub mean: Vec<f64>,
    /// Population standard deviation, with 1 substituted for constant
    /// columns so scaling never divides by zero.
    pub scale: Vec<f64>,
}

/// Fit per-column mean and population standard deviation on training rows.
pub fn fit_standardizer(matrix: &FeatureMatrix) -> Result<StandardizerParams> {
    let n = matrix.len();
    if n < 2 {
        return Err(Error::Data(format!(
            "standardizer needs at least 2 rows, got {n}"
        )));
    }
    let d = matrix.width();
    let mut mean = vec![0.0; d];
    for row in &matrix.rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut scale = vec![0.0; d];
    for row in &matrix.rows {
        for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
            let diff = v - m;
            *s += diff * diff;
        }
    }
    for s in scale.iter_mut() {
        *s = (*s / n as f64).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    Ok(StandardizerParams { mean, scale })
}

/// Apply `(x - mean) / scale` per column.
pub fn standardize(params: &StandardizerParams, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    if params.mean.len() != matrix.width() {
        return Err(Error::DimensionMismatch {
            expected: params.mean.len(),
            actual: matrix.width(),
        });
    }
    let rows = matrix
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(&params.mean)
                .zip(&params.scale)
                .map(|((v, m), s)| (v - m) / s)
                .collect()
        })
        .collect();
    Ok(FeatureMatrix {
        rows,
        feature_names: matrix.feature_names.clone(),
        labels: matrix.labels.clone(),
    })
}

/// Seeded train/test partition parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// Fraction of rows assigned to the test side, in (0, 1).
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Pick train/test row indices: a seeded uniform shuffle assigns
/// `round(n * test_fraction)` rows (at least 1, at most n-1) to test.
/// Both index lists come back sorted, so row order within a split is the
/// original order.
pub fn split_indices(n: usize, config: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::Data(format!(
            "need at least 2 rows to split, got {n}"
        )));
    }
    if !(config.test_fraction > 0.0 && config.test_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "test fraction must be in (0, 1), got {}",
            config.test_fraction
        )));
    }
    let k = ((n as f64 * config.test_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(config.seed));
    let mut test: Vec<usize> = order[..k].to_vec();
    let mut train: Vec<usize> = order[k..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Split a matrix into train and test parts (see [`split_indices`]).
pub fn split_train_test(
    matrix: &FeatureMatrix,
    config: &SplitConfig,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let (train, test) = split_indices(matrix.len(), config)?;
    Ok((matrix.select_rows(&train), matrix.select_rows(&test)))
}
