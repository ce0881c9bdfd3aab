//! Reconstruction-error profiles: per-sample scores grouped under dataset
//! tags, with nearest-rank percentile summaries and a CSV artifact format
//! that reloads bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{ChargingState, FlowClass, ScenarioLabel};
use crate::tabular;

/// One scored sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    /// Dataset tag the sample came from (e.g. "train-benign").
    pub tag: String,
    /// Row index within its dataset.
    pub index: usize,
    pub label: Option<ScenarioLabel>,
    /// Mean squared reconstruction difference for this sample.
    pub error: f64,
}

/// Distribution summary of one tag's errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagSummary {
    pub tag: String,
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
}

/// All scored samples plus per-tag summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub entries: Vec<ProfileEntry>,
    /// One summary per tag, in first-appearance order.
    pub summaries: Vec<TagSummary>,
}

/// Nearest-rank percentile of an ascending slice: the smallest value with at
/// least q percent of the sample at or below it.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = ((q * n as f64) / 100.0).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

impl ErrorProfile {
    /// Build a profile, computing one summary per tag. Tag order follows
    /// first appearance; the mean is accumulated in entry order.
    pub fn from_entries(entries: Vec<ProfileEntry>) -> ErrorProfile {
        let mut tags: Vec<&str> = Vec::new();
        for entry in &entries {
            if !tags.iter().any(|t| *t == entry.tag) {
                tags.push(&entry.tag);
            }
        }
        let summaries = tags
            .iter()
            .map(|tag| {
                let errors: Vec<f64> = entries
                    .iter()
                    .filter(|e| e.tag == *tag)
                    .map(|e| e.error)
                    .collect();
                let mut sorted = errors.clone();
                sorted.sort_by(f64::total_cmp);
                TagSummary {
                    tag: tag.to_string(),
                    count: errors.len(),
                    min: sorted[0],
                    mean: errors.iter().sum::<f64>() / errors.len() as f64,
                    max: sorted[sorted.len() - 1],
                    p50: nearest_rank(&sorted, 50.0),
                    p95: nearest_rank(&sorted, 95.0),
                    p99: nearest_rank(&sorted, 99.0),
                }
            })
            .collect();
        ErrorProfile { entries, summaries }
    }

    /// Summary for one tag, if the profile has samples under it.
    pub fn summary_for(&self, tag: &str) -> Option<&TagSummary> {
        self.summaries.iter().find(|s| s.tag == tag)
    }

    /// Entries restricted to one tag.
    pub fn entries_for(&self, tag: &str) -> Vec<&ProfileEntry> {
        self.entries.iter().filter(|e| e.tag == tag).collect()
    }
}

/// Write a profile as CSV: tag, index, class, attack, state, error. Label
/// columns stay empty for unlabeled samples. Floats use the shortest
/// round-trip form, so a reload reproduces them exactly.
pub fn write_profile(profile: &ErrorProfile, path: &Path) -> Result<()> {
    let mut writer = tabular::writer(path)?;
    let wrap = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    writer
        .write_record(["tag", "index", "class", "attack", "state", "error"])
        .map_err(wrap)?;
    for entry in &profile.entries {
        let (class, attack, state) = match &entry.label {
            Some(label) => (
                label.class.to_string(),
                label.attack.clone(),
                label.state.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        writer
            .write_record([
                entry.tag.as_str(),
                &entry.index.to_string(),
                &class,
                &attack,
                &state,
                &tabular::fmt_float(entry.error),
            ])
            .map_err(wrap)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Reload a profile CSV. Summaries are recomputed from the entries, so they
/// always agree with the rows on disk. Rows must parse — this reads our own
/// artifact format, not third-party exports.
pub fn load_profile(path: &Path) -> Result<ErrorProfile> {
    let mut reader = tabular::reader(path)?;
    let headers = tabular::headers_lower(&mut reader, path)?;
    let expect = ["tag", "index", "class", "attack", "state", "error"];
    for name in expect {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).expect("checked above");
    let (c_tag, c_index, c_class, c_attack, c_state, c_error) = (
        col("tag"),
        col("index"),
        col("class"),
        col("attack"),
        col("state"),
        col("error"),
    );

    let mut entries = Vec::new();
    for (rownum, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();
        let bad = |what: String| Error::Data(format!("{}: row {}: {what}", path.display(), rownum + 2));

        let index: usize = field(c_index)
            .parse()
            .map_err(|_| bad(format!("bad index {:?}", field(c_index))))?;
        let error: f64 = field(c_error)
            .parse()
            .map_err(|_| bad(format!("bad error {:?}", field(c_error))))?;
        if !error.is_finite() || error < 0.0 {
            return Err(bad(format!("error must be finite and non-negative, got {error}")));
        }

        let (class, attack, state) = (field(c_class), field(c_attack), field(c_state));
        let label = if class.is_empty() && attack.is_empty() && state.is_empty() {
            None
        } else if class.is_empty() || attack.is_empty() || state.is_empty() {
            return Err(bad(
                "partial label: class, attack and state must all be set or all empty".to_string(),
            ));
        } else {
            let label = ScenarioLabel {
                class: FlowClass::parse(class)?,
                attack: attack.to_string(),
                state: ChargingState::parse(state)?,
            };
            label.validate()?;
            Some(label)
        };
        entries.push(ProfileEntry {
            tag: field(c_tag).to_string(),
            index,
            label,
            error,
        });
    }
    Ok(ErrorProfile::from_entries(entries))
}
