//! Decision boundaries over reconstruction error.
//!
//! The naive rule accepts one closed interval [0, τ]. The refined rule
//! additionally carves closed acceptance intervals around tight clusters of
//! *benign* calibration errors that landed above τ — retraining is not
//! required to stop a recurring benign mode from alarming. The benign region
//! is always a union of disjoint closed intervals starting at [0, τ]; any
//! error outside it is labeled malicious.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowClass;
use crate::profile::ErrorProfile;
use crate::tabular;

/// Binary traffic verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Benign,
    Malicious,
}

impl Verdict {
    pub fn parse(text: &str) -> Result<Verdict> {
        match text.trim().to_ascii_lowercase().as_str() {
            "benign" => Ok(Verdict::Benign),
            "malicious" => Ok(Verdict::Malicious),
            other => Err(Error::Data(format!("unknown verdict: {other:?}"))),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Benign => write!(f, "benign"),
            Verdict::Malicious => write!(f, "malicious"),
        }
    }
}

/// Closed interval [lo, hi]; serializes as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<(f64, f64)> for Interval {
    fn from((lo, hi): (f64, f64)) -> Interval {
        Interval { lo, hi }
    }
}

impl From<Interval> for (f64, f64) {
    fn from(iv: Interval) -> (f64, f64) {
        (iv.lo, iv.hi)
    }
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && 0.0 <= self.lo && self.lo <= self.hi) {
            return Err(Error::Data(format!(
                "interval [{}, {}] must be finite, non-negative and ordered",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// Which calibration produced a boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Naive,
    Refined,
}

/// Calibration parameters, stored with the boundary. The clustering knobs
/// stay null on naive boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    pub tau: f64,
    pub gap: Option<f64>,
    pub margin: Option<f64>,
    pub max_width: Option<f64>,
}

/// The benign region: disjoint closed intervals in ascending order, the
/// first of which is always [0, τ].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionBoundary {
    pub kind: BoundaryKind,
    #[serde(rename = "intervals")]
    pub benign_intervals: Vec<Interval>,
    pub params: BoundaryParams,
}

impl DecisionBoundary {
    /// True when the error falls in some benign interval.
    pub fn contains(&self, error: f64) -> bool {
        self.benign_intervals.iter().any(|iv| iv.contains(error))
    }

    /// Label one reconstruction error. NaN and negative scores are refused —
    /// they signal an upstream defect, not malicious traffic.
    pub fn classify(&self, error: f64) -> Result<Verdict> {
        if error.is_nan() || error < 0.0 {
            return Err(Error::Data(format!(
                "reconstruction error must be a non-negative number, got {error}"
            )));
        }
        Ok(if self.contains(error) {
            Verdict::Benign
        } else {
            Verdict::Malicious
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.params.tau.is_finite() && self.params.tau > 0.0) {
            return Err(Error::InvalidParam(format!(
                "tau must be positive and finite, got {}",
                self.params.tau
            )));
        }
        match self.kind {
            BoundaryKind::Naive => {
                if self.params.gap.is_some()
                    || self.params.margin.is_some()
                    || self.params.max_width.is_some()
                {
                    return Err(Error::Data(
                        "naive boundary must not carry clustering parameters".to_string(),
                    ));
                }
            }
            BoundaryKind::Refined => {
                let (gap, margin, max_width) = match (
                    self.params.gap,
                    self.params.margin,
                    self.params.max_width,
                ) {
                    (Some(g), Some(m), Some(w)) => (g, m, w),
                    _ => {
                        return Err(Error::Data(
                            "refined boundary must carry gap, margin and max_width".to_string(),
                        ))
                    }
                };
                validate_refine_knobs(gap, margin, max_width)?;
            }
        }
        if self.benign_intervals.is_empty() {
            return Err(Error::Data("boundary has no benign intervals".to_string()));
        }
        if self.benign_intervals[0].lo != 0.0 {
            return Err(Error::Data(
                "the first benign interval must start at 0".to_string(),
            ));
        }
        for iv in &self.benign_intervals {
            iv.validate()?;
        }
        for pair in self.benign_intervals.windows(2) {
            if pair[1].lo <= pair[0].hi {
                return Err(Error::Data(format!(
                    "benign intervals must be disjoint and ascending: [{}, {}] then [{}, {}]",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        Ok(())
    }

    /// Write the boundary as pretty-printed JSON.
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

    pub fn load(path: &Path) -> Result<DecisionBoundary> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let body = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let boundary: DecisionBoundary = serde_json::from_str(&body).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        boundary.validate()?;
        Ok(boundary)
    }
}

fn validate_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParam(format!(
            "tau must be positive and finite, got {tau}"
        )));
    }
    Ok(())
}

fn validate_refine_knobs(gap: f64, margin: f64, max_width: f64) -> Result<()> {
    if !(gap.is_finite() && gap > 0.0) {
        return Err(Error::InvalidParam(format!(
            "cluster gap must be positive and finite, got {gap}"
        )));
    }
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "interval margin must be non-negative and finite, got {margin}"
        )));
    }
    if !(max_width.is_finite() && max_width > 0.0) {
        return Err(Error::InvalidParam(format!(
            "max cluster width must be positive and finite, got {max_width}"
        )));
    }
    Ok(())
}

/// Single benign interval [0, τ].
pub fn calibrate_naive(tau: f64) -> Result<DecisionBoundary> {
    validate_tau(tau)?;
    Ok(DecisionBoundary {
        kind: BoundaryKind::Naive,
        benign_intervals: vec![Interval { lo: 0.0, hi: tau }],
        params: BoundaryParams {
            tau,
            gap: None,
            margin: None,
            max_width: None,
        },
    })
}

/// Naive boundary plus carve intervals around clustered benign calibration
/// errors above τ.
///
/// Errors above τ are sorted and single-linkage clustered: a gap wider than
/// `gap` starts a new cluster. Clusters whose span stays within `max_width`
/// become closed intervals padded by `margin` (clamped at 0); wider clusters
/// are too diffuse to trust and are skipped. Overlapping or touching
/// intervals merge, including into [0, τ] itself.
///
/// Calibration samples must all be benign — carving around malicious errors
/// would whitelist attacks.
pub fn calibrate_refined(
    samples: &[(f64, FlowClass)],
    tau: f64,
    gap: f64,
    margin: f64,
    max_width: f64,
) -> Result<DecisionBoundary> {
    validate_tau(tau)?;
    validate_refine_knobs(gap, margin, max_width)?;
    for &(error, class) in samples {
        if class != FlowClass::Benign {
            return Err(Error::Data(format!(
                "refined calibration saw a {class} sample; it accepts benign errors only"
            )));
        }
        if !(error.is_finite() && error >= 0.0) {
            return Err(Error::Data(format!(
                "calibration error must be finite and non-negative, got {error}"
            )));
        }
    }

    let mut above: Vec<f64> = samples
        .iter()
        .map(|&(e, _)| e)
        .filter(|&e| e > tau)
        .collect();
    above.sort_by(f64::total_cmp);

    let mut intervals = vec![Interval { lo: 0.0, hi: tau }];
    let mut cluster: Vec<f64> = Vec::new();
    let flush = |cluster: &mut Vec<f64>, intervals: &mut Vec<Interval>| {
        if let (Some(&lo), Some(&hi)) = (cluster.first(), cluster.last()) {
            if hi - lo <= max_width {
                intervals.push(Interval {
                    lo: (lo - margin).max(0.0),
                    hi: hi + margin,
                });
            }
        }
        cluster.clear();
    };
    for &e in &above {
        if cluster.last().is_some_and(|&prev| e - prev > gap) {
            flush(&mut cluster, &mut intervals);
        }
        cluster.push(e);
    }
    flush(&mut cluster, &mut intervals);

    Ok(DecisionBoundary {
        kind: BoundaryKind::Refined,
        benign_intervals: merge_intervals(intervals),
        params: BoundaryParams {
            tau,
            gap: Some(gap),
            margin: Some(margin),
            max_width: Some(max_width),
        },
    })
}

/// Merge overlapping or touching closed intervals into a sorted disjoint set.
fn merge_intervals(mut intervals: Vec<Interval>) -> Vec<Interval> {
    intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
    for iv in intervals {
        match merged.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => merged.push(iv),
        }
    }
    merged
}

/// Confusion counts and derived rates; malicious is the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub total: usize,
    pub true_positives: usize,
    pub true_negatives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    /// tp / (tp + fp); 1.0 when nothing was predicted malicious.
    pub precision: f64,
    /// tp / (tp + fn); 1.0 when no malicious samples were present.
    pub recall: f64,
    /// fp / (fp + tn); 0.0 when no benign samples were present.
    pub false_positive_rate: f64,
    /// tn / (tn + fp); 1.0 when no benign samples were present.
    pub benign_accuracy: f64,
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples:             {}", self.total)?;
        writeln!(
            f,
            "confusion:           tp={} tn={} fp={} fn={}",
            self.true_positives, self.true_negatives, self.false_positives, self.false_negatives
        )?;
        writeln!(f, "accuracy:            {:.4}", self.accuracy)?;
        writeln!(f, "precision:           {:.4}", self.precision)?;
        writeln!(f, "recall:              {:.4}", self.recall)?;
        writeln!(f, "false positive rate: {:.4}", self.false_positive_rate)?;
        write!(f, "benign accuracy:     {:.4}", self.benign_accuracy)
    }
}

fn metrics_from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> MetricsReport {
    let total = tp + tn + fp + fn_;
    let ratio = |num: usize, den: usize, vacuous: f64| {
        if den == 0 {
            vacuous
        } else {
            num as f64 / den as f64
        }
    };
    MetricsReport {
        total,
        true_positives: tp,
        true_negatives: tn,
        false_positives: fp,
        false_negatives: fn_,
        accuracy: ratio(tp + tn, total, 1.0),
        precision: ratio(tp, tp + fp, 1.0),
        recall: ratio(tp, tp + fn_, 1.0),
        false_positive_rate: ratio(fp, fp + tn, 0.0),
        benign_accuracy: ratio(tn, tn + fp, 1.0),
    }
}

/// Score a labeled error profile against a boundary. Every entry must carry
/// ground truth; malicious classes count as the positive class.
pub fn evaluate(boundary: &DecisionBoundary, profile: &ErrorProfile) -> Result<MetricsReport> {
    if profile.entries.is_empty() {
        return Err(Error::Data("cannot evaluate an empty profile".to_string()));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for entry in &profile.entries {
        let truth = entry.label.as_ref().ok_or_else(|| {
            Error::Data(format!(
                "profile entry {}:{} has no ground-truth label",
                entry.tag, entry.index
            ))
        })?;
        let predicted = boundary.classify(entry.error)?;
        match (predicted, truth.class.is_malicious()) {
            (Verdict::Malicious, true) => tp += 1,
            (Verdict::Benign, false) => tn += 1,
            (Verdict::Malicious, false) => fp += 1,
            (Verdict::Benign, true) => fn_ += 1,
        }
    }
    Ok(metrics_from_counts(tp, tn, fp, fn_))
}

/// One labeled flow as written to a labels table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelOutcome {
    pub flow_id: String,
    pub error: f64,
    pub predicted: Verdict,
    /// Ground-truth class when the input carried one.
    pub truth: Option<FlowClass>,
}

/// Metrics over labeled outcomes; every outcome must carry ground truth.
pub fn evaluate_outcomes(outcomes: &[LabelOutcome]) -> Result<MetricsReport> {
    if outcomes.is_empty() {
        return Err(Error::Data("cannot evaluate zero outcomes".to_string()));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for outcome in outcomes {
        let truth = outcome.truth.ok_or_else(|| {
            Error::Data(format!("outcome {} has no ground truth", outcome.flow_id))
        })?;
        match (outcome.predicted, truth.is_malicious()) {
            (Verdict::Malicious, true) => tp += 1,
            (Verdict::Benign, false) => tn += 1,
            (Verdict::Malicious, false) => fp += 1,
            (Verdict::Benign, true) => fn_ += 1,
        }
    }
    Ok(metrics_from_counts(tp, tn, fp, fn_))
}

/// Write labeled outcomes as CSV: flow_id, error, predicted, truth. The
/// truth column stays empty when no ground truth was known.
pub fn write_labels(outcomes: &[LabelOutcome], path: &Path) -> Result<()> {
    let mut writer = tabular::writer(path)?;
    let wrap = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    };
    writer
        .write_record(["flow_id", "error", "predicted", "truth"])
        .map_err(wrap)?;
    for outcome in outcomes {
        writer
            .write_record([
                outcome.flow_id.as_str(),
                &tabular::fmt_float(outcome.error),
                &outcome.predicted.to_string(),
                &outcome.truth.map(|c| c.to_string()).unwrap_or_default(),
            ])
            .map_err(wrap)?;
    }
    writer.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Reload a labels table written by `write_labels`, exactly.
pub fn load_labels(path: &Path) -> Result<Vec<LabelOutcome>> {
    let mut reader = tabular::reader(path)?;
    let headers = tabular::headers_lower(&mut reader, path)?;
    for name in ["flow_id", "error", "predicted", "truth"] {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::MissingColumn(name.to_string()));
        }
    }
    let col = |name: &str| headers.iter().position(|h| h == name).expect("checked above");
    let (c_id, c_error, c_pred, c_truth) = (col("flow_id"), col("error"), col("predicted"), col("truth"));

    let mut outcomes = Vec::new();
    for (rownum, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();
        let bad =
            |what: String| Error::Data(format!("{}: row {}: {what}", path.display(), rownum + 2));
        let error: f64 = field(c_error)
            .parse()
            .map_err(|_| bad(format!("bad error {:?}", field(c_error))))?;
        if !(error.is_finite() && error >= 0.0) {
            return Err(bad(format!("error must be finite and non-negative, got {error}")));
        }
        let truth = match field(c_truth) {
            "" => None,
            text => Some(FlowClass::parse(text)?),
        };
        outcomes.push(LabelOutcome {
            flow_id: field(c_id).to_string(),
            error,
            predicted: Verdict::parse(field(c_pred))?,
            truth,
        });
    }
    Ok(outcomes)
}
