//! Audit an external detector's per-flow verdicts against this toolkit's
//! labels. The join is by flow id; the report separates agreement from the
//! two disagreement directions (their alarm on our benign flow, their pass
//! on our malicious flow) and counts what either side decided alone.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::{LabelOutcome, Verdict};
use crate::error::{Error, Result};
use crate::tabular;

/// One verdict from the external detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsDecision {
    pub flow_id: String,
    pub verdict: Verdict,
    /// Seconds (detector's own clock) when the verdict was issued.
    pub decision_time: f64,
    /// Packets the detector had seen at decision time, when reported.
    pub packets_seen: Option<u64>,
}

/// A detector's decision log; flow ids are unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsDecisionLog {
    pub decisions: Vec<IdsDecision>,
}

impl IdsDecisionLog {
    /// Wrap decisions, rejecting duplicate flow ids.
    pub fn from_decisions(decisions: Vec<IdsDecision>) -> Result<IdsDecisionLog> {
        let mut seen = HashSet::new();
        for decision in &decisions {
            if !seen.insert(decision.flow_id.as_str()) {
                return Err(Error::Data(format!(
                    "duplicate flow id in decision log: {:?}",
                    decision.flow_id
                )));
            }
        }
        Ok(IdsDecisionLog { decisions })
    }

    /// Load a decision CSV: flow_id, verdict, decision_time, and optionally
    /// packets_seen (empty cells mean "not reported").
    pub fn load(path: &Path) -> Result<IdsDecisionLog> {
        let mut reader = tabular::reader(path)?;
        let headers = tabular::headers_lower(&mut reader, path)?;
        for name in ["flow_id", "verdict", "decision_time"] {
            if !headers.iter().any(|h| h == name) {
                return Err(Error::MissingColumn(name.to_string()));
            }
        }
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (c_id, c_verdict, c_time) = (
            col("flow_id").expect("checked above"),
            col("verdict").expect("checked above"),
            col("decision_time").expect("checked above"),
        );
        let c_packets = col("packets_seen");

        let mut decisions = Vec::new();
        for (rownum, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                source: e,
            })?;
            let field = |idx: usize| record.get(idx).unwrap_or("").trim();
            let bad = |what: String| {
                Error::Data(format!("{}: row {}: {what}", path.display(), rownum + 2))
            };
            let decision_time: f64 = field(c_time)
                .parse()
                .map_err(|_| bad(format!("bad decision_time {:?}", field(c_time))))?;
            if !decision_time.is_finite() {
                return Err(bad(format!("decision_time must be finite, got {decision_time}")));
            }
            let packets_seen = match c_packets.map(field) {
                None | Some("") => None,
                Some(text) => Some(
                    text.parse::<u64>()
                        .map_err(|_| bad(format!("bad packets_seen {text:?}")))?,
                ),
            };
            decisions.push(IdsDecision {
                flow_id: field(c_id).to_string(),
                verdict: Verdict::parse(field(c_verdict))?,
                decision_time,
                packets_seen,
            });
        }
        IdsDecisionLog::from_decisions(decisions)
    }
}

/// Outcome of auditing a decision log against reference labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Flows decided by both sides.
    pub joined: usize,
    /// Fraction of joined flows with matching verdicts.
    pub agreement_rate: f64,
    pub both_benign: usize,
    pub both_malicious: usize,
    /// Detector said malicious, reference labeled benign.
    pub ids_malicious_reference_benign: usize,
    /// Detector said benign, reference labeled malicious.
    pub ids_benign_reference_malicious: usize,
    /// Flow ids behind the detector-alarm disagreements, reference order.
    pub false_alarm_ids: Vec<String>,
    /// Flow ids behind the detector-pass disagreements, reference order.
    pub missed_ids: Vec<String>,
    /// Detector decisions with no matching reference flow.
    pub unmatched_decisions: usize,
    /// Reference flows the detector never decided.
    pub unmatched_reference: usize,
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn id_list(ids: &[String]) -> String {
            const SHOWN: usize = 10;
            if ids.is_empty() {
                return String::new();
            }
            let mut text = format!(" ({}", ids[..ids.len().min(SHOWN)].join(", "));
            if ids.len() > SHOWN {
                text.push_str(&format!(", +{} more", ids.len() - SHOWN));
            }
            text.push(')');
            text
        }
        writeln!(f, "joined flows:                 {}", self.joined)?;
        writeln!(f, "agreement rate:               {:.4}", self.agreement_rate)?;
        writeln!(f, "both benign:                  {}", self.both_benign)?;
        writeln!(f, "both malicious:               {}", self.both_malicious)?;
        writeln!(
            f,
            "detector alarm, reference benign: {}{}",
            self.ids_malicious_reference_benign,
            id_list(&self.false_alarm_ids)
        )?;
        writeln!(
            f,
            "detector pass, reference malicious: {}{}",
            self.ids_benign_reference_malicious,
            id_list(&self.missed_ids)
        )?;
        writeln!(f, "detector-only decisions:      {}", self.unmatched_decisions)?;
        write!(f, "reference-only flows:         {}", self.unmatched_reference)
    }
}

/// Join a decision log with reference outcomes by flow id and tally the
/// verdict agreement. Reference ids must be unique; the join must be
/// non-empty, otherwise the audit answers nothing.
pub fn audit(log: &IdsDecisionLog, reference: &[LabelOutcome]) -> Result<AuditReport> {
    let mut seen = HashSet::new();
    for outcome in reference {
        if !seen.insert(outcome.flow_id.as_str()) {
            return Err(Error::Data(format!(
                "duplicate flow id in reference outcomes: {:?}",
                outcome.flow_id
            )));
        }
    }
    let by_id: HashMap<&str, &IdsDecision> = log
        .decisions
        .iter()
        .map(|d| (d.flow_id.as_str(), d))
        .collect();

    let mut report = AuditReport {
        joined: 0,
        agreement_rate: 0.0,
        both_benign: 0,
        both_malicious: 0,
        ids_malicious_reference_benign: 0,
        ids_benign_reference_malicious: 0,
        false_alarm_ids: Vec::new(),
        missed_ids: Vec::new(),
        unmatched_decisions: 0,
        unmatched_reference: 0,
    };
    for outcome in reference {
        let Some(decision) = by_id.get(outcome.flow_id.as_str()) else {
            report.unmatched_reference += 1;
            continue;
        };
        report.joined += 1;
        match (decision.verdict, outcome.predicted) {
            (Verdict::Benign, Verdict::Benign) => report.both_benign += 1,
            (Verdict::Malicious, Verdict::Malicious) => report.both_malicious += 1,
            (Verdict::Malicious, Verdict::Benign) => {
                report.ids_malicious_reference_benign += 1;
                report.false_alarm_ids.push(outcome.flow_id.clone());
            }
            (Verdict::Benign, Verdict::Malicious) => {
                report.ids_benign_reference_malicious += 1;
                report.missed_ids.push(outcome.flow_id.clone());
            }
        }
    }
    if report.joined == 0 {
        return Err(Error::Data(
            "no flow ids shared between the decision log and the reference outcomes".to_string(),
        ));
    }
    report.unmatched_decisions = log.decisions.len() - report.joined;
    report.agreement_rate =
        (report.both_benign + report.both_malicious) as f64 / report.joined as f64;
    Ok(report)
}
