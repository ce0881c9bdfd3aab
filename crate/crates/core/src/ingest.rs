//! Dataset manifests, flow/packet table io, and column pruning.
//!
//! Capture datasets arrive as one CSV per scenario plus a JSON manifest
//! mapping each file to its scenario label. Loading is deliberately
//! tolerant: a row with an unparseable core cell is rejected and counted
//! rather than failing the file, because labeling pipelines must survive
//! dirty captures. Missing core *columns* fall back to defaults and are
//! reported per file.
//!
//! Core flow statistics load into [`FlowRecord`]'s fixed fields; every other
//! column rides along in the `extra` map (numeric when the cell parses as a
//! finite float, text otherwise, empty cells as empty text) so wide export
//! schemas work without hard-coding their names.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::flow::{
    ChargingState, DirectionStats, FeatureValue, FlowClass, FlowKey, FlowRecord, LabeledFlow,
    PacketRecord, ScenarioLabel, TcpFlagCounts,
};
use crate::tabular;

/// Fixed flow fields in canonical write order. These names are load bearing
/// and can never be dropped.
pub const CORE_COLUMNS: &[&str] = &[
    "src_ip",
    "dst_ip",
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

/// Columns that leak identity or tool guesses rather than behavior: the row
/// id, MAC-vendor prefixes, and the exporter's application guesses. Used as
/// the default drop list; callers can always supply their own.
pub const DEFAULT_DROP_COLUMNS: &[&str] = &[
    "id",
    "src_oui",
    "dst_oui",
    "application_name",
    "application_category_name",
    "application_is_guessed",
    "application_confidence",
];

const LABEL_COLUMNS: [&str; 3] = ["label_class", "label_attack", "label_state"];

/// Which hardware testbed a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Testbed {
    EvseA,
    EvseB,
}

impl Testbed {
    pub fn parse(text: &str) -> Result<Testbed> {
        match text.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "EVSE_A" => Ok(Testbed::EvseA),
            "EVSE_B" => Ok(Testbed::EvseB),
            other => Err(Error::Data(format!("unknown testbed: {other:?}"))),
        }
    }
}

impl fmt::Display for Testbed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Testbed::EvseA => write!(f, "EVSE_A"),
            Testbed::EvseB => write!(f, "EVSE_B"),
        }
    }
}

/// One manifest row: a flow or packet table and the label all its rows get.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: ScenarioLabel,
}

/// A dataset: labeled capture files from one testbed.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub testbed: Testbed,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct EntryRepr {
    path: String,
    class: String,
    attack: String,
    state: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestRepr {
    Bare(Vec<EntryRepr>),
    Tagged {
        testbed: String,
        entries: Vec<EntryRepr>,
    },
}

impl DatasetManifest {
    /// Read a manifest file. Accepts either a bare JSON array of entries
    /// (testbed defaults to EVSE_A) or `{"testbed": ..., "entries": [...]}`.
    /// Relative entry paths are resolved against the manifest's directory.
    pub fn from_path(path: &Path) -> Result<DatasetManifest> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text, path.parent()).map_err(|err| match err {
            Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parse manifest JSON; `base_dir`, when given, anchors relative paths.
    pub fn from_json_str(text: &str, base_dir: Option<&Path>) -> Result<DatasetManifest> {
        let repr: ManifestRepr = serde_json::from_str(text)
            .map_err(|err| Error::Data(format!("manifest is not valid JSON: {err}")))?;
        let (testbed, entries) = match repr {
            ManifestRepr::Bare(entries) => (Testbed::EvseA, entries),
            ManifestRepr::Tagged { testbed, entries } => (Testbed::parse(&testbed)?, entries),
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(entries.len());
        for entry in entries {
            let class = FlowClass::parse(&entry.class)?;
            let state = ChargingState::parse(&entry.state)?;
            let label = ScenarioLabel {
                class,
                attack: entry.attack.trim().to_string(),
                state,
            };
            label.validate()?;
            let mut path = PathBuf::from(&entry.path);
            if path.is_relative() {
                if let Some(base) = base_dir {
                    path = base.join(path);
                }
            }
            if !seen.insert(path.clone()) {
                return Err(Error::Data(format!(
                    "duplicate manifest path: {}",
                    path.display()
                )));
            }
            out.push(ManifestEntry { path, label });
        }
        Ok(DatasetManifest {
            testbed,
            entries: out,
        })
    }
}

/// Per-file accounting from a load.
#[derive(Debug, Clone, PartialEq)]
pub struct FileLoadStats {
    pub path: PathBuf,
    pub rows_loaded: usize,
    pub rows_rejected: usize,
    /// Core columns the file lacked entirely (their fields defaulted).
    pub missing_columns: Vec<String>,
}

/// Loaded flows plus the per-file accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub flows: Vec<LabeledFlow>,
    pub per_file: Vec<FileLoadStats>,
}

/// Load every file of a manifest, stamping each row with its entry's label.
///
/// Files may carry embedded `label_*` columns; the manifest label wins.
/// Extra columns are unified across files: a flow from a file lacking a
/// column another file has gets that column as empty text, so the merged
/// table is rectangular.
pub fn load_flows(manifest: &DatasetManifest) -> Result<LoadReport> {
    let mut flows = Vec::new();
    let mut per_file = Vec::new();
    for entry in &manifest.entries {
        let mut report = load_flow_table_with(&entry.path, Some(&entry.label))?;
        flows.append(&mut report.flows);
        per_file.extend(report.per_file);
    }
    unify_extra_columns(&mut flows);
    Ok(LoadReport { flows, per_file })
}

/// Load one flow table; `label_*` columns, when present, become the labels.
pub fn load_flow_table(path: &Path) -> Result<LoadReport> {
    load_flow_table_with(path, None)
}

fn unify_extra_columns(flows: &mut [LabeledFlow]) {
    let union: BTreeSet<String> = flows
        .iter()
        .flat_map(|f| f.flow.extra.keys().cloned())
        .collect();
    for lf in flows.iter_mut() {
        for name in &union {
            lf.flow
                .extra
                .entry(name.clone())
                .or_insert_with(|| FeatureValue::Text(String::new()));
        }
    }
}

/// Millisecond-named alias for a seconds-valued core column.
const MS: f64 = 1e-3;

/// Map a header cell onto a core column index (0-based into
/// [`CORE_COLUMNS`]) plus a scale applied to numeric cells.
fn core_slot(name: &str) -> Option<(usize, f64)> {
    if let Some(pos) = CORE_COLUMNS.iter().position(|c| *c == name) {
        return Some((pos, 1.0));
    }
    // Aliases used by common flow exporters. Times there are milliseconds.
    let (canonical, scale) = match name {
        "bidirectional_first_seen_ms" => ("start_time", MS),
        "bidirectional_last_seen_ms" => ("end_time", MS),
        "bidirectional_duration_ms" => ("duration", MS),
        "src2dst_packets" => ("packets_fwd", 1.0),
        "dst2src_packets" => ("packets_bwd", 1.0),
        "src2dst_bytes" => ("bytes_fwd", 1.0),
        "dst2src_bytes" => ("bytes_bwd", 1.0),
        "src2dst_min_ps" => ("fwd_min_ps", 1.0),
        "src2dst_max_ps" => ("fwd_max_ps", 1.0),
        "src2dst_mean_ps" => ("fwd_mean_ps", 1.0),
        "dst2src_min_ps" => ("bwd_min_ps", 1.0),
        "dst2src_max_ps" => ("bwd_max_ps", 1.0),
        "dst2src_mean_ps" => ("bwd_mean_ps", 1.0),
        "bidirectional_syn_packets" => ("syn_count", 1.0),
        "bidirectional_ack_packets" => ("ack_count", 1.0),
        "bidirectional_psh_packets" => ("psh_count", 1.0),
        "bidirectional_rst_packets" => ("rst_count", 1.0),
        "bidirectional_fin_packets" => ("fin_count", 1.0),
        "bidirectional_urg_packets" => ("urg_count", 1.0),
        _ => return None,
    };
    let pos = CORE_COLUMNS
        .iter()
        .position(|c| *c == canonical)
        .expect("alias targets are core columns");
    Some((pos, scale))
}

struct ColumnMap {
    /// For each core column: the cell index and numeric scale, when present.
    core: [Option<(usize, f64)>; CORE_COLUMNS.len()],
    /// (class, attack, state) cell indices when the table embeds labels.
    label: Option<(usize, usize, usize)>,
    /// Remaining columns: (cell index, lower-cased name).
    extras: Vec<(usize, String)>,
    missing: Vec<String>,
}

fn map_columns(headers: &[String]) -> Result<ColumnMap> {
    let mut core: [Option<(usize, f64)>; CORE_COLUMNS.len()] = [None; CORE_COLUMNS.len()];
    let mut label_cells: BTreeMap<&str, usize> = BTreeMap::new();
    let mut extras = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        if let Some((slot, scale)) = core_slot(name) {
            if core[slot].is_none() {
                core[slot] = Some((idx, scale));
                continue;
            }
        }
        if let Some(lab) = LABEL_COLUMNS.iter().find(|l| **l == name.as_str()) {
            label_cells.entry(*lab).or_insert(idx);
            continue;
        }
        extras.push((idx, name.clone()));
    }
    let label = match (
        label_cells.get("label_class"),
        label_cells.get("label_attack"),
        label_cells.get("label_state"),
    ) {
        (Some(c), Some(a), Some(s)) => Some((*c, *a, *s)),
        (None, None, None) => None,
        _ => {
            return Err(Error::Data(
                "flow table has a partial label_class/label_attack/label_state column set"
                    .to_string(),
            ))
        }
    };
    let missing = CORE_COLUMNS
        .iter()
        .enumerate()
        .filter(|(slot, _)| core[*slot].is_none())
        .map(|(_, name)| name.to_string())
        .collect();
    Ok(ColumnMap {
        core,
        label,
        extras,
        missing,
    })
}

fn load_flow_table_with(path: &Path, override_label: Option<&ScenarioLabel>) -> Result<LoadReport> {
    let mut reader = tabular::reader(path)?;
    let headers = tabular::headers_lower(&mut reader, path)?;
    let map = map_columns(&headers)?;

    let mut flows = Vec::new();
    let mut rejected = 0usize;
    for record in reader.records() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        // Ragged rows are data damage, not a file-level failure.
        if record.len() != headers.len() {
            rejected += 1;
            continue;
        }
        match parse_flow_row(&record, &map, override_label) {
            Some(flow) => flows.push(flow),
            None => rejected += 1,
        }
    }
    let stats = FileLoadStats {
        path: path.to_path_buf(),
        rows_loaded: flows.len(),
        rows_rejected: rejected,
        missing_columns: map.missing.clone(),
    };
    Ok(LoadReport {
        flows,
        per_file: vec![stats],
    })
}

fn core_cell(record: &csv::StringRecord, slot: Option<(usize, f64)>) -> Option<(&str, f64)> {
    slot.and_then(|(idx, scale)| record.get(idx).map(|cell| (cell.trim(), scale)))
}

fn slot_index(name: &str) -> usize {
    CORE_COLUMNS
        .iter()
        .position(|c| *c == name)
        .expect("known core column")
}

fn parse_flow_row(
    record: &csv::StringRecord,
    map: &ColumnMap,
    override_label: Option<&ScenarioLabel>,
) -> Option<LabeledFlow> {
    let f64_field = |name: &str, default: f64| -> Option<f64> {
        match core_cell(record, map.core[slot_index(name)]) {
            Some((cell, scale)) => tabular::parse_f64(cell).map(|v| v * scale),
            None => Some(default),
        }
    };
    let u64_field = |name: &str| -> Option<u64> {
        match core_cell(record, map.core[slot_index(name)]) {
            Some((cell, _)) => tabular::parse_u64(cell),
            None => Some(0),
        }
    };

    let src_ip: Ipv4Addr = match core_cell(record, map.core[slot_index("src_ip")]) {
        Some((cell, _)) => cell.parse().ok()?,
        None => Ipv4Addr::UNSPECIFIED,
    };
    let dst_ip: Ipv4Addr = match core_cell(record, map.core[slot_index("dst_ip")]) {
        Some((cell, _)) => cell.parse().ok()?,
        None => Ipv4Addr::UNSPECIFIED,
    };
    let src_port = match core_cell(record, map.core[slot_index("src_port")]) {
        Some((cell, _)) => tabular::parse_u16(cell)?,
        None => 0,
    };
    let dst_port = match core_cell(record, map.core[slot_index("dst_port")]) {
        Some((cell, _)) => tabular::parse_u16(cell)?,
        None => 0,
    };
    let protocol = match core_cell(record, map.core[slot_index("protocol")]) {
        Some((cell, _)) => tabular::parse_u8(cell)?,
        None => 0,
    };

    let start_time = f64_field("start_time", 0.0)?;
    let end_time = f64_field("end_time", start_time)?;
    let duration = match core_cell(record, map.core[slot_index("duration")]) {
        Some((cell, scale)) => tabular::parse_f64(cell)? * scale,
        None => end_time - start_time,
    };

    let fwd = DirectionStats {
        packets: u64_field("packets_fwd")?,
        bytes: u64_field("bytes_fwd")?,
        min_ps: f64_field("fwd_min_ps", 0.0)?,
        max_ps: f64_field("fwd_max_ps", 0.0)?,
        mean_ps: f64_field("fwd_mean_ps", 0.0)?,
    };
    let bwd = DirectionStats {
        packets: u64_field("packets_bwd")?,
        bytes: u64_field("bytes_bwd")?,
        min_ps: f64_field("bwd_min_ps", 0.0)?,
        max_ps: f64_field("bwd_max_ps", 0.0)?,
        mean_ps: f64_field("bwd_mean_ps", 0.0)?,
    };
    let flags = TcpFlagCounts {
        syn: u64_field("syn_count")?,
        ack: u64_field("ack_count")?,
        psh: u64_field("psh_count")?,
        rst: u64_field("rst_count")?,
        fin: u64_field("fin_count")?,
        urg: u64_field("urg_count")?,
    };

    let mut extra = BTreeMap::new();
    for (idx, name) in &map.extras {
        let cell = record.get(*idx).unwrap_or("").trim();
        let value = match tabular::parse_f64(cell) {
            Some(v) => FeatureValue::Number(v),
            None => FeatureValue::Text(cell.to_string()),
        };
        extra.insert(name.clone(), value);
    }

    let label = match override_label {
        Some(label) => Some(label.clone()),
        None => match map.label {
            Some((c, a, s)) => {
                let class_cell = record.get(c).unwrap_or("").trim();
                if class_cell.is_empty() {
                    None
                } else {
                    let label = ScenarioLabel {
                        class: FlowClass::parse(class_cell).ok()?,
                        attack: record.get(a).unwrap_or("").trim().to_string(),
                        state: ChargingState::parse(record.get(s).unwrap_or("")).ok()?,
                    };
                    label.validate().ok()?;
                    Some(label)
                }
            }
            None => None,
        },
    };

    let (key, src_is_a) = FlowKey::canonical(src_ip, src_port, dst_ip, dst_port, protocol);
    Some(LabeledFlow {
        flow: FlowRecord {
            key,
            forward_from_a: src_is_a,
            start_time,
            end_time,
            duration,
            fwd,
            bwd,
            flags,
            extra,
        },
        label,
    })
}

/// Write flows as a canonical CSV: core columns first, extra columns in
/// sorted order, label columns last when any flow is labeled.
///
/// A flow missing an extra column writes an empty cell, which reloads as
/// empty text; tables produced by the loaders round-trip exactly.
pub fn write_flow_table(path: &Path, flows: &[LabeledFlow]) -> Result<()> {
    let extras: BTreeSet<&String> = flows.iter().flat_map(|f| f.flow.extra.keys()).collect();
    let labeled = flows.iter().any(|f| f.label.is_some());

    let mut writer = tabular::writer(path)?;
    let mut header: Vec<String> = CORE_COLUMNS.iter().map(|c| c.to_string()).collect();
    header.extend(extras.iter().map(|n| n.to_string()));
    if labeled {
        header.extend(LABEL_COLUMNS.iter().map(|c| c.to_string()));
    }
    writer.write_record(&header).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;

    for lf in flows {
        let f = &lf.flow;
        let mut row: Vec<String> = vec![
            f.src_ip().to_string(),
            f.dst_ip().to_string(),
            f.src_port().to_string(),
            f.dst_port().to_string(),
            f.key.protocol.to_string(),
            tabular::fmt_float(f.start_time),
            tabular::fmt_float(f.end_time),
            tabular::fmt_float(f.duration),
            f.fwd.packets.to_string(),
            f.bwd.packets.to_string(),
            f.fwd.bytes.to_string(),
            f.bwd.bytes.to_string(),
            tabular::fmt_float(f.fwd.min_ps),
            tabular::fmt_float(f.fwd.max_ps),
            tabular::fmt_float(f.fwd.mean_ps),
            tabular::fmt_float(f.bwd.min_ps),
            tabular::fmt_float(f.bwd.max_ps),
            tabular::fmt_float(f.bwd.mean_ps),
            f.flags.syn.to_string(),
            f.flags.ack.to_string(),
            f.flags.psh.to_string(),
            f.flags.rst.to_string(),
            f.flags.fin.to_string(),
            f.flags.urg.to_string(),
        ];
        for name in &extras {
            row.push(match f.extra.get(*name) {
                Some(FeatureValue::Number(v)) => tabular::fmt_float(*v),
                Some(FeatureValue::Text(s)) => s.clone(),
                None => String::new(),
            });
        }
        if labeled {
            match &lf.label {
                Some(label) => {
                    row.push(label.class.to_string());
                    row.push(label.attack.clone());
                    row.push(label.state.to_string());
                }
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        writer.write_record(&row).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load a packet table. Requires columns (timestamp, src_ip, dst_ip,
/// src_port, dst_port, protocol, length); tcp_flags is optional and
/// defaults to 0. Returns the packets plus the rejected-row count.
pub fn load_packet_table(path: &Path) -> Result<(Vec<PacketRecord>, usize)> {
    let mut reader = tabular::reader(path)?;
    let headers = tabular::headers_lower(&mut reader, path)?;
    let find = |name: &str| headers.iter().position(|h| h == name);
    let required = [
        "timestamp", "src_ip", "dst_ip", "src_port", "dst_port", "protocol", "length",
    ];
    let mut idx = [0usize; 7];
    for (i, name) in required.iter().enumerate() {
        idx[i] = find(name).ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let flags_idx = find("tcp_flags");

    let mut packets = Vec::new();
    let mut rejected = 0usize;
    for record in reader.records() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        if record.len() != headers.len() {
            rejected += 1;
            continue;
        }
        let cell = |i: usize| record.get(i).unwrap_or("").trim();
        let parsed = (|| {
            Some(PacketRecord {
                timestamp: tabular::parse_f64(cell(idx[0]))?,
                src_ip: cell(idx[1]).to_string(),
                dst_ip: cell(idx[2]).to_string(),
                src_port: tabular::parse_u16(cell(idx[3]))?,
                dst_port: tabular::parse_u16(cell(idx[4]))?,
                protocol: tabular::parse_u8(cell(idx[5]))?,
                length: tabular::parse_u64(cell(idx[6]))?,
                tcp_flags: match flags_idx {
                    Some(i) => tabular::parse_u8(cell(i))?,
                    None => 0,
                },
            })
        })();
        match parsed {
            Some(p) => packets.push(p),
            None => rejected += 1,
        }
    }
    Ok((packets, rejected))
}

/// Result of a column-drop pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DropReport {
    /// Names removed from at least one flow.
    pub dropped: Vec<String>,
    /// Names that matched nothing; callers should surface these as warnings.
    pub unknown: Vec<String>,
}

/// Remove the named extra columns from every flow.
///
/// Names are matched case-insensitively. Naming a core flow field is a hard
/// error (those fields are the model's backbone); unknown names are reported
/// back, not fatal. The input is untouched when an error is returned.
pub fn drop_columns(flows: &mut [LabeledFlow], names: &[String]) -> Result<DropReport> {
    let cleaned: Vec<String> = names
        .iter()
        .map(|n| n.trim().to_ascii_lowercase())
        .filter(|n| !n.is_empty())
        .collect();
    for name in &cleaned {
        if CORE_COLUMNS.contains(&name.as_str()) {
            return Err(Error::CoreColumnDrop(name.clone()));
        }
    }
    let mut report = DropReport::default();
    for name in &cleaned {
        let mut hit = false;
        for lf in flows.iter_mut() {
            hit |= lf.flow.extra.remove(name).is_some();
        }
        if hit {
            report.dropped.push(name.clone());
        } else if !report.unknown.contains(name) {
            report.unknown.push(name.clone());
        }
    }
    report.dropped.dedup();
    Ok(report)
}
