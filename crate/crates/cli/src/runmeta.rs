//! Run manifests: the machine-readable record written next to every
//! primary artifact.
//!
//! A manifest captures everything needed to reproduce or audit a run —
//! the subcommand, the fully resolved options (after config merging),
//! every derived seed, and the list of artifacts written. The `run_id`
//! is a stable hash of the subcommand and resolved options, so two runs
//! configured identically share an id while any option change produces a
//! new one. `created` is the only field that varies between identical
//! runs; setting `SOURCE_DATE_EPOCH` pins it for byte-identical output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use falconc_core::seed::derive_seed;
use falconc_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Metadata describing one completed invocation of a subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Stable hash of the subcommand and resolved options.
    pub run_id: String,
    /// Subcommand that produced the artifacts.
    pub subcommand: String,
    /// Config file consulted during option resolution, if any.
    pub config_path: Option<String>,
    /// Directory holding the primary artifact.
    pub output_dir: String,
    /// Every artifact the run wrote, primary first.
    pub outputs: Vec<String>,
    /// Fully resolved options, after config merging and defaulting.
    pub options: Value,
    /// Every seed derived during the run, by purpose.
    pub seeds: BTreeMap<String, u64>,
    /// Wall-clock creation time (RFC 3339, UTC).
    pub created: String,
}

impl RunManifest {
    /// Starts a manifest for `subcommand` with its resolved `options`.
    ///
    /// Options must already include every value the run will use; the
    /// run id is derived from them, so late additions would change it.
    pub fn new(subcommand: &str, config_path: Option<&Path>, options: Value) -> RunManifest {
        // serde_json maps iterate in sorted key order, so serializing the
        // options object yields a canonical string to hash.
        let canonical = format!("{subcommand} {options}");
        let run_id = format!("{:016x}", derive_seed(0, &canonical));
        RunManifest {
            run_id,
            subcommand: subcommand.to_string(),
            config_path: config_path.map(|p| p.display().to_string()),
            output_dir: String::new(),
            outputs: Vec::new(),
            options,
            seeds: BTreeMap::new(),
            created: timestamp(),
        }
    }

    /// Records a derived seed under the purpose it was derived for.
    pub fn record_seed(&mut self, purpose: &str, value: u64) {
        self.seeds.insert(purpose.to_string(), value);
    }

    /// Records an artifact path the run wrote.
    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes the manifest next to the primary artifact as
    /// `<stem>.run.json` and returns the path written.
    pub fn write_beside(&mut self, primary: &Path) -> Result<PathBuf> {
        let dir = primary
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or_else(|| Path::new("."));
        self.output_dir = dir.display().to_string();
        let path = primary.with_extension("run.json");
        let mut text = serde_json::to_string_pretty(self).map_err(|err| Error::Json {
            path: path.clone(),
            source: err,
        })?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|err| Error::Io {
            path: path.clone(),
            source: err,
        })?;
        Ok(path)
    }

    /// Loads a manifest back from disk.
    pub fn load(path: &Path) -> Result<RunManifest> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|err| Error::Io {
            path: path.to_path_buf(),
            source: err,
        })?;
        serde_json::from_str(&text).map_err(|err| Error::Json {
            path: path.to_path_buf(),
            source: err,
        })
    }
}

/// Current time, or `SOURCE_DATE_EPOCH` when set, as RFC 3339 UTC.
fn timestamp() -> String {
    let epoch = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|raw| raw.parse::<i64>().ok());
    let time: DateTime<Utc> = epoch
        .and_then(|secs| DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    time.to_rfc3339_opts(SecondsFormat::Secs, true)
}
