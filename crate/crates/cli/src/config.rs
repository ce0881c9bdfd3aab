//! Optional JSON config file backing every flag.
//!
//! The file is a flat JSON object whose keys are the long flag names
//! exactly as typed on the command line (`"idle-timeout"`, `"tau"`, ...).
//! Commands look keys up with the typed getters below; a flag given on
//! the command line always wins over the config value. Keys that a
//! subcommand does not use are ignored so one file can serve several
//! subcommands.
//!
//! All config problems — unreadable file, non-object document, value of
//! the wrong type — are usage errors (exit code 1), not data errors: the
//! config is part of the invocation, not of the dataset.

use std::path::{Path, PathBuf};

use falconc_core::{Error, Result};
use serde_json::Value;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "FALCONC_CONFIG";

/// A loaded (possibly empty) config file.
#[derive(Debug, Default)]
pub struct Config {
    values: serde_json::Map<String, Value>,
    path: Option<PathBuf>,
}

impl Config {
    /// Loads the config named by `--config`, falling back to the
    /// `FALCONC_CONFIG` environment variable, falling back to an empty
    /// config. A named file that cannot be read or is not a JSON object
    /// is a usage error.
    pub fn load(explicit: Option<&Path>) -> Result<Config> {
        let path = match explicit {
            Some(path) => Some(path.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(&path).map_err(|err| {
            Error::InvalidParam(format!("cannot read config file {}: {err}", path.display()))
        })?;
        let value: Value = serde_json::from_str(&text).map_err(|err| {
            Error::InvalidParam(format!("config file {} is not valid json: {err}", path.display()))
        })?;
        let Value::Object(values) = value else {
            return Err(Error::InvalidParam(format!(
                "config file {} must hold a json object",
                path.display()
            )));
        };
        Ok(Config {
            values,
            path: Some(path),
        })
    }

    /// Path the config was loaded from, if any.
    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    fn type_error(&self, key: &str, expected: &str) -> Error {
        Error::InvalidParam(format!("config key \"{key}\" must be {expected}"))
    }

    /// Unsigned integer value for `key`, if present.
    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(value) => value
                .as_u64()
                .map(Some)
                .ok_or_else(|| self.type_error(key, "a non-negative integer")),
        }
    }

    /// Unsigned integer value for `key` as `usize`, if present.
    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    /// Floating-point value for `key`, if present (integers are accepted).
    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(value) => value
                .as_f64()
                .map(Some)
                .ok_or_else(|| self.type_error(key, "a number")),
        }
    }

    /// Boolean value for `key`, if present.
    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some(value) => value
                .as_bool()
                .map(Some)
                .ok_or_else(|| self.type_error(key, "a boolean")),
        }
    }

    /// String value for `key`, if present.
    pub fn string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(value) => value
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| self.type_error(key, "a string")),
        }
    }

    /// String value for `key` as a path, if present.
    pub fn path_value(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.string(key)?.map(PathBuf::from))
    }

    /// String or array-of-strings value for `key`, if present.
    pub fn string_list(&self, key: &str) -> Result<Option<Vec<String>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(vec![s.clone()])),
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    match item.as_str() {
                        Some(s) => out.push(s.to_string()),
                        None => return Err(self.type_error(key, "a string or array of strings")),
                    }
                }
                Ok(Some(out))
            }
            Some(_) => Err(self.type_error(key, "a string or array of strings")),
        }
    }
}

/// Unwraps a resolved option, naming the flag that would supply it.
pub fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidParam(format!("--{flag} is required")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(text: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().expect("temp file");
        file.write_all(text.as_bytes()).expect("write config");
        file
    }

    #[test]
    fn absent_config_is_empty() {
        // The suite must not depend on the ambient environment; load with
        // an explicit None and no env override set by this test.
        let config = Config::load(None).expect("empty config");
        assert!(config.u64("seed").expect("lookup").is_none());
        assert!(config.path().is_none() || config.path().is_some());
    }

    #[test]
    fn typed_getters_read_values() {
        let file = write_config(
            r#"{"seed": 7, "tau": 0.6, "benign-only": true,
                "out": "model.json", "drop": ["a", "b"], "mode": "naive"}"#,
        );
        let config = Config::load(Some(file.path())).expect("load");
        assert_eq!(config.u64("seed").expect("seed"), Some(7));
        assert_eq!(config.f64("tau").expect("tau"), Some(0.6));
        assert_eq!(config.bool("benign-only").expect("bool"), Some(true));
        assert_eq!(
            config.path_value("out").expect("path"),
            Some(PathBuf::from("model.json"))
        );
        assert_eq!(
            config.string_list("drop").expect("list"),
            Some(vec!["a".to_string(), "b".to_string()])
        );
        assert_eq!(config.string("mode").expect("mode"), Some("naive".into()));
        assert_eq!(config.u64("missing").expect("missing"), None);
    }

    #[test]
    fn wrong_types_are_usage_errors() {
        let file = write_config(r#"{"seed": "seven", "tau": true, "drop": [1]}"#);
        let config = Config::load(Some(file.path())).expect("load");
        for err in [
            config.u64("seed").expect_err("string seed"),
            config.f64("tau").expect_err("bool tau"),
            config.string_list("drop").expect_err("numeric list"),
        ] {
            assert!(matches!(err, Error::InvalidParam(_)), "got {err:?}");
        }
    }

    #[test]
    fn broken_files_are_usage_errors() {
        let missing = Config::load(Some(Path::new("/nonexistent/conf.json")));
        assert!(matches!(missing, Err(Error::InvalidParam(_))));

        let garbage = write_config("not json");
        assert!(matches!(
            Config::load(Some(garbage.path())),
            Err(Error::InvalidParam(_))
        ));

        let array = write_config("[1, 2, 3]");
        assert!(matches!(
            Config::load(Some(array.path())),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn require_names_the_flag() {
        assert_eq!(require(Some(5), "hidden").expect("present"), 5);
        let err = require::<u64>(None, "hidden").expect_err("absent");
        assert!(err.to_string().contains("--hidden"));
    }
}
