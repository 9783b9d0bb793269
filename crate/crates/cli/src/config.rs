//! `key = value` configuration files. Keys are flag names without the
//! leading dashes; command-line flags win over file entries.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            let key = k.trim().trim_start_matches("--").replace('_', "-");
            if key.is_empty() {
                return Err(CliError::Usage(format!("config line {}: empty key", lineno + 1)));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key {key} = {v}: {e}")))
            })
            .transpose()
    }

    /// `flag`, else the file entry, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let c = ConfigFile::parse("# sweep\ndelta = 0.1\n--seed=7  # inline\ntrials_per = 3\n").unwrap();
        assert_eq!(c.get::<f64>("delta").unwrap(), Some(0.1));
        assert_eq!(c.pick(None, "seed", 0u64).unwrap(), 7);
        assert_eq!(c.pick(Some(9u64), "seed", 0).unwrap(), 9);
        assert_eq!(c.raw("trials-per"), Some("3"));
        assert_eq!(c.pick(None, "missing", 5u32).unwrap(), 5);
    }

    #[test]
    fn rejects_garbage() {
        assert!(ConfigFile::parse("delta 0.1").is_err());
        assert!(ConfigFile::parse("= 3").is_err());
        let c = ConfigFile::parse("delta = abc").unwrap();
        assert!(c.get::<f64>("delta").is_err());
    }
}
