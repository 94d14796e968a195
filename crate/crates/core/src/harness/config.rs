//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parsed `key = value` lines; `#` starts a comment, blank lines are ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k:?}", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("cannot parse {key} = {v:?}"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        let s = s.trim();
                        s.parse::<T>().map_err(|_| Error::Config(format!("cannot parse element {s:?} of {key}")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Fails on any key outside `allowed` (and the always-accepted `experiment`).
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        let unknown: Vec<&str> = self.keys().filter(|k| *k != "experiment" && !allowed.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))))
        }
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<f64> {
    if tau > 0.0 && tau < 1.0 {
        Ok(tau)
    } else {
        Err(Error::Config(format!("tau must lie in (0,1), got {tau}")))
    }
}

pub(crate) fn check_positive(name: &str, v: usize) -> Result<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be at least 1")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_lookup() {
        let m = ConfigMap::parse("# header\nn = 500\n\ntau=0.05 # level\ndeltas = 0.1, 0.05,0\n").unwrap();
        assert_eq!(m.get::<usize>("n").unwrap(), Some(500));
        assert_eq!(m.get_or("tau", 0.1).unwrap(), 0.05);
        assert_eq!(m.get_list::<f64>("deltas").unwrap(), Some(vec![0.1, 0.05, 0.0]));
        assert!(m.get::<usize>("tau").is_err());
        assert!(m.reject_unknown(&["n", "tau"]).is_err());
        assert!(m.reject_unknown(&["n", "tau", "deltas"]).is_ok());
    }

    #[test]
    fn malformed_lines() {
        assert!(ConfigMap::parse("n 500").is_err());
        assert!(ConfigMap::parse("n=1\nn=2").is_err());
        assert!(ConfigMap::parse("=3").is_err());
    }
}
