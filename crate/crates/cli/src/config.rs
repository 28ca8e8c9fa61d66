//! Flat `key = value` experiment configuration.
//!
//! Grammar: one assignment per line, `#` starts a comment, blank lines are
//! ignored, keys are `[a-z_]+`, lists are comma-separated. `--set key=value`
//! overrides replace file values.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

pub const KNOWN_KEYS: &[&str] = &[
    "n_max",
    "scheme",
    "potential",
    "phi",
    "kicks",
    "harmonics",
    "epsilon",
    "marked",
    "marked_sigma",
    "iterations",
    "k_max",
    "shots",
    "repeats",
    "realizations",
    "gammas",
    "profile_gammas",
    "sampling",
    "tolerance",
    "derivative_gamma",
    "epsilons",
    "family",
    "sizes",
    "shape",
    "runtime_cap",
    "guard",
    "guard_threshold",
];

#[derive(Debug, Default)]
pub struct Config {
    raw: BTreeMap<String, String>,
    /// Every key read during the run with the value actually used.
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Config::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.insert(k.trim(), v.trim(), &format!("line {}", i + 1))?;
        }
        Ok(cfg)
    }

    pub fn apply_override(&mut self, assignment: &str) -> CliResult<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set {assignment}: expected key=value")))?;
        self.insert(k.trim(), v.trim(), "--set")
    }

    fn insert(&mut self, key: &str, value: &str, origin: &str) -> CliResult<()> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!("{origin}: unknown key '{key}'")));
        }
        if value.is_empty() {
            return Err(CliError::Config(format!(
                "{origin}: empty value for '{key}'"
            )));
        }
        self.raw.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    fn record(&self, key: &str, value: String) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    fn parse_value<T: FromStr>(key: &str, text: &str) -> CliResult<T> {
        text.parse()
            .map_err(|_| CliError::Config(format!("cannot parse '{text}' for key '{key}'")))
    }

    pub fn get<T: FromStr + ToString>(&self, key: &str, default: T) -> CliResult<T> {
        let v = match self.raw.get(key) {
            Some(text) => Self::parse_value(key, text)?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn get_opt<T: FromStr + ToString>(&self, key: &str) -> CliResult<Option<T>> {
        match self.raw.get(key) {
            Some(text) => {
                let v: T = Self::parse_value(key, text)?;
                self.record(key, v.to_string());
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }

    pub fn word(&self, key: &str, default: &str, allowed: &[&str]) -> CliResult<String> {
        let v = self.raw.get(key).map(String::as_str).unwrap_or(default);
        if !allowed.contains(&v) {
            return Err(CliError::Config(format!(
                "'{v}' for key '{key}' is not one of {}",
                allowed.join(", ")
            )));
        }
        self.record(key, v.to_string());
        Ok(v.to_string())
    }

    pub fn list<T: FromStr>(&self, key: &str, default: &str) -> CliResult<Vec<T>> {
        let text = self.raw.get(key).map(String::as_str).unwrap_or(default);
        let items = text
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| Self::parse_value(key, s))
            .collect::<CliResult<Vec<T>>>()?;
        self.record(
            key,
            text.split(',').map(str::trim).collect::<Vec<_>>().join(","),
        );
        Ok(items)
    }

    pub fn list_opt<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        if self.has(key) {
            self.list(key, "").map(Some)
        } else {
            Ok(None)
        }
    }

    /// Record a value chosen by the program (e.g. an automatic lattice size).
    pub fn note(&self, key: &str, value: impl ToString) {
        self.record(key, value.to_string());
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let mut c =
            Config::parse("# walk\nphi = 2.5  # strength\n\nkicks=10\nmarked = -1, 0,1\n").unwrap();
        c.apply_override("kicks=12").unwrap();
        assert_eq!(c.get::<f64>("phi", 0.0).unwrap(), 2.5);
        assert_eq!(c.get::<u32>("kicks", 1).unwrap(), 12);
        assert_eq!(c.list::<i64>("marked", "").unwrap(), vec![-1, 0, 1]);
        assert_eq!(c.get::<u64>("shots", 7).unwrap(), 7);
        assert_eq!(c.resolved()["marked"], "-1,0,1");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Config::parse("phi 2").is_err());
        assert!(Config::parse("bogus = 1").is_err());
        assert!(Config::parse("phi =").is_err());
        let c = Config::parse("phi = two").unwrap();
        assert!(c.get::<f64>("phi", 1.0).is_err());
        assert!(c.word("scheme", "x", &["resonant"]).is_err());
    }
}
