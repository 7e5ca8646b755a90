//! Flat `key = value` configuration files. Command-line flags win over file values.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

pub const KEYS: &[&str] = &[
    "dim",
    "power",
    "rho",
    "tol",
    "max-iter",
    "descent-tol",
    "potential",
    "out",
    "solution",
    "trace",
    "nodes",
    "extent",
    "shape",
    "half-width",
    "morse-k",
    "reference",
    "assumption",
];

#[derive(Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected key = value", i + 1))?;
            let key = k.trim().replace('_', "-").to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                bail!("config line {}: unknown key {key:?}", i + 1);
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Flag value if given, else the file value, else None.
    pub fn get<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| anyhow!("config key {key}: cannot parse {v:?}")),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<T> {
        self.get(key, flag)?.ok_or_else(|| anyhow!("missing --{key} (flag or config key)"))
    }
}

/// Comma or whitespace separated list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| anyhow!("bad list item {t:?}")))
        .collect()
}
