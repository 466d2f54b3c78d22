//! Flat `key = value` config files. `#` starts a comment.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

/// Keys a config file may set; each mirrors the long flag of the same name.
pub const KEYS: &[&str] = &[
    "spaces",
    "classes",
    "gamma",
    "inner-steps",
    "iters",
    "batch",
    "outer-lr",
    "inner-lr",
    "warm-start",
    "seed",
    "normalize",
    "out",
    "jobs",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected 'key = value', found {raw:?}", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(format!("config line {}: unknown key {k:?}", i + 1));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(format!("config line {}: duplicate key {k:?}", i + 1));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    /// Flag value if given, else the file's value parsed, else `None`.
    pub fn resolve<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| format!("config key {key}: cannot parse {v:?}: {e}")),
        }
    }
}
