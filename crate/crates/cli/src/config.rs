//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Values read from a config file; keys use the long flag names (`lambda`, `samples`, `lambda-grid`, ...).
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("config line {}: expected key = value", idx + 1);
            };
            let key = k.trim().replace('_', "-");
            if key.is_empty() {
                bail!("config line {}: empty key", idx + 1);
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("config key {key} = {v:?}: {e}")))
            .transpose()
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.values.get(key).map(|v| parse_list(v)).transpose()
    }
}

/// Comma-separated values; an empty string is an empty list.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| anyhow!("list item {p:?}: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let c = ConfigFile::parse("# run\nlambda = 0.5\nlambda_grid=0.25, 0.5\n\nseed=7\n").unwrap();
        assert_eq!(c.get::<f64>("lambda").unwrap(), Some(0.5));
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(c.get_list::<f64>("lambda-grid").unwrap(), Some(vec![0.25, 0.5]));
        assert_eq!(c.get::<f64>("h").unwrap(), None);
        assert!(c.get::<u64>("lambda").is_err());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("lambda 0.5").is_err());
        assert!(parse_list::<f64>("1,x").is_err());
        assert!(parse_list::<f64>("").unwrap().is_empty());
    }
}
