//! Flat key-value config files and flag/config/default precedence.
//!
//! Format: one `key = value` per line; `#` starts a comment; blank lines
//! ignored. Command-line flags override config values, which override
//! built-in defaults.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected 'key = value', got '{}'", path.display(), i + 1, raw);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag value if present, else the config value, else the default.
    pub fn resolve<T: Clone>(
        &self,
        flag: Option<T>,
        key: &str,
        parse: impl Fn(&str) -> Result<T>,
        default: Option<T>,
    ) -> Result<T> {
        if let Some(value) = flag {
            return Ok(value);
        }
        if let Some(raw) = self.get(key) {
            return parse(raw).with_context(|| format!("config key '{key}'"));
        }
        match default {
            Some(value) => Ok(value),
            None => bail!("missing required option '{key}' (flag or config)"),
        }
    }

    /// Like [`ConfigFile::resolve`] but optional all the way down.
    pub fn resolve_opt<T>(
        &self,
        flag: Option<T>,
        key: &str,
        parse: impl Fn(&str) -> Result<T>,
    ) -> Result<Option<T>> {
        if let Some(value) = flag {
            return Ok(Some(value));
        }
        match self.get(key) {
            Some(raw) => parse(raw).map(Some).with_context(|| format!("config key '{key}'")),
            None => Ok(None),
        }
    }
}

/// Parses an inclusive one-based week range `A:B`.
pub fn parse_week_range(raw: &str) -> Result<(usize, usize)> {
    let Some((a, b)) = raw.split_once(':') else {
        bail!("expected week range 'A:B', got '{raw}'");
    };
    let first: usize = a.trim().parse().context("bad range start")?;
    let last: usize = b.trim().parse().context("bad range end")?;
    if first == 0 || first > last {
        bail!("week range {first}:{last} is empty or inverted");
    }
    Ok((first, last))
}

/// Parses a comma-separated rank list `r[,r...]`.
pub fn parse_ranks(raw: &str) -> Result<Vec<usize>> {
    let ranks: Vec<usize> = raw
        .split(',')
        .map(|token| token.trim().parse::<usize>().with_context(|| format!("bad rank '{token}'")))
        .collect::<Result<_>>()?;
    if ranks.is_empty() || ranks.contains(&0) {
        bail!("ranks must be positive integers, got '{raw}'");
    }
    Ok(ranks)
}

/// Parses a place pair `o:d`.
pub fn parse_pair(raw: &str) -> Result<(String, String)> {
    let Some((o, d)) = raw.split_once(':') else {
        bail!("expected pair 'origin:dest', got '{raw}'");
    };
    if o.trim().is_empty() || d.trim().is_empty() {
        bail!("pair needs both origin and destination, got '{raw}'");
    }
    Ok((o.trim().to_string(), d.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_flat_key_values_with_comments() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# experiment setup").unwrap();
        writeln!(file, "rank = 5,10,15").unwrap();
        writeln!(file).unwrap();
        writeln!(file, "train_weeks = 1:52").unwrap();
        let config = ConfigFile::load(Some(file.path())).unwrap();
        assert_eq!(config.get("rank"), Some("5,10,15"));
        assert_eq!(config.get("train_weeks"), Some("1:52"));
        assert_eq!(config.get("missing"), None);
    }

    #[test]
    fn flag_overrides_config_overrides_default() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "dt = 2.5").unwrap();
        let config = ConfigFile::load(Some(file.path())).unwrap();
        let parse = |raw: &str| raw.parse::<f64>().map_err(anyhow::Error::from);

        let flag = config.resolve(Some(3.0), "dt", parse, Some(1.0)).unwrap();
        assert_eq!(flag, 3.0);
        let from_config = config.resolve(None, "dt", parse, Some(1.0)).unwrap();
        assert_eq!(from_config, 2.5);
        let empty = ConfigFile::default();
        let from_default = empty.resolve(None, "dt", parse, Some(1.0)).unwrap();
        assert_eq!(from_default, 1.0);
        assert!(empty.resolve::<f64>(None, "dt", parse, None).is_err());
    }

    #[test]
    fn range_rank_pair_parsers() {
        assert_eq!(parse_week_range("1:52").unwrap(), (1, 52));
        assert!(parse_week_range("5:4").is_err());
        assert!(parse_week_range("0:4").is_err());
        assert!(parse_week_range("12").is_err());

        assert_eq!(parse_ranks("5,10,15").unwrap(), vec![5, 10, 15]);
        assert_eq!(parse_ranks("7").unwrap(), vec![7]);
        assert!(parse_ranks("5,x").is_err());
        assert!(parse_ranks("0").is_err());

        assert_eq!(parse_pair("2:32").unwrap(), ("2".to_string(), "32".to_string()));
        assert!(parse_pair("2").is_err());
    }
}
