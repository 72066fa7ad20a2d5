//! Flat `key = value` config files. Keys mirror the long flag names;
//! underscores and dashes are interchangeable. `#` starts a comment.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim().replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "config line {}: unknown key {key:?} (valid: {})",
                    i + 1,
                    allowed.join(", ")
                )));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &str, allowed: &[&str]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
        Self::parse(&text, allowed)
    }

    /// Fills `slot` from the file unless the flag already set it.
    pub fn fill<T: FromStr>(&self, key: &str, slot: &mut Option<T>) -> Result<(), CliError> {
        if slot.is_some() {
            return Ok(());
        }
        if let Some(v) = self.values.get(key) {
            let parsed = v
                .parse()
                .map_err(|_| CliError::Config(format!("config: bad value {v:?} for {key}")))?;
            *slot = Some(parsed);
        }
        Ok(())
    }

    /// Switches can only be turned on from the file.
    pub fn fill_switch(&self, key: &str, slot: &mut bool) -> Result<(), CliError> {
        let mut v: Option<bool> = None;
        self.fill(key, &mut v)?;
        *slot |= v.unwrap_or(false);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let cfg = ConfigFile::parse("eta = 0.5\n# note\nalgo_max = tweaked\n", &["eta", "algo-max"]).unwrap();
        let mut eta = Some(2.0);
        cfg.fill("eta", &mut eta).unwrap();
        assert_eq!(eta, Some(2.0));
        let mut algo: Option<String> = None;
        cfg.fill("algo-max", &mut algo).unwrap();
        assert_eq!(algo.as_deref(), Some("tweaked"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(ConfigFile::parse("colour = red", &["eta"]).is_err());
        assert!(ConfigFile::parse("eta 0.5", &["eta"]).is_err());
        let cfg = ConfigFile::parse("eta = fast", &["eta"]).unwrap();
        let mut eta: Option<f64> = None;
        assert!(cfg.fill("eta", &mut eta).is_err());
    }
}
