//! `key = value` settings files. Keys are the long flag names of the command
//! line (`freq`, `epochs`, `B`, ...); blank lines and `#` comments are skipped.
//! Flags given on the command line take precedence.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::Failure;

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = k.trim().replace('_', "-");
            if key.is_empty() {
                return Err(Failure::Usage(format!("config line {}: empty key", i + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The flag value if present, else the parsed config value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| Failure::Usage(format!("config key '{key}': {e}")))
            })
            .transpose()
    }

    /// Boolean switch: set by the flag, or by `true`/`yes`/`1` in the config.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, Failure> {
        if flag {
            return Ok(true);
        }
        match self.raw(key).map(str::to_ascii_lowercase).as_deref() {
            None | Some("false" | "no" | "0") => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some(other) => Err(Failure::Usage(format!(
                "config key '{key}': '{other}' is not a boolean"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let s = Settings::parse("# analysis\nfreq = 12\nsigma_eps = 0.5 # comment\n\nB=10\n").unwrap();
        assert_eq!(s.raw("freq"), Some("12"));
        assert_eq!(s.pick::<f64>(None, "sigma-eps").unwrap(), Some(0.5));
        assert_eq!(s.pick::<usize>(Some(3), "B").unwrap(), Some(3));
        assert_eq!(s.pick::<usize>(None, "B").unwrap(), Some(10));
        assert!(s.pick::<usize>(None, "freq").is_ok());
        assert!(Settings::parse("novalue\n").is_err());
    }
}
