//! Flat `key = value` configuration text. Blank lines and `#` comments are
//! ignored. Values may be comma-separated lists.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("expected `key = value`, found `{line}`"),
                });
            };
            let key = k.trim();
            let value = v.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("malformed key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("key `{key}` has no value"),
                });
            }
            if entries
                .insert(key.to_string(), (line_no, value.to_string()))
                .is_some()
            {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), (0, value.to_string()));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|e| e.0).unwrap_or(0)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.1.as_str())
    }

    /// Rejects any key outside `allowed`, naming the first offender.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Config {
                    line: *line,
                    msg: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((line, value)) = self.entries.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for item in value.split(',') {
            let item = item.trim();
            let v: f64 = item.parse().map_err(|_| Error::Config {
                line: *line,
                msg: format!("key `{key}`: cannot parse `{item}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Config {
                    line: *line,
                    msg: format!("key `{key}`: value must be finite"),
                });
            }
            out.push(v);
        }
        Ok(Some(out))
    }

    pub fn scalar(&self, key: &str) -> Result<Option<f64>> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(Some(v[0])),
            Some(_) => Err(Error::Config {
                line: self.line_of(key),
                msg: format!("key `{key}` expects a single value"),
            }),
        }
    }

    pub fn require(&self, key: &str) -> Result<f64> {
        self.scalar(key)?.ok_or_else(|| Error::Config {
            line: 0,
            msg: format!("missing required key `{key}`"),
        })
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.raw(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_lists_and_comments() {
        let c = KvConfig::parse("# header\nsigma = 1.5\n\neta_0 = 0.25, 0.5 # trailing\n").unwrap();
        assert_eq!(c.scalar("sigma").unwrap(), Some(1.5));
        assert_eq!(c.list("eta_0").unwrap(), Some(vec![0.25, 0.5]));
        assert!(c.scalar("eta_0").is_err());
    }

    #[test]
    fn reports_line_numbers() {
        let e = KvConfig::parse("sigma = 1\nbroken line\n").unwrap_err();
        assert_eq!(
            e,
            Error::Config {
                line: 2,
                msg: "expected `key = value`, found `broken line`".into()
            }
        );
        let c = KvConfig::parse("sigma = x\n").unwrap();
        assert!(matches!(
            c.scalar("sigma"),
            Err(Error::Config { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_key_is_named() {
        let c = KvConfig::parse("sigma = 1\nsigmaa = 2\n").unwrap();
        let e = c.check_keys(&["sigma"]).unwrap_err();
        assert!(e.to_string().contains("sigmaa"));
    }
}
