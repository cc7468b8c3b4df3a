//! Key-value configuration: `key = value` lines, `#` comments.
//!
//! Sources are layered file < environment (`MOMENTLAB_<KEY>`) < command-line
//! flags. Keys are lowercase with `_` separators; `-` in a key is read as `_`.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const ENV_PREFIX: &str = "MOMENTLAB_";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read configuration: {0}")]
    Io(String),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: `{value}` is not {expected}")]
    Value { key: String, value: String, expected: &'static str },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Config::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            if k.trim().is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            }
            c.set(k, v.trim());
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Values from `MOMENTLAB_*` variables of the given environment.
    pub fn from_env<I: IntoIterator<Item = (String, String)>>(vars: I) -> Self {
        let mut c = Config::new();
        for (k, v) in vars {
            if let Some(rest) = k.strip_prefix(ENV_PREFIX) {
                if !rest.is_empty() {
                    c.set(rest, &v);
                }
            }
        }
        c
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(normalize(key), value.to_string());
    }

    /// Overlay `other` on top of `self`.
    pub fn merge(&mut self, other: &Config) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize(key)).map(|s| s.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::Missing(normalize(key)))
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, default: T, expected: &'static str) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::Value {
                key: normalize(key),
                value: v.to_string(),
                expected,
            }),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_real(v).ok_or_else(|| ConfigError::Value {
                key: normalize(key),
                value: v.to_string(),
                expected: "a real number",
            }),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        self.typed(key, default, "a nonnegative integer")
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        self.typed(key, default, "a nonnegative integer")
    }

    pub fn i32_or(&self, key: &str, default: i32) -> Result<i32, ConfigError> {
        self.typed(key, default, "an integer")
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        self.typed(key, default, "true or false")
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Comma-separated reals; each entry may be a dyadic `2^-k`.
    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(v).ok_or_else(|| ConfigError::Value {
                key: normalize(key),
                value: v.to_string(),
                expected: "a comma-separated list of reals",
            }),
        }
    }

    /// Canonical text: sorted `key = value` lines.
    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the canonical text framed as a git blob object.
    pub fn content_hash(&self) -> String {
        let body = self.render();
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|k| k.as_str())
    }
}

/// A real, or a power `b^e` such as `2^-5`.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((b, e)) = s.split_once('^') {
        let b: f64 = b.trim().parse().ok()?;
        let e: f64 = e.trim().parse().ok()?;
        let v = b.powf(e);
        return v.is_finite().then_some(v);
    }
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}

pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    let items: Option<Vec<f64>> = s.split(',').filter(|t| !t.trim().is_empty()).map(parse_real).collect();
    items.filter(|v| !v.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        let c = Config::parse("# header\nkind = tube-volume\ndeltas = 2^-3, 2^-4\n\nseed=7 # trailing\n").unwrap();
        assert_eq!(c.get("kind"), Some("tube-volume"));
        assert_eq!(c.u64_or("seed", 0).unwrap(), 7);
        assert_eq!(c.list_or("deltas", &[]).unwrap(), vec![0.125, 0.0625]);
        let again = Config::parse(&c.render()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.render(), c.render());
        assert_eq!(again.content_hash(), c.content_hash());
    }

    #[test]
    fn layering_and_env() {
        let mut c = Config::parse("seed = 1\nd = 3").unwrap();
        let env = Config::from_env(vec![
            ("MOMENTLAB_SEED".to_string(), "2".to_string()),
            ("OTHER".to_string(), "x".to_string()),
        ]);
        c.merge(&env);
        assert_eq!(c.get("seed"), Some("2"));
        let mut flags = Config::new();
        flags.set("seed", "3");
        c.merge(&flags);
        assert_eq!(c.get("seed"), Some("3"));
        assert!(!c.contains("other"));
    }

    #[test]
    fn errors() {
        assert!(matches!(Config::parse("novalue"), Err(ConfigError::Syntax { line: 1, .. })));
        let c = Config::parse("d = three").unwrap();
        assert!(c.usize_or("d", 3).is_err());
        assert!(c.require("kind").is_err());
        assert_eq!(parse_real("2^-5"), Some(1.0 / 32.0));
        assert_eq!(parse_real("abc"), None);
    }

    #[test]
    fn hash_is_key_order_independent() {
        let a = Config::parse("a = 1\nb = 2").unwrap();
        let b = Config::parse("b = 2\na = 1").unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash().len(), 64);
    }
}
