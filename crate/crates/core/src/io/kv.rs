use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

/// `key=value` entries with the 1-based line each came from.
#[derive(Debug, Default)]
pub(crate) struct KvBlock {
    entries: BTreeMap<String, (usize, String)>,
    repeated: Vec<(usize, String, String)>,
}

/// Keys that may appear more than once.
const REPEATABLE: &[&str] = &["policy"];

impl KvBlock {
    pub(crate) fn insert(&mut self, line: usize, text: &str) -> Result<()> {
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key=value, got {text:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::parse(line, "empty key"));
        }
        if REPEATABLE.contains(&k) {
            self.repeated.push((line, k.to_string(), v.to_string()));
            return Ok(());
        }
        if self.entries.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(Error::parse(line, format!("duplicate key {k:?}")));
        }
        Ok(())
    }

    /// Parses a whole key-value file; blank lines and `#` comments are skipped.
    pub(crate) fn parse(text: &str) -> Result<Self> {
        let mut kv = KvBlock::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            kv.insert(i + 1, line)?;
        }
        Ok(kv)
    }

    pub(crate) fn take_str(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    pub(crate) fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::parse(line, format!("bad value {v:?} for {key}: {e}"))),
        }
    }

    pub(crate) fn require<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.take(key)?
            .ok_or_else(|| Error::parse(0, format!("missing required key {key:?}")))
    }

    pub(crate) fn take_repeated(&mut self, key: &str) -> Vec<(usize, String)> {
        let (taken, kept): (Vec<_>, Vec<_>) = std::mem::take(&mut self.repeated)
            .into_iter()
            .partition(|(_, k, _)| k == key);
        self.repeated = kept;
        taken.into_iter().map(|(l, _, v)| (l, v)).collect()
    }

    /// Fails on the first key nobody consumed.
    pub(crate) fn finish(self) -> Result<()> {
        let first = self
            .entries
            .iter()
            .map(|(k, (l, _))| (*l, k.clone()))
            .chain(self.repeated.iter().map(|(l, k, _)| (*l, k.clone())))
            .min();
        match first {
            Some((line, key)) => Err(Error::parse(line, format!("unknown key {key:?}"))),
            None => Ok(()),
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn exact(v: f64) -> String {
    format!("{v:?}")
}
