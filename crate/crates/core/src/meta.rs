//! Plain-text key/value metadata documents.
//!
//! Every artifact (dataset, model, chain, report) carries one of these next
//! to its binary or delimited payload. The format is one `key = value` line
//! per entry, in insertion order, so write → read → write is byte-identical.
//! Floats are encoded with Rust's shortest round-trip formatting and parse
//! back to the exact same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// An ordered key/value document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    entries: Vec<(String, String)>,
}

impl Document {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(
            key.chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.'),
            "bad metadata key: {key}"
        );
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, format_f64(value));
    }

    pub fn push_usize(&mut self, key: &str, value: usize) {
        self.push(key, value.to_string());
    }

    pub fn push_u64(&mut self, key: &str, value: u64) {
        self.push(key, value.to_string());
    }

    pub fn push_vec(&mut self, key: &str, values: &[f64]) {
        let mut s = String::new();
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{}", format_f64(*v));
        }
        self.push(key, s);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::parse("<document>", format!("missing key '{key}'")))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        parse_f64(self.require(key)?)
            .ok_or_else(|| Error::parse("<document>", format!("bad float for key '{key}'")))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.require(key)?
            .parse()
            .map_err(|_| Error::parse("<document>", format!("bad integer for key '{key}'")))
    }

    pub fn require_u64(&self, key: &str) -> Result<u64> {
        self.require(key)?
            .parse()
            .map_err(|_| Error::parse("<document>", format!("bad integer for key '{key}'")))
    }

    pub fn require_vec(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.require(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(' ')
            .map(|tok| {
                parse_f64(tok).ok_or_else(|| {
                    Error::parse("<document>", format!("bad float '{tok}' in key '{key}'"))
                })
            })
            .collect()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Canonical text serialization.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let mut doc = Document::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| {
                Error::parse(origin, format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            doc.entries.push((k.to_string(), v.to_string()));
        }
        Ok(doc)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_text(&text, &path.display().to_string())
    }

    /// Short hex digest of the canonical serialization. Used to stamp model
    /// and report files with the configuration that produced them.
    pub fn digest(&self) -> String {
        digest_str(&self.to_text())
    }
}

/// Shortest decimal representation that parses back to identical bits.
pub fn format_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

/// First 16 hex chars of the SHA-256 of `text`.
pub fn digest_str(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let out = hasher.finalize();
    out[..8].iter().map(|b| format!("{b:02x}")).collect()
}
