use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cli::Settings;
use crate::error::Result;

/// Hash of the resolved settings: the identity of a run.
pub fn manifest_hash(resolved: &Settings) -> String {
    let bytes = serde_json::to_vec(resolved).expect("settings serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Formats a float so that it parses back to the same value; `NaN` becomes
/// an empty field.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

/// Collects output files of a run; every file carries the manifest hash.
pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path, hash: String) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
            written: Vec::new(),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    /// Writes a CSV whose first line is `# manifest_sha256=<hash>`.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut out = String::new();
        writeln!(out, "# manifest_sha256={}", self.hash).unwrap();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        self.write(name, out.as_bytes())
    }

    /// Writes pretty JSON (keys sorted) with a `manifest_sha256` member.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<()> {
        let mut value = serde_json::to_value(body)?;
        let mut wrapped = serde_json::Map::new();
        wrapped.insert("manifest_sha256".into(), self.hash.clone().into());
        if let serde_json::Value::Object(map) = &mut value {
            wrapped.extend(std::mem::take(map));
        } else {
            wrapped.insert("data".into(), value);
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(wrapped))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &path)?;
        self.written.push(name.to_string());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e21] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "");
        assert_eq!(fmt_f64(1.0), "1");
    }

    #[test]
    fn files_embed_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path(), "abc".into()).unwrap();
        out.csv("a.csv", &["x"], vec![vec!["1".to_string()]]).unwrap();
        out.json("b.json", &serde_json::json!({"f1": 0.5})).unwrap();
        let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
        assert_eq!(a, "# manifest_sha256=abc\nx\n1\n");
        let b: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b.json")).unwrap()).unwrap();
        assert_eq!(b["manifest_sha256"], "abc");
        assert_eq!(b["f1"], 0.5);
    }
}
