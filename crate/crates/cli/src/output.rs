//! Artifact writing. Every CSV opens with a `# config_hash=<hex>` comment
//! line and every JSON document carries a `config_hash` field.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const FAILED_MARKER: &str = "FAILED";
pub const MANIFEST: &str = "manifest.json";

pub struct Output {
    root: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

/// Shortest round-trip float formatting; `NaN` and infinities as text.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        format!("{v}").to_lowercase()
    }
}

impl Output {
    pub fn new(root: &Path, hash: &str) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            hash: hash.to_string(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        self.written.push(PathBuf::from(rel));
        Ok(path)
    }

    pub fn csv(&mut self, rel: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.path(rel)?;
        let mut buf = format!("# config_hash={}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        let doc = match v {
            Value::Object(ref mut map) => {
                map.insert("config_hash".into(), Value::String(self.hash.clone()));
                v
            }
            other => serde_json::json!({ "config_hash": self.hash, "data": other }),
        };
        let path = self.path(rel)?;
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn text(&mut self, rel: &str, body: &str) -> Result<()> {
        let path = self.path(rel)?;
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }

    /// Files written so far with their SHA-256, sorted by path.
    pub fn inventory(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for rel in &self.written {
            let bytes = fs::read(self.root.join(rel))?;
            let key = rel.to_string_lossy().replace('\\', "/");
            out.push((key, hex::encode(Sha256::digest(&bytes))));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn clear_failed_marker(&self) -> Result<()> {
        let p = self.root.join(FAILED_MARKER);
        if p.exists() {
            fs::remove_file(&p)?;
        }
        Ok(())
    }

    pub fn mark_failed(&self, stage: &str, error: &str) -> Result<()> {
        let body = format!("stage={stage}\nconfig_hash={}\nerror={error}\n", self.hash);
        fs::write(self.root.join(FAILED_MARKER), body)?;
        Ok(())
    }
}
