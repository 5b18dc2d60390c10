//! CSV and JSON artifacts.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::RunConfig;

pub const SCHEMA: &str = "wald-lab/1";

/// 17 significant digits, enough to read every `f64` back exactly.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// CSV text with a header row and one row per index.
pub fn csv(header: &[&str], columns: &[&[f64]]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for i in 0..rows {
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", fmt17(c[i]));
        }
        s.push('\n');
    }
    s
}

const INTEGER_KEYS: &[&str] = &["n", "max_iter", "reps", "seed"];

/// Resolved config as a flat JSON object; numbers stay numbers.
pub fn config_json(cfg: &RunConfig) -> Value {
    let mut m = Map::new();
    for (k, v) in cfg.flat() {
        let value = if INTEGER_KEYS.contains(&k) {
            json!(v.parse::<u64>().unwrap_or_default())
        } else if let Ok(x) = v.parse::<f64>() {
            json!(x)
        } else if v.is_empty() {
            Value::Null
        } else {
            json!(v)
        };
        m.insert(k.to_string(), value);
    }
    Value::Object(m)
}

pub fn envelope(command: &str, cfg: &RunConfig, result: Value) -> Value {
    json!({ "schema": SCHEMA, "command": command, "config": config_json(cfg), "result": result })
}

pub fn error_json(command: &str, kind: &str, message: &str) -> Value {
    json!({ "schema": SCHEMA, "command": command, "error": kind, "message": message })
}

/// Artifacts produced by one command, written only when an output
/// directory is configured.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, body: String) {
        self.files.push((name.into(), body));
    }

    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for (name, body) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            out.push(path);
        }
        Ok(out)
    }
}
