//! Provenance attached to every artifact: tool version, input digests, and
//! the complete parsed flag set. Nothing time- or host-dependent goes in,
//! so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub role: &'static str,
    pub source: String,
    /// Hex SHA-256 of the file bytes; `None` for built-in fields.
    pub sha256: Option<String>,
}

pub struct Run {
    command: String,
    flags: Value,
    inputs: Vec<InputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Run {
    pub fn new(command: impl Into<String>, flags: Value) -> Self {
        Run { command: command.into(), flags, inputs: Vec::new() }
    }

    pub fn file_input(&mut self, role: &'static str, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest { role, source: path.display().to_string(), sha256: Some(sha256_hex(&bytes)) });
        Ok(())
    }

    pub fn builtin_input(&mut self, role: &'static str, name: &str) {
        self.inputs.push(InputDigest { role, source: name.to_string(), sha256: None });
    }

    pub fn meta(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "tool": "interplab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "flags": self.flags,
            "inputs": self.inputs,
        })
    }

    /// JSON document with a `meta` block, to `out` or stdout.
    pub fn emit_json(&self, out: Option<&Path>, mut doc: Value) -> Result<()> {
        if let Value::Object(map) = &mut doc {
            map.insert("meta".into(), self.meta());
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        write_out(out, text.as_bytes())
    }

    /// Raw JSON object text with `meta` spliced in as the first key, for
    /// documents whose own float formatting must survive untouched.
    pub fn emit_json_text(&self, out: Option<&Path>, object: &str) -> Result<()> {
        let body = object.trim_start().strip_prefix('{').context("expected a JSON object")?;
        let sep = if body.trim_start().starts_with('}') { "" } else { "," };
        let text = format!("{{\"meta\":{}{sep}{body}\n", serde_json::to_string(&self.meta())?);
        write_out(out, text.as_bytes())
    }

    /// A table to `out` (with a `.meta.json` sidecar holding the provenance
    /// and `summary`) or to stdout (summary goes to the log).
    pub fn emit_table(&self, out: Option<&Path>, table: &[u8], summary: Value) -> Result<()> {
        match out {
            Some(path) => {
                write_out(Some(path), table)?;
                let mut side = self.meta();
                side["artifact"] = json!({ "path": path.display().to_string(), "sha256": sha256_hex(table) });
                side["summary"] = summary;
                let mut text = serde_json::to_string_pretty(&side)?;
                text.push('\n');
                write_out(Some(&sidecar(path)), text.as_bytes())
            }
            None => {
                log::info!("summary: {summary}");
                write_out(None, table)
            }
        }
    }
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_out(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
