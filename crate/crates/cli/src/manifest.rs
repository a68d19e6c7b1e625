use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Provenance record written next to every command's outputs.
#[derive(Debug)]
pub struct RunManifest {
    command: &'static str,
    flags: Map<String, Value>,
    seed: Option<u64>,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<PathBuf>,
    extra: Map<String, Value>,
}

impl RunManifest {
    pub fn new(command: &'static str, seed: Option<u64>) -> Self {
        Self {
            command,
            flags: Map::new(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            extra: Map::new(),
        }
    }

    pub fn flag(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.flags.insert(name.to_string(), value.into());
        self
    }

    pub fn note(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.extra.insert(name.to_string(), value.into());
        self
    }

    /// Record an input file together with its SHA-256 digest.
    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push((path.to_path_buf(), sha256_hex(&bytes)));
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn to_json(&self) -> Value {
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|(p, d)| json!({ "path": p.display().to_string(), "sha256": d }))
            .collect();
        let outputs: Vec<Value> = self.outputs.iter().map(|p| json!(p.display().to_string())).collect();
        json!({
            "command": self.command,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "seed": self.seed,
            "flags": self.flags,
            "inputs": inputs,
            "outputs": outputs,
            "details": self.extra,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.to_json())?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn manifest_layout() {
        let mut m = RunManifest::new("solve", Some(3));
        m.flag("method", "icf").note("missing_imputed", 0);
        let v = m.to_json();
        assert_eq!(v["command"], "solve");
        assert_eq!(v["seed"], 3);
        assert_eq!(v["flags"]["method"], "icf");
        assert_eq!(v["details"]["missing_imputed"], 0);
        assert!(v["inputs"].as_array().unwrap().is_empty());
    }
}
