//! Run provenance, input loading and output files.

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// A resolved run configuration and its hash, stamped on every output.
pub struct Run {
    command: &'static str,
    config: Value,
    hash: String,
}

impl Run {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let hash = sha256_hex(serde_json::to_string(&config)?.as_bytes());
        Ok(Run { command, config, hash })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn envelope<T: Serialize>(&self, result: &T) -> Result<String> {
        let v = json!({
            "tool": "sparse-ldp",
            "version": VERSION,
            "command": self.command,
            "config": self.config,
            "config_hash": self.hash,
            "result": result,
        });
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }

    /// Writes the enveloped result to `path`, or to stdout when `path` is `None`.
    pub fn write_json<T: Serialize>(&self, path: Option<&Path>, result: &T) -> Result<()> {
        let s = self.envelope(result)?;
        match path {
            Some(p) => write(p, s.as_bytes()),
            None => {
                print!("{s}");
                Ok(())
            }
        }
    }

    /// Writes `rows` as CSV under a commented provenance line.
    pub fn write_csv<R: Serialize>(&self, path: &Path, rows: &[R]) -> Result<()> {
        let mut buf = format!("# sparse-ldp {VERSION} {} config_hash={}\n", self.command, self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        write(path, &buf)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// A JSON input and the digest of its bytes.
pub struct Input {
    pub value: Value,
    pub sha256: String,
}

/// Reads a JSON file; an envelope written by this tool is unwrapped to its result.
pub fn read_input(path: &Path) -> Result<Input> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: Value = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("config_hash").is_some() {
        if let Some(r) = value.get_mut("result") {
            value = r.take();
        }
    }
    Ok(Input { value, sha256: sha256_hex(&bytes) })
}

pub fn parse<T: DeserializeOwned>(input: &Input, what: &str) -> Result<T> {
    T::deserialize(&input.value).with_context(|| format!("input is not a valid {what}"))
}

/// A value given inline as JSON (`[0.5,0.5]`, `2`) or as a path to a JSON file.
pub fn json_arg<T: DeserializeOwned>(arg: &str, what: &str) -> Result<T> {
    match serde_json::from_str(arg) {
        Ok(v) => Ok(v),
        Err(_) => parse(&read_input(Path::new(arg))?, what),
    }
}
