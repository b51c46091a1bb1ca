use std::path::Path;

use anyhow::{anyhow, Context};
use genent_core::constructions::DEFAULT_DIM_CAP;
use genent_core::io::to_json_string;
use genent_core::{Tolerances, VERSION};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::failure::{Failure, INVALID_INPUT};

pub const DIM_CAP_VAR: &str = "GENENT_DIM_CAP";

/// Settings shared by every command.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub restarts: usize,
    pub max_iters: usize,
    pub dim_cap: usize,
}

impl RunConfig {
    pub fn new(overrides: &[String], seed: u64, restarts: usize, max_iters: usize) -> Result<Self, Failure> {
        let mut tolerances = Tolerances::default();
        for entry in overrides {
            let (key, value) = entry
                .split_once('=')
                .ok_or_else(|| Failure::input(anyhow!("tolerance override `{entry}` is not KEY=VAL")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Failure::input(anyhow!("tolerance `{key}` has non-numeric value `{value}`")))?;
            tolerances.set(key.trim(), value).map_err(Failure::input)?;
        }
        if restarts == 0 {
            return Err(Failure::input(anyhow!("--restarts must be at least 1")));
        }
        if max_iters == 0 {
            return Err(Failure::input(anyhow!("--max-iters must be at least 1")));
        }
        let dim_cap = match std::env::var(DIM_CAP_VAR) {
            Ok(raw) => raw
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| Failure::input(anyhow!("{DIM_CAP_VAR}=`{raw}` is not a positive integer")))?,
            Err(_) => DEFAULT_DIM_CAP,
        };
        Ok(Self { seed, tolerances, restarts, max_iters, dim_cap })
    }

    /// SHA-256 over the canonical JSON of the settings that determine a result.
    pub fn hash(&self, command: &str) -> String {
        let canonical = json!({
            "command": command,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "restarts": self.restarts,
            "max_iters": self.max_iters,
            "dim_cap": self.dim_cap,
        });
        hex_digest(to_json_string(&canonical).expect("settings serialize").as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of one input file, recorded by role instead of path so that
/// reports do not depend on where the inputs live.
#[derive(Clone, Debug, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(role: impl Into<String>, bytes: &[u8]) -> Self {
        Self { role: role.into(), sha256: hex_digest(bytes) }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    genent_version: &'static str,
    config_hash: String,
    command: &'a str,
    seed: u64,
    tolerances: Tolerances,
    restarts: usize,
    max_iters: usize,
    dim_cap: usize,
    inputs: &'a [InputDigest],
    result: Value,
}

/// Render a report: the run settings, input digests and the result.
pub fn render(config: &RunConfig, command: &str, inputs: &[InputDigest], result: Value) -> Result<String, Failure> {
    let envelope = Envelope {
        genent_version: VERSION,
        config_hash: config.hash(command),
        command,
        seed: config.seed,
        tolerances: config.tolerances,
        restarts: config.restarts,
        max_iters: config.max_iters,
        dim_cap: config.dim_cap,
        inputs,
        result,
    };
    to_json_string(&envelope).map_err(Failure::operational)
}

pub fn to_value<T: Serialize>(value: &T) -> Result<Value, Failure> {
    serde_json::to_value(value).map_err(Failure::operational)
}

/// Write to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(Failure::operational)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Read a user-supplied file; a missing or unreadable file is invalid input.
pub fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::new(INVALID_INPUT, e))
}
