//! Run manifests: enough to replay a command and verify its outputs.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

impl Artifact {
    pub fn describe(path: &Path, contents: &[u8]) -> Self {
        Artifact {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(contents)),
            bytes: contents.len(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Arguments that reproduce the run, with any generated seed filled in
    /// and the worker count left out.
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub artifacts: Vec<Artifact>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s.into_bytes()
    }
}

/// Drops `--threads` and its value from an argument list.
pub fn replay_argv(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--threads" {
            skip = true;
        } else if !a.starts_with("--threads=") {
            out.push(a.clone());
        }
    }
    out
}
