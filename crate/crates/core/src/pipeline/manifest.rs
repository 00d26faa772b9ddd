use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::sha256_hex;

use super::gates::GateResult;

pub const TOOL_NAME: &str = "phinote";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    pub fn of(path: impl Into<String>, bytes: &[u8]) -> FileDigest {
        FileDigest {
            path: path.into(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub records_in: usize,
    pub records_out: usize,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    GateFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceManifest {
    /// Content address of (command, config hash, inputs).
    pub run_id: String,
    pub command: String,
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub workers: usize,
    pub inputs: BTreeMap<String, FileDigest>,
    pub stages: Vec<StageRecord>,
    pub gates: Vec<GateResult>,
    pub outputs: BTreeMap<String, FileDigest>,
    pub status: RunStatus,
}

impl ProvenanceManifest {
    pub fn new(command: &str, config_hash: String, seed: Option<u64>, workers: usize) -> Self {
        ProvenanceManifest {
            run_id: String::new(),
            command: command.to_string(),
            tool: TOOL_NAME.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            config_hash,
            seed,
            workers,
            inputs: BTreeMap::new(),
            stages: Vec::new(),
            gates: Vec::new(),
            outputs: BTreeMap::new(),
            status: RunStatus::Completed,
        }
    }

    pub(crate) fn assign_run_id(&mut self) {
        let mut key = format!("{}\n{}\n", self.command, self.config_hash);
        for (role, d) in &self.inputs {
            key.push_str(&format!("{role}={}\n", d.sha256));
        }
        self.run_id = sha256_hex(key.as_bytes())[..16].to_string();
    }

    /// Pretty JSON with object keys sorted at every level, newline-terminated.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("serializable");
        let mut s = serde_json::to_string_pretty(&value).expect("serializable");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<ProvenanceManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))
    }

    pub fn gates_passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}

/// First field at which two manifests disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub field: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub divergence: Option<Divergence>,
}

impl VerifyReport {
    pub fn is_identical(&self) -> bool {
        self.divergence.is_none()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.divergence {
            None => f.write_str("identical"),
            Some(d) => write!(f, "diverged at {}: {} != {}", d.field, d.left, d.right),
        }
    }
}

fn compare_digests(
    section: &str,
    a: &BTreeMap<String, FileDigest>,
    b: &BTreeMap<String, FileDigest>,
) -> Option<Divergence> {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    let absent = || "<absent>".to_string();
    keys.into_iter().find_map(|k| {
        let left = a.get(k).map(|d| d.sha256.clone());
        let right = b.get(k).map(|d| d.sha256.clone());
        (left != right).then(|| Divergence {
            field: format!("{section}.{k}"),
            left: left.unwrap_or_else(absent),
            right: right.unwrap_or_else(absent),
        })
    })
}

/// Compare the reproducibility-relevant fields: command, seed, config hash,
/// input hashes and output hashes, in that order. Run timing and worker
/// count are ignored.
pub fn verify(a: &ProvenanceManifest, b: &ProvenanceManifest) -> VerifyReport {
    let scalar = |field: &str, l: String, r: String| {
        (l != r).then(|| Divergence {
            field: field.to_string(),
            left: l,
            right: r,
        })
    };
    let fmt_seed = |s: Option<u64>| s.map_or_else(|| "<none>".to_string(), |v| v.to_string());
    let divergence = scalar("command", a.command.clone(), b.command.clone())
        .or_else(|| scalar("seed", fmt_seed(a.seed), fmt_seed(b.seed)))
        .or_else(|| scalar("config_hash", a.config_hash.clone(), b.config_hash.clone()))
        .or_else(|| compare_digests("inputs", &a.inputs, &b.inputs))
        .or_else(|| compare_digests("outputs", &a.outputs, &b.outputs));
    VerifyReport { divergence }
}
