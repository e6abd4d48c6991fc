//! State files and output provenance.
//!
//! A state file holds either a pure state (`{"re", "im", "n_parties",
//! "local_dim"}`) or a density matrix (the same plus `"rows"` and `"cols"`),
//! optionally wrapped as `{"kind", "state", ...}` together with provenance
//! fields. Every JSON output carries `tool_version`, the resolved config and
//! the seed.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::states::{DensityMatrix, PureState};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub enum StateFile {
    Pure(PureState),
    Density(DensityMatrix),
}

impl StateFile {
    pub fn kind(&self) -> &'static str {
        match self {
            StateFile::Pure(_) => "pure",
            StateFile::Density(_) => "density",
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            StateFile::Pure(p) => p.density(),
            StateFile::Density(d) => d.clone(),
        }
    }

    /// `{"kind": ..., "state": ...}`.
    pub fn to_json(&self) -> Value {
        let state = match self {
            StateFile::Pure(p) => serde_json::to_value(p),
            StateFile::Density(d) => serde_json::to_value(d),
        }
        .expect("states are serializable");
        json!({"kind": self.kind(), "state": state})
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let inner = v.get("state").unwrap_or(v);
        let obj = inner
            .as_object()
            .ok_or_else(|| Error::Parse("state JSON must be an object".into()))?;
        let parse = |e: serde_json::Error| Error::Parse(format!("invalid state JSON: {e}"));
        if obj.contains_key("rows") {
            let d: DensityMatrix = serde_json::from_value(inner.clone()).map_err(parse)?;
            // re-validate: deserialization bypasses the constructor checks
            let d = DensityMatrix::new(d.matrix().clone(), d.structure())?;
            Ok(StateFile::Density(d))
        } else {
            let p: PureState = serde_json::from_value(inner.clone()).map_err(parse)?;
            Ok(StateFile::Pure(p))
        }
    }
}

pub fn read_state(path: &Path) -> Result<StateFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{} is not valid JSON: {e}", path.display())))?;
    StateFile::from_json(&v)
}

/// Adds `tool_version`, `config` and `seed` to a JSON object result.
pub fn with_provenance(result: Value, config: &impl Serialize, seed: Option<u64>) -> Value {
    let mut obj = match result {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    obj.insert("tool_version".into(), json!(TOOL_VERSION));
    obj.insert(
        "config".into(),
        serde_json::to_value(config).unwrap_or(Value::Null),
    );
    obj.insert("seed".into(), json!(seed));
    Value::Object(obj)
}

/// Provenance record for outputs that cannot embed it (CSV).
pub fn provenance(config: &impl Serialize, seed: Option<u64>) -> Value {
    with_provenance(json!({}), config, seed)
}

/// `<path>.meta.json`.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}
