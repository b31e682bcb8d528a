//! Experiment documents: one JSON object per run, with command-line overrides
//! applied before any validation.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use dms_core::{QuadratureSpec, SwitchParams};

/// Keys shared by every experiment.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Common {
    pub params: SwitchParams,
    pub quadrature: QuadratureSpec,
    pub output_path: Option<PathBuf>,
}

pub const COMMON_KEYS: [&str; 3] = ["params", "quadrature", "output_path"];

pub fn load(path: Option<&Path>) -> Result<Value> {
    let Some(path) = path else {
        return Ok(Value::Object(Map::new()));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if !value.is_object() {
        bail!("{}: the config must be a JSON object", path.display());
    }
    Ok(value)
}

/// `a.b.c=value`; the value is read as JSON and falls back to a plain string.
pub fn apply_set(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects key=value, got `{assignment}`"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            bail!("--set key `{key}` has an empty component");
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| anyhow!("--set {key}: `{}` is not an object", parts[..i].join(".")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split yields at least one part")
}

/// Overwrites every `seed` field and pins the quadrature seed.
pub fn apply_seed(doc: &mut Value, seed: u64) {
    fn walk(v: &mut Value, seed: u64) {
        match v {
            Value::Object(m) => {
                for (k, x) in m.iter_mut() {
                    if k == "seed" {
                        *x = Value::from(seed);
                    } else {
                        walk(x, seed);
                    }
                }
            }
            Value::Array(a) => a.iter_mut().for_each(|x| walk(x, seed)),
            _ => {}
        }
    }
    walk(doc, seed);
    if let Value::Object(m) = doc {
        let q = m.entry("quadrature").or_insert_with(|| Value::Object(Map::new()));
        if let Value::Object(q) = q {
            q.insert("seed".into(), Value::from(seed));
        }
    }
}

/// Splits a document into the shared keys and the experiment's own section.
///
/// An `experiment` key, when present, must name `expected`.
pub fn split<E: DeserializeOwned>(mut doc: Value, expected: &str) -> Result<(Common, E)> {
    let obj = doc.as_object_mut().ok_or_else(|| anyhow!("config must be a JSON object"))?;
    if let Some(name) = obj.remove("experiment") {
        if name.as_str() != Some(expected) {
            bail!("config is for experiment {name}, but `{expected}` was requested");
        }
    }
    let mut common = Map::new();
    for k in COMMON_KEYS {
        if let Some(v) = obj.remove(k) {
            common.insert(k.to_string(), v);
        }
    }
    let common: Common = serde_json::from_value(Value::Object(common)).context("invalid shared settings")?;
    common.params.validate().context("invalid params")?;
    common.quadrature.validate().context("invalid quadrature")?;
    let exp: E = serde_json::from_value(doc).with_context(|| format!("invalid {expected} settings"))?;
    Ok((common, exp))
}

/// The resolved document, as recorded in the run manifest.
pub fn snapshot<E: Serialize>(experiment: &str, common: &Common, exp: &E) -> Result<Value> {
    let mut out = Map::new();
    out.insert("experiment".into(), Value::from(experiment));
    if let Value::Object(m) = serde_json::to_value(common)? {
        out.extend(m);
    }
    if let Value::Object(m) = serde_json::to_value(exp)? {
        out.extend(m);
    }
    Ok(Value::Object(out))
}
