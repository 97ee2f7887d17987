//! Field-wise comparison of two run summaries.

use crate::error::{CliError, CliResult};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize)]
pub struct DiffEntry {
    pub path: String,
    pub a: f64,
    pub b: f64,
    pub relative: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diff {
    pub threshold: f64,
    pub entries: Vec<DiffEntry>,
    pub annotations: Vec<String>,
}

impl Diff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn flagged(&self) -> impl Iterator<Item = &DiffEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }
}

fn flatten(v: &Value, path: String, out: &mut BTreeMap<String, Option<f64>>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten(x, p, out);
            }
        }
        Value::Array(a) => {
            out.insert(format!("{path}.len"), Some(a.len() as f64));
            for (i, x) in a.iter().enumerate() {
                flatten(x, format!("{path}[{i}]"), out);
            }
        }
        Value::Number(n) => {
            out.insert(path, n.as_f64());
        }
        // null stands for a missing or non-finite number
        Value::Null => {
            out.insert(path, None);
        }
        _ => {}
    }
}

fn section(report: &Value, key: &str) -> BTreeMap<String, Option<f64>> {
    let mut m = BTreeMap::new();
    if let Some(v) = report.get(key) {
        flatten(v, key.to_string(), &mut m);
    }
    m
}

/// Relative differences of every numeric field under `results`; entries above
/// `threshold` are flagged. Equal fields are omitted.
pub fn compare(a: &Value, b: &Value, threshold: f64) -> CliResult<Diff> {
    let (ra, rb) = (section(a, "results"), section(b, "results"));
    if ra.is_empty() {
        return Err(CliError::ShapeMismatch("first report has no results".into()));
    }
    let only_a: Vec<&String> = ra.keys().filter(|k| !rb.contains_key(*k)).collect();
    let only_b: Vec<&String> = rb.keys().filter(|k| !ra.contains_key(*k)).collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        let first = only_a.first().or(only_b.first()).map(|s| s.as_str()).unwrap_or_default();
        return Err(CliError::ShapeMismatch(format!("{} fields differ, first `{first}`", only_a.len() + only_b.len())));
    }
    let mut entries = Vec::new();
    for (path, x) in &ra {
        match (*x, rb[path]) {
            (Some(x), Some(y)) if x != y => {
                let relative = (x - y).abs() / x.abs().max(y.abs());
                entries.push(DiffEntry { path: path.clone(), a: x, b: y, relative, flagged: relative > threshold });
            }
            (Some(x), None) => {
                entries.push(DiffEntry { path: path.clone(), a: x, b: f64::NAN, relative: f64::INFINITY, flagged: true });
            }
            (None, Some(y)) => {
                entries.push(DiffEntry { path: path.clone(), a: f64::NAN, b: y, relative: f64::INFINITY, flagged: true });
            }
            _ => {}
        }
    }
    let mut annotations = Vec::new();
    let (ca, cb) = (a.get("config"), b.get("config"));
    let field = |c: Option<&Value>, k: &str| c.and_then(|c| c.get(k)).cloned();
    let (ga, gb) = (field(ca, "grid"), field(cb, "grid"));
    if ga != gb {
        let nx = |g: &Option<Value>| g.as_ref().and_then(|g| g.get("nx")).and_then(Value::as_u64);
        annotations.push(format!(
            "grid changed (nx {:?} -> {:?}): eigenvalue differences measure discretization convergence",
            nx(&ga),
            nx(&gb)
        ));
    }
    if field(ca, "collision") != field(cb, "collision") {
        annotations.push("collision model changed: prefactor and eigenvalue differences are expected".into());
    }
    if field(ca, "potential") != field(cb, "potential") {
        annotations.push("potential changed".into());
    }
    Ok(Diff { threshold, entries, annotations })
}
