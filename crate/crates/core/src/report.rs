//! Analysis reports: one JSON value, rendered either as JSON or as text.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::enumerate::{Bound, OrderSemantics};

pub const SCHEMA: &str = "cutblur-report/1";

const DISCLAIMER: &str = "verdicts quantify over executions within the stated bound only";

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<Bound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semantics: Option<OrderSemantics>,
    /// `None` for commands that compute rather than check.
    pub verdict: Option<bool>,
    pub details: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            inputs: Map::new(),
            bound: None,
            semantics: None,
            verdict: None,
            details: Map::new(),
            note: None,
            timing_ms: None,
        }
    }

    pub fn input(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.inputs.insert(key.to_string(), value.into());
        self
    }

    pub fn bounded(&mut self, bound: Bound, semantics: OrderSemantics) -> &mut Self {
        self.bound = Some(bound);
        self.semantics = Some(semantics);
        self.note = Some(DISCLAIMER);
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.details.insert(key.to_string(), serde_json::to_value(value).expect("report values serialize"));
        self
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("reports serialize")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        render_text(&self.to_value())
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("none".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.is_empty() => Some("[]".into()),
        Value::Object(o) if o.is_empty() => Some("{}".into()),
        _ => None,
    }
}

fn walk(out: &mut String, indent: usize, key: &str, v: &Value) {
    let pad = "  ".repeat(indent);
    if let Some(s) = scalar(v) {
        out.push_str(&format!("{pad}{key}: {s}\n"));
        return;
    }
    out.push_str(&format!("{pad}{key}:\n"));
    match v {
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                match scalar(item) {
                    Some(s) => out.push_str(&format!("{pad}  - {s}\n")),
                    None => walk(out, indent + 1, &format!("[{i}]"), item),
                }
            }
        }
        Value::Object(map) => {
            for (k, item) in map {
                walk(out, indent + 1, k, item);
            }
        }
        _ => unreachable!("scalars handled above"),
    }
}

/// Renders a report value as indented `key: value` lines. Every leaf of the
/// JSON appears exactly once.
pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    let Value::Object(map) = v else {
        walk(&mut out, 0, "value", v);
        return out;
    };
    let first = ["schema", "command", "verdict", "bound", "semantics"];
    for key in first {
        if let Some(item) = map.get(key) {
            walk(&mut out, 0, key, item);
        }
    }
    for (k, item) in map {
        if !first.contains(&k.as_str()) {
            walk(&mut out, 0, k, item);
        }
    }
    out
}

/// The leaves of a JSON value as `path = value` strings.
pub fn leaves(v: &Value) -> Vec<String> {
    fn go(out: &mut Vec<String>, path: String, v: &Value) {
        match v {
            Value::Array(a) if !a.is_empty() => {
                for (i, x) in a.iter().enumerate() {
                    go(out, format!("{path}[{i}]"), x);
                }
            }
            Value::Object(o) if !o.is_empty() => {
                for (k, x) in o {
                    go(out, format!("{path}.{k}"), x);
                }
            }
            _ => out.push(format!("{path} = {}", scalar(v).expect("leaf"))),
        }
    }
    let mut out = Vec::new();
    go(&mut out, String::new(), v);
    out
}
