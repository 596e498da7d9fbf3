//! Rendering of command reports.

use serde_json::{Map, Value};

use crate::Format;

/// Renders a flat JSON object either as `key = value` lines or as JSON.
pub fn render(report: &Map<String, Value>, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (k, v) in report {
                s.push_str(k);
                s.push_str(" = ");
                s.push_str(&text_value(v));
                s.push('\n');
            }
            s
        }
    }
}

fn text_value(v: &Value) -> String {
    match v {
        Value::Null => "n/a".to_string(),
        Value::String(s) => s.clone(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(text_value).collect();
            format!("[{}]", parts.join(", "))
        }
        other => other.to_string(),
    }
}
