//! Canonical JSON text: object keys in sorted order, two-space indentation,
//! integers as integers and every other number with 17 significant digits.
//! Parsing canonical text and writing it again reproduces it byte for byte.

use std::fmt::Write;

use serde_json::Value;

use crate::error::CliError;

pub fn to_canonical_string(value: &Value) -> Result<String, CliError> {
    let mut out = String::new();
    write_value(&mut out, value, 0)?;
    out.push('\n');
    Ok(out)
}

/// Parses JSON text produced by [`to_canonical_string`] or by hand.
pub fn parse(text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, value: &Value, level: usize) -> Result<(), CliError> {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                write!(out, "{i}").expect("write to string");
            } else if let Some(u) = num.as_u64() {
                write!(out, "{u}").expect("write to string");
            } else {
                let x = num.as_f64().expect("JSON number");
                if !x.is_finite() {
                    return Err(CliError::Config(format!("non-finite number {x} in report")));
                }
                write!(out, "{x:.16e}").expect("write to string");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serialization")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return Ok(());
            }
            // short arrays of scalars stay on one line
            if items.len() <= 8 && items.iter().all(|v| !v.is_array() && !v.is_object()) {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, item, level)?;
                }
                out.push(']');
                return Ok(());
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, item, level + 1)?;
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return Ok(());
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&serde_json::to_string(key).expect("string serialization"));
                out.push_str(": ");
                write_value(out, &map[*key], level + 1)?;
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push('}');
        }
    }
    Ok(())
}
