//! Deterministic JSON text: object keys sorted at every depth.

use serde_json::Value;

/// Serializes `value` with lexicographically sorted object keys and no
/// insignificant whitespace. Output is byte-identical for equal values.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out, None, 0);
    out
}

/// Same ordering as [`canonical_json`], indented by two spaces.
pub fn canonical_json_pretty(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out, Some(2), 0);
    out
}

fn newline(out: &mut String, indent: Option<usize>, depth: usize) {
    if let Some(width) = indent {
        out.push('\n');
        out.extend(std::iter::repeat_n(' ', width * depth));
    }
}

fn write_value(value: &Value, out: &mut String, indent: Option<usize>, depth: usize) {
    match value {
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, indent, depth + 1);
                write_value(item, out, indent, depth + 1);
            }
            newline(out, indent, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(out, indent, depth + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_value(&map[key], out, indent, depth + 1);
            }
            newline(out, indent, depth);
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}
