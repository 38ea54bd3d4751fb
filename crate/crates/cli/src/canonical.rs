//! Byte-stable JSON: sorted keys, two-space indentation, floats as `%.12e`.

use serde_json::{Number, Value};

/// `%.12e` with a signed, at least two-digit exponent; `-0` prints as `0`.
pub fn format_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn number(n: &Number) -> String {
    if let Some(i) = n.as_i64() {
        i.to_string()
    } else if let Some(u) = n.as_u64() {
        u.to_string()
    } else {
        format_float(n.as_f64().unwrap_or(f64::NAN))
    }
}

fn write(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&number(n)),
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(|x| matches!(x, Value::Number(_) | Value::Null)) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write(x, indent, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write(x, indent + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write(&map[*k], indent + 1, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Canonical text of `v`, newline terminated.
pub fn to_canonical_string(v: &Value) -> String {
    let mut out = String::new();
    write(v, 0, &mut out);
    out.push('\n');
    out
}

/// JSON-pointer style path of the first place where `a` and `b` differ,
/// or `None` when they are equal.
pub fn first_difference(a: &Value, b: &Value) -> Option<String> {
    fn walk(a: &Value, b: &Value, path: &mut String) -> bool {
        match (a, b) {
            (Value::Object(x), Value::Object(y)) => {
                let mut keys: Vec<&String> = x.keys().chain(y.keys()).collect();
                keys.sort();
                keys.dedup();
                for k in keys {
                    let len = path.len();
                    path.push('/');
                    path.push_str(k);
                    match (x.get(k), y.get(k)) {
                        (Some(p), Some(q)) => {
                            if walk(p, q, path) {
                                return true;
                            }
                        }
                        _ => return true,
                    }
                    path.truncate(len);
                }
                false
            }
            (Value::Array(x), Value::Array(y)) => {
                for i in 0..x.len().max(y.len()) {
                    let len = path.len();
                    path.push_str(&format!("/{i}"));
                    match (x.get(i), y.get(i)) {
                        (Some(p), Some(q)) => {
                            if walk(p, q, path) {
                                return true;
                            }
                        }
                        _ => return true,
                    }
                    path.truncate(len);
                }
                false
            }
            (Value::Number(x), Value::Number(y)) => number(x) != number(y),
            _ => a != b,
        }
    }
    let mut path = String::new();
    if walk(a, b, &mut path) {
        Some(if path.is_empty() { "/".into() } else { path })
    } else {
        None
    }
}

/// Indented plain-text rendering with the same key order as the JSON.
pub fn to_text(v: &Value) -> String {
    fn scalar(v: &Value) -> Option<String> {
        match v {
            Value::Null => Some("-".into()),
            Value::Bool(b) => Some(b.to_string()),
            Value::Number(n) => Some(match n.as_f64() {
                Some(x) if !n.is_i64() && !n.is_u64() => format!("{x:.6e}"),
                _ => number(n),
            }),
            Value::String(s) => Some(s.clone()),
            Value::Array(items) if items.iter().all(|x| matches!(x, Value::Number(_) | Value::Null)) => Some(format!(
                "[{}]",
                items.iter().map(|x| scalar(x).unwrap_or_default()).collect::<Vec<_>>().join(", ")
            )),
            Value::Array(items) if items.is_empty() => Some("[]".into()),
            _ => None,
        }
    }
    fn walk(v: &Value, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        match v {
            Value::Object(map) => {
                let mut keys: Vec<&String> = map.keys().collect();
                keys.sort();
                for k in keys {
                    let label = k.replace('_', " ");
                    match scalar(&map[k]) {
                        Some(s) => out.push_str(&format!("{pad}{label}: {s}\n")),
                        None => {
                            out.push_str(&format!("{pad}{label}:\n"));
                            walk(&map[k], depth + 1, out);
                        }
                    }
                }
            }
            Value::Array(items) => {
                for (i, x) in items.iter().enumerate() {
                    match scalar(x) {
                        Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                        None => {
                            out.push_str(&format!("{pad}[{}]\n", i + 1));
                            walk(x, depth + 1, out);
                        }
                    }
                }
            }
            other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
        }
    }
    let mut out = String::new();
    walk(v, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn float_format() {
        assert_eq!(format_float(1.0), "1.000000000000e+00");
        assert_eq!(format_float(-0.0), "0.000000000000e+00");
        assert_eq!(format_float(-2.5e-120), "-2.500000000000e-120");
        assert_eq!(format_float(12345.0), "1.234500000000e+04");
    }

    #[test]
    fn keys_sorted_and_integers_kept() {
        let v = json!({"b": 1, "a": [1.0, 2], "c": {"z": null, "y": "s"}});
        let s = to_canonical_string(&v);
        assert_eq!(
            s,
            "{\n  \"a\": [1.000000000000e+00, 2],\n  \"b\": 1,\n  \"c\": {\n    \"y\": \"s\",\n    \"z\": null\n  }\n}\n"
        );
    }

    #[test]
    fn difference_paths() {
        let a = json!({"x": [1.0, {"y": 2.0}], "z": true});
        let b = json!({"x": [1.0, {"y": 2.0000001}], "z": true});
        assert_eq!(first_difference(&a, &b).as_deref(), Some("/x/1/y"));
        assert_eq!(first_difference(&a, &a), None);
        // Differences below the printed precision are not differences.
        let c = json!({"x": [1.0 + 1e-15, {"y": 2.0}], "z": true});
        assert_eq!(first_difference(&a, &c), None);
    }
}
