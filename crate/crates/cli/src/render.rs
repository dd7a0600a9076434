use std::fmt::Write;

use serde_json::Value;

pub const SIG_DIGITS: usize = 9;

/// Rounds to `digits` significant digits and drops trailing zeros.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let rounded: f64 = sci.parse().expect("round trip");
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{rounded:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Full precision for machine-readable tables (17 significant digits).
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn json(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
    s.push('\n');
    s
}

/// Indented `key: value` rendering of a report document.
pub fn text(doc: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = doc {
        for (k, v) in map {
            if k != "schema_version" {
                entry(&mut out, 0, k, v);
            }
        }
    }
    out
}

fn entry(out: &mut String, indent: usize, key: &str, v: &Value) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(map) if map.is_empty() => {
            let _ = writeln!(out, "{pad}{key}: -");
        }
        Value::Object(map) if map.values().all(is_scalar) && map.len() <= 8 => {
            let inner: Vec<String> = map.iter().map(|(k, v)| format!("{k}={}", scalar(v))).collect();
            let _ = writeln!(out, "{pad}{key}: {}", inner.join(", "));
        }
        Value::Object(map) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (k, v) in map {
                entry(out, indent + 2, k, v);
            }
        }
        Value::Array(items) if items.iter().all(is_scalar) => {
            let inner: Vec<String> = items.iter().map(scalar).collect();
            let _ = writeln!(out, "{pad}{key}: [{}]", inner.join(", "));
        }
        Value::Array(items) => {
            let _ = writeln!(out, "{pad}{key}:");
            for (idx, item) in items.iter().enumerate() {
                match item {
                    Value::Array(row) if row.iter().all(is_scalar) => {
                        let inner: Vec<String> = row.iter().map(scalar).collect();
                        let _ = writeln!(out, "{pad}  [{}]", inner.join(", "));
                    }
                    other => entry(out, indent + 2, &format!("[{idx}]"), other),
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{key}: {}", scalar(other));
        }
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_i64(), n.as_f64()) {
            (Some(i), _) => i.to_string(),
            (None, Some(f)) => format_sig(f, SIG_DIGITS),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        _ => unreachable!("scalar"),
    }
}
