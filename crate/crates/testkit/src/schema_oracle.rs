//! Brute-force conformance check over the raw schema document.
//!
//! Works directly on the JSON schema, keyword by keyword, with hand-rolled
//! calendar and timestamp checks.

use serde_json::Value;

pub fn conforms(value: &Value, schema: &Value) -> bool {
    let Some(s) = schema.as_object() else { return false };
    let ty = s.get("type").and_then(Value::as_str).unwrap_or("any");
    let kind_ok = match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "number" => value.is_number(),
        "integer" => is_whole(value),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        _ => true,
    };
    if !kind_ok {
        return false;
    }
    if let Some(options) = s.get("enum").and_then(Value::as_array) {
        if !options.iter().any(|o| same(o, value)) {
            return false;
        }
    }
    if let (Some(f), Some(text)) = (s.get("format").and_then(Value::as_str), value.as_str()) {
        let ok = match f {
            "date" => date_ok(text),
            "date-time" => timestamp_ok(text),
            "currency" => decimal_ok(text),
            _ => true,
        };
        if !ok {
            return false;
        }
    }
    if let Value::Object(obj) = value {
        let empty = serde_json::Map::new();
        let props = s.get("properties").and_then(Value::as_object).unwrap_or(&empty);
        for key in obj.keys() {
            if !props.contains_key(key) {
                return false;
            }
        }
        for req in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(req.as_str().unwrap_or_default()) {
                return false;
            }
        }
        for (k, v) in obj {
            if !conforms(v, &props[k]) {
                return false;
            }
        }
    }
    if let (Value::Array(items), Some(item_schema)) = (value, s.get("items")) {
        for it in items {
            if !conforms(it, item_schema) {
                return false;
            }
        }
    }
    true
}

fn is_whole(v: &Value) -> bool {
    match v.as_f64() {
        Some(f) => v.is_i64() || v.is_u64() || f == f.trunc(),
        None => false,
    }
}

fn same(a: &Value, b: &Value) -> bool {
    if a.is_number() && b.is_number() {
        return a.as_f64() == b.as_f64();
    }
    a == b
}

pub fn leap(y: i64) -> bool {
    (y % 4 == 0 && y % 100 != 0) || y % 400 == 0
}

pub fn days_in(y: i64, m: i64) -> i64 {
    match m {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if leap(y) => 29,
        2 => 28,
        _ => 0,
    }
}

fn digits(s: &str) -> Option<i64> {
    if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

pub fn date_ok(s: &str) -> bool {
    let parts: Vec<&str> = s.split('-').collect();
    if parts.len() != 3 || parts[0].len() != 4 || parts[1].len() != 2 || parts[2].len() != 2 {
        return false;
    }
    match (digits(parts[0]), digits(parts[1]), digits(parts[2])) {
        (Some(y), Some(m), Some(d)) => d >= 1 && d <= days_in(y, m),
        _ => false,
    }
}

/// `YYYY-MM-DDTHH:MM:SS[.fraction](Z|±HH:MM)`.
pub fn timestamp_ok(s: &str) -> bool {
    let Some((date, rest)) = s.split_once(['T', 't']) else { return false };
    if !date_ok(date) || rest.len() < 9 {
        return false;
    }
    let (clock, mut zone) = rest.split_at(8);
    let c: Vec<&str> = clock.split(':').collect();
    let clock_ok = c.len() == 3
        && c.iter().all(|p| p.len() == 2)
        && matches!((digits(c[0]), digits(c[1]), digits(c[2])), (Some(h), Some(m), Some(sec)) if h < 24 && m < 60 && sec < 61);
    if !clock_ok {
        return false;
    }
    if let Some(frac) = zone.strip_prefix('.') {
        let n = frac.chars().take_while(char::is_ascii_digit).count();
        if n == 0 {
            return false;
        }
        zone = &frac[n..];
    }
    if zone == "Z" || zone == "z" {
        return true;
    }
    let Some(off) = zone.strip_prefix(['+', '-']) else { return false };
    let o: Vec<&str> = off.split(':').collect();
    o.len() == 2
        && o.iter().all(|p| p.len() == 2)
        && matches!((digits(o[0]), digits(o[1])), (Some(h), Some(m)) if h < 24 && m < 60)
}

pub fn decimal_ok(s: &str) -> bool {
    let t = s.strip_prefix('-').unwrap_or(s);
    let mut parts = t.split('.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    parts.next().is_none() && digits(int).is_some() && frac.is_none_or(|f| digits(f).is_some())
}
