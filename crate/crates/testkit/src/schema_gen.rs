//! Random schemas in the supported subset, and values that mostly conform
//! with targeted corruptions mixed in.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Map, Value};

const NAMES: [&str; 10] = ["id", "name", "date", "price", "tags", "kind", "count", "meta", "when", "ok"];
const WORDS: [&str; 8] = ["economy", "business", "first", "Paris", "rome", "x", "", "Zürich"];
const DATES: [&str; 6] = ["2026-03-13", "2024-02-29", "2023-02-29", "March 13, 2026", "2026-13-01", "13/03/2026"];
const STAMPS: [&str; 4] = ["2026-03-13T09:30:00Z", "2026-03-13T09:30:00+01:00", "2026-03-13 09:30", "noon"];
const MONEY: [&str; 5] = ["12.50", "-3", "$1,200.00", "1.", "7"];

pub fn schema<R: Rng>(rng: &mut R, depth: u32) -> Value {
    let pick = if depth == 0 { rng.random_range(2..8) } else { rng.random_range(0..8) };
    schema_pick(rng, depth, pick)
}

/// A schema whose root is an object.
pub fn object_schema<R: Rng>(rng: &mut R, depth: u32) -> Value {
    schema_pick(rng, depth.max(1), 0)
}

fn schema_pick<R: Rng>(rng: &mut R, depth: u32, pick: u32) -> Value {
    match pick {
        0 => {
            let n = rng.random_range(0..=4);
            let mut props = Map::new();
            for _ in 0..n {
                let name = *NAMES.choose(rng).unwrap();
                props.insert(name.to_owned(), schema(rng, depth - 1));
            }
            let required: Vec<&String> = props.keys().filter(|_| rng.random_bool(0.5)).collect();
            json!({"type": "object", "properties": props, "required": required})
        }
        1 => json!({"type": "array", "items": schema(rng, depth - 1)}),
        2 | 3 => match rng.random_range(0..5) {
            0 => json!({"type": "string", "enum": ["economy", "business"]}),
            1 => json!({"type": "string", "format": "date"}),
            2 => json!({"type": "string", "format": "date-time"}),
            3 => json!({"type": "string", "format": "currency"}),
            _ => json!({"type": "string"}),
        },
        4 => match rng.random_range(0..3) {
            0 => json!({"type": "number", "enum": [1, 2.5, 10]}),
            1 => json!({"type": "number", "format": "currency"}),
            _ => json!({"type": "number"}),
        },
        5 => json!({"type": "integer"}),
        6 => json!({"type": "boolean"}),
        _ => json!({"type": "null"}),
    }
}

/// A value that conforms to `schema` by construction, corrupted with
/// probability `noise` at each node.
pub fn value<R: Rng>(rng: &mut R, schema: &Value, noise: f64) -> Value {
    if rng.random_bool(noise) {
        return wild(rng, 1);
    }
    let s = schema.as_object().expect("schema object");
    if let Some(options) = s.get("enum").and_then(Value::as_array) {
        return options.choose(rng).cloned().unwrap_or(Value::Null);
    }
    let format = s.get("format").and_then(Value::as_str);
    match s.get("type").and_then(Value::as_str).unwrap_or("any") {
        "object" => {
            let empty = Map::new();
            let props = s.get("properties").and_then(Value::as_object).unwrap_or(&empty);
            let required: Vec<&str> = s
                .get("required")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
                .filter_map(Value::as_str)
                .collect();
            let mut out = Map::new();
            for (k, sub) in props {
                let include = required.contains(&k.as_str()) || rng.random_bool(0.6);
                let drop_required = rng.random_bool(noise / 2.0);
                if include && !drop_required {
                    out.insert(k.clone(), value(rng, sub, noise));
                }
            }
            if rng.random_bool(noise / 2.0) {
                out.insert("zz_unexpected".into(), json!(1));
            }
            Value::Object(out)
        }
        "array" => {
            let item = s.get("items").cloned().unwrap_or(json!({"type": "null"}));
            let n = rng.random_range(0..4);
            Value::Array((0..n).map(|_| value(rng, &item, noise)).collect())
        }
        "string" => {
            let clean = noise == 0.0;
            let pool: &[&str] = match format {
                Some("date") if clean || rng.random_bool(0.8) => &DATES[..2],
                Some("date") => &DATES,
                Some("date-time") if clean || rng.random_bool(0.8) => &STAMPS[..2],
                Some("date-time") => &STAMPS,
                Some("currency") if clean || rng.random_bool(0.8) => &["12.50", "-3", "7"],
                Some("currency") => &MONEY,
                _ => &WORDS,
            };
            json!(pool.choose(rng).unwrap())
        }
        "number" => match rng.random_range(0..3) {
            0 => json!(rng.random_range(-100..100)),
            1 => json!(rng.random_range(-100.0..100.0)),
            _ => json!(3.0),
        },
        "integer" => match rng.random_range(0..4) {
            0 => json!(3.0),
            1 if noise > 0.0 && rng.random_bool(noise) => json!(2.5),
            _ => json!(rng.random_range(-1000..1000)),
        },
        "boolean" => json!(rng.random_bool(0.5)),
        "null" => Value::Null,
        _ => wild(rng, 1),
    }
}

/// Any JSON value, shallow.
pub fn wild<R: Rng>(rng: &mut R, depth: u32) -> Value {
    match rng.random_range(0..if depth == 0 { 5 } else { 7 }) {
        0 => Value::Null,
        1 => json!(rng.random_bool(0.5)),
        2 => json!(rng.random_range(-5..5)),
        3 => json!(rng.random_range(-5.0..5.0)),
        4 => json!(WORDS.choose(rng).unwrap()),
        5 => Value::Array((0..rng.random_range(0..3)).map(|_| wild(rng, depth - 1)).collect()),
        _ => {
            let mut m = Map::new();
            for _ in 0..rng.random_range(0..3) {
                m.insert((*NAMES.choose(rng).unwrap()).to_owned(), wild(rng, depth - 1));
            }
            Value::Object(m)
        }
    }
}

/// A (value, schema) pair with roughly balanced conformance.
pub fn pair<R: Rng>(rng: &mut R) -> (Value, Value) {
    let s = schema(rng, 3);
    let noise = [0.0, 0.1, 0.2, 0.35][rng.random_range(0..4)];
    let v = value(rng, &s, noise);
    (v, s)
}
