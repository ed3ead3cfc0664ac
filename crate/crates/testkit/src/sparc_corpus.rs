//! Mutated tool calls labelled by construction: start from a conforming
//! call, apply exactly one syntactic defect, record what and where.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::schema_gen;

#[derive(Debug, Clone, PartialEq)]
pub struct Mutant {
    pub tool: String,
    pub arguments: Map<String, Value>,
    /// Expected issue category (wire name).
    pub label: &'static str,
    /// Expected JSON pointer of the issue.
    pub path: String,
}

pub const LABELS: [&str; 5] = [
    "NONEXISTENT_TOOL",
    "MISSING_REQUIRED",
    "UNKNOWN_ARGUMENT",
    "TYPE_MISMATCH",
    "SCHEMA_VIOLATION",
];

fn params(registry: &Value, tool: &str) -> Value {
    registry[tool]
        .get("parameters")
        .cloned()
        .unwrap_or_else(|| json!({"type": "object", "properties": {}}))
}

fn props(schema: &Value) -> Map<String, Value> {
    schema.get("properties").and_then(Value::as_object).cloned().unwrap_or_default()
}

fn required(schema: &Value) -> Vec<String> {
    schema
        .get("required")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .filter_map(|v| v.as_str().map(str::to_owned))
        .collect()
}

/// A clean, conforming argument object for `schema`.
pub fn conforming_arguments<R: Rng>(rng: &mut R, schema: &Value) -> Map<String, Value> {
    match schema_gen::value(rng, schema, 0.0) {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

/// A value of the wrong kind for `node` that no repair rule will accept.
fn wrong_kind(node: &Value) -> Value {
    match node.get("type").and_then(Value::as_str) {
        Some("string") => json!(true),
        Some("number" | "integer") => json!(false),
        Some("boolean") => json!("yes"),
        Some("array") => json!({"not": "a list"}),
        Some("object") => json!([1, 2]),
        Some("null") => json!(1),
        _ => json!(null),
    }
}

/// `n` mutants, cycling through the five labels so each gets `n / 5`.
pub fn mutants(registry: &Value, n: usize, seed: u64) -> Vec<Mutant> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tools: Vec<String> = registry.as_object().map(|m| m.keys().cloned().collect()).unwrap_or_default();
    assert!(!tools.is_empty(), "registry has no tools");
    let mut out = Vec::with_capacity(n);
    let mut i = 0usize;
    while out.len() < n {
        let label = LABELS[i % LABELS.len()];
        i += 1;
        let tool = tools.choose(&mut rng).unwrap().clone();
        let schema = params(registry, &tool);
        let mut args = conforming_arguments(&mut rng, &schema);
        let p = props(&schema);
        let m = match label {
            "NONEXISTENT_TOOL" => {
                let bogus = match rng.random_range(0..3) {
                    0 => format!("{tool}_v2"),
                    1 => format!("get_{}", tool.chars().rev().collect::<String>()),
                    _ => ["send_email", "delete_everything", "weather_now"].choose(&mut rng).unwrap().to_string(),
                };
                if tools.contains(&bogus) {
                    continue;
                }
                Some((bogus, args, String::new()))
            }
            "MISSING_REQUIRED" => required(&schema).choose(&mut rng).cloned().map(|k| {
                args.remove(&k);
                (tool.clone(), args, format!("/{k}"))
            }),
            "UNKNOWN_ARGUMENT" => {
                let extra = ["zz_note", "x_priority", "callback_url_extra"].choose(&mut rng).unwrap().to_string();
                if p.contains_key(&extra) {
                    None
                } else {
                    args.insert(extra.clone(), json!(rng.random_range(0..9)));
                    Some((tool.clone(), args, format!("/{extra}")))
                }
            }
            "TYPE_MISMATCH" => {
                let present: Vec<String> = args.keys().cloned().collect();
                present.choose(&mut rng).cloned().map(|k| {
                    args.insert(k.clone(), wrong_kind(&p[&k]));
                    (tool.clone(), args, format!("/{k}"))
                })
            }
            _ => {
                let enums: Vec<&String> = p
                    .iter()
                    .filter(|(_, node)| node.get("enum").is_some() && node["type"] == "string")
                    .map(|(k, _)| k)
                    .collect();
                enums.choose(&mut rng).map(|k| {
                    args.insert((*k).clone(), json!("zz-not-an-option"));
                    (tool.clone(), args, format!("/{k}"))
                })
            }
        };
        match m {
            Some((tool, arguments, path)) => out.push(Mutant {
                tool,
                arguments,
                label,
                path,
            }),
            // The chosen tool cannot carry this defect; retry the same label.
            None => i -= 1,
        }
    }
    out
}
