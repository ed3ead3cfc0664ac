//! Naive tree-walking evaluator for the query language, over its own flat
//! step list (one step per field, index, iteration, filter, projection or
//! aggregate). Programs are built here and rendered to text; the
//! implementation under test only ever sees the text.

use std::cmp::Ordering;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Hop {
    Key(String),
    At(i64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Key(String),
    At(i64),
    Each,
    Filter(Vec<Hop>, Cmp, Value),
    Shape(Vec<(String, Vec<Hop>)>),
    Fold(&'static str),
}

/// A program plus where the text rendering should break path runs with
/// an explicit pipe (`.a | .b` and `.a.b` mean the same thing).
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub steps: Vec<Step>,
    pub breaks: Vec<bool>,
}

impl Program {
    pub fn new(steps: Vec<Step>) -> Self {
        let breaks = vec![false; steps.len()];
        Self { steps, breaks }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    /// Absent key; carries the keys that were present.
    Missing(Vec<String>),
    WrongKind,
    OutOfRange,
}

pub const FOLDS: [&str; 7] = ["count", "sum", "min", "max", "first", "last", "unique"];

// ---------------------------------------------------------------- text

fn name_text(n: &str) -> String {
    let plain = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain {
        n.to_owned()
    } else {
        Value::String(n.to_owned()).to_string()
    }
}

fn hops_text(hops: &[Hop]) -> String {
    if hops.is_empty() {
        return ".".into();
    }
    let mut s = String::new();
    for h in hops {
        match h {
            Hop::Key(k) => s += &format!(".{}", name_text(k)),
            Hop::At(i) => {
                if s.is_empty() {
                    s.push('.');
                }
                s += &format!("[{i}]");
            }
        }
    }
    s
}

fn cmp_text(c: Cmp) -> &'static str {
    match c {
        Cmp::Eq => "==",
        Cmp::Ne => "!=",
        Cmp::Lt => "<",
        Cmp::Le => "<=",
        Cmp::Gt => ">",
        Cmp::Ge => ">=",
    }
}

pub fn render(p: &Program) -> String {
    let mut out = String::new();
    let mut in_path = false;
    for (i, step) in p.steps.iter().enumerate() {
        let path_step = matches!(step, Step::Key(_) | Step::At(_) | Step::Each);
        let continue_path = path_step && in_path && !p.breaks[i];
        if i > 0 && !continue_path {
            out.push_str(" | ");
        }
        match step {
            Step::Key(k) => out += &format!(".{}", name_text(k)),
            Step::At(n) => {
                if !continue_path {
                    out.push('.');
                }
                out += &format!("[{n}]");
            }
            Step::Each => {
                if !continue_path {
                    out.push('.');
                }
                out.push_str("[]");
            }
            Step::Filter(h, c, lit) => out += &format!("select({} {} {})", hops_text(h), cmp_text(*c), lit),
            Step::Shape(fields) => {
                let parts: Vec<String> = fields
                    .iter()
                    .map(|(n, h)| format!("{}: {}", name_text(n), hops_text(h)))
                    .collect();
                out += &format!("{{{}}}", parts.join(", "));
            }
            Step::Fold(op) => out.push_str(op),
        }
        in_path = path_step;
    }
    out
}

// ---------------------------------------------------------------- evaluation

/// Deep equality with numbers compared by value.
pub fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(_), Value::Number(_)) => a.as_f64() == b.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && (0..x.len()).all(|i| same(&x[i], &y[i])),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.keys().all(|k| y.contains_key(k) && same(&x[k], &y[k]))
        }
        _ => a == b,
    }
}

fn index_of(i: i64, len: usize) -> Option<usize> {
    let len = len as i64;
    let j = if i < 0 { i + len } else { i };
    if j >= 0 && j < len {
        Some(j as usize)
    } else {
        None
    }
}

fn follow(v: &Value, hops: &[Hop]) -> Option<Value> {
    let mut cur = v.clone();
    for h in hops {
        cur = match (h, &cur) {
            (Hop::Key(k), Value::Object(m)) => m.get(k)?.clone(),
            (Hop::At(i), Value::Array(a)) => a[index_of(*i, a.len())?].clone(),
            _ => return None,
        };
    }
    Some(cur)
}

fn holds(v: &Value, c: Cmp, lit: &Value) -> bool {
    let order = if v.is_number() && lit.is_number() {
        v.as_f64().unwrap().partial_cmp(&lit.as_f64().unwrap())
    } else if let (Some(a), Some(b)) = (v.as_str(), lit.as_str()) {
        Some(a.cmp(b))
    } else {
        None
    };
    match c {
        Cmp::Eq => same(v, lit),
        Cmp::Ne => !same(v, lit),
        Cmp::Lt => order == Some(Ordering::Less),
        Cmp::Le => order == Some(Ordering::Less) || order == Some(Ordering::Equal),
        Cmp::Gt => order == Some(Ordering::Greater),
        Cmp::Ge => order == Some(Ordering::Greater) || order == Some(Ordering::Equal),
    }
}

fn collapse(op: &str, xs: Vec<Value>) -> Result<Value, Failure> {
    if op == "count" {
        return Ok(json!(xs.len()));
    }
    if xs.is_empty() {
        return Ok(Value::Null);
    }
    match op {
        "first" => Ok(xs[0].clone()),
        "last" => Ok(xs[xs.len() - 1].clone()),
        "unique" => {
            let mut out: Vec<Value> = Vec::new();
            for x in xs {
                if !out.iter().any(|y| same(y, &x)) {
                    out.push(x);
                }
            }
            Ok(Value::Array(out))
        }
        _ => {
            if xs.iter().any(|x| !x.is_number()) {
                return Err(Failure::WrongKind);
            }
            match op {
                "sum" => {
                    let ints: Option<Vec<i64>> = xs.iter().map(Value::as_i64).collect();
                    if let Some(total) = ints.and_then(|v| v.iter().try_fold(0i64, |a, b| a.checked_add(*b))) {
                        return Ok(json!(total));
                    }
                    let mut t = 0.0;
                    for x in &xs {
                        t += x.as_f64().unwrap();
                    }
                    Ok(serde_json::Number::from_f64(t).map(Value::Number).unwrap_or(Value::Null))
                }
                "min" | "max" => {
                    let mut best = 0;
                    for i in 1..xs.len() {
                        let (a, b) = (xs[i].as_f64().unwrap(), xs[best].as_f64().unwrap());
                        if (op == "min" && a < b) || (op == "max" && a > b) {
                            best = i;
                        }
                    }
                    Ok(xs[best].clone())
                }
                _ => unreachable!("unknown fold {op}"),
            }
        }
    }
}

pub fn eval(p: &Program, doc: &Value) -> Result<Value, Failure> {
    let mut items = vec![doc.clone()];
    let mut fanned = false;
    for step in &p.steps {
        let mut next = Vec::new();
        match step {
            Step::Key(k) => {
                for v in &items {
                    match v {
                        Value::Object(m) => match m.get(k) {
                            Some(x) => next.push(x.clone()),
                            None => return Err(Failure::Missing(m.keys().cloned().collect())),
                        },
                        _ => return Err(Failure::WrongKind),
                    }
                }
            }
            Step::At(i) => {
                for v in &items {
                    match v {
                        Value::Array(a) => match index_of(*i, a.len()) {
                            Some(j) => next.push(a[j].clone()),
                            None => return Err(Failure::OutOfRange),
                        },
                        _ => return Err(Failure::WrongKind),
                    }
                }
            }
            Step::Each => {
                for v in &items {
                    match v {
                        Value::Array(a) => next.extend(a.iter().cloned()),
                        _ => return Err(Failure::WrongKind),
                    }
                }
                fanned = true;
            }
            Step::Filter(h, c, lit) => {
                for v in &items {
                    if follow(v, h).is_some_and(|x| holds(&x, *c, lit)) {
                        next.push(v.clone());
                    }
                }
            }
            Step::Shape(fields) => {
                for v in &items {
                    let mut m = Map::new();
                    for (n, h) in fields {
                        m.insert(n.clone(), follow(v, h).unwrap_or(Value::Null));
                    }
                    next.push(Value::Object(m));
                }
            }
            Step::Fold(op) => {
                let xs = if !fanned && items.len() == 1 && items[0].is_array() {
                    items[0].as_array().unwrap().clone()
                } else {
                    items.clone()
                };
                next.push(collapse(op, xs)?);
                fanned = false;
            }
        }
        items = next;
    }
    Ok(if items.len() == 1 { items.pop().unwrap() } else { Value::Array(items) })
}

// ---------------------------------------------------------------- generation

const KEYS: [&str; 9] = ["id", "name", "price", "ok", "tags", "meta", "qty", "odd key", "status"];
const STATUSES: [&str; 4] = ["open", "closed", "Open", "pending"];

/// A catalogue-like document with heterogeneous records.
pub fn document<R: Rng>(rng: &mut R) -> Value {
    let n = rng.random_range(0..12);
    let items: Vec<Value> = (0..n).map(|i| record(rng, i)).collect();
    let mut doc = json!({"items": items, "total": n, "owner": {"name": "acme", "tags": ["a", "b"]}});
    if rng.random_bool(0.3) {
        doc["nested"] = json!({"rows": [[1, 2], [3], []], "meta": {"depth": 2}});
    }
    doc
}

fn record<R: Rng>(rng: &mut R, i: i64) -> Value {
    let mut m = Map::new();
    if rng.random_bool(0.9) {
        m.insert("id".into(), json!(i));
    }
    if rng.random_bool(0.8) {
        m.insert("name".into(), json!(format!("item{}", rng.random_range(0..5))));
    }
    if rng.random_bool(0.85) {
        let price = match rng.random_range(0..4) {
            0 => json!(rng.random_range(0..200)),
            1 => json!(f64::from(rng.random_range(0..4000)) / 8.0),
            2 => json!("12"),
            _ => json!(rng.random_range(0..200)),
        };
        m.insert("price".into(), price);
    }
    if rng.random_bool(0.7) {
        m.insert("ok".into(), json!(rng.random_bool(0.5)));
    }
    if rng.random_bool(0.6) {
        let tags: Vec<&str> = (0..rng.random_range(0..3)).map(|_| *["x", "y", "z"].choose(rng).unwrap()).collect();
        m.insert("tags".into(), json!(tags));
    }
    if rng.random_bool(0.5) {
        m.insert("meta".into(), json!({"qty": rng.random_range(0..5), "status": STATUSES.choose(rng).unwrap()}));
    }
    if rng.random_bool(0.1) {
        m.insert("odd key".into(), json!(null));
    }
    Value::Object(m)
}

fn hops<R: Rng>(rng: &mut R) -> Vec<Hop> {
    match rng.random_range(0..8) {
        0 => vec![],
        1 => vec![Hop::Key("meta".into()), Hop::Key(["qty", "status"].choose(rng).unwrap().to_string())],
        2 => vec![Hop::Key("tags".into()), Hop::At(rng.random_range(-2..2))],
        _ => vec![Hop::Key(KEYS.choose(rng).unwrap().to_string())],
    }
}

fn literal<R: Rng>(rng: &mut R) -> Value {
    match rng.random_range(0..7) {
        0 => json!(rng.random_range(0..200)),
        1 => json!(f64::from(rng.random_range(0..400)) / 4.0),
        2 => json!(*["item1", "item3", "x", "open", "Open"].choose(rng).unwrap()),
        3 => json!(rng.random_bool(0.5)),
        4 => Value::Null,
        5 => json!("12"),
        _ => json!(rng.random_range(0..5)),
    }
}

fn cmp<R: Rng>(rng: &mut R) -> Cmp {
    *[Cmp::Eq, Cmp::Ne, Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge].choose(rng).unwrap()
}

/// A random program, biased towards the document shape from [`document`]
/// but free to address fields that are missing or of the wrong kind.
pub fn program<R: Rng>(rng: &mut R) -> Program {
    let mut steps = Vec::new();
    match rng.random_range(0..10) {
        0 => steps.push(Step::Key("total".into())),
        1 => steps.extend([Step::Key("owner".into()), Step::Key("tags".into())]),
        2 => steps.extend([Step::Key("nested".into()), Step::Key("rows".into()), Step::Each]),
        3 => {}
        _ => steps.extend([Step::Key("items".into()), Step::Each]),
    }
    for _ in 0..rng.random_range(0..4) {
        let s = match rng.random_range(0..12) {
            0..=3 => Step::Filter(hops(rng), cmp(rng), literal(rng)),
            4 | 5 => Step::Key(KEYS.choose(rng).unwrap().to_string()),
            6 => Step::Each,
            7 => Step::At(rng.random_range(-3..3)),
            8 | 9 => {
                let n = rng.random_range(1..4);
                let mut fields: Vec<(String, Vec<Hop>)> = Vec::new();
                for i in 0..n {
                    fields.push((format!("{}{i}", ["f", "out", "a b"].choose(rng).unwrap()), hops(rng)));
                }
                Step::Shape(fields)
            }
            _ => Step::Fold(FOLDS.choose(rng).unwrap()),
        };
        steps.push(s);
    }
    if rng.random_bool(0.5) || steps.is_empty() {
        steps.push(Step::Fold(FOLDS.choose(rng).unwrap()));
    }
    let breaks = (0..steps.len()).map(|_| rng.random_bool(0.2)).collect();
    Program { steps, breaks }
}

// ---------------------------------------------------------------- golden suite

pub fn key(k: &str) -> Step {
    Step::Key(k.into())
}

pub fn at(i: i64) -> Step {
    Step::At(i)
}

pub fn each() -> Step {
    Step::Each
}

pub fn filter(path: &[&str], c: Cmp, lit: Value) -> Step {
    Step::Filter(path.iter().map(|k| Hop::Key((*k).into())).collect(), c, lit)
}

pub fn shape(fields: &[(&str, &[&str])]) -> Step {
    Step::Shape(
        fields
            .iter()
            .map(|(n, p)| ((*n).into(), p.iter().map(|k| Hop::Key((*k).into())).collect()))
            .collect(),
    )
}

pub fn fold(op: &'static str) -> Step {
    Step::Fold(op)
}

/// Fixed documents the golden programs run against.
pub fn golden_documents() -> Vec<(&'static str, Value)> {
    vec![
        (
            "shop",
            json!({
                "items": [
                    {"id": 1, "name": "pen", "price": 2.5, "ok": true, "tags": ["office", "cheap"], "meta": {"qty": 10, "status": "open"}},
                    {"id": 2, "name": "desk", "price": 180, "ok": false, "tags": ["office"], "meta": {"qty": 1, "status": "closed"}},
                    {"id": 3, "name": "lamp", "price": 35.75, "ok": true, "tags": [], "meta": {"qty": 0, "status": "open"}},
                    {"id": 4, "name": "pen", "price": 2.5, "ok": true},
                    {"id": 5, "name": "chair", "price": "n/a", "ok": null, "meta": {"qty": 3, "status": "pending"}}
                ],
                "total": 5,
                "owner": {"name": "acme", "country": "FR", "tags": ["b2b", "eu"]}
            }),
        ),
        (
            "flights",
            json!({
                "results": [
                    {"flight": "AF1", "from": "CDG", "to": "JFK", "fare": {"amount": 420, "currency": "EUR"}, "stops": 0},
                    {"flight": "DL8", "from": "CDG", "to": "JFK", "fare": {"amount": 389.99, "currency": "USD"}, "stops": 1},
                    {"flight": "BA2", "from": "LHR", "to": "JFK", "fare": {"amount": 510, "currency": "GBP"}, "stops": 0}
                ],
                "page": {"number": 1, "more": false}
            }),
        ),
        ("empty", json!({"items": [], "total": 0, "owner": {}})),
        ("matrix", json!([[1, 2, 3], [4, 5], [], [6]])),
    ]
}

pub struct GoldenCase {
    pub name: &'static str,
    pub document: &'static str,
    pub program: Program,
}

fn case(name: &'static str, document: &'static str, steps: Vec<Step>) -> GoldenCase {
    GoldenCase {
        name,
        document,
        program: Program::new(steps),
    }
}

/// The 50 golden programs.
pub fn golden_cases() -> Vec<GoldenCase> {
    use Cmp::*;
    let mut v = vec![
        case("count_items", "shop", vec![key("items"), fold("count")]),
        case("count_fanned", "shop", vec![key("items"), each(), fold("count")]),
        case("first_item_name", "shop", vec![key("items"), at(0), key("name")]),
        case("last_item_id", "shop", vec![key("items"), at(-1), key("id")]),
        case("all_names", "shop", vec![key("items"), each(), key("name")]),
        case("unique_names", "shop", vec![key("items"), each(), key("name"), fold("unique")]),
        case("cheap_ids", "shop", vec![key("items"), each(), filter(&["price"], Lt, json!(10)), key("id")]),
        case("ok_count", "shop", vec![key("items"), each(), filter(&["ok"], Eq, json!(true)), fold("count")]),
        case("not_ok_count", "shop", vec![key("items"), each(), filter(&["ok"], Ne, json!(true)), fold("count")]),
        case("open_names", "shop", vec![key("items"), each(), filter(&["meta", "status"], Eq, json!("open")), key("name")]),
        case("qty_sum", "shop", vec![key("items"), each(), filter(&["meta", "qty"], Ge, json!(0)), key("meta"), key("qty"), fold("sum")]),
        case("numeric_price_max", "shop", vec![key("items"), each(), filter(&["price"], Ge, json!(0)), key("price"), fold("max")]),
        case("numeric_price_min", "shop", vec![key("items"), each(), filter(&["price"], Gt, json!(-1)), key("price"), fold("min")]),
        case("price_sum_mixed", "shop", vec![key("items"), each(), filter(&["price"], Le, json!(1000)), key("price"), fold("sum")]),
        case("sum_strings_fails", "shop", vec![key("items"), each(), key("price"), fold("sum")]),
        case("project_id_name", "shop", vec![key("items"), each(), shape(&[("id", &["id"]), ("n", &["name"])])]),
        case("project_missing_null", "shop", vec![key("items"), each(), shape(&[("q", &["meta", "qty"])])]),
        case("project_then_filter", "shop", vec![key("items"), each(), shape(&[("p", &["price"]), ("i", &["id"])]), filter(&["p"], Eq, json!(2.5)), key("i")]),
        case("tags_iterate_unique", "shop", vec![key("items"), each(), filter(&["tags"], Ne, json!(null)), key("tags"), each(), fold("unique")]),
        case("owner_tags_first", "shop", vec![key("owner"), key("tags"), fold("first")]),
        case("owner_tags_last", "shop", vec![key("owner"), key("tags"), fold("last")]),
        case("owner_country", "shop", vec![key("owner"), key("country")]),
        case("missing_field", "shop", vec![key("owner"), key("email")]),
        case("missing_in_stream", "shop", vec![key("items"), each(), key("meta")]),
        case("index_out_of_range", "shop", vec![key("items"), at(9)]),
        case("field_on_array", "shop", vec![key("items"), key("name")]),
        case("iterate_object", "shop", vec![key("owner"), each()]),
        case("string_order", "shop", vec![key("items"), each(), filter(&["name"], Gt, json!("lamp")), key("name")]),
        case("null_compare", "shop", vec![key("items"), each(), filter(&["ok"], Eq, json!(null)), key("id")]),
        case("int_float_eq", "shop", vec![key("items"), each(), filter(&["id"], Eq, json!(2.0)), key("name")]),
        case("identity_count", "shop", vec![fold("count")]),
        case("fares", "flights", vec![key("results"), each(), key("fare"), key("amount")]),
        case("fare_min", "flights", vec![key("results"), each(), key("fare"), key("amount"), fold("min")]),
        case("fare_sum", "flights", vec![key("results"), each(), key("fare"), key("amount"), fold("sum")]),
        case("nonstop_flights", "flights", vec![key("results"), each(), filter(&["stops"], Eq, json!(0)), key("flight")]),
        case("cdg_fares", "flights", vec![key("results"), each(), filter(&["from"], Eq, json!("CDG")), shape(&[("f", &["flight"]), ("amt", &["fare", "amount"])])]),
        case("currencies_unique", "flights", vec![key("results"), each(), key("fare"), key("currency"), fold("unique")]),
        case("more_pages", "flights", vec![key("page"), key("more")]),
        case("cheap_count", "flights", vec![key("results"), each(), filter(&["fare", "amount"], Lt, json!(500)), fold("count")]),
        case("last_flight", "flights", vec![key("results"), at(-1), key("flight")]),
        case("empty_count", "empty", vec![key("items"), each(), fold("count")]),
        case("empty_sum", "empty", vec![key("items"), each(), fold("sum")]),
        case("empty_first", "empty", vec![key("items"), fold("first")]),
        case("empty_unique", "empty", vec![key("items"), fold("unique")]),
        case("empty_iterate", "empty", vec![key("items"), each()]),
        case("empty_owner_missing", "empty", vec![key("owner"), key("name")]),
        case("matrix_flatten", "matrix", vec![each(), each()]),
        case("matrix_flat_sum", "matrix", vec![each(), each(), fold("sum")]),
        case("matrix_row_count", "matrix", vec![fold("count")]),
        case("matrix_second_row_last", "matrix", vec![at(1), at(-1)]),
    ];
    // Exercise the parser's pipe-separated path form on a few of them.
    for c in v.iter_mut().filter(|c| c.name.starts_with("fare")) {
        c.program.breaks = (0..c.program.steps.len()).map(|i| i % 2 == 1).collect();
    }
    v
}

/// Committed oracle results for the golden suite.
pub const GOLDEN_FILE: &str = include_str!("../golden/jsonq_golden.json");

pub fn outcome_json(r: &Result<Value, Failure>) -> Value {
    match r {
        Ok(v) => json!({"ok": v}),
        Err(Failure::Missing(keys)) => json!({"error": "missing_field", "available_keys": keys}),
        Err(Failure::WrongKind) => json!({"error": "type_error"}),
        Err(Failure::OutOfRange) => json!({"error": "index_out_of_range"}),
    }
}

/// The golden suite evaluated by this oracle, in the committed file layout.
pub fn golden_json() -> Value {
    let docs: Map<String, Value> = golden_documents().into_iter().map(|(n, d)| (n.to_owned(), d)).collect();
    let cases: Vec<Value> = golden_cases()
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "document": c.document,
                "query": render(&c.program),
                "expected": outcome_json(&eval(&c.program, &docs[c.document])),
            })
        })
        .collect();
    json!({"documents": docs, "cases": cases})
}

#[cfg(test)]
mod tests {
    use super::*;
    use Cmp::{Eq, Lt};

    #[test]
    fn hand_checked() {
        let docs: std::collections::HashMap<_, _> = golden_documents().into_iter().collect();
        let run = |steps: Vec<Step>, d: &str| eval(&Program::new(steps), &docs[d]);
        assert_eq!(run(vec![key("items"), fold("count")], "shop"), Ok(json!(5)));
        assert_eq!(
            run(vec![key("items"), each(), filter(&["ok"], Eq, json!(true)), key("id")], "shop"),
            Ok(json!([1, 3, 4]))
        );
        assert_eq!(run(vec![key("owner"), key("x")], "empty"), Err(Failure::Missing(vec![])));
        assert_eq!(run(vec![key("items"), each(), fold("max")], "empty"), Ok(Value::Null));
        assert_eq!(run(vec![each(), each(), fold("sum")], "matrix"), Ok(json!(21)));
    }

    #[test]
    fn rendering() {
        let p = Program::new(vec![key("items"), each(), filter(&["price"], Lt, json!(100)), fold("count")]);
        assert_eq!(render(&p), ".items[] | select(.price < 100) | count");
        let mut q = Program::new(vec![at(0), key("odd key"), each()]);
        assert_eq!(render(&q), ".[0].\"odd key\"[]");
        q.breaks = vec![false, true, true];
        assert_eq!(render(&q), ".[0] | .\"odd key\" | .[]");
        assert_eq!(render(&Program::new(vec![shape(&[("a b", &[])])])), "{\"a b\": .}");
    }

    #[test]
    fn fifty_golden() {
        assert_eq!(golden_cases().len(), 50);
    }
}
