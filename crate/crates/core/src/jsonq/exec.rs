use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};
use thiserror::Error;

use super::ast::{render_segments, AggregateOp, Comparator, Path, QueryProgram, QueryStep, Segment};
use crate::schema::{describe_kind, json_eq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    /// Upper bound on values touched during execution.
    pub max_visits: usize,
    /// Upper bound on the serialized size of the result.
    pub max_output_bytes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_visits: 5_000_000,
            max_output_bytes: 64 * 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("missing field at {path}; available keys: [{}]", available_keys.join(", "))]
    MissingField { path: String, available_keys: Vec<String> },
    #[error("type error in `{step}`: got {actual_kind}; {hint}")]
    TypeError {
        step: String,
        actual_kind: String,
        hint: String,
    },
    #[error("index {index} out of range at {path} (array length {len})")]
    IndexOutOfRange { path: String, index: i64, len: usize },
    #[error("limit exceeded: {limit} = {bound}")]
    LimitExceeded { limit: &'static str, bound: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExecStats {
    pub visits: usize,
}

/// Runs `program` against `document` with the given limits.
pub fn execute(program: &QueryProgram, document: &Value, limits: Limits) -> Result<Value, ExecError> {
    execute_with_stats(program, document, limits).map(|(v, _)| v)
}

pub fn execute_with_stats(
    program: &QueryProgram,
    document: &Value,
    limits: Limits,
) -> Result<(Value, ExecStats), ExecError> {
    let mut ctx = Ctx { visits: 0, limits };
    ctx.touch(1)?;
    let mut stream = Stream {
        items: vec![Cow::Borrowed(document)],
        fanned: false,
    };
    for step in &program.steps {
        stream = ctx.step(step, stream)?;
    }
    let mut items = stream.items;
    let out = if items.len() == 1 {
        items.pop().map(Cow::into_owned).unwrap_or(Value::Null)
    } else {
        Value::Array(items.into_iter().map(Cow::into_owned).collect())
    };
    let size = serde_json::to_vec(&out).map_or(usize::MAX, |b| b.len());
    if size > limits.max_output_bytes {
        return Err(ExecError::LimitExceeded {
            limit: "max_output_bytes",
            bound: limits.max_output_bytes,
        });
    }
    Ok((out, ExecStats { visits: ctx.visits }))
}

struct Stream<'a> {
    items: Vec<Cow<'a, Value>>,
    /// Set once an iteration has fanned the stream out; an aggregate over an
    /// unfanned single array aggregates its elements instead.
    fanned: bool,
}

struct Ctx {
    visits: usize,
    limits: Limits,
}

impl Ctx {
    fn touch(&mut self, n: usize) -> Result<(), ExecError> {
        self.visits = self.visits.saturating_add(n);
        if self.visits > self.limits.max_visits {
            return Err(ExecError::LimitExceeded {
                limit: "max_visits",
                bound: self.limits.max_visits,
            });
        }
        Ok(())
    }

    fn step<'a>(&mut self, step: &QueryStep, stream: Stream<'a>) -> Result<Stream<'a>, ExecError> {
        match step {
            QueryStep::Path(path) => self.path(path, stream),
            QueryStep::Select {
                path,
                comparator,
                literal,
            } => {
                let mut kept = Vec::with_capacity(stream.items.len());
                for item in stream.items {
                    self.touch(1)?;
                    let target = self.lookup(&item, path)?;
                    if target.is_some_and(|t| compare(t, *comparator, literal)) {
                        kept.push(item);
                    }
                }
                Ok(Stream {
                    items: kept,
                    fanned: stream.fanned,
                })
            }
            QueryStep::Project(fields) => {
                let mut out = Vec::with_capacity(stream.items.len());
                for item in stream.items {
                    let mut obj = Map::new();
                    for (name, path) in fields {
                        self.touch(1)?;
                        let v = self.lookup(&item, path)?.cloned().unwrap_or(Value::Null);
                        obj.insert(name.clone(), v);
                    }
                    out.push(Cow::Owned(Value::Object(obj)));
                }
                Ok(Stream {
                    items: out,
                    fanned: stream.fanned,
                })
            }
            QueryStep::Aggregate(op) => {
                let value = self.aggregate(*op, stream)?;
                Ok(Stream {
                    items: vec![Cow::Owned(value)],
                    fanned: false,
                })
            }
        }
    }

    fn path<'a>(&mut self, path: &Path, stream: Stream<'a>) -> Result<Stream<'a>, ExecError> {
        let mut items = stream.items;
        let mut fanned = stream.fanned;
        for (depth, seg) in path.segments.iter().enumerate() {
            let here = || render_segments(&path.segments[..=depth]);
            let mut next = Vec::with_capacity(items.len());
            for item in items {
                match (seg, item) {
                    (Segment::Field(name), Cow::Borrowed(Value::Object(m))) => match m.get(name) {
                        Some(v) => next.push(Cow::Borrowed(v)),
                        None => return Err(missing(here(), m)),
                    },
                    (Segment::Field(name), Cow::Owned(Value::Object(mut m))) => match m.remove(name) {
                        Some(v) => next.push(Cow::Owned(v)),
                        None => return Err(missing(here(), &m)),
                    },
                    (Segment::Index(i), Cow::Borrowed(Value::Array(a))) => {
                        let at = resolve_index(*i, a.len()).ok_or_else(|| out_of_range(here(), *i, a.len()))?;
                        next.push(Cow::Borrowed(&a[at]));
                    }
                    (Segment::Index(i), Cow::Owned(Value::Array(mut a))) => {
                        let at = resolve_index(*i, a.len()).ok_or_else(|| out_of_range(here(), *i, a.len()))?;
                        next.push(Cow::Owned(a.swap_remove(at)));
                    }
                    (Segment::Iterate, Cow::Borrowed(Value::Array(a))) => {
                        self.touch(a.len())?;
                        next.extend(a.iter().map(Cow::Borrowed));
                        fanned = true;
                        continue;
                    }
                    (Segment::Iterate, Cow::Owned(Value::Array(a))) => {
                        self.touch(a.len())?;
                        next.extend(a.into_iter().map(Cow::Owned));
                        fanned = true;
                        continue;
                    }
                    (seg, other) => return Err(segment_type_error(seg, here(), &other)),
                }
                self.touch(1)?;
            }
            items = next;
        }
        Ok(Stream { items, fanned })
    }

    /// Lenient lookup used by select and project: anything unaddressable is
    /// `None`.
    fn lookup<'v>(&mut self, mut value: &'v Value, path: &Path) -> Result<Option<&'v Value>, ExecError> {
        for seg in &path.segments {
            self.touch(1)?;
            let next = match (seg, value) {
                (Segment::Field(n), Value::Object(m)) => m.get(n),
                (Segment::Index(i), Value::Array(a)) => resolve_index(*i, a.len()).map(|at| &a[at]),
                _ => None,
            };
            match next {
                Some(v) => value = v,
                None => return Ok(None),
            }
        }
        Ok(Some(value))
    }

    fn aggregate(&mut self, op: AggregateOp, stream: Stream<'_>) -> Result<Value, ExecError> {
        let elements: Vec<&Value> = match (stream.fanned, stream.items.as_slice()) {
            (false, [only]) if only.is_array() => only.as_array().map(|a| a.iter().collect()).unwrap_or_default(),
            (_, items) => items.iter().map(|c| c.as_ref()).collect(),
        };
        self.touch(elements.len())?;
        Ok(match op {
            AggregateOp::Count => Value::from(elements.len()),
            AggregateOp::First => elements.first().map_or(Value::Null, |v| (*v).clone()),
            AggregateOp::Last => elements.last().map_or(Value::Null, |v| (*v).clone()),
            AggregateOp::Sum => {
                require_numbers(op, &elements)?;
                if elements.is_empty() {
                    Value::Null
                } else {
                    sum(&elements)
                }
            }
            AggregateOp::Min | AggregateOp::Max => {
                require_numbers(op, &elements)?;
                let want = if op == AggregateOp::Min { Ordering::Less } else { Ordering::Greater };
                let mut best: Option<&Value> = None;
                for v in &elements {
                    if best.is_none_or(|b| num_cmp(v, b) == Some(want)) {
                        best = Some(v);
                    }
                }
                best.cloned().unwrap_or(Value::Null)
            }
            AggregateOp::Unique => {
                if elements.is_empty() {
                    Value::Null
                } else {
                    let mut seen = HashSet::new();
                    let mut out = Vec::new();
                    for v in elements {
                        if seen.insert(canonical_key(v)) {
                            out.push(v.clone());
                        }
                    }
                    Value::Array(out)
                }
            }
        })
    }
}

fn missing(path: String, m: &Map<String, Value>) -> ExecError {
    ExecError::MissingField {
        path,
        available_keys: m.keys().cloned().collect(),
    }
}

fn out_of_range(path: String, index: i64, len: usize) -> ExecError {
    ExecError::IndexOutOfRange { path, index, len }
}

fn segment_type_error(seg: &Segment, step: String, actual: &Value) -> ExecError {
    let hint = match seg {
        Segment::Field(_) => "field access needs an object; use `[]` to iterate arrays".to_owned(),
        Segment::Index(_) | Segment::Iterate => "indexing and `[]` need an array".to_owned(),
    };
    ExecError::TypeError {
        step,
        actual_kind: describe_kind(actual).to_owned(),
        hint,
    }
}

fn require_numbers(op: AggregateOp, elements: &[&Value]) -> Result<(), ExecError> {
    match elements.iter().find(|v| !v.is_number()) {
        Some(bad) => Err(ExecError::TypeError {
            step: op.name().to_owned(),
            actual_kind: describe_kind(bad).to_owned(),
            hint: format!("{} needs numbers; select or project a numeric field first", op.name()),
        }),
        None => Ok(()),
    }
}

fn resolve_index(i: i64, len: usize) -> Option<usize> {
    let len_i = i64::try_from(len).ok()?;
    let at = if i < 0 { len_i + i } else { i };
    (0..len_i).contains(&at).then_some(at as usize)
}

fn sum(elements: &[&Value]) -> Value {
    let mut int: Option<i64> = Some(0);
    let mut float = 0.0f64;
    for v in elements {
        int = int.and_then(|acc| v.as_i64().and_then(|x| acc.checked_add(x)));
        float += v.as_f64().unwrap_or(0.0);
    }
    match int {
        Some(i) => Value::from(i),
        None => Number::from_f64(float).map_or(Value::Null, Value::Number),
    }
}

fn num_cmp(a: &Value, b: &Value) -> Option<Ordering> {
    match (a.as_i64(), b.as_i64()) {
        (Some(x), Some(y)) => Some(x.cmp(&y)),
        _ => a.as_f64()?.partial_cmp(&b.as_f64()?),
    }
}

fn compare(value: &Value, cmp: Comparator, literal: &Value) -> bool {
    let ord = match (value, literal) {
        (Value::Number(_), Value::Number(_)) => num_cmp(value, literal),
        (Value::String(a), Value::String(b)) => Some(a.cmp(b)),
        _ => None,
    };
    match cmp {
        Comparator::Eq => json_eq(value, literal),
        Comparator::Ne => !json_eq(value, literal),
        Comparator::Lt => ord == Some(Ordering::Less),
        Comparator::Le => matches!(ord, Some(Ordering::Less | Ordering::Equal)),
        Comparator::Gt => ord == Some(Ordering::Greater),
        Comparator::Ge => matches!(ord, Some(Ordering::Greater | Ordering::Equal)),
    }
}

/// A string key under which [`json_eq`]-equal values collide.
fn canonical_key(v: &Value) -> String {
    let mut out = String::new();
    write_key(v, &mut out);
    out
}

fn write_key(v: &Value, out: &mut String) {
    match v {
        Value::Number(n) => {
            out.push('n');
            match n.as_i64() {
                Some(i) => out.push_str(&i.to_string()),
                None => {
                    let f = n.as_f64().unwrap_or(f64::NAN);
                    if f.fract() == 0.0 && f.abs() < 9.0e15 {
                        out.push_str(&(f as i64).to_string());
                    } else {
                        out.push_str(&format!("{f:?}"));
                    }
                }
            }
        }
        Value::Array(a) => {
            out.push('[');
            for x in a {
                write_key(x, out);
                out.push(',');
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            for (k, x) in m {
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_key(x, out);
                out.push(',');
            }
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jsonq::parse_query;
    use serde_json::json;

    fn run(q: &str, doc: Value) -> Result<Value, ExecError> {
        execute(&parse_query(q).unwrap(), &doc, Limits::default())
    }

    #[test]
    fn count_array() {
        assert_eq!(run(".items | count", json!({"items": [1, 2, 3]})).unwrap(), json!(3));
    }

    #[test]
    fn select_then_field() {
        let doc = json!({"items": [{"id": 1, "ok": true}, {"id": 2, "ok": false}]});
        assert_eq!(run(".items[] | select(.ok == true) | .id", doc).unwrap(), json!(1));
    }

    #[test]
    fn missing_on_empty() {
        assert_eq!(
            run(".missing", json!({})).unwrap_err(),
            ExecError::MissingField {
                path: ".missing".into(),
                available_keys: vec![]
            }
        );
    }

    #[test]
    fn missing_lists_keys() {
        let err = run(".items[].nme", json!({"items": [{"name": "a", "id": 1}]})).unwrap_err();
        assert_eq!(
            err,
            ExecError::MissingField {
                path: ".items[].nme".into(),
                available_keys: vec!["id".into(), "name".into()]
            }
        );
    }

    #[test]
    fn empty_stream_aggregates() {
        let doc = json!({"xs": []});
        assert_eq!(run(".xs[] | count", doc.clone()).unwrap(), json!(0));
        for op in ["sum", "min", "max", "first", "last", "unique"] {
            assert_eq!(run(&format!(".xs[] | {op}"), doc.clone()).unwrap(), Value::Null, "{op}");
        }
    }

    #[test]
    fn numeric_aggregates() {
        let doc = json!({"xs": [3, 1.5, -2, 3]});
        assert_eq!(run(".xs | sum", doc.clone()).unwrap(), json!(5.5));
        assert_eq!(run(".xs | min", doc.clone()).unwrap(), json!(-2));
        assert_eq!(run(".xs | max", doc.clone()).unwrap(), json!(3));
        assert_eq!(run(".xs | unique", doc.clone()).unwrap(), json!([3, 1.5, -2]));
        assert_eq!(run(".xs[] | last", doc).unwrap(), json!(3));
        assert_eq!(run(". | sum", json!([1, 2])).unwrap(), json!(3));
    }

    #[test]
    fn sum_rejects_strings() {
        let err = run(".xs | sum", json!({"xs": [1, "2"]})).unwrap_err();
        assert!(matches!(err, ExecError::TypeError { ref actual_kind, .. } if actual_kind == "string"));
    }

    #[test]
    fn index_on_object_is_type_error() {
        let err = run(".a[0]", json!({"a": {"b": 1}})).unwrap_err();
        assert!(matches!(err, ExecError::TypeError { ref actual_kind, .. } if actual_kind == "object"));
    }

    #[test]
    fn negative_index_and_range() {
        let doc = json!({"a": [1, 2, 3]});
        assert_eq!(run(".a[-1]", doc.clone()).unwrap(), json!(3));
        assert!(matches!(run(".a[3]", doc).unwrap_err(), ExecError::IndexOutOfRange { len: 3, .. }));
    }

    #[test]
    fn project_and_multi_output() {
        let doc = json!({"rows": [{"a": 1, "b": {"c": "x"}}, {"a": 2}]});
        assert_eq!(
            run(".rows[] | {a: .a, c: .b.c}", doc).unwrap(),
            json!([{"a": 1, "c": "x"}, {"a": 2, "c": null}])
        );
    }

    #[test]
    fn select_drops_missing_and_mixed_kinds() {
        let doc = json!({"xs": [{"p": 5}, {"q": 1}, {"p": "7"}, {"p": 50}]});
        assert_eq!(run(".xs[] | select(.p < 10) | count", doc.clone()).unwrap(), json!(1));
        assert_eq!(run(".xs[] | select(.p != 5) | count", doc).unwrap(), json!(2));
    }

    #[test]
    fn fanned_empty_is_empty_array() {
        assert_eq!(run(".xs[]", json!({"xs": []})).unwrap(), json!([]));
    }

    #[test]
    fn visit_limit() {
        let doc = json!({"xs": (0..100).collect::<Vec<_>>()});
        let q = parse_query(".xs[] | count").unwrap();
        let err = execute(&q, &doc, Limits { max_visits: 50, max_output_bytes: 100 }).unwrap_err();
        assert_eq!(err, ExecError::LimitExceeded { limit: "max_visits", bound: 50 });
        let (_, stats) = execute_with_stats(&q, &doc, Limits::default()).unwrap();
        assert!(stats.visits <= 300);
    }

    #[test]
    fn output_limit() {
        let doc = json!({"s": "x".repeat(200)});
        let err = run(".s", doc.clone()).map(|_| ()).and_then(|_| {
            execute(&parse_query(".s").unwrap(), &doc, Limits { max_visits: 10, max_output_bytes: 100 }).map(|_| ())
        });
        assert!(matches!(err, Err(ExecError::LimitExceeded { limit: "max_output_bytes", .. })));
    }
}
