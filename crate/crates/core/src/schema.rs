//! A small JSON-Schema subset: `type`, `properties`, `required`, `items`,
//! `enum`, `format` and `description`.
//!
//! Object validation is closed-world: keys that are not declared in
//! `properties` are reported as [`ViolationCategory::UnknownArgument`].
//! `integer` accepts any JSON number with a zero fractional part.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    Object,
    Array,
    String,
    Number,
    Integer,
    Boolean,
    Null,
    Any,
}

impl SchemaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaKind::Object => "object",
            SchemaKind::Array => "array",
            SchemaKind::String => "string",
            SchemaKind::Number => "number",
            SchemaKind::Integer => "integer",
            SchemaKind::Boolean => "boolean",
            SchemaKind::Null => "null",
            SchemaKind::Any => "any",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "object" => SchemaKind::Object,
            "array" => SchemaKind::Array,
            "string" => SchemaKind::String,
            "number" => SchemaKind::Number,
            "integer" => SchemaKind::Integer,
            "boolean" => SchemaKind::Boolean,
            "null" => SchemaKind::Null,
            "any" => SchemaKind::Any,
            _ => return None,
        })
    }

    /// Whether `value` is an instance of this kind.
    pub fn admits(self, value: &Value) -> bool {
        match self {
            SchemaKind::Object => value.is_object(),
            SchemaKind::Array => value.is_array(),
            SchemaKind::String => value.is_string(),
            SchemaKind::Number => value.is_number(),
            SchemaKind::Integer => is_integral(value),
            SchemaKind::Boolean => value.is_boolean(),
            SchemaKind::Null => value.is_null(),
            SchemaKind::Any => true,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, SchemaKind::Number | SchemaKind::Integer)
    }
}

impl fmt::Display for SchemaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    None,
    Date,
    DateTime,
    Currency,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::None => "none",
            Format::Date => "date",
            Format::DateTime => "date-time",
            Format::Currency => "currency",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaNode {
    pub kind: SchemaKind,
    pub properties: BTreeMap<String, SchemaNode>,
    pub required: Vec<String>,
    pub items: Option<Box<SchemaNode>>,
    pub enum_values: Option<Vec<Value>>,
    pub format: Format,
    pub description: Option<String>,
}

impl SchemaNode {
    pub fn of_kind(kind: SchemaKind) -> Self {
        Self {
            kind,
            properties: BTreeMap::new(),
            required: Vec::new(),
            items: None,
            enum_values: None,
            format: Format::None,
            description: None,
        }
    }

    pub fn empty_object() -> Self {
        Self::of_kind(SchemaKind::Object)
    }

    /// Renders the node back into the JSON-Schema document form.
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("type".into(), Value::String(self.kind.as_str().into()));
        if let Some(d) = &self.description {
            obj.insert("description".into(), Value::String(d.clone()));
        }
        if self.kind == SchemaKind::Object {
            let props = self
                .properties
                .iter()
                .map(|(k, v)| (k.clone(), v.to_json()))
                .collect::<Map<_, _>>();
            obj.insert("properties".into(), Value::Object(props));
            obj.insert(
                "required".into(),
                Value::Array(self.required.iter().cloned().map(Value::String).collect()),
            );
        }
        if let Some(items) = &self.items {
            obj.insert("items".into(), items.to_json());
        }
        if let Some(values) = &self.enum_values {
            obj.insert("enum".into(), Value::Array(values.clone()));
        }
        if self.format != Format::None {
            obj.insert("format".into(), Value::String(self.format.as_str().into()));
        }
        Value::Object(obj)
    }

    /// Resolves a JSON pointer into the schema, following object properties
    /// and array items (any index selects `items`).
    pub fn lookup(&self, pointer: &str) -> Option<&SchemaNode> {
        let mut node = self;
        for seg in pointer_segments(pointer) {
            node = match node.kind {
                SchemaKind::Object => node.properties.get(&seg)?,
                SchemaKind::Array => node.items.as_deref()?,
                _ => return None,
            };
        }
        Some(node)
    }

    /// Whether `value` is one of the node's enum values (numbers compare numerically).
    pub fn enum_contains(&self, value: &Value) -> bool {
        match &self.enum_values {
            None => true,
            Some(values) => values.iter().any(|e| json_eq(e, value)),
        }
    }
}

impl Serialize for SchemaNode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

/// Result of [`parse_schema`]: the node plus warnings for ignored keywords.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSchema {
    pub node: SchemaNode,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaParseError {
    #[error("{path}: schema must be a JSON object")]
    NotAnObject { path: String },
    #[error("{path}: `type` is absent and cannot be inferred")]
    MissingType { path: String },
    #[error("{path}: unsupported type {found}")]
    UnsupportedType { path: String, found: String },
    #[error("{path}: required property `{name}` is not declared in properties")]
    UndeclaredRequired { path: String, name: String },
    #[error("{path}: enum value {value} does not match kind {kind}")]
    EnumKindMismatch { path: String, value: String, kind: SchemaKind },
    #[error("{path}: malformed `{keyword}`: {reason}")]
    BadKeyword {
        path: String,
        keyword: &'static str,
        reason: String,
    },
}

const SUPPORTED_KEYWORDS: [&str; 7] = ["type", "properties", "required", "items", "enum", "format", "description"];

/// Parses a schema document. Unsupported keywords are skipped and listed in
/// [`ParsedSchema::warnings`].
pub fn parse_schema(doc: &Value) -> Result<ParsedSchema, SchemaParseError> {
    let mut warnings = Vec::new();
    let node = parse_node(doc, "", &mut warnings)?;
    Ok(ParsedSchema { node, warnings })
}

fn parse_node(doc: &Value, path: &str, warnings: &mut Vec<String>) -> Result<SchemaNode, SchemaParseError> {
    let obj = doc.as_object().ok_or_else(|| SchemaParseError::NotAnObject {
        path: display_path(path),
    })?;
    let bad = |keyword: &'static str, reason: &str| SchemaParseError::BadKeyword {
        path: display_path(path),
        keyword,
        reason: reason.to_owned(),
    };

    for key in obj.keys() {
        if !SUPPORTED_KEYWORDS.contains(&key.as_str()) {
            warnings.push(format!("{}: ignored unsupported keyword `{key}`", display_path(path)));
        }
    }

    let enum_values = match obj.get("enum") {
        None => None,
        Some(Value::Array(values)) => {
            if values.iter().any(|v| v.is_array() || v.is_object()) {
                return Err(bad("enum", "enum values must be scalars"));
            }
            Some(values.clone())
        }
        Some(_) => return Err(bad("enum", "expected an array")),
    };

    let kind = match obj.get("type") {
        Some(Value::String(name)) => {
            SchemaKind::from_name(name).ok_or_else(|| SchemaParseError::UnsupportedType {
                path: display_path(path),
                found: format!("\"{name}\""),
            })?
        }
        Some(other) => {
            return Err(SchemaParseError::UnsupportedType {
                path: display_path(path),
                found: other.to_string(),
            })
        }
        None => infer_kind(obj, enum_values.as_deref()).ok_or_else(|| SchemaParseError::MissingType {
            path: display_path(path),
        })?,
    };

    if let Some(values) = &enum_values {
        if let Some(v) = values.iter().find(|v| !kind.admits(v)) {
            return Err(SchemaParseError::EnumKindMismatch {
                path: display_path(path),
                value: v.to_string(),
                kind,
            });
        }
    }

    let mut node = SchemaNode::of_kind(kind);
    node.enum_values = enum_values;

    node.description = match obj.get("description") {
        None => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(bad("description", "expected a string")),
    };

    node.format = match obj.get("format") {
        None => Format::None,
        Some(Value::String(f)) => match f.as_str() {
            "date" => Format::Date,
            "date-time" => Format::DateTime,
            "currency" => Format::Currency,
            "none" => Format::None,
            other => {
                warnings.push(format!("{}: ignored unsupported format `{other}`", display_path(path)));
                Format::None
            }
        },
        Some(_) => return Err(bad("format", "expected a string")),
    };

    match obj.get("properties") {
        None => {}
        Some(Value::Object(props)) => {
            if kind != SchemaKind::Object {
                warnings.push(format!("{}: `properties` ignored on {kind} schema", display_path(path)));
            } else {
                for (name, sub) in props {
                    let sub_path = format!("{path}/properties/{}", escape_pointer(name));
                    node.properties.insert(name.clone(), parse_node(sub, &sub_path, warnings)?);
                }
            }
        }
        Some(_) => return Err(bad("properties", "expected an object")),
    }

    match obj.get("required") {
        None => {}
        Some(Value::Array(names)) => {
            for n in names {
                let name = n.as_str().ok_or_else(|| bad("required", "expected an array of strings"))?;
                if kind == SchemaKind::Object && !node.properties.contains_key(name) {
                    return Err(SchemaParseError::UndeclaredRequired {
                        path: display_path(path),
                        name: name.to_owned(),
                    });
                }
                if !node.required.iter().any(|r| r == name) {
                    node.required.push(name.to_owned());
                }
            }
            if kind != SchemaKind::Object && !node.required.is_empty() {
                warnings.push(format!("{}: `required` ignored on {kind} schema", display_path(path)));
                node.required.clear();
            }
        }
        Some(_) => return Err(bad("required", "expected an array of strings")),
    }

    if let Some(items) = obj.get("items") {
        if kind == SchemaKind::Array {
            node.items = Some(Box::new(parse_node(items, &format!("{path}/items"), warnings)?));
        } else {
            warnings.push(format!("{}: `items` ignored on {kind} schema", display_path(path)));
        }
    }

    Ok(node)
}

fn infer_kind(obj: &Map<String, Value>, enum_values: Option<&[Value]>) -> Option<SchemaKind> {
    if obj.contains_key("properties") || obj.contains_key("required") {
        return Some(SchemaKind::Object);
    }
    if obj.contains_key("items") {
        return Some(SchemaKind::Array);
    }
    if let Some(values) = enum_values.filter(|v| !v.is_empty()) {
        let first = &values[0];
        let kind = match first {
            Value::String(_) => SchemaKind::String,
            Value::Bool(_) => SchemaKind::Boolean,
            Value::Null => SchemaKind::Null,
            Value::Number(_) if values.iter().all(is_integral) => SchemaKind::Integer,
            Value::Number(_) => SchemaKind::Number,
            _ => return None,
        };
        return Some(kind);
    }
    if obj.contains_key("format") {
        return Some(SchemaKind::String);
    }
    None
}

fn display_path(path: &str) -> String {
    if path.is_empty() {
        "/".to_owned()
    } else {
        path.to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCategory {
    MissingRequired,
    UnknownArgument,
    TypeMismatch,
    EnumMismatch,
    FormatMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaViolation {
    /// JSON pointer into the validated value.
    pub path: String,
    pub category: ViolationCategory,
    pub expected: String,
    pub actual: String,
}

/// Validates `value` against `schema`. An empty list means the value conforms.
/// Violations are sorted by path; a type mismatch stops descent into that value.
pub fn validate(value: &Value, schema: &SchemaNode) -> Vec<SchemaViolation> {
    let mut out = Vec::new();
    let mut path = String::new();
    walk(value, schema, &mut path, &mut out);
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out
}

fn walk(value: &Value, node: &SchemaNode, path: &mut String, out: &mut Vec<SchemaViolation>) {
    if !node.kind.admits(value) {
        out.push(SchemaViolation {
            path: path.clone(),
            category: ViolationCategory::TypeMismatch,
            expected: node.kind.as_str().to_owned(),
            actual: describe_kind(value).to_owned(),
        });
        return;
    }
    if !node.enum_contains(value) {
        let allowed = node.enum_values.as_deref().unwrap_or_default();
        out.push(SchemaViolation {
            path: path.clone(),
            category: ViolationCategory::EnumMismatch,
            expected: format!("one of {}", Value::Array(allowed.to_vec())),
            actual: value.to_string(),
        });
    }
    if let Some(s) = value.as_str() {
        if !format_conforms(node.format, s) {
            out.push(SchemaViolation {
                path: path.clone(),
                category: ViolationCategory::FormatMismatch,
                expected: format_expectation(node.format).to_owned(),
                actual: value.to_string(),
            });
        }
    }
    match value {
        Value::Object(map) if node.kind == SchemaKind::Object => {
            for name in &node.required {
                if !map.contains_key(name) {
                    let expected = node.properties.get(name).map_or("any", |p| p.kind.as_str());
                    out.push(SchemaViolation {
                        path: child_path(path, name),
                        category: ViolationCategory::MissingRequired,
                        expected: expected.to_owned(),
                        actual: "absent".to_owned(),
                    });
                }
            }
            for (key, child) in map {
                let len = path.len();
                push_segment(path, key);
                match node.properties.get(key) {
                    Some(sub) => walk(child, sub, path, out),
                    None => out.push(SchemaViolation {
                        path: path.clone(),
                        category: ViolationCategory::UnknownArgument,
                        expected: format!(
                            "one of [{}]",
                            node.properties.keys().cloned().collect::<Vec<_>>().join(", ")
                        ),
                        actual: key.clone(),
                    }),
                }
                path.truncate(len);
            }
        }
        Value::Array(items) if node.kind == SchemaKind::Array => {
            if let Some(item_schema) = &node.items {
                for (i, item) in items.iter().enumerate() {
                    let len = path.len();
                    push_segment(path, &i.to_string());
                    walk(item, item_schema, path, out);
                    path.truncate(len);
                }
            }
        }
        _ => {}
    }
}

fn format_expectation(format: Format) -> &'static str {
    match format {
        Format::Date => "ISO-8601 date (YYYY-MM-DD)",
        Format::DateTime => "RFC 3339 date-time",
        Format::Currency => "plain decimal amount (e.g. 1234.50)",
        Format::None => "any",
    }
}

/// Whether a string value satisfies a format. Non-string formats always conform.
pub fn format_conforms(format: Format, s: &str) -> bool {
    match format {
        Format::None => true,
        Format::Date => is_iso_date(s),
        Format::DateTime => DateTime::parse_from_rfc3339(s).is_ok(),
        Format::Currency => is_plain_decimal(s),
    }
}

/// `YYYY-MM-DD` naming a real calendar date.
pub fn is_iso_date(s: &str) -> bool {
    s.len() == 10
        && s.as_bytes()[4] == b'-'
        && s.as_bytes()[7] == b'-'
        && NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}

fn is_plain_decimal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

pub fn is_integral(value: &Value) -> bool {
    match value {
        Value::Number(n) => n.is_i64() || n.is_u64() || n.as_f64().is_some_and(|f| f.is_finite() && f.fract() == 0.0),
        _ => false,
    }
}

/// JSON equality with numeric comparison for numbers (`3` equals `3.0`).
pub fn json_eq(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => match (x.as_i64(), y.as_i64()) {
            (Some(i), Some(j)) => i == j,
            _ => x.as_f64() == y.as_f64(),
        },
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_eq(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| json_eq(v, w)))
        }
        _ => a == b,
    }
}

/// Name of a value's JSON kind, reporting integral numbers as `integer`.
pub fn describe_kind(value: &Value) -> &'static str {
    match value {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) if is_integral(value) => "integer",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

pub fn escape_pointer(segment: &str) -> String {
    segment.replace('~', "~0").replace('/', "~1")
}

fn unescape_pointer(segment: &str) -> String {
    segment.replace("~1", "/").replace("~0", "~")
}

fn push_segment(path: &mut String, segment: &str) {
    path.push('/');
    path.push_str(&escape_pointer(segment));
}

pub fn child_path(parent: &str, segment: &str) -> String {
    let mut p = parent.to_owned();
    push_segment(&mut p, segment);
    p
}

/// Splits a JSON pointer into unescaped segments. `""` yields no segments.
pub fn pointer_segments(pointer: &str) -> Vec<String> {
    if pointer.is_empty() {
        return Vec::new();
    }
    pointer.trim_start_matches('/').split('/').map(unescape_pointer).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn schema(doc: Value) -> SchemaNode {
        parse_schema(&doc).unwrap().node
    }

    fn cats(v: &[SchemaViolation]) -> Vec<(&str, ViolationCategory)> {
        v.iter().map(|x| (x.path.as_str(), x.category)).collect()
    }

    #[test]
    fn parse_empty_object() {
        let node = schema(json!({"type":"object","properties":{},"required":[]}));
        assert_eq!(node.kind, SchemaKind::Object);
        assert!(node.properties.is_empty());
    }

    #[test]
    fn parse_string_enum() {
        let node = schema(json!({"type":"string","enum":["economy","business"]}));
        assert_eq!(node.kind, SchemaKind::String);
        assert_eq!(node.enum_values.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn required_must_be_declared() {
        let err = parse_schema(&json!({"type":"object","required":["x"],"properties":{}})).unwrap_err();
        assert!(matches!(err, SchemaParseError::UndeclaredRequired { ref name, .. } if name == "x"));
    }

    #[test]
    fn missing_type_without_hint_fails() {
        assert!(matches!(
            parse_schema(&json!({"description":"?"})),
            Err(SchemaParseError::MissingType { .. })
        ));
        assert_eq!(schema(json!({"properties":{}})).kind, SchemaKind::Object);
        assert_eq!(schema(json!({"enum":[1,2]})).kind, SchemaKind::Integer);
    }

    #[test]
    fn unsupported_keywords_warn() {
        let parsed = parse_schema(&json!({"type":"object","additionalProperties":false,"properties":{"a":{"type":"string","minLength":1}}})).unwrap();
        assert_eq!(parsed.warnings.len(), 2);
    }

    #[test]
    fn heterogeneous_enum_rejected() {
        assert!(matches!(
            parse_schema(&json!({"type":"string","enum":["a",1]})),
            Err(SchemaParseError::EnumKindMismatch { .. })
        ));
    }

    #[test]
    fn validate_examples() {
        let s = schema(json!({"type":"object","properties":{"a":{"type":"integer"}},"required":["a"]}));
        assert!(validate(&json!({"a":1}), &s).is_empty());
        assert_eq!(cats(&validate(&json!({}), &s)), vec![("/a", ViolationCategory::MissingRequired)]);
        assert_eq!(
            cats(&validate(&json!({"a":"1","b":true}), &s)),
            vec![("/a", ViolationCategory::TypeMismatch), ("/b", ViolationCategory::UnknownArgument)]
        );
    }

    #[test]
    fn integer_accepts_integral_floats() {
        let s = SchemaNode::of_kind(SchemaKind::Integer);
        assert!(validate(&json!(3.0), &s).is_empty());
        assert_eq!(validate(&json!(3.5), &s)[0].category, ViolationCategory::TypeMismatch);
    }

    #[test]
    fn nested_paths_and_escaping() {
        let s = schema(json!({"type":"object","properties":{"a/b":{"type":"array","items":{"type":"object","properties":{"d":{"type":"string","format":"date"}}}}}}));
        let v = validate(&json!({"a/b":[{"d":"2026-03-13"},{"d":"13/03/2026"}]}), &s);
        assert_eq!(cats(&v), vec![("/a~1b/1/d", ViolationCategory::FormatMismatch)]);
        assert_eq!(s.lookup("/a~1b/7/d").unwrap().format, Format::Date);
    }

    #[test]
    fn enum_numeric_equality() {
        let s = schema(json!({"type":"number","enum":[1,2.5]}));
        assert!(validate(&json!(1.0), &s).is_empty());
        assert_eq!(validate(&json!(2), &s)[0].category, ViolationCategory::EnumMismatch);
    }

    #[test]
    fn to_json_round_trips() {
        let doc = json!({"type":"object","properties":{"c":{"type":"string","enum":["x"],"format":"date","description":"d"},"n":{"type":"array","items":{"type":"number"}}},"required":["c"]});
        let node = schema(doc);
        assert_eq!(schema(node.to_json()), node);
    }

    #[test]
    fn currency_string_format() {
        assert!(format_conforms(Format::Currency, "1234.50"));
        assert!(format_conforms(Format::Currency, "-3"));
        assert!(!format_conforms(Format::Currency, "$1,234.50"));
        assert!(!format_conforms(Format::Currency, "1."));
    }
}
