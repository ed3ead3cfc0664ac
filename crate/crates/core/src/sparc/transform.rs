//! Format and unit normalization: dates, currency amounts, enum casing and
//! numeric strings. Repairs are computed on a copy; the input is never
//! modified.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;
use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::model::{ToolCall, ToolSpec};
use crate::schema::{child_path, format_conforms, is_iso_date, Format, SchemaKind, SchemaNode};

use super::{IssueCategory, ValidationIssue};

/// One value rewritten by the transformation tier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Repair {
    pub path: String,
    pub original: Value,
    pub repaired: Value,
    pub rule: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct TransformOutcome {
    pub issues: Vec<ValidationIssue>,
    pub repairs: Vec<Repair>,
    pub repaired: Option<Map<String, Value>>,
    /// Paths the tier produced a repair or an issue for.
    pub claimed: BTreeSet<String>,
}

/// Runs the conversion rules over a call's arguments against its spec.
/// Returns transformation issues and, when at least one value was rewritten,
/// the repaired argument object.
pub fn validate_transform(call: &ToolCall, spec: &ToolSpec) -> (Vec<ValidationIssue>, Option<Map<String, Value>>) {
    let out = transform_arguments(&call.arguments, &spec.parameters);
    (out.issues, out.repaired)
}

pub(crate) fn transform_arguments(arguments: &Map<String, Value>, schema: &SchemaNode) -> TransformOutcome {
    let mut out = TransformOutcome::default();
    let root = Value::Object(arguments.clone());
    visit(&root, schema, "", &mut out);
    if !out.repairs.is_empty() {
        let mut fixed = root;
        for r in &out.repairs {
            if let Some(slot) = fixed.pointer_mut(&r.path) {
                *slot = r.repaired.clone();
            }
        }
        if let Value::Object(map) = fixed {
            out.repaired = Some(map);
        }
    }
    out
}

fn visit(value: &Value, node: &SchemaNode, path: &str, out: &mut TransformOutcome) {
    match (value, node.kind) {
        (Value::Object(map), SchemaKind::Object) => {
            for (key, child) in map {
                if let Some(sub) = node.properties.get(key) {
                    visit(child, sub, &child_path(path, key), out);
                }
            }
        }
        (Value::Array(items), SchemaKind::Array) => {
            if let Some(sub) = &node.items {
                for (i, item) in items.iter().enumerate() {
                    visit(item, sub, &child_path(path, &i.to_string()), out);
                }
            }
        }
        (Value::String(s), kind) if kind.is_numeric() => numeric_from_string(s, node, path, out),
        (Value::String(s), SchemaKind::String) => string_leaf(s, node, path, out),
        _ => {}
    }
}

fn repair(out: &mut TransformOutcome, path: &str, original: &Value, repaired: Value, rule: String) {
    out.claimed.insert(path.to_owned());
    out.repairs.push(Repair {
        path: path.to_owned(),
        original: original.clone(),
        repaired,
        rule,
    });
}

fn issue(out: &mut TransformOutcome, category: IssueCategory, path: &str, evidence: String, suggestion: String) {
    out.claimed.insert(path.to_owned());
    out.issues.push(ValidationIssue::new(category, path, evidence, suggestion));
}

fn numeric_from_string(s: &str, node: &SchemaNode, path: &str, out: &mut TransformOutcome) {
    let original = Value::String(s.to_owned());
    let (parsed, rule) = if node.format == Format::Currency {
        match parse_currency(s) {
            Some(amount) => (amount.decimal, "stripped currency symbol and thousands separators"),
            None => {
                issue(
                    out,
                    IssueCategory::UnconvertibleFormat,
                    path,
                    format!("{original} at {path} is not a recognizable currency amount"),
                    format!("Pass the amount at {path} as a plain number, e.g. 1234.50."),
                );
                return;
            }
        }
    } else {
        match parse_numeric_string(s) {
            Some(d) => (d, "parsed numeric string"),
            None => return,
        }
    };
    match decimal_to_number(&parsed, node.kind == SchemaKind::Integer) {
        Some(n) => repair(out, path, &original, Value::Number(n), rule.to_owned()),
        None if node.kind == SchemaKind::Integer => issue(
            out,
            IssueCategory::UnconvertibleFormat,
            path,
            format!("{original} at {path} is not a whole number but the parameter is an integer"),
            format!("Pass a whole number at {path}."),
        ),
        None => {}
    }
}

fn string_leaf(s: &str, node: &SchemaNode, path: &str, out: &mut TransformOutcome) {
    let original = Value::String(s.to_owned());
    let mut current = s.to_owned();
    match node.format {
        Format::Date if !is_iso_date(s) => match convert_date(s) {
            DateConversion::Converted { iso, evidence } => {
                repair(out, path, &original, Value::String(iso.clone()), evidence);
                current = iso;
            }
            DateConversion::Ambiguous { month_first, day_first } => {
                issue(
                    out,
                    IssueCategory::AmbiguousConversion,
                    path,
                    format!("\"{s}\" at {path} reads as {month_first} (month/day) or {day_first} (day/month)"),
                    format!("Confirm which date is meant and pass it at {path} as YYYY-MM-DD."),
                );
                return;
            }
            DateConversion::Invalid(reason) | DateConversion::NoRule(reason) => {
                issue(
                    out,
                    IssueCategory::UnconvertibleFormat,
                    path,
                    format!("\"{s}\" at {path} is not an ISO-8601 date: {reason}"),
                    format!("Pass the date at {path} as YYYY-MM-DD."),
                );
                return;
            }
        },
        Format::Currency if !format_conforms(Format::Currency, s) => match parse_currency(s) {
            Some(amount) => {
                repair(
                    out,
                    path,
                    &original,
                    Value::String(amount.decimal.clone()),
                    "stripped currency symbol and thousands separators".into(),
                );
                current = amount.decimal;
            }
            None => {
                issue(
                    out,
                    IssueCategory::UnconvertibleFormat,
                    path,
                    format!("\"{s}\" at {path} is not a recognizable currency amount"),
                    format!("Pass the amount at {path} as a plain decimal string, e.g. \"1234.50\"."),
                );
                return;
            }
        },
        Format::DateTime if !format_conforms(Format::DateTime, s) => {
            issue(
                out,
                IssueCategory::UnconvertibleFormat,
                path,
                format!("\"{s}\" at {path} is not an RFC 3339 date-time"),
                format!("Pass the value at {path} as e.g. 2026-03-13T09:30:00Z, with an explicit offset."),
            );
            return;
        }
        _ => {}
    }
    if let Some(values) = &node.enum_values {
        let current_v = Value::String(current.clone());
        if values.contains(&current_v) {
            return;
        }
        let folded = current.to_lowercase();
        let matches: Vec<&str> = values
            .iter()
            .filter_map(Value::as_str)
            .filter(|e| e.to_lowercase() == folded)
            .collect();
        match matches.as_slice() {
            [canonical] => {
                // A date repair at the same path is superseded by the enum canonicalization.
                out.repairs.retain(|r| r.path != path);
                repair(
                    out,
                    path,
                    &original,
                    Value::String((*canonical).to_owned()),
                    format!("case-insensitive match to enum value \"{canonical}\""),
                );
            }
            [] => {}
            many => issue(
                out,
                IssueCategory::AmbiguousConversion,
                path,
                format!("\"{current}\" at {path} matches several enum values ignoring case: {many:?}"),
                format!("Pass exactly one of {many:?} at {path}."),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DateConversion {
    Converted { iso: String, evidence: String },
    Ambiguous { month_first: String, day_first: String },
    /// Matched a known pattern but names no real calendar date.
    Invalid(String),
    NoRule(String),
}

static MONTH_FIRST: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Za-z]+)\.?\s+(\d{1,2})(?:st|nd|rd|th)?,?\s+(\d{4})$").unwrap());
static DAY_FIRST: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2})(?:st|nd|rd|th)?\s+([A-Za-z]+)\.?,?\s+(\d{4})$").unwrap());
static YEAR_SLASH: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{4})/(\d{1,2})/(\d{1,2})$").unwrap());
static NUMERIC_SLASH: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{1,2})/(\d{1,2})/(\d{4})$").unwrap());

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october", "november",
    "december",
];

fn month_number(name: &str) -> Option<u32> {
    let name = name.to_lowercase();
    if name.len() < 3 {
        return None;
    }
    MONTHS
        .iter()
        .position(|m| *m == name || m.starts_with(&name) && (name.len() == 3 || name == "sept"))
        .map(|i| i as u32 + 1)
}

fn ymd(y: i32, m: u32, d: u32) -> Option<String> {
    NaiveDate::from_ymd_opt(y, m, d).map(|date| date.format("%Y-%m-%d").to_string())
}

/// Converts a non-ISO date string. Never guesses between month/day orders.
pub fn convert_date(raw: &str) -> DateConversion {
    let s = raw.trim();
    let num = |c: &regex::Captures, i: usize| c[i].parse::<u32>().unwrap();
    if let Some(c) = MONTH_FIRST.captures(s) {
        let Some(m) = month_number(&c[1]) else {
            return DateConversion::NoRule(format!("unknown month name \"{}\"", &c[1]));
        };
        return match ymd(num(&c, 3) as i32, m, num(&c, 2)) {
            Some(iso) => DateConversion::Converted {
                iso,
                evidence: format!("converted \"{s}\" from Month D, YYYY"),
            },
            None => DateConversion::Invalid("no such calendar day".into()),
        };
    }
    if let Some(c) = DAY_FIRST.captures(s) {
        let Some(m) = month_number(&c[2]) else {
            return DateConversion::NoRule(format!("unknown month name \"{}\"", &c[2]));
        };
        return match ymd(num(&c, 3) as i32, m, num(&c, 1)) {
            Some(iso) => DateConversion::Converted {
                iso,
                evidence: format!("converted \"{s}\" from D Month YYYY"),
            },
            None => DateConversion::Invalid("no such calendar day".into()),
        };
    }
    if let Some(c) = YEAR_SLASH.captures(s) {
        return match ymd(num(&c, 1) as i32, num(&c, 2), num(&c, 3)) {
            Some(iso) => DateConversion::Converted {
                iso,
                evidence: format!("converted \"{s}\" from YYYY/MM/DD"),
            },
            None => DateConversion::Invalid("no such calendar day".into()),
        };
    }
    if let Some(c) = NUMERIC_SLASH.captures(s) {
        let (a, b, y) = (num(&c, 1), num(&c, 2), num(&c, 3) as i32);
        if a <= 12 && b <= 12 {
            return DateConversion::Ambiguous {
                month_first: ymd(y, a, b).unwrap_or_else(|| "an invalid date".into()),
                day_first: ymd(y, b, a).unwrap_or_else(|| "an invalid date".into()),
            };
        }
        return match (ymd(y, a, b), ymd(y, b, a)) {
            (Some(iso), None) => DateConversion::Converted {
                evidence: format!("converted \"{s}\" as month/day/year; {b} cannot be a month"),
                iso,
            },
            (None, Some(iso)) => DateConversion::Converted {
                evidence: format!("converted \"{s}\" as day/month/year; {a} cannot be a month"),
                iso,
            },
            _ => DateConversion::Invalid("neither month/day nor day/month names a real date".into()),
        };
    }
    DateConversion::NoRule("no conversion rule matches this layout".into())
}

static DATE_PHRASE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\b(?:[A-Za-z]{3,9}\.?\s+\d{1,2}(?:st|nd|rd|th)?,?\s+\d{4}|\d{1,2}(?:st|nd|rd|th)?\s+[A-Za-z]{3,9}\.?,?\s+\d{4}|\d{4}/\d{1,2}/\d{1,2}|\d{1,2}/\d{1,2}/\d{4}|\d{4}-\d{2}-\d{2})\b",
    )
    .unwrap()
});

/// ISO forms of every unambiguous date phrase in `text`.
pub fn dates_in(text: &str) -> Vec<String> {
    DATE_PHRASE
        .find_iter(text)
        .filter_map(|m| {
            let s = m.as_str();
            if is_iso_date(s) {
                return Some(s.to_owned());
            }
            match convert_date(s) {
                DateConversion::Converted { iso, .. } => Some(iso),
                _ => None,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrencyAmount {
    /// Canonical decimal text: optional `-`, digits, optional `.digits`.
    pub decimal: String,
}

static CURRENCY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(-)?\s*(?:([A-Z]{3})\s*)?([$€£¥₹])?\s*(-)?(\d{1,3}(?:,\d{3})+|\d+)(\.\d+)?\s*(?:([A-Z]{3}))?$",
    )
    .unwrap()
});

/// Parses amounts such as `$1,234.50`, `USD 12`, `-€3.5`, `99.95 EUR`.
pub fn parse_currency(raw: &str) -> Option<CurrencyAmount> {
    let c = CURRENCY.captures(raw.trim())?;
    if c.get(2).is_some() && c.get(7).is_some() {
        return None;
    }
    if c.get(1).is_some() && c.get(4).is_some() {
        return None;
    }
    let negative = c.get(1).is_some() || c.get(4).is_some();
    let int = c[5].replace(',', "");
    let frac = c.get(6).map_or("", |m| m.as_str());
    Some(CurrencyAmount {
        decimal: format!("{}{int}{frac}", if negative { "-" } else { "" }),
    })
}

static NUMERIC: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[+-]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?(?:[eE][+-]?\d+)?$").unwrap());

fn parse_numeric_string(raw: &str) -> Option<String> {
    let s = raw.trim();
    NUMERIC
        .is_match(s)
        .then(|| s.trim_start_matches('+').replace(',', ""))
}

fn decimal_to_number(decimal: &str, integer: bool) -> Option<Number> {
    if let Ok(i) = decimal.parse::<i64>() {
        return Some(Number::from(i));
    }
    let f = decimal.parse::<f64>().ok().filter(|f| f.is_finite())?;
    if integer {
        if f.fract() != 0.0 {
            return None;
        }
        if f.abs() < 9.0e15 {
            return Some(Number::from(f as i64));
        }
    }
    Number::from_f64(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;
    use serde_json::json;

    fn node(doc: Value) -> SchemaNode {
        parse_schema(&doc).unwrap().node
    }

    fn run(args: Value, schema: Value) -> TransformOutcome {
        transform_arguments(args.as_object().unwrap(), &node(schema))
    }

    #[test]
    fn month_name_date() {
        let out = run(
            json!({"d": "March 13, 2026"}),
            json!({"type":"object","properties":{"d":{"type":"string","format":"date"}}}),
        );
        assert!(out.issues.is_empty());
        assert_eq!(out.repaired.unwrap()["d"], "2026-03-13");
    }

    #[test]
    fn currency_to_number() {
        let out = run(
            json!({"amount": "$1,234.50"}),
            json!({"type":"object","properties":{"amount":{"type":"number","format":"currency"}}}),
        );
        assert_eq!(out.repaired.unwrap()["amount"], json!(1234.50));
    }

    #[test]
    fn ambiguous_numeric_date_is_flagged() {
        let out = run(
            json!({"d": "03/04/2026"}),
            json!({"type":"object","properties":{"d":{"type":"string","format":"date"}}}),
        );
        assert!(out.repaired.is_none());
        assert_eq!(out.issues.len(), 1);
        assert_eq!(out.issues[0].category, IssueCategory::AmbiguousConversion);
    }

    #[test]
    fn one_valid_reading_converts() {
        assert!(matches!(convert_date("13/04/2026"), DateConversion::Converted { ref iso, .. } if iso == "2026-04-13"));
        assert!(matches!(convert_date("04/13/2026"), DateConversion::Converted { ref iso, .. } if iso == "2026-04-13"));
        assert!(matches!(convert_date("31/31/2026"), DateConversion::Invalid(_)));
        assert!(matches!(convert_date("2026/3/7"), DateConversion::Converted { ref iso, .. } if iso == "2026-03-07"));
        assert!(matches!(convert_date("7 Sept 2026"), DateConversion::Converted { ref iso, .. } if iso == "2026-09-07"));
        assert!(matches!(convert_date("February 30, 2026"), DateConversion::Invalid(_)));
        assert!(matches!(convert_date("next tuesday"), DateConversion::NoRule(_)));
    }

    #[test]
    fn finds_dates_in_prose() {
        let found = dates_in("fly on March 13, 2026 or 2026/3/14, not 03/04/2026; back 2026-03-20");
        assert_eq!(found, ["2026-03-13", "2026-03-14", "2026-03-20"]);
    }

    #[test]
    fn enum_case_fold() {
        let schema = json!({"type":"object","properties":{"c":{"type":"string","enum":["economy","business"]}}});
        let out = run(json!({"c": "Business"}), schema.clone());
        assert_eq!(out.repaired.unwrap()["c"], "business");
        let out = run(json!({"c": "first"}), schema);
        assert!(out.repaired.is_none() && out.issues.is_empty() && out.claimed.is_empty());
    }

    #[test]
    fn numeric_strings() {
        let schema = json!({"type":"object","properties":{"n":{"type":"integer"},"x":{"type":"number"}}});
        let out = run(json!({"n": "42", "x": "1,000.5"}), schema.clone());
        let fixed = out.repaired.unwrap();
        assert_eq!(fixed["n"], json!(42));
        assert_eq!(fixed["x"], json!(1000.5));
        let out = run(json!({"n": "4.5"}), schema.clone());
        assert_eq!(out.issues[0].category, IssueCategory::UnconvertibleFormat);
        let out = run(json!({"n": "many"}), schema);
        assert!(out.claimed.is_empty());
    }

    #[test]
    fn currency_forms() {
        assert_eq!(parse_currency("USD 12").unwrap().decimal, "12");
        assert_eq!(parse_currency("-€3.5").unwrap().decimal, "-3.5");
        assert_eq!(parse_currency("99.95 EUR").unwrap().decimal, "99.95");
        assert_eq!(parse_currency("1,234,567").unwrap().decimal, "1234567");
        assert!(parse_currency("1.234,50").is_none());
        assert!(parse_currency("12,34").is_none());
        assert!(parse_currency("USD 5 EUR").is_none());
    }
}
