//! Conversion fixtures and fuzz inputs for the transformation rules. Date
//! expectations come from the brute-force table in [`crate::date_oracle`].

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Value};

use crate::date_oracle::{self, Reading};
use crate::schema_oracle::days_in;

/// Argument schema the fixtures are written against.
pub fn schema() -> Value {
    json!({
        "type": "object",
        "properties": {
            "date": {"type": "string", "format": "date"},
            "amount": {"type": "number", "format": "currency"},
            "seats": {"type": "integer"},
            "cabin": {"type": "string", "enum": ["economy", "premium_economy", "business", "first"]},
            "code": {"type": "string", "enum": ["abc", "ABC", "xyz"]}
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expect {
    Repaired(Value),
    Issue(&'static str),
    Untouched,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub field: &'static str,
    pub input: Value,
    pub expect: Expect,
}

fn date_fixture(text: &str) -> Fixture {
    let expect = match date_oracle::read(text) {
        Reading::Date(iso) => Expect::Repaired(json!(iso)),
        Reading::Ambiguous => Expect::Issue("AMBIGUOUS_CONVERSION"),
        Reading::Unknown => Expect::Issue("UNCONVERTIBLE_FORMAT"),
    };
    Fixture {
        field: "date",
        input: json!(text),
        expect,
    }
}

fn fx(field: &'static str, input: Value, expect: Expect) -> Fixture {
    Fixture { field, input, expect }
}

/// Forty fixtures across dates, currency amounts and enum spellings.
pub fn fixtures() -> Vec<Fixture> {
    use Expect::*;
    let dates = [
        "March 13, 2026",
        "03/04/2026",
        "Mar 13, 2026",
        "13 March 2026",
        "2026/03/13",
        "2026/3/9",
        "13/03/2026",
        "03/13/2026",
        "12/12/2026",
        "01/02/2027",
        "31/12/2025",
        "February 29, 2024",
        "February 29, 2023",
        "Sept 7, 2031",
        "december 1 2030",
        "31/04/2026",
        "next tuesday",
        "13.03.2026",
    ];
    let mut v: Vec<Fixture> = dates.iter().map(|d| date_fixture(d)).collect();
    v.push(fx("date", json!("2026-03-13"), Untouched));
    v.extend([
        fx("amount", json!("$1,234.50"), Repaired(json!(1234.5))),
        fx("amount", json!("€99.99"), Repaired(json!(99.99))),
        fx("amount", json!("USD 12"), Repaired(json!(12))),
        fx("amount", json!("1,000,000 JPY"), Repaired(json!(1_000_000))),
        fx("amount", json!("-£3.50"), Repaired(json!(-3.5))),
        fx("amount", json!("₹250"), Repaired(json!(250))),
        fx("amount", json!("12.5"), Repaired(json!(12.5))),
        fx("amount", json!("1,23.4"), Issue("UNCONVERTIBLE_FORMAT")),
        fx("amount", json!("twelve dollars"), Issue("UNCONVERTIBLE_FORMAT")),
        fx("amount", json!(42.1), Untouched),
        fx("seats", json!("3"), Repaired(json!(3))),
        fx("seats", json!("2.5"), Issue("UNCONVERTIBLE_FORMAT")),
        fx("cabin", json!("Business"), Repaired(json!("business"))),
        fx("cabin", json!("PREMIUM_ECONOMY"), Repaired(json!("premium_economy"))),
        fx("cabin", json!("FIRST"), Repaired(json!("first"))),
        fx("cabin", json!("economy"), Untouched),
        fx("code", json!("Abc"), Issue("AMBIGUOUS_CONVERSION")),
        fx("code", json!("XYZ"), Repaired(json!("xyz"))),
        fx("code", json!("ABC"), Untouched),
        fx("cabin", json!("coach"), Untouched),
        fx("seats", json!(4), Untouched),
    ]);
    v
}

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
    "December",
];

/// A date in one of the accepted layouts (or occasionally a malformed one).
pub fn date_text<R: Rng>(rng: &mut R) -> String {
    let y = rng.random_range(date_oracle::FIRST_YEAR..=date_oracle::LAST_YEAR);
    let m = rng.random_range(1..=12);
    let d = rng.random_range(1..=days_in(y, m) + 1);
    let name = MONTHS[(m - 1) as usize];
    match rng.random_range(0..7) {
        0 => format!("{name} {d}, {y}"),
        1 => format!("{} {d}, {y}", &name[..3]),
        2 => format!("{d} {name} {y}"),
        3 => format!("{y}/{m:02}/{d:02}"),
        4 => format!("{m:02}/{d:02}/{y}"),
        5 => format!("{d}/{m}/{y}"),
        _ => format!("{y}-{m:02}-{d:02}"),
    }
}

/// An amount text plus its value, computed from integer cents.
pub fn currency_text<R: Rng>(rng: &mut R) -> (String, f64) {
    let cents: i64 = rng.random_range(0..500_000_000);
    let units = cents / 100;
    let frac = cents % 100;
    let grouped = {
        let digits = units.to_string();
        let groups: Vec<&str> = digits.as_bytes().rchunks(3).rev().map(|g| std::str::from_utf8(g).unwrap()).collect();
        groups.join(",")
    };
    let number = if rng.random_bool(0.5) { grouped } else { units.to_string() };
    let body = if rng.random_bool(0.6) { format!("{number}.{frac:02}") } else { number };
    let value = if body.contains('.') { cents as f64 / 100.0 } else { units as f64 };
    let text = match rng.random_range(0..5) {
        0 => format!("${body}"),
        1 => format!("€{body}"),
        2 => format!("{} {body}", ["USD", "EUR", "GBP"].choose(rng).unwrap()),
        3 => format!("{body} {}", ["USD", "CHF"].choose(rng).unwrap()),
        _ => body,
    };
    (text, value)
}

/// A case-scrambled spelling of one of `options`.
pub fn enum_spelling<R: Rng>(rng: &mut R, options: &[&str]) -> String {
    let base = options.choose(rng).unwrap();
    base.chars()
        .map(|c| if rng.random_bool(0.5) { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() })
        .collect()
}

/// A random argument object for [`schema`] built from repairable inputs.
pub fn repairable_arguments<R: Rng>(rng: &mut R) -> Value {
    let mut m = serde_json::Map::new();
    if rng.random_bool(0.8) {
        m.insert("date".into(), json!(date_text(rng)));
    }
    if rng.random_bool(0.8) {
        m.insert("amount".into(), json!(currency_text(rng).0));
    }
    if rng.random_bool(0.5) {
        m.insert("seats".into(), json!(rng.random_range(1..9).to_string()));
    }
    if rng.random_bool(0.7) {
        m.insert(
            "cabin".into(),
            json!(enum_spelling(rng, &["economy", "premium_economy", "business", "first"])),
        );
    }
    if rng.random_bool(0.3) {
        m.insert("code".into(), json!(enum_spelling(rng, &["abc", "xyz"])));
    }
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forty_fixtures_with_worked_examples() {
        let f = fixtures();
        assert_eq!(f.len(), 40);
        assert_eq!(f[0].expect, Expect::Repaired(json!("2026-03-13")));
        assert_eq!(f[1].expect, Expect::Issue("AMBIGUOUS_CONVERSION"));
        assert!(f.iter().any(|x| x.input == json!("$1,234.50") && x.expect == Expect::Repaired(json!(1234.5))));
    }
}
