//! Brute-force date reference: every calendar day in a year window is
//! rendered in each accepted layout, and lookups go through that table.

use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;

use crate::schema_oracle::days_in;

const FULL: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
    "December",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reading {
    /// Exactly one way to read the text; the ISO date.
    Date(String),
    /// Two numeric readings (month/day and day/month) both exist.
    Ambiguous,
    /// Not a date in any accepted layout.
    Unknown,
}

pub const FIRST_YEAR: i64 = 1990;
pub const LAST_YEAR: i64 = 2060;

type Table = HashMap<String, BTreeSet<(&'static str, String)>>;

/// Text → set of (layout, ISO date) readings.
fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Table::new();
        let mut add = |k: String, layout: &'static str, iso: &str| {
            t.entry(k.to_lowercase()).or_default().insert((layout, iso.to_owned()));
        };
        for y in FIRST_YEAR..=LAST_YEAR {
            for m in 1..=12 {
                for d in 1..=days_in(y, m) {
                    let iso = format!("{y:04}-{m:02}-{d:02}");
                    let full = FULL[(m - 1) as usize];
                    let mut names = vec![full.to_owned(), full[..3].to_owned()];
                    if m == 9 {
                        names.push("Sept".into());
                    }
                    for name in &names {
                        for day in [format!("{d}"), format!("{d:02}")] {
                            add(format!("{name} {day}, {y}"), "mdy", &iso);
                            add(format!("{name} {day} {y}"), "mdy", &iso);
                            add(format!("{day} {name} {y}"), "dmy", &iso);
                        }
                    }
                    for (mm, dd) in [(format!("{m}"), format!("{d}")), (format!("{m:02}"), format!("{d:02}"))] {
                        add(format!("{y}/{mm}/{dd}"), "ymd", &iso);
                        // Both numeric orders are recorded as separate readings.
                        add(format!("{mm}/{dd}/{y}"), "md", &iso);
                        add(format!("{dd}/{mm}/{y}"), "dm", &iso);
                    }
                }
            }
        }
        t
    })
}

/// Looks `text` up after trimming and collapsing inner whitespace.
pub fn read(text: &str) -> Reading {
    let key = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    match table().get(&key) {
        None => Reading::Unknown,
        Some(readings) if readings.len() == 1 => Reading::Date(readings.iter().next().unwrap().1.clone()),
        Some(_) => Reading::Ambiguous,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(read("March 13, 2026"), Reading::Date("2026-03-13".into()));
        assert_eq!(read("03/04/2026"), Reading::Ambiguous);
        assert_eq!(read("04/04/2026"), Reading::Ambiguous);
        assert_eq!(read("13/04/2026"), Reading::Date("2026-04-13".into()));
        assert_eq!(read("04/13/2026"), Reading::Date("2026-04-13".into()));
        assert_eq!(read("2026/4/13"), Reading::Date("2026-04-13".into()));
        assert_eq!(read("sept 1 2030"), Reading::Date("2030-09-01".into()));
        assert_eq!(read("February 30, 2026"), Reading::Unknown);
        assert_eq!(read("13/13/2026"), Reading::Unknown);
    }
}
