use std::fmt;

use serde_json::Value;
use thiserror::Error;

use super::ast::{AggregateOp, Comparator, Path, QueryProgram, QueryStep, Segment};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("query parse error at byte {offset}: expected {}, found {found}", expected.join(" | "))]
pub struct QueryParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

/// Parses a query program:
///
/// ```text
/// program   := step ( '|' step )*
/// step      := path | select | project | aggregate
/// path      := '.' name? ( '.' name | '[' int ']' | '[' ']' )*
/// select    := 'select' '(' path cmp literal ')'
/// project   := '{' name ':' path ( ',' name ':' path )* '}'
/// aggregate := 'count' | 'sum' | 'min' | 'max' | 'first' | 'last' | 'unique'
/// name      := ident | string
/// cmp       := '==' | '!=' | '<' | '<=' | '>' | '>='
/// literal   := number | string | 'true' | 'false' | 'null'
/// ```
///
/// Paths inside `select` and project fields cannot contain `[]`.
pub fn parse_query(text: &str) -> Result<QueryProgram, QueryParseError> {
    let mut p = Parser { src: text, pos: 0 };
    let mut steps = vec![p.step()?];
    loop {
        p.skip_ws();
        if p.at_end() {
            break;
        }
        if p.eat("|") {
            steps.push(p.step()?);
        } else {
            return Err(p.error(&["'|'", "end of query"]));
        }
    }
    Ok(QueryProgram {
        steps,
        source_text: text.to_owned(),
    })
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

const STEP_START: [&str; 4] = ["path starting with '.'", "select(...)", "'{'", "aggregate (count|sum|min|max|first|last|unique)"];

impl Parser<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> QueryParseError {
        let found = match self.peek() {
            None => "end of query".to_owned(),
            Some(_) => {
                let snippet: String = self.rest().chars().take(12).collect();
                format!("{snippet:?}")
            }
        };
        QueryParseError {
            offset: self.pos,
            expected: expected.iter().map(|s| (*s).to_owned()).collect(),
            found,
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), QueryParseError> {
        self.skip_ws();
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(&[&format!("'{tok}'")]))
        }
    }

    fn step(&mut self) -> Result<QueryStep, QueryParseError> {
        self.skip_ws();
        match self.peek() {
            Some('.') => Ok(QueryStep::Path(self.path(true)?)),
            Some('{') => self.project(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let word = self.ident().unwrap_or_default();
                if word == "select" {
                    return self.select();
                }
                match AggregateOp::from_name(&word) {
                    Some(op) => Ok(QueryStep::Aggregate(op)),
                    None => {
                        self.pos = start;
                        Err(self.error(&STEP_START))
                    }
                }
            }
            _ => Err(self.error(&STEP_START)),
        }
    }

    fn ident(&mut self) -> Option<String> {
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let end = chars
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        let word = rest[..end].to_owned();
        self.pos += end;
        Some(word)
    }

    fn name(&mut self) -> Result<Option<String>, QueryParseError> {
        if self.peek() == Some('"') {
            return match self.string_literal()? {
                Value::String(s) => Ok(Some(s)),
                _ => unreachable!(),
            };
        }
        Ok(self.ident())
    }

    fn path(&mut self, allow_iterate: bool) -> Result<Path, QueryParseError> {
        self.skip_ws();
        if !self.eat(".") {
            return Err(self.error(&["'.'"]));
        }
        let mut segments = Vec::new();
        let save = self.pos;
        self.skip_ws();
        if let Some(n) = self.name()? {
            segments.push(Segment::Field(n));
        } else {
            self.pos = save;
        }
        loop {
            let save = self.pos;
            self.skip_ws();
            if self.eat(".") {
                self.skip_ws();
                match self.name()? {
                    Some(n) => segments.push(Segment::Field(n)),
                    None => return Err(self.error(&["field name"])),
                }
            } else if self.eat("[") {
                self.skip_ws();
                if self.eat("]") {
                    if !allow_iterate {
                        return Err(QueryParseError {
                            offset: self.pos - 1,
                            expected: vec!["integer index".into()],
                            found: "'[]' (iteration is not allowed here)".into(),
                        });
                    }
                    segments.push(Segment::Iterate);
                } else {
                    let idx = self.integer()?;
                    self.expect("]")?;
                    segments.push(Segment::Index(idx));
                }
            } else {
                self.pos = save;
                break;
            }
        }
        Ok(Path { segments })
    }

    fn integer(&mut self) -> Result<i64, QueryParseError> {
        let rest = self.rest();
        let neg = rest.starts_with('-');
        let digits = rest[usize::from(neg)..].bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return Err(self.error(&["integer index", "']'"]));
        }
        let len = usize::from(neg) + digits;
        let parsed = rest[..len].parse::<i64>().map_err(|_| self.error(&["integer index in range"]))?;
        self.pos += len;
        Ok(parsed)
    }

    fn select(&mut self) -> Result<QueryStep, QueryParseError> {
        self.expect("(")?;
        let path = self.path(false)?;
        self.skip_ws();
        let comparator = self.comparator()?;
        self.skip_ws();
        let literal = self.literal()?;
        self.expect(")")?;
        Ok(QueryStep::Select {
            path,
            comparator,
            literal,
        })
    }

    fn comparator(&mut self) -> Result<Comparator, QueryParseError> {
        for (tok, cmp) in [
            ("==", Comparator::Eq),
            ("!=", Comparator::Ne),
            ("<=", Comparator::Le),
            (">=", Comparator::Ge),
            ("<", Comparator::Lt),
            (">", Comparator::Gt),
        ] {
            if self.eat(tok) {
                return Ok(cmp);
            }
        }
        Err(self.error(&["'=='", "'!='", "'<'", "'<='", "'>'", "'>='"]))
    }

    fn literal(&mut self) -> Result<Value, QueryParseError> {
        match self.peek() {
            Some('"') => self.string_literal(),
            Some(c) if c == '-' || c.is_ascii_digit() => self.number_literal(),
            _ => {
                for (word, v) in [("true", Value::Bool(true)), ("false", Value::Bool(false)), ("null", Value::Null)] {
                    if self.eat(word) {
                        return Ok(v);
                    }
                }
                Err(self.error(&["number", "string", "true", "false", "null"]))
            }
        }
    }

    fn number_literal(&mut self) -> Result<Value, QueryParseError> {
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'e' | 'E')))
            .unwrap_or(rest.len());
        match serde_json::from_str::<Value>(&rest[..len]) {
            Ok(v @ Value::Number(_)) => {
                self.pos += len;
                Ok(v)
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn string_literal(&mut self) -> Result<Value, QueryParseError> {
        let rest = self.rest();
        let bytes = rest.as_bytes();
        let mut i = 1;
        while i < bytes.len() {
            match bytes[i] {
                b'\\' => i += 2,
                b'"' => {
                    return match serde_json::from_str::<Value>(&rest[..=i]) {
                        Ok(v) => {
                            self.pos += i + 1;
                            Ok(v)
                        }
                        Err(_) => Err(self.error(&["valid string escape"])),
                    };
                }
                _ => i += 1,
            }
        }
        Err(QueryParseError {
            offset: self.src.len(),
            expected: vec!["closing '\"'".into()],
            found: "end of query".into(),
        })
    }

    fn project(&mut self) -> Result<QueryStep, QueryParseError> {
        self.expect("{")?;
        let mut fields: Vec<(String, Path)> = Vec::new();
        loop {
            self.skip_ws();
            let at = self.pos;
            let Some(name) = self.name()? else {
                return Err(self.error(&["field name"]));
            };
            if fields.iter().any(|(n, _)| *n == name) {
                return Err(QueryParseError {
                    offset: at,
                    expected: vec!["distinct field name".into()],
                    found: format!("duplicate {name:?}"),
                });
            }
            self.expect(":")?;
            let path = self.path(false)?;
            fields.push((name, path));
            self.skip_ws();
            if self.eat(",") {
                continue;
            }
            if self.eat("}") {
                break;
            }
            return Err(self.error(&["','", "'}'"]));
        }
        Ok(QueryStep::Project(fields))
    }
}

impl fmt::Display for QueryProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn three_step_pipeline() {
        let p = parse_query(".items[] | select(.price < 100) | count").unwrap();
        assert_eq!(p.steps.len(), 3);
        assert_eq!(
            p.steps[1],
            QueryStep::Select {
                path: Path {
                    segments: vec![Segment::Field("price".into())]
                },
                comparator: Comparator::Lt,
                literal: json!(100),
            }
        );
        assert_eq!(p.steps[2], QueryStep::Aggregate(AggregateOp::Count));
    }

    #[test]
    fn single_path() {
        let p = parse_query(".a.b[0]").unwrap();
        assert_eq!(
            p.steps,
            vec![QueryStep::Path(Path {
                segments: vec![Segment::Field("a".into()), Segment::Field("b".into()), Segment::Index(0)]
            })]
        );
    }

    #[test]
    fn trailing_pipe() {
        let err = parse_query(".items[] |").unwrap_err();
        assert_eq!(err.offset, 10);
        assert_eq!(err.found, "end of query");
        assert!(err.expected.iter().any(|e| e.contains("select")));
    }

    #[test]
    fn whitespace_and_quoted_names() {
        let p = parse_query("  . \"odd key\" [ -1 ] |{ a : .x, \"b c\": . }|  unique ").unwrap();
        assert_eq!(p.steps.len(), 3);
        assert!(matches!(&p.steps[1], QueryStep::Project(f) if f.len() == 2));
    }

    #[test]
    fn string_literal_escapes() {
        let p = parse_query(r#".a[] | select(.name == "say \"hi\"\n")"#).unwrap();
        assert!(matches!(&p.steps[1], QueryStep::Select { literal, .. } if literal == &json!("say \"hi\"\n")));
    }

    #[test]
    fn rejects() {
        for bad in ["", "items", ".a | bogus", "select(.a[] == 1)", ".a[x]", "{a: .b[]}", "{a: .b, a: .c}", "select(.a ~ 1)", ".a.", "select(.a == \"x)", ".a ]"] {
            assert!(parse_query(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn error_offsets_point_at_problem() {
        let err = parse_query(".a | select(.b >> 2)").unwrap_err();
        assert_eq!(err.offset, 16);
    }
}
