use std::fmt::{self, Write as _};

use serde_json::Value;

/// A parsed query. `steps` is never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryProgram {
    pub steps: Vec<QueryStep>,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Field(String),
    /// Negative indices count from the end.
    Index(i64),
    Iterate,
}

/// A run of segments; empty means the identity path `.`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Path {
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateOp {
    Count,
    Sum,
    Min,
    Max,
    First,
    Last,
    Unique,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryStep {
    Path(Path),
    Select {
        path: Path,
        comparator: Comparator,
        literal: Value,
    },
    /// Output object fields, in the order written.
    Project(Vec<(String, Path)>),
    Aggregate(AggregateOp),
}

impl AggregateOp {
    pub const ALL: [AggregateOp; 7] = [
        AggregateOp::Count,
        AggregateOp::Sum,
        AggregateOp::Min,
        AggregateOp::Max,
        AggregateOp::First,
        AggregateOp::Last,
        AggregateOp::Unique,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggregateOp::Count => "count",
            AggregateOp::Sum => "sum",
            AggregateOp::Min => "min",
            AggregateOp::Max => "max",
            AggregateOp::First => "first",
            AggregateOp::Last => "last",
            AggregateOp::Unique => "unique",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == s)
    }
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn write_name(out: &mut String, name: &str) {
    if is_ident(name) {
        out.push_str(name);
    } else {
        out.push_str(&Value::String(name.to_owned()).to_string());
    }
}

pub(crate) fn render_segments(segments: &[Segment]) -> String {
    let mut out = String::new();
    for seg in segments {
        match seg {
            Segment::Field(n) => {
                out.push('.');
                write_name(&mut out, n);
            }
            Segment::Index(i) => {
                let _ = write!(out, "[{i}]");
            }
            Segment::Iterate => out.push_str("[]"),
        }
    }
    if out.is_empty() || out.starts_with('[') {
        out.insert(0, '.');
    }
    out
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_segments(&self.segments))
    }
}

impl fmt::Display for QueryStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryStep::Path(p) => write!(f, "{p}"),
            QueryStep::Select {
                path,
                comparator,
                literal,
            } => write!(f, "select({path} {} {literal})", comparator.symbol()),
            QueryStep::Project(fields) => {
                let mut out = String::from("{");
                for (i, (name, path)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_name(&mut out, name);
                    let _ = write!(out, ": {path}");
                }
                out.push('}');
                f.write_str(&out)
            }
            QueryStep::Aggregate(op) => f.write_str(op.name()),
        }
    }
}

impl QueryProgram {
    /// Canonical text: steps re-rendered and joined with ` | `.
    pub fn canonical_text(&self) -> String {
        self.steps.iter().map(ToString::to_string).collect::<Vec<_>>().join(" | ")
    }
}
