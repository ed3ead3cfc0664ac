use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::exec::{execute, Limits};
use super::{parse_query, QueryError, QueryProgram};
use crate::judge::{truncate_utf8, JudgeClient, JudgeRequest, DEFAULT_PROMPT_BUDGET};
use crate::model::ToolResponse;
use crate::schema::{describe_kind, SchemaNode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractConfig {
    pub max_attempts: u32,
    pub limits: Limits,
    pub prompt_budget_bytes: usize,
    pub max_output_tokens: u32,
    /// Byte cap for the raw-response fallback when extraction fails.
    pub fallback_bytes: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            limits: Limits::default(),
            prompt_budget_bytes: DEFAULT_PROMPT_BUDGET,
            max_output_tokens: 256,
            fallback_bytes: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractionResult {
    pub value: Value,
    pub program: QueryProgram,
    pub attempts: u32,
    pub bytes_in: usize,
    pub bytes_out: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptTranscript {
    pub attempt: u32,
    pub reply: String,
    pub query: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("response body is not JSON")]
    NotJson,
    #[error("extraction failed after {} attempt(s): {}", attempts.len(), attempts.last().map_or("", |a| a.error.as_str()))]
    Failed { attempts: Vec<AttemptTranscript> },
}

impl ExtractError {
    pub fn transcripts(&self) -> &[AttemptTranscript] {
        match self {
            ExtractError::Failed { attempts } => attempts,
            ExtractError::NotJson => &[],
        }
    }
}

pub const EXTRACT_SYSTEM_PROMPT: &str = "\
You answer questions about a large JSON document by writing one query in a small query language. \
You see only the document's structure, never the full data. Reply with the query alone on a single line.

Language:
  program   := step ( '|' step )*
  step      := path | select(path cmp literal) | { name: path, ... } | count | sum | min | max | first | last | unique
  path      := '.' name? ( '.' name | '[' int ']' | '[]' )*      ('[]' iterates an array; names may be \"quoted\")
  cmp       := == | != | < | <= | > | >=
  literal   := number | \"string\" | true | false | null
Examples:
  .items | count
  .items[] | select(.price < 100) | .name
  .orders[] | select(.status == \"open\") | .total | sum";

/// Runs a literal program against a response, bypassing the judge.
pub fn run_program(text: &str, response: &ToolResponse, limits: Limits) -> Result<ExtractionResult, QueryError> {
    let program = parse_query(text)?;
    let value = execute(&program, &response.body, limits)?;
    Ok(finish(response, program, value, 1))
}

fn finish(response: &ToolResponse, program: QueryProgram, value: Value, attempts: u32) -> ExtractionResult {
    ExtractionResult {
        bytes_in: canonical_len(&response.body),
        bytes_out: canonical_len(&value),
        value,
        program,
        attempts,
    }
}

/// Size of the compact serialization.
pub fn canonical_len(v: &Value) -> usize {
    serde_json::to_vec(v).map_or(0, |b| b.len())
}

/// Asks the judge for a query answering `question`, executes it, and feeds
/// any parse or execution error back for another try.
pub fn extract(
    response: &ToolResponse,
    question: &str,
    schema: Option<&SchemaNode>,
    judge: &dyn JudgeClient,
    config: &ExtractConfig,
) -> Result<ExtractionResult, ExtractError> {
    if !response.is_json {
        return Err(ExtractError::NotJson);
    }
    let base = base_prompt(question, &response.body, schema);
    let mut attempts: Vec<AttemptTranscript> = Vec::new();
    for attempt in 1..=config.max_attempts.max(1) {
        let prompt = with_feedback(&base, &attempts);
        let request = JudgeRequest::bounded(
            EXTRACT_SYSTEM_PROMPT,
            &prompt,
            config.max_output_tokens,
            config.prompt_budget_bytes,
        );
        let reply = match judge.complete(&request) {
            Ok(r) => r.text,
            Err(e) => {
                attempts.push(AttemptTranscript {
                    attempt,
                    reply: String::new(),
                    query: String::new(),
                    error: e.to_string(),
                });
                break;
            }
        };
        let query = query_from_reply(&reply);
        let outcome = parse_query(&query)
            .map_err(QueryError::from)
            .and_then(|p| execute(&p, &response.body, config.limits).map(|v| (p, v)).map_err(QueryError::from));
        match outcome {
            Ok((program, value)) => return Ok(finish(response, program, value, attempt)),
            Err(e) => {
                tracing::debug!(attempt, %query, error = %e, "extraction attempt failed");
                attempts.push(AttemptTranscript {
                    attempt,
                    reply,
                    query,
                    error: e.to_string(),
                });
            }
        }
    }
    Err(ExtractError::Failed { attempts })
}

/// The raw body cut to `max_bytes`, for use when extraction fails.
pub fn fallback_excerpt(response: &ToolResponse, max_bytes: usize) -> String {
    let text = response.body_text();
    if text.len() <= max_bytes {
        return text;
    }
    format!("{}...[truncated {} bytes]", truncate_utf8(&text, max_bytes), text.len())
}

fn base_prompt(question: &str, body: &Value, schema: Option<&SchemaNode>) -> String {
    let mut p = format!("Question: {question}\n\nDocument structure:\n{}", skeleton(body, 3, 10));
    if let Some(s) = schema {
        let _ = write!(p, "\nResponse schema:\n{}\n", s.to_json());
    }
    p
}

fn with_feedback(base: &str, attempts: &[AttemptTranscript]) -> String {
    let mut p = base.to_owned();
    for a in attempts {
        let _ = write!(
            p,
            "\nAttempt {} query `{}` failed: {}\nWrite a corrected query.\n",
            a.attempt, a.query, a.error
        );
    }
    p
}

/// Pulls the query out of a judge reply: code fences, surrounding backticks
/// and a leading `query:` label are dropped, then the first non-empty line
/// is taken.
pub fn query_from_reply(reply: &str) -> String {
    let line = reply
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with("```"))
        .unwrap_or("");
    let line = line.trim_matches('`').trim();
    let lower = line.to_ascii_lowercase();
    match lower.strip_prefix("query:") {
        Some(_) => line[6..].trim().to_owned(),
        None => line.to_owned(),
    }
}

const MAX_KEYS_PER_OBJECT: usize = 40;
const SAMPLE_CHARS: usize = 40;

/// Structural outline of `doc`: one line per addressable path down to
/// `max_depth` levels, with kinds, array lengths, and at most `max_samples`
/// short scalar samples in total.
pub fn skeleton(doc: &Value, max_depth: usize, max_samples: usize) -> String {
    let mut out = String::new();
    let mut samples = max_samples;
    walk(doc, ".", 0, max_depth, &mut samples, &mut out);
    out
}

fn walk(v: &Value, path: &str, depth: usize, max_depth: usize, samples: &mut usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    match v {
        Value::Object(m) => {
            let _ = writeln!(out, "{indent}{path}: object ({} keys)", m.len());
            if depth >= max_depth {
                return;
            }
            for (k, child) in m.iter().take(MAX_KEYS_PER_OBJECT) {
                let mut p = if path == "." { String::new() } else { path.to_owned() };
                p.push('.');
                super::ast::write_name(&mut p, k);
                walk(child, &p, depth + 1, max_depth, samples, out);
            }
            if m.len() > MAX_KEYS_PER_OBJECT {
                let _ = writeln!(out, "{indent}  ... {} more keys", m.len() - MAX_KEYS_PER_OBJECT);
            }
        }
        Value::Array(a) => {
            let kinds = element_kinds(a);
            let _ = writeln!(out, "{indent}{path}: array ({} items of {kinds})", a.len());
            if depth >= max_depth {
                return;
            }
            if let Some(first) = a.iter().find(|x| x.is_object() || x.is_array()).or_else(|| a.first()) {
                let p = format!("{}[]", if path == "." { "." } else { path });
                walk(first, &p, depth + 1, max_depth, samples, out);
            }
        }
        scalar => {
            let _ = write!(out, "{indent}{path}: {}", describe_kind(scalar));
            if *samples > 0 && !scalar.is_null() {
                *samples -= 1;
                let text = scalar.to_string();
                let cut: String = text.chars().take(SAMPLE_CHARS).collect();
                let ellipsis = if cut.len() < text.len() { "..." } else { "" };
                let _ = write!(out, " e.g. {cut}{ellipsis}");
            }
            out.push('\n');
        }
    }
}

fn element_kinds(a: &[Value]) -> String {
    let mut kinds: Vec<&str> = Vec::new();
    for x in a.iter().take(100) {
        let k = match describe_kind(x) {
            "integer" => "number",
            k => k,
        };
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    if kinds.is_empty() {
        "nothing".into()
    } else {
        kinds.join("|")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::MockJudge;
    use serde_json::json;

    fn response() -> ToolResponse {
        ToolResponse::from_json("t1", Some(200), json!({"items": [1, 2, 3]}))
    }

    #[test]
    fn first_attempt_succeeds() {
        let judge = MockJudge::replies([".items | count"]);
        let r = extract(&response(), "how many items?", None, &judge, &ExtractConfig::default()).unwrap();
        assert_eq!(r.value, json!(3));
        assert_eq!(r.attempts, 1);
        assert_eq!(r.bytes_out, 1);
        assert_eq!(r.bytes_in, r#"{"items":[1,2,3]}"#.len());
    }

    #[test]
    fn retries_after_parse_error() {
        let judge = MockJudge::replies([".items |", "```\n.items | count\n```"]);
        let r = extract(&response(), "how many items?", None, &judge, &ExtractConfig::default()).unwrap();
        assert_eq!(r.attempts, 2);
        let second = &judge.transcript()[1];
        assert!(second.request.user_prompt.contains("query parse error at byte 8"));
    }

    #[test]
    fn fails_after_max_attempts() {
        let judge = MockJudge::replies([".nope", ".nada", ".zip", ".items | count"]);
        let err = extract(&response(), "q", None, &judge, &ExtractConfig::default()).unwrap_err();
        assert_eq!(err.transcripts().len(), 3);
        assert!(err.transcripts()[0].error.contains("available keys: [items]"));
        assert_eq!(judge.call_count(), 3);
    }

    #[test]
    fn prompt_has_skeleton_not_data() {
        let body = json!({"rows": (0..500).map(|i| json!({"id": i, "secret": format!("value-{i}")})).collect::<Vec<_>>()});
        let judge = MockJudge::replies([".rows | count"]);
        let resp = ToolResponse::from_json("t", None, body);
        extract(&resp, "how many rows", None, &judge, &ExtractConfig::default()).unwrap();
        let prompt = &judge.transcript()[0].request.user_prompt;
        assert!(prompt.contains(".rows: array (500 items of object)"));
        assert!(prompt.contains(".rows[].secret: string"));
        assert!(!prompt.contains("value-499"));
    }

    #[test]
    fn skeleton_caps_samples() {
        let doc = json!((0..30).map(|i| json!({format!("k{i}"): i})).collect::<Vec<_>>());
        let obj: serde_json::Map<String, Value> = (0..30).map(|i| (format!("k{i:02}"), json!(i))).collect();
        let s = skeleton(&Value::Object(obj), 3, 10);
        assert_eq!(s.matches(" e.g. ").count(), 10);
        assert!(skeleton(&doc, 3, 10).starts_with(".: array (30 items of object)"));
    }

    #[test]
    fn reply_cleanup() {
        assert_eq!(query_from_reply("`.a | count`"), ".a | count");
        assert_eq!(query_from_reply("Query: .a"), ".a");
        assert_eq!(query_from_reply("```jq\n.a[]\n```"), ".a[]");
    }

    #[test]
    fn not_json_rejected() {
        let judge = MockJudge::replies(["."]);
        let resp = ToolResponse::from_text("t", None, "plain");
        assert_eq!(
            extract(&resp, "q", None, &judge, &ExtractConfig::default()).unwrap_err(),
            ExtractError::NotJson
        );
    }
}
