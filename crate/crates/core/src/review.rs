//! Silent-error review: did a transport-successful tool response actually
//! accomplish anything? A deterministic rule cascade answers offline; a
//! judge backend can replace it and falls back to the cascade whenever the
//! judge is unreachable or answers off-script.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::component::{Component, ComponentError, ComponentResult};
use crate::judge::{truncate_utf8, JudgeClient, JudgeRequest, DEFAULT_PROMPT_BUDGET};
use crate::model::{AgentPhase, LifecycleStage, Message, Role, ToolResponse, ToolSpec};
use crate::text::normalize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReviewOutcome {
    Accomplished,
    PartiallyAccomplished,
    NotAccomplished,
}

impl ReviewOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            ReviewOutcome::Accomplished => "ACCOMPLISHED",
            ReviewOutcome::PartiallyAccomplished => "PARTIALLY_ACCOMPLISHED",
            ReviewOutcome::NotAccomplished => "NOT_ACCOMPLISHED",
        }
    }
}

impl fmt::Display for ReviewOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewResult {
    pub outcome: ReviewOutcome,
    pub rationale: String,
    /// Cascade rule that decided the outcome; absent when the judge did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewInput {
    pub messages: Vec<Message>,
    pub tool_response: ToolResponse,
    pub tool_spec: Option<ToolSpec>,
}

impl ReviewInput {
    /// Checks the input contract: a user message exists and the response
    /// answers a tool call made in `messages`.
    pub fn check(&self) -> Result<(), ComponentError> {
        if !self.messages.iter().any(|m| m.role == Role::User) {
            return Err(ComponentError::MalformedInput {
                path: "/messages".into(),
                reason: "no user message".into(),
            });
        }
        if self.tool_name().is_none() {
            return Err(ComponentError::MalformedInput {
                path: "/tool_response/tool_call_id".into(),
                reason: format!("no tool call with id {:?} in messages", self.tool_response.tool_call_id),
            });
        }
        Ok(())
    }

    pub fn latest_user_message(&self) -> Option<&str> {
        self.messages
            .iter()
            .rev()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }

    /// Name of the tool whose call this response answers.
    pub fn tool_name(&self) -> Option<&str> {
        self.messages
            .iter()
            .flat_map(|m| &m.tool_calls)
            .find(|c| c.id == self.tool_response.tool_call_id)
            .map(|c| c.tool_name.as_str())
    }
}

pub const DEFAULT_FAILURE_PHRASES: &[&str] = &[
    "service under maintenance",
    "no results found",
    "not found",
    "unavailable",
    "rate limit",
    "unauthorized",
    "forbidden",
    "internal error",
    "try again later",
];

pub const DEFAULT_PARTIAL_MARKERS: &[&str] = &["truncated", "partial results", "more results available"];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("lexicon {path} must be a JSON list of strings or {{\"failure\": [...], \"partial\": [...]}}: {reason}")]
    Format { path: PathBuf, reason: String },
}

/// Phrase lists, stored normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    failure: Vec<String>,
    partial: Vec<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::new(DEFAULT_FAILURE_PHRASES, DEFAULT_PARTIAL_MARKERS)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LexiconFile {
    Failure(Vec<String>),
    Both {
        #[serde(default)]
        failure: Option<Vec<String>>,
        #[serde(default)]
        partial: Option<Vec<String>>,
    },
}

impl Lexicon {
    pub fn new<S: AsRef<str>>(failure: &[S], partial: &[S]) -> Self {
        let norm = |xs: &[S]| {
            xs.iter()
                .map(|s| normalize(s.as_ref()))
                .filter(|s| !s.is_empty())
                .collect()
        };
        Self {
            failure: norm(failure),
            partial: norm(partial),
        }
    }

    /// Loads a lexicon file. A plain list replaces the failure phrases; an
    /// object may replace either list.
    pub fn from_file(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.to_owned(),
            source,
        })?;
        let parsed: LexiconFile = serde_json::from_str(&text).map_err(|e| LexiconError::Format {
            path: path.to_owned(),
            reason: e.to_string(),
        })?;
        let (failure, partial) = match parsed {
            LexiconFile::Failure(f) => (Some(f), None),
            LexiconFile::Both { failure, partial } => (failure, partial),
        };
        let defaults = Self::default();
        let mut lex = Self::new(&failure.unwrap_or_default(), &partial.unwrap_or_default());
        if lex.failure.is_empty() {
            lex.failure = defaults.failure;
        }
        if lex.partial.is_empty() {
            lex.partial = defaults.partial;
        }
        Ok(lex)
    }

    fn first_hit<'a>(phrases: &'a [String], haystacks: &[String]) -> Option<&'a str> {
        phrases
            .iter()
            .find(|p| haystacks.iter().any(|h| h.contains(p.as_str())))
            .map(String::as_str)
    }
}

/// Normalized text fragments the lexicons are matched against: the raw text,
/// or every JSON string leaf (never object keys).
fn searchable_text(response: &ToolResponse) -> Vec<String> {
    if !response.is_json {
        return vec![normalize(&response.body_text())];
    }
    let mut out = Vec::new();
    collect_strings(&response.body, &mut out);
    out
}

fn collect_strings(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::String(s) => out.push(normalize(s)),
        Value::Array(a) => a.iter().for_each(|x| collect_strings(x, out)),
        Value::Object(m) => m.values().for_each(|x| collect_strings(x, out)),
        _ => {}
    }
}

fn is_empty_body(response: &ToolResponse) -> bool {
    match &response.body {
        Value::Null => true,
        Value::String(s) => s.trim().is_empty(),
        Value::Array(a) => a.is_empty(),
        Value::Object(m) => m.is_empty(),
        _ => false,
    }
}

/// Content that signals an error: not null, `false`, or an empty
/// string/array/object.
fn has_error_content(v: &Value) -> bool {
    match v {
        Value::Null | Value::Bool(false) => false,
        Value::String(s) => !s.trim().is_empty(),
        Value::Array(a) => !a.is_empty(),
        Value::Object(m) => !m.is_empty(),
        _ => true,
    }
}

/// Whether anything beyond the partial markers themselves came back.
fn has_data(response: &ToolResponse, markers: &[String]) -> bool {
    fn any_data(v: &Value, markers: &[String]) -> bool {
        match v {
            Value::Array(a) => a.iter().any(|x| any_data(x, markers)),
            Value::Object(m) => m.values().any(|x| any_data(x, markers)),
            Value::String(s) => {
                let n = normalize(s);
                !n.is_empty() && !markers.iter().any(|m| n.contains(m.as_str()))
            }
            Value::Number(_) => true,
            Value::Bool(_) | Value::Null => false,
        }
    }
    if response.is_json {
        return any_data(&response.body, markers);
    }
    let mut text = normalize(&response.body_text());
    for m in markers {
        text = text.replace(m.as_str(), " ");
    }
    text.chars().any(char::is_alphanumeric)
}

fn rule(outcome: ReviewOutcome, id: &str, rationale: String) -> ReviewResult {
    ReviewResult {
        outcome,
        rationale,
        matched_rule: Some(id.to_owned()),
    }
}

/// First-match-wins cascade:
///
/// | rule | condition | outcome |
/// |------|-----------|---------|
/// | R0 | status 4xx or ≥ 500 | NOT_ACCOMPLISHED |
/// | R1 | empty or whitespace body, `{}` or `[]` | NOT_ACCOMPLISHED |
/// | R2 | failure phrase in text or a JSON string value | NOT_ACCOMPLISHED |
/// | R3 | top-level `error`/`errors` with content | NOT_ACCOMPLISHED |
/// | R4 | partial marker alongside other data | PARTIALLY_ACCOMPLISHED |
/// | R5 | otherwise | ACCOMPLISHED |
pub fn review_heuristic(input: &ReviewInput, lexicon: &Lexicon) -> ReviewResult {
    let response = &input.tool_response;
    if let Some(status) = response.status_code.filter(|s| *s >= 400) {
        return rule(
            ReviewOutcome::NotAccomplished,
            "R0",
            format!("the tool returned HTTP status {status}"),
        );
    }
    if is_empty_body(response) {
        return rule(ReviewOutcome::NotAccomplished, "R1", "the tool returned an empty body".into());
    }
    let texts = searchable_text(response);
    if let Some(hit) = Lexicon::first_hit(&lexicon.failure, &texts) {
        return rule(
            ReviewOutcome::NotAccomplished,
            "R2",
            format!("the response says {hit:?}"),
        );
    }
    if let (true, Value::Object(m)) = (response.is_json, &response.body) {
        if let Some((key, _)) = m.iter().find(|(k, v)| matches!(k.as_str(), "error" | "errors") && has_error_content(v)) {
            return rule(
                ReviewOutcome::NotAccomplished,
                "R3",
                format!("the response carries a top-level {key:?} field"),
            );
        }
    }
    if let Some(marker) = Lexicon::first_hit(&lexicon.partial, &texts) {
        if has_data(response, &lexicon.partial) {
            return rule(
                ReviewOutcome::PartiallyAccomplished,
                "R4",
                format!("the response returned data but is marked {marker:?}"),
            );
        }
    }
    rule(ReviewOutcome::Accomplished, "R5", "no failure signal found".into())
}

pub const REVIEW_PROMPT_VERSION: &str = "silent-review/1";

pub const REVIEW_SYSTEM_PROMPT: &str = "\
You check whether a tool call actually accomplished what the user asked. \
A response can arrive with a success status and still be a failure: a maintenance page, an empty result, an error message in the body. \
Answer with exactly one label, a colon, and one sentence of rationale. Labels: \
ACCOMPLISHED, PARTIALLY_ACCOMPLISHED, NOT_ACCOMPLISHED.";

/// Parses `LABEL: rationale`. Labels may use spaces or underscores and any
/// case; decoration such as quotes or asterisks is ignored.
pub fn parse_review_label(text: &str) -> Option<(ReviewOutcome, String)> {
    let line = text.lines().map(str::trim).find(|l| !l.is_empty())?;
    let line = line.trim_start_matches(|c: char| !c.is_alphanumeric());
    let upper: String = line
        .chars()
        .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_uppercase() })
        .collect();
    let (outcome, label_len) = [
        (ReviewOutcome::NotAccomplished, "NOT_ACCOMPLISHED"),
        (ReviewOutcome::PartiallyAccomplished, "PARTIALLY_ACCOMPLISHED"),
        (ReviewOutcome::Accomplished, "ACCOMPLISHED"),
    ]
    .into_iter()
    .find(|(_, label)| upper.starts_with(label))
    .map(|(o, label)| (o, label.len()))?;
    // Label characters are ASCII, so byte offsets line up with `line`.
    let rest = &line[label_len..];
    if rest.starts_with(|c: char| c.is_alphanumeric() || c == '_') {
        return None;
    }
    let rationale = rest
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .trim()
        .to_owned();
    Some((outcome, rationale))
}

/// Shrinks `body` until its serialization fits `budget` bytes: long arrays
/// keep a prefix plus an elision note, long strings are clipped.
pub fn truncate_structurally(body: &Value, budget: usize) -> String {
    let full = body.to_string();
    if full.len() <= budget {
        return full;
    }
    for (keep, clip) in [(20, 400), (5, 200), (2, 80), (1, 40)] {
        let s = shrink(body, keep, clip).to_string();
        if s.len() <= budget {
            return s;
        }
    }
    let s = shrink(body, 1, 40).to_string();
    format!("{}...[truncated]", truncate_utf8(&s, budget.saturating_sub(15)))
}

fn shrink(v: &Value, keep: usize, clip: usize) -> Value {
    match v {
        Value::Array(a) => {
            let mut out: Vec<Value> = a.iter().take(keep).map(|x| shrink(x, keep, clip)).collect();
            if a.len() > keep {
                out.push(Value::String(format!("... {} more items", a.len() - keep)));
            }
            Value::Array(out)
        }
        Value::Object(m) => Value::Object(m.iter().map(|(k, x)| (k.clone(), shrink(x, keep, clip))).collect()),
        Value::String(s) if s.len() > clip => Value::String(format!("{}...", truncate_utf8(s, clip))),
        other => other.clone(),
    }
}

pub fn review_prompt(input: &ReviewInput, budget: usize) -> JudgeRequest {
    let mut user = format!(
        "User request: {}\n",
        input.latest_user_message().unwrap_or("(none)")
    );
    let tool = input
        .tool_spec
        .as_ref()
        .map(|s| s.name.as_str())
        .or_else(|| input.tool_name())
        .unwrap_or("(unknown)");
    user.push_str(&format!("Tool: {tool}\n"));
    if let Some(spec) = &input.tool_spec {
        user.push_str(&format!("Tool description: {}\n", spec.description));
    }
    if let Some(status) = input.tool_response.status_code {
        user.push_str(&format!("Status: {status}\n"));
    }
    let room = budget.saturating_sub(REVIEW_SYSTEM_PROMPT.len() + user.len() + 32);
    let body = if input.tool_response.is_json {
        truncate_structurally(&input.tool_response.body, room)
    } else {
        let text = input.tool_response.body_text();
        truncate_utf8(&text, room).to_owned()
    };
    user.push_str("Response body:\n");
    user.push_str(&body);
    JudgeRequest::bounded(REVIEW_SYSTEM_PROMPT, &user, 128, budget)
}

/// Judge-backed review. Never fails: an unreachable judge or an off-script
/// answer yields the heuristic verdict instead.
pub fn review_with_judge(input: &ReviewInput, judge: &dyn JudgeClient, lexicon: &Lexicon, budget: usize) -> ReviewResult {
    let request = review_prompt(input, budget);
    match judge.complete(&request) {
        Ok(reply) => match parse_review_label(&reply.text) {
            Some((outcome, rationale)) => {
                let rationale = if rationale.is_empty() && outcome != ReviewOutcome::Accomplished {
                    format!("judge labelled the response {outcome} without a rationale")
                } else {
                    rationale
                };
                ReviewResult {
                    outcome,
                    rationale,
                    matched_rule: None,
                }
            }
            None => {
                tracing::warn!(reply = %truncate_utf8(&reply.text, 200), "unparseable review verdict; using heuristic");
                review_heuristic(input, lexicon)
            }
        },
        Err(e) => {
            tracing::warn!(error = %e, "review judge unavailable; using heuristic");
            review_heuristic(input, lexicon)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewBackend {
    #[default]
    Heuristic,
    Judge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReviewConfig {
    pub backend: ReviewBackend,
    pub lexicon_file: Option<PathBuf>,
    pub prompt_budget_bytes: usize,
}

impl Default for ReviewConfig {
    fn default() -> Self {
        Self {
            backend: ReviewBackend::Heuristic,
            lexicon_file: None,
            prompt_budget_bytes: DEFAULT_PROMPT_BUDGET,
        }
    }
}

pub struct SilentReviewComponent {
    judge: Option<Arc<dyn JudgeClient>>,
    lexicon: Lexicon,
    config: ReviewConfig,
}

impl SilentReviewComponent {
    /// Loads the configured lexicon. The judge is used only when the backend
    /// is `judge`.
    pub fn new(judge: Option<Arc<dyn JudgeClient>>, config: ReviewConfig) -> Result<Self, LexiconError> {
        let lexicon = match &config.lexicon_file {
            Some(p) => Lexicon::from_file(p)?,
            None => Lexicon::default(),
        };
        Ok(Self { judge, lexicon, config })
    }

    pub fn review(&self, input: &ReviewInput) -> ReviewResult {
        match (self.config.backend, &self.judge) {
            (ReviewBackend::Judge, Some(j)) => {
                review_with_judge(input, j.as_ref(), &self.lexicon, self.config.prompt_budget_bytes)
            }
            _ => review_heuristic(input, &self.lexicon),
        }
    }
}

impl Component for SilentReviewComponent {
    type Input = ReviewInput;

    fn id(&self) -> &'static str {
        "silent_review"
    }

    fn stage(&self) -> LifecycleStage {
        LifecycleStage::PostTool
    }

    /// NOT_ACCOMPLISHED fails with the rationale as feedback; the other two
    /// labels pass, with the verdict in the payload.
    fn process(&self, input: &ReviewInput, phase: AgentPhase) -> Result<ComponentResult, ComponentError> {
        self.check_phase(phase)?;
        input.check()?;
        let result = self.review(input);
        let payload = json!(result);
        Ok(match result.outcome {
            ReviewOutcome::NotAccomplished => ComponentResult::fail(
                payload,
                format!("The tool call did not accomplish the request: {}.", result.rationale),
            ),
            _ => ComponentResult::pass(payload),
        })
    }
}
