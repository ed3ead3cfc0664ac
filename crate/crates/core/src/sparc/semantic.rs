//! Semantic checks. With a judge, one prompt per dimension; without one, a
//! deterministic grounding check over the conversation.

use serde_json::{Map, Value};

use crate::judge::{JudgeClient, JudgeError, JudgeRequest};
use crate::model::{Message, Role, ToolCall, ToolSpec};
use crate::schema::{child_path, SchemaKind, SchemaNode};
use crate::text::{normalize, numbers_in};

use super::{IssueCategory, ValidationIssue};

/// A judge-checked aspect of a tool call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimension {
    pub name: &'static str,
    pub category: IssueCategory,
    pub question: &'static str,
}

pub const DIMENSIONS: [Dimension; 5] = [
    Dimension {
        name: "function_selection",
        category: IssueCategory::WrongFunctionSelection,
        question: "Is this tool the appropriate one for what the user asked, given the available tool description?",
    },
    Dimension {
        name: "parameter_grounding",
        category: IssueCategory::UngroundedParameter,
        question: "Is every argument value supported by something the user said or a prior tool result?",
    },
    Dimension {
        name: "hallucinated_values",
        category: IssueCategory::HallucinatedValue,
        question: "Does any argument contain an invented value that appears nowhere in the conversation?",
    },
    Dimension {
        name: "value_format",
        category: IssueCategory::ValueFormatMisaligned,
        question: "Is each argument value expressed in the format and units the parameter description asks for?",
    },
    Dimension {
        name: "prerequisites",
        category: IssueCategory::UnmetPrerequisite,
        question: "Per the tool description, must other tool calls precede this one, and are any of them missing from the conversation?",
    },
];

pub const SEMANTIC_PROMPT_VERSION: &str = "sparc-semantic/1";

const SYSTEM_PROMPT: &str = "You review a single tool call an AI agent wants to make. \
Answer only with JSON: {\"ok\": true} when the call is fine for the question asked, or \
{\"ok\": false, \"issues\": [{\"path\": \"/arg\", \"evidence\": \"...\", \"suggestion\": \"...\"}]} \
where path is a JSON pointer into the arguments (empty for the whole call), evidence quotes \
the conversation or tool description, and suggestion is a concrete correction.";

/// Semantic validation of a syntactically valid call.
pub fn validate_semantic(
    call: &ToolCall,
    spec: &ToolSpec,
    history: &[Message],
    judge: Option<&dyn JudgeClient>,
    prompt_budget: usize,
) -> Result<Vec<ValidationIssue>, JudgeError> {
    match judge {
        Some(j) => judge_dimensions(call, spec, history, j, prompt_budget),
        None => Ok(grounding_fallback(&call.arguments, None, spec, history)),
    }
}

/// Renders the user prompt for one dimension.
pub fn dimension_prompt(dim: &Dimension, call: &ToolCall, spec: &ToolSpec, history: &[Message]) -> String {
    let mut convo = String::new();
    for m in history {
        if m.role == Role::System {
            continue;
        }
        convo.push_str(&format!("{}: {}\n", m.role, m.content));
        for tc in &m.tool_calls {
            convo.push_str(&format!(
                "  -> called {} {}\n",
                tc.tool_name,
                Value::Object(tc.arguments.clone())
            ));
        }
    }
    format!(
        "[{SEMANTIC_PROMPT_VERSION} dimension={name}]\nQuestion: {q}\n\nTool: {tool}\nDescription: {desc}\nParameters schema: {params}\n\nCandidate arguments: {args}\n\nConversation so far:\n{convo}",
        name = dim.name,
        q = dim.question,
        tool = spec.name,
        desc = spec.description,
        params = spec.parameters.to_json(),
        args = Value::Object(call.arguments.clone()),
    )
}

fn judge_dimensions(
    call: &ToolCall,
    spec: &ToolSpec,
    history: &[Message],
    judge: &dyn JudgeClient,
    prompt_budget: usize,
) -> Result<Vec<ValidationIssue>, JudgeError> {
    let mut issues = Vec::new();
    for dim in &DIMENSIONS {
        let user = dimension_prompt(dim, call, spec, history);
        let request = JudgeRequest::bounded(SYSTEM_PROMPT, &user, 512, prompt_budget);
        let reply = judge.complete(&request)?;
        let parsed = parse_judge_verdict(&reply.text, dim.category).ok_or_else(|| JudgeError::Unavailable {
            attempts: 1,
            last_error: format!("unparseable {} verdict: {:?}", dim.name, crate::judge::truncate_utf8(&reply.text, 120)),
        })?;
        issues.extend(parsed);
    }
    Ok(issues)
}

/// Parses a judge verdict. Accepts the JSON shape from the system prompt, or
/// plain `PASS` / `OK` / `FAIL: <reason>` lines. `None` when unrecognizable.
pub fn parse_judge_verdict(text: &str, category: IssueCategory) -> Option<Vec<ValidationIssue>> {
    let body = strip_fences(text.trim());
    if let Ok(v) = serde_json::from_str::<Value>(body) {
        let ok = v.get("ok")?.as_bool()?;
        if ok {
            return Some(Vec::new());
        }
        let mut issues = Vec::new();
        for raw in v.get("issues").and_then(Value::as_array).into_iter().flatten() {
            let field = |k: &str| raw.get(k).and_then(Value::as_str).unwrap_or_default().to_owned();
            issues.push(ValidationIssue::new(category, &field("path"), field("evidence"), field("suggestion")));
        }
        if issues.is_empty() {
            issues.push(ValidationIssue::new(category, "", "judge rejected the call without details", ""));
        }
        return Some(issues);
    }
    let upper = body.to_ascii_uppercase();
    if upper == "PASS" || upper == "OK" || upper.starts_with("PASS:") || upper.starts_with("OK:") {
        return Some(Vec::new());
    }
    if upper.starts_with("FAIL") {
        let reason = body[4..].trim_start_matches([':', ' ', '-']).trim();
        return Some(vec![ValidationIssue::new(category, "", reason, "")]);
    }
    None
}

fn strip_fences(s: &str) -> &str {
    let s = s.trim();
    let Some(rest) = s.strip_prefix("```") else {
        return s;
    };
    let rest = rest.split_once('\n').map_or(rest, |(_, r)| r);
    rest.trim_end().strip_suffix("```").unwrap_or(rest).trim()
}

/// Deterministic grounding: every string or number leaf must appear in the
/// user/tool messages (normalized), or be an enum member of its schema node.
/// `originals` holds pre-repair arguments; a repaired value is grounded when
/// either form is.
pub(crate) fn grounding_fallback(
    arguments: &Map<String, Value>,
    originals: Option<&Map<String, Value>>,
    spec: &ToolSpec,
    history: &[Message],
) -> Vec<ValidationIssue> {
    let raw_context: String = history
        .iter()
        .filter(|m| matches!(m.role, Role::User | Role::Tool))
        .map(|m| m.content.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let ctx = GroundingContext {
        text: normalize(&raw_context),
        numbers: numbers_in(&raw_context),
        dates: super::transform::dates_in(&raw_context),
    };
    let mut issues = Vec::new();
    let root = Value::Object(arguments.clone());
    let original_root = originals.map(|o| Value::Object(o.clone()));
    check_leaves(&root, Some(&spec.parameters), "", &ctx, original_root.as_ref(), &mut issues);
    issues
}

struct GroundingContext {
    text: String,
    numbers: Vec<f64>,
    /// ISO forms of date phrases in the context.
    dates: Vec<String>,
}

impl GroundingContext {
    fn grounds(&self, value: &Value) -> bool {
        match value {
            Value::String(s) => self.text.contains(&normalize(s)) || self.dates.iter().any(|d| d == s),
            Value::Number(n) => {
                let Some(x) = n.as_f64() else { return false };
                self.numbers.iter().any(|y| (x - y).abs() <= 1e-9 * x.abs().max(1.0))
                    || self.text.contains(&normalize(&n.to_string()))
            }
            _ => true,
        }
    }
}

fn enum_member(node: Option<&SchemaNode>, value: &Value) -> bool {
    let Some(values) = node.and_then(|n| n.enum_values.as_ref()) else {
        return false;
    };
    match value {
        Value::String(s) => {
            let s = normalize(s);
            values.iter().any(|e| e.as_str().is_some_and(|e| normalize(e) == s))
        }
        v => values.iter().any(|e| crate::schema::json_eq(e, v)),
    }
}

fn check_leaves(
    value: &Value,
    node: Option<&SchemaNode>,
    path: &str,
    ctx: &GroundingContext,
    originals: Option<&Value>,
    issues: &mut Vec<ValidationIssue>,
) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let sub = node.filter(|n| n.kind == SchemaKind::Object).and_then(|n| n.properties.get(k));
                check_leaves(v, sub, &child_path(path, k), ctx, originals, issues);
            }
        }
        Value::Array(items) => {
            let sub = node.filter(|n| n.kind == SchemaKind::Array).and_then(|n| n.items.as_deref());
            for (i, v) in items.iter().enumerate() {
                check_leaves(v, sub, &child_path(path, &i.to_string()), ctx, originals, issues);
            }
        }
        Value::String(_) | Value::Number(_) => {
            if ctx.grounds(value) || enum_member(node, value) {
                return;
            }
            let original = originals.and_then(|o| o.pointer(path)).filter(|o| *o != value);
            if original.is_some_and(|o| ctx.grounds(o) || enum_member(node, o)) {
                return;
            }
            issues.push(ValidationIssue::new(
                IssueCategory::HallucinatedValue,
                path,
                format!("value {value} at {path} does not appear in the user or tool messages and is not an allowed enum value"),
                format!("Use a value for {path} that the user stated or a tool returned, or ask the user for it."),
            ));
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::MockJudge;
    use crate::model::ToolRegistry;
    use serde_json::json;

    fn spec() -> ToolSpec {
        ToolRegistry::from_json(&json!({
            "search": {"description": "Search flights", "parameters": {"type":"object","properties":{
                "city": {"type":"string"},
                "class": {"type":"string","enum":["economy","business"]},
                "seats": {"type":"integer"}
            }}}
        }))
        .unwrap()
        .get("search")
        .unwrap()
        .clone()
    }

    fn call(args: Value) -> ToolCall {
        ToolCall::new("c", "search", args.as_object().unwrap().clone())
    }

    fn no_judge(args: Value, history: &[Message]) -> Vec<ValidationIssue> {
        validate_semantic(&call(args), &spec(), history, None, 4096).unwrap()
    }

    #[test]
    fn grounded_city() {
        assert!(no_judge(json!({"city":"Paris"}), &[Message::user("I want to fly to Paris")]).is_empty());
    }

    #[test]
    fn hallucinated_city() {
        let issues = no_judge(json!({"city":"Rome"}), &[Message::user("I want to fly to Paris")]);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].category, IssueCategory::HallucinatedValue);
        assert_eq!(issues[0].path, "/city");
        assert!(issues[0].evidence.contains("Rome"));
    }

    #[test]
    fn enum_member_is_exempt() {
        assert!(no_judge(json!({"class":"business"}), &[Message::user("a flight please")]).is_empty());
    }

    #[test]
    fn numbers_compare_numerically() {
        let h = [Message::user("two adults, so 2 seats, total $1,200.00")];
        assert!(no_judge(json!({"seats": 2}), &h).is_empty());
        assert!(no_judge(json!({"seats": 1200}), &h).is_empty());
        assert_eq!(no_judge(json!({"seats": 3}), &h).len(), 1);
    }

    #[test]
    fn iso_date_grounded_by_prose_date() {
        let h = [Message::user("leaving March 13, 2026")];
        assert!(no_judge(json!({"city":"2026-03-13"}), &h).is_empty());
    }

    #[test]
    fn assistant_text_does_not_ground() {
        let h = [Message::user("hi"), Message::assistant("maybe Rome?", vec![])];
        assert_eq!(no_judge(json!({"city":"Rome"}), &h).len(), 1);
    }

    #[test]
    fn judge_one_call_per_dimension() {
        let judge = MockJudge::replies(["PASS", "{\"ok\":true}", "FAIL: city never mentioned", "OK", "```json\n{\"ok\":false,\"issues\":[{\"path\":\"/city\",\"evidence\":\"e\",\"suggestion\":\"s\"}]}\n```"]);
        let issues = validate_semantic(&call(json!({"city":"Rome"})), &spec(), &[Message::user("x")], Some(&judge), 8192).unwrap();
        assert_eq!(judge.call_count(), 5);
        assert_eq!(issues.len(), 2);
        assert_eq!(issues[0].category, IssueCategory::HallucinatedValue);
        assert_eq!(issues[1].category, IssueCategory::UnmetPrerequisite);
        assert!(issues.iter().all(|i| !i.suggestion.is_empty()));
        assert!(judge.transcript().iter().all(|c| c.request.temperature == 0.0));
    }

    #[test]
    fn garbage_verdict_is_an_error() {
        let judge = MockJudge::replies(["¯\\_(ツ)_/¯"]);
        assert!(validate_semantic(&call(json!({})), &spec(), &[], Some(&judge), 8192).is_err());
    }
}
