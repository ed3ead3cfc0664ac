//! Trajectory data model shared by every component.
//!
//! A trajectory is a list of [`Message`]s. On disk it is JSONL: one message
//! object per line, UTF-8, `\n`-separated. Field names match the struct
//! fields below; `tool_calls`, `tool_call_id` and `timestamp` may be omitted.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::schema::{parse_schema, SchemaKind, SchemaNode, SchemaParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
    Tool,
    System,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
            Role::System => "system",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub tool_name: String,
    /// Always a JSON object; an empty object is allowed.
    #[serde(default)]
    pub arguments: Map<String, Value>,
}

impl ToolCall {
    pub fn new(id: impl Into<String>, tool_name: impl Into<String>, arguments: Map<String, Value>) -> Self {
        Self {
            id: id.into(),
            tool_name: tool_name.into(),
            arguments,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    #[serde(default)]
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("tool_calls are only allowed on assistant messages (role is {0})")]
    ToolCallsOnNonAssistant(Role),
    #[error("tool messages must carry a tool_call_id")]
    MissingToolCallId,
    #[error("tool_call_id is only allowed on tool messages (role is {0})")]
    UnexpectedToolCallId(Role),
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self::plain(Role::User, content)
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::plain(Role::System, content)
    }

    pub fn assistant(content: impl Into<String>, tool_calls: Vec<ToolCall>) -> Self {
        Self {
            tool_calls,
            ..Self::plain(Role::Assistant, content)
        }
    }

    pub fn tool(tool_call_id: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            tool_call_id: Some(tool_call_id.into()),
            ..Self::plain(Role::Tool, content)
        }
    }

    fn plain(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            tool_calls: Vec::new(),
            tool_call_id: None,
            timestamp: None,
        }
    }

    /// Checks the role-dependent field invariants.
    pub fn check(&self) -> Result<(), MessageError> {
        if !self.tool_calls.is_empty() && self.role != Role::Assistant {
            return Err(MessageError::ToolCallsOnNonAssistant(self.role));
        }
        match (self.role, &self.tool_call_id) {
            (Role::Tool, None) => Err(MessageError::MissingToolCallId),
            (Role::Tool, Some(_)) | (_, None) => Ok(()),
            (role, Some(_)) => Err(MessageError::UnexpectedToolCallId(role)),
        }
    }
}

/// A tool's answer. `body` holds parsed JSON when `is_json` is set, otherwise
/// the raw text as a JSON string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResponse {
    pub tool_call_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status_code: Option<u16>,
    pub body: Value,
    pub is_json: bool,
}

impl Default for ToolResponse {
    fn default() -> Self {
        Self {
            tool_call_id: String::new(),
            status_code: None,
            body: Value::Null,
            is_json: true,
        }
    }
}

impl ToolResponse {
    /// Builds a response from raw body text, parsing it as JSON when possible.
    pub fn from_text(tool_call_id: impl Into<String>, status_code: Option<u16>, text: &str) -> Self {
        let (body, is_json) = match serde_json::from_str::<Value>(text) {
            Ok(v) => (v, true),
            Err(_) => (Value::String(text.to_owned()), false),
        };
        Self {
            tool_call_id: tool_call_id.into(),
            status_code,
            body,
            is_json,
        }
    }

    pub fn from_json(tool_call_id: impl Into<String>, status_code: Option<u16>, body: Value) -> Self {
        Self {
            tool_call_id: tool_call_id.into(),
            status_code,
            body,
            is_json: true,
        }
    }

    /// The body as text: the raw text, or the compact JSON serialization.
    pub fn body_text(&self) -> String {
        match (&self.body, self.is_json) {
            (Value::String(s), false) => s.clone(),
            (v, _) => v.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub parameters: SchemaNode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response_schema: Option<SchemaNode>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("tool registry must be a JSON object mapping tool name to spec")]
    NotAnObject,
    #[error("tool `{tool}`: {reason}")]
    BadEntry { tool: String, reason: String },
    #[error("tool `{tool}`: {source}")]
    Schema {
        tool: String,
        #[source]
        source: SchemaParseError,
    },
}

impl ToolSpec {
    /// Parses one registry entry: `{description, parameters, response_schema}`.
    pub fn from_entry(name: &str, entry: &Value) -> Result<Self, RegistryError> {
        let obj = entry.as_object().ok_or_else(|| RegistryError::BadEntry {
            tool: name.to_owned(),
            reason: "entry is not an object".into(),
        })?;
        if let Some(key) = obj
            .keys()
            .find(|k| !matches!(k.as_str(), "description" | "parameters" | "response_schema"))
        {
            return Err(RegistryError::BadEntry {
                tool: name.to_owned(),
                reason: format!("unknown key `{key}` (expected description, parameters, response_schema)"),
            });
        }
        let description = obj
            .get("description")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_owned();
        let schema_err = |source| RegistryError::Schema {
            tool: name.to_owned(),
            source,
        };
        let parameters = match obj.get("parameters") {
            Some(doc) => parse_schema(doc).map_err(schema_err)?.node,
            None => SchemaNode::empty_object(),
        };
        if parameters.kind != SchemaKind::Object {
            return Err(RegistryError::BadEntry {
                tool: name.to_owned(),
                reason: format!("parameters must be an object schema, got {}", parameters.kind),
            });
        }
        let response_schema = match obj.get("response_schema") {
            Some(Value::Null) | None => None,
            Some(doc) => Some(parse_schema(doc).map_err(schema_err)?.node),
        };
        Ok(Self {
            name: name.to_owned(),
            description,
            parameters,
            response_schema,
        })
    }
}

/// Tool specs keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ToolRegistry {
    tools: BTreeMap<String, ToolSpec>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_json(doc: &Value) -> Result<Self, RegistryError> {
        let obj = doc.as_object().ok_or(RegistryError::NotAnObject)?;
        let mut reg = Self::new();
        for (name, entry) in obj {
            reg.insert(ToolSpec::from_entry(name, entry)?);
        }
        Ok(reg)
    }

    /// Inserts a spec, replacing any previous spec of the same name.
    pub fn insert(&mut self, spec: ToolSpec) -> Option<ToolSpec> {
        self.tools.insert(spec.name.clone(), spec)
    }

    pub fn get(&self, name: &str) -> Option<&ToolSpec> {
        self.tools.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tools.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tools.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ToolSpec> {
        self.tools.values()
    }

    pub fn len(&self) -> usize {
        self.tools.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tools.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AgentPhase {
    Buildtime,
    Runtime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LifecycleStage {
    BuildTime,
    PreLlm,
    PostLlm,
    PreTool,
    PostTool,
    PreResponse,
}

/// One parsed trajectory plus the lines that failed to parse.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub messages: Vec<Message>,
    /// 1-based line numbers of the parsed messages, parallel to `messages`.
    pub line_numbers: Vec<usize>,
    pub diagnostics: Vec<LineDiagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineDiagnostic {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LineDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("no trajectory line parsed ({} diagnostics)", diagnostics.len())]
pub struct TrajectoryParseError {
    pub diagnostics: Vec<LineDiagnostic>,
}

/// Parses a JSONL trajectory. Bad lines become diagnostics; the call fails
/// only when there were lines and none of them parsed.
pub fn parse_trajectory(text: &str) -> Result<Trajectory, TrajectoryParseError> {
    let mut out = Trajectory::default();
    for (idx, line) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Value>(line)
            .map_err(|e| e.to_string())
            .and_then(|v| {
                if !v.is_object() {
                    return Err("line is not a JSON object".to_owned());
                }
                serde_json::from_value::<Message>(v).map_err(|e| e.to_string())
            })
            .and_then(|m| m.check().map(|_| m).map_err(|e| e.to_string()));
        match parsed {
            Ok(m) => {
                out.messages.push(m);
                out.line_numbers.push(line_no);
            }
            Err(message) => out.diagnostics.push(LineDiagnostic { line: line_no, message }),
        }
    }
    if out.messages.is_empty() && !out.diagnostics.is_empty() {
        return Err(TrajectoryParseError {
            diagnostics: out.diagnostics,
        });
    }
    Ok(out)
}

/// Serializes messages as JSONL, one line per message with a trailing newline.
pub fn serialize_trajectory(messages: &[Message]) -> String {
    let mut out = String::new();
    for m in messages {
        out.push_str(&serde_json::to_string(m).expect("message serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn two_valid_lines() {
        let text = "{\"role\":\"user\",\"content\":\"hi\"}\n{\"role\":\"assistant\",\"content\":\"hello\"}\n";
        let t = parse_trajectory(text).unwrap();
        assert_eq!(t.messages.len(), 2);
        assert!(t.diagnostics.is_empty());
    }

    #[test]
    fn empty_input() {
        let t = parse_trajectory("").unwrap();
        assert!(t.messages.is_empty());
        assert!(t.diagnostics.is_empty());
    }

    #[test]
    fn malformed_second_line() {
        let text = "{\"role\":\"user\",\"content\":\"hi\"}\n{not json\n";
        let t = parse_trajectory(text).unwrap();
        assert_eq!(t.messages.len(), 1);
        assert_eq!(t.diagnostics.len(), 1);
        assert_eq!(t.diagnostics[0].line, 2);
    }

    #[test]
    fn all_lines_bad_is_fatal() {
        let err = parse_trajectory("[1]\n42\n").unwrap_err();
        assert_eq!(err.diagnostics.len(), 2);
    }

    #[test]
    fn role_invariants_are_checked() {
        let bad = json!({"role":"user","content":"x","tool_calls":[{"id":"1","tool_name":"t","arguments":{}}]});
        let good = json!({"role":"user","content":"ok"});
        let text = format!("{bad}\n{good}\n{}\n", json!({"role":"tool","content":"x"}));
        let t = parse_trajectory(&text).unwrap();
        assert_eq!(t.messages.len(), 1);
        assert_eq!(t.line_numbers, vec![2]);
        assert_eq!(t.diagnostics.iter().map(|d| d.line).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn tool_call_arguments_must_be_object() {
        let line = json!({"role":"assistant","content":"","tool_calls":[{"id":"1","tool_name":"t","arguments":[1]}]});
        assert!(parse_trajectory(&line.to_string()).is_err());
    }

    #[test]
    fn response_from_text_detects_json() {
        assert!(ToolResponse::from_text("c", Some(200), "{\"a\":1}").is_json);
        let raw = ToolResponse::from_text("c", Some(200), "Service under maintenance");
        assert!(!raw.is_json);
        assert_eq!(raw.body_text(), "Service under maintenance");
    }

    #[test]
    fn registry_rejects_non_object_parameters() {
        let doc = json!({"t": {"description": "", "parameters": {"type": "string"}}});
        assert!(matches!(ToolRegistry::from_json(&doc), Err(RegistryError::BadEntry { .. })));
        let typo = json!({"t": {"description": "", "input_schema": {"type": "object"}}});
        assert!(matches!(ToolRegistry::from_json(&typo), Err(RegistryError::BadEntry { .. })));
    }
}
