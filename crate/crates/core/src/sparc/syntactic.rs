use crate::model::{ToolCall, ToolRegistry, ToolSpec};
use crate::schema::{validate, SchemaNode, SchemaViolation, ViolationCategory};
use serde_json::Value;

use super::{IssueCategory, ValidationIssue};

/// Rule-based checks: the tool exists and its arguments conform to the
/// parameter schema. Deterministic.
pub fn validate_syntactic(call: &ToolCall, registry: &ToolRegistry) -> Vec<ValidationIssue> {
    match registry.get(&call.tool_name) {
        None => vec![nonexistent_tool(call, registry)],
        Some(spec) => argument_issues(&call.arguments, spec),
    }
}

pub(crate) fn argument_issues(arguments: &serde_json::Map<String, Value>, spec: &ToolSpec) -> Vec<ValidationIssue> {
    let args = Value::Object(arguments.clone());
    validate(&args, &spec.parameters)
        .into_iter()
        .map(|v| violation_issue(&v, &spec.parameters))
        .collect()
}

fn nonexistent_tool(call: &ToolCall, registry: &ToolRegistry) -> ValidationIssue {
    let names: Vec<&str> = registry.names().collect();
    let evidence = format!(
        "tool \"{}\" is not registered; registered tools: [{}]",
        call.tool_name,
        names.join(", ")
    );
    let suggestion = match nearest(&call.tool_name, names.iter().copied()) {
        Some(best) => format!("Did you mean \"{best}\"? Call \"{best}\" instead."),
        None => "No tools are registered; answer without calling a tool.".to_owned(),
    };
    ValidationIssue::new(IssueCategory::NonexistentTool, "", evidence, suggestion)
}

/// Closest candidate by Levenshtein distance, ties broken by name order.
pub(crate) fn nearest<'a>(target: &str, candidates: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    candidates.min_by(|a, b| {
        strsim::levenshtein(target, a)
            .cmp(&strsim::levenshtein(target, b))
            .then_with(|| a.cmp(b))
    })
}

fn describe_node(node: &SchemaNode) -> String {
    let mut s = node.kind.as_str().to_owned();
    if node.format != crate::schema::Format::None {
        s.push_str(&format!(" in {} format", node.format.as_str()));
    }
    if let Some(values) = &node.enum_values {
        s.push_str(&format!(" (one of {})", Value::Array(values.clone())));
    }
    if let Some(d) = node.description.as_deref().filter(|d| !d.is_empty()) {
        s.push_str(&format!(" - {d}"));
    }
    s
}

fn field_name(path: &str) -> &str {
    path.rsplit('/').next().unwrap_or(path)
}

fn violation_issue(v: &SchemaViolation, schema: &SchemaNode) -> ValidationIssue {
    let node = schema.lookup(&v.path);
    match v.category {
        ViolationCategory::MissingRequired => {
            let name = field_name(&v.path);
            let kind = node.map_or_else(|| v.expected.clone(), describe_node);
            ValidationIssue::new(
                IssueCategory::MissingRequired,
                &v.path,
                format!("required parameter \"{name}\" is absent from the arguments"),
                format!("Add the required parameter \"{name}\" as a {kind}."),
            )
        }
        ViolationCategory::UnknownArgument => {
            let parent = v.path.rsplit_once('/').map_or("", |(p, _)| p);
            let declared = schema
                .lookup(parent)
                .map(|n| n.properties.keys().map(String::as_str).collect::<Vec<_>>())
                .unwrap_or_default();
            let close = nearest(&v.actual, declared.iter().copied())
                .filter(|best| strsim::levenshtein(&v.actual, best) <= 2);
            let suggestion = match close {
                Some(best) => format!("Remove \"{}\"; did you mean \"{best}\"?", v.actual),
                None => format!(
                    "Remove \"{}\"; the tool accepts only [{}].",
                    v.actual,
                    declared.join(", ")
                ),
            };
            ValidationIssue::new(
                IssueCategory::UnknownArgument,
                &v.path,
                format!("argument \"{}\" is not declared by the tool schema", v.actual),
                suggestion,
            )
        }
        ViolationCategory::TypeMismatch => {
            let kind = node.map_or_else(|| v.expected.clone(), describe_node);
            ValidationIssue::new(
                IssueCategory::TypeMismatch,
                &v.path,
                format!("expected {} at {}, got {}", v.expected, display(&v.path), v.actual),
                format!("Pass a {kind} at {}.", display(&v.path)),
            )
        }
        ViolationCategory::EnumMismatch => ValidationIssue::new(
            IssueCategory::SchemaViolation,
            &v.path,
            format!("value {} at {} is not allowed", v.actual, display(&v.path)),
            format!("Use {} at {}.", v.expected, display(&v.path)),
        ),
        ViolationCategory::FormatMismatch => ValidationIssue::new(
            IssueCategory::SchemaViolation,
            &v.path,
            format!("value {} at {} does not match the declared format", v.actual, display(&v.path)),
            format!("Format the value at {} as {}.", display(&v.path), v.expected),
        ),
    }
}

fn display(path: &str) -> &str {
    if path.is_empty() {
        "/"
    } else {
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ToolRegistry;
    use serde_json::json;

    fn registry() -> ToolRegistry {
        ToolRegistry::from_json(&json!({
            "book_flight": {
                "description": "Book a flight",
                "parameters": {
                    "type": "object",
                    "properties": {
                        "origin": {"type": "string"},
                        "date": {"type": "string", "format": "date"}
                    },
                    "required": ["origin", "date"]
                }
            },
            "cancel": {"description": "", "parameters": {"type": "object", "properties": {}}}
        }))
        .unwrap()
    }

    fn call(name: &str, args: Value) -> ToolCall {
        ToolCall::new("c1", name, args.as_object().unwrap().clone())
    }

    #[test]
    fn typo_in_tool_name() {
        let issues = validate_syntactic(&call("book_flihgt", json!({})), &registry());
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].category, IssueCategory::NonexistentTool);
        assert!(issues[0].suggestion.contains("\"book_flight\""));
        assert_eq!(issues[0].path, "");
    }

    #[test]
    fn conforming_call() {
        let issues = validate_syntactic(&call("book_flight", json!({"origin":"SFO","date":"2026-03-13"})), &registry());
        assert!(issues.is_empty());
    }

    #[test]
    fn missing_date_names_field_and_kind() {
        let issues = validate_syntactic(&call("book_flight", json!({"origin":"SFO"})), &registry());
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].category, IssueCategory::MissingRequired);
        assert_eq!(issues[0].path, "/date");
        assert!(issues[0].suggestion.contains("\"date\""));
        assert!(issues[0].suggestion.contains("string"));
    }

    #[test]
    fn unknown_argument_suggests_close_name() {
        let issues = validate_syntactic(
            &call("book_flight", json!({"origin":"SFO","date":"2026-03-13","orign":"x"})),
            &registry(),
        );
        assert_eq!(issues[0].category, IssueCategory::UnknownArgument);
        assert!(issues[0].suggestion.contains("did you mean \"origin\""));
    }
}
