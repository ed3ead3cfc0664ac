//! Loading of the files the subcommands consume.

use std::path::Path;

use agentguard_core::model::{parse_trajectory, ToolCall, ToolRegistry, Trajectory};
use serde_json::{Map, Value};

use crate::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Operational(format!("{}: invalid JSON: {e}", path.display())))
}

/// Accepts `{name: {description, parameters}}`, a `tools/list` result
/// (`{"tools": [...]}`) or a bare list of `{name, description, inputSchema}`.
pub fn registry_from_value(doc: &Value) -> Result<ToolRegistry, String> {
    let list = match doc {
        Value::Array(a) => Some(a),
        Value::Object(m) => m.get("tools").and_then(Value::as_array),
        _ => None,
    };
    let doc = match list {
        Some(tools) => {
            let mut m = Map::new();
            for t in tools {
                let name = t.get("name").and_then(Value::as_str).ok_or("tool entry without a name")?;
                let params = t.get("inputSchema").or_else(|| t.get("parameters")).cloned().unwrap_or(Value::Null);
                let mut entry = Map::new();
                entry.insert("description".into(), t.get("description").cloned().unwrap_or(Value::String(String::new())));
                if !params.is_null() {
                    entry.insert("parameters".into(), params);
                }
                m.insert(name.to_owned(), Value::Object(entry));
            }
            Value::Object(m)
        }
        None => doc.clone(),
    };
    ToolRegistry::from_json(&doc).map_err(|e| e.to_string())
}

pub fn registry(path: &Path) -> Result<ToolRegistry, CliError> {
    registry_from_value(&read_json(path)?).map_err(|e| CliError::Operational(format!("{}: {e}", path.display())))
}

/// Accepts `{tool_name|name, arguments, id?}`.
pub fn call_from_value(v: &Value) -> Result<ToolCall, String> {
    let obj = v.as_object().ok_or("tool call must be a JSON object")?;
    let name = obj
        .get("tool_name")
        .or_else(|| obj.get("name"))
        .and_then(Value::as_str)
        .ok_or("tool call needs `tool_name` (or `name`)")?;
    let arguments = match obj.get("arguments") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        // Some producers send arguments as an encoded string.
        Some(Value::String(s)) => match serde_json::from_str(s) {
            Ok(Value::Object(m)) => m,
            _ => return Err("`arguments` must be a JSON object".into()),
        },
        Some(_) => return Err("`arguments` must be a JSON object".into()),
    };
    let id = obj.get("id").and_then(Value::as_str).unwrap_or("call-1");
    Ok(ToolCall::new(id, name, arguments))
}

pub fn call(path: &Path) -> Result<ToolCall, CliError> {
    call_from_value(&read_json(path)?).map_err(|e| CliError::Operational(format!("{}: {e}", path.display())))
}

/// Parses a trajectory; bad lines are logged as warnings.
pub fn trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let traj = parse_trajectory(&read(path)?).map_err(|e| {
        for d in &e.diagnostics {
            tracing::error!("{}: {d}", path.display());
        }
        CliError::Operational(format!("{}: {e}", path.display()))
    })?;
    for d in &traj.diagnostics {
        tracing::warn!("{}: {d}", path.display());
    }
    Ok(traj)
}
