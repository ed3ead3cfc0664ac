//! JSON-RPC 2.0 envelopes.

use serde::Serialize;
use serde_json::value::RawValue;
use serde_json::Value;

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;
/// Upstream timeout or transport failure; `data.retriable` says whether to retry.
pub const UPSTREAM_FAILURE: i64 = -32000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RpcError {
    pub code: i64,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl RpcError {
    pub fn new(code: i64, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            data: None,
        }
    }

    pub fn with_data(mut self, data: Value) -> Self {
        self.data = Some(data);
        self
    }
}

#[derive(Serialize)]
struct Response<'a> {
    jsonrpc: &'static str,
    id: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a RawValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a RpcError>,
}

pub fn result_response(id: &Value, result: &RawValue) -> String {
    serde_json::to_string(&Response {
        jsonrpc: "2.0",
        id,
        result: Some(result),
        error: None,
    })
    .expect("serializable")
}

pub fn error_response(id: &Value, error: &RpcError) -> String {
    serde_json::to_string(&Response {
        jsonrpc: "2.0",
        id,
        result: None,
        error: Some(error),
    })
    .expect("serializable")
}
