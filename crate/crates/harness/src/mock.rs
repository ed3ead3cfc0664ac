//! In-process mock tool server with fault injection and call counters.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use agentguard_gateway::{Upstream, UpstreamError};
use async_trait::async_trait;
use axum::extract::State;
use axum::routing::post;
use axum::Router;
use serde_json::value::{to_raw_value, RawValue};
use serde_json::{json, Map, Value};
use tokio::io::{AsyncBufRead, AsyncBufReadExt, AsyncWrite, AsyncWriteExt};
use tokio::net::TcpListener;

use crate::airline;
use crate::fault::FaultProfile;

/// One received tools/call.
#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub tool: String,
    pub arguments: Map<String, Value>,
    pub injected: bool,
}

pub struct MockToolServer {
    tools: Vec<Value>,
    profile: FaultProfile,
    calls: AtomicUsize,
    injected: AtomicUsize,
    log: Mutex<Vec<Received>>,
    /// Occurrence count per (tool, canonical arguments).
    seen: Mutex<HashMap<String, u64>>,
}

impl MockToolServer {
    pub fn new(tools: Vec<Value>, profile: FaultProfile) -> Arc<Self> {
        Arc::new(Self {
            tools,
            profile,
            calls: AtomicUsize::new(0),
            injected: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
            seen: Mutex::new(HashMap::new()),
        })
    }

    pub fn airline(profile: FaultProfile) -> Arc<Self> {
        Self::new(airline::tools(), profile)
    }

    pub fn profile(&self) -> &FaultProfile {
        &self.profile
    }

    /// Total tools/call requests received.
    pub fn call_count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn injected_count(&self) -> usize {
        self.injected.load(Ordering::SeqCst)
    }

    pub fn received(&self) -> Vec<Received> {
        self.log.lock().unwrap().clone()
    }

    pub fn calls_by_tool(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for r in self.log.lock().unwrap().iter() {
            *m.entry(r.tool.clone()).or_default() += 1;
        }
        m
    }

    fn spec(&self, name: &str) -> Option<&Value> {
        self.tools.iter().find(|t| t["name"] == name)
    }

    /// Answers one tools/call with an MCP-style result.
    pub fn call(&self, tool: &str, arguments: Map<String, Value>) -> Value {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let Some(spec) = self.spec(tool) else {
            self.record(tool, arguments, false);
            return json!({"content": [{"type": "text", "text": format!("Unknown tool: {tool}")}], "isError": true});
        };
        let missing: Vec<&str> = spec["inputSchema"]["required"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(Value::as_str)
            .filter(|k| !arguments.contains_key(*k))
            .collect();
        if !missing.is_empty() {
            self.record(tool, arguments, false);
            let text = format!("Error: missing required argument(s): {}", missing.join(", "));
            return json!({"content": [{"type": "text", "text": text}], "isError": true});
        }
        let key = format!("{tool}\n{}", Value::Object(arguments.clone()));
        let nth = {
            let mut seen = self.seen.lock().unwrap();
            let n = seen.entry(key).or_default();
            *n += 1;
            *n - 1
        };
        let text = match self.profile.injection(tool, &arguments, nth) {
            Some(body) => {
                self.injected.fetch_add(1, Ordering::SeqCst);
                let body = body.to_owned();
                self.record(tool, arguments, true);
                body
            }
            None => {
                let body = airline::respond(tool, &arguments, self.profile.huge_payload, self.profile.seed).to_string();
                self.record(tool, arguments, false);
                body
            }
        };
        json!({"content": [{"type": "text", "text": text}], "isError": false})
    }

    fn record(&self, tool: &str, arguments: Map<String, Value>, injected: bool) {
        self.log.lock().unwrap().push(Received {
            tool: tool.to_owned(),
            arguments,
            injected,
        });
    }

    fn dispatch(&self, method: &str, params: &Value) -> Result<Value, (i64, String)> {
        match method {
            "initialize" => Ok(json!({
                "protocolVersion": "2025-06-18",
                "capabilities": {"tools": {}},
                "serverInfo": {"name": "agentguard-mock", "version": env!("CARGO_PKG_VERSION")},
            })),
            "tools/list" => Ok(json!({"tools": self.tools})),
            "tools/call" => {
                let name = params.get("name").and_then(Value::as_str).ok_or((-32602, "missing name".to_owned()))?;
                let args = params.get("arguments").and_then(Value::as_object).cloned().unwrap_or_default();
                Ok(self.call(name, args))
            }
            "ping" => Ok(json!({})),
            m => Err((-32601, format!("method not found: {m}"))),
        }
    }

    /// Handles one JSON-RPC request line; `None` for notifications.
    pub fn handle_line(&self, line: &str) -> Option<String> {
        let req: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => {
                return Some(json!({"jsonrpc": "2.0", "id": null, "error": {"code": -32700, "message": e.to_string()}}).to_string())
            }
        };
        let id = req.get("id").cloned()?;
        let method = req.get("method").and_then(Value::as_str).unwrap_or_default();
        let params = req.get("params").cloned().unwrap_or(json!({}));
        Some(match self.dispatch(method, &params) {
            Ok(result) => json!({"jsonrpc": "2.0", "id": id, "result": result}).to_string(),
            Err((code, message)) => json!({"jsonrpc": "2.0", "id": id, "error": {"code": code, "message": message}}).to_string(),
        })
    }

    /// Serves newline-delimited JSON-RPC until EOF.
    pub async fn serve_stdio<R, W>(self: Arc<Self>, reader: R, mut writer: W) -> std::io::Result<()>
    where
        R: AsyncBufRead + Unpin,
        W: AsyncWrite + Unpin,
    {
        let mut lines = reader.lines();
        while let Some(line) = lines.next_line().await? {
            if line.trim().is_empty() {
                continue;
            }
            if let Some(mut reply) = self.handle_line(&line) {
                reply.push('\n');
                writer.write_all(reply.as_bytes()).await?;
                writer.flush().await?;
            }
        }
        Ok(())
    }

    pub fn router(self: Arc<Self>) -> Router {
        async fn rpc(State(server): State<Arc<MockToolServer>>, body: String) -> String {
            server.handle_line(&body).unwrap_or_default()
        }
        Router::new().route("/rpc", post(rpc)).with_state(self)
    }
}

#[async_trait]
impl Upstream for MockToolServer {
    async fn request(&self, method: &str, params: Value) -> Result<Box<RawValue>, UpstreamError> {
        match self.dispatch(method, &params) {
            Ok(v) => Ok(to_raw_value(&v).expect("serializable")),
            Err((code, message)) => Err(UpstreamError::Rpc { code, message, data: None }),
        }
    }
}

/// A mock server listening on HTTP.
pub struct MockEndpoint {
    pub server: Arc<MockToolServer>,
    pub url: String,
    task: tokio::task::JoinHandle<()>,
}

impl Drop for MockEndpoint {
    fn drop(&mut self) {
        self.task.abort();
    }
}

/// Starts a mock tool server on `addr` (use port 0 for any free port).
pub async fn run_mock_upstream(tools: Vec<Value>, profile: FaultProfile, addr: &str) -> std::io::Result<MockEndpoint> {
    let server = MockToolServer::new(tools, profile);
    let listener = TcpListener::bind(addr).await?;
    let url = format!("http://{}/rpc", listener.local_addr()?);
    let app = server.clone().router();
    let task = tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });
    Ok(MockEndpoint { server, url, task })
}
