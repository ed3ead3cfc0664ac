//! Connections to tool servers. Results come back as raw JSON so that the
//! gateway can relay content without re-encoding it.

use std::collections::HashMap;
use std::process::Stdio;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use async_trait::async_trait;
use serde::Deserialize;
use serde_json::value::RawValue;
use serde_json::{json, Value};
use thiserror::Error;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::process::{Child, ChildStdin, Command};
use tokio::sync::oneshot;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpstreamError {
    #[error("upstream did not answer within {0} ms")]
    Timeout(u64),
    #[error("upstream transport failure: {0}")]
    Transport(String),
    #[error("upstream error {code}: {message}")]
    Rpc { code: i64, message: String, data: Option<Value> },
}

impl UpstreamError {
    /// Whether retrying the same request may succeed.
    pub fn retriable(&self) -> bool {
        !matches!(self, UpstreamError::Rpc { .. })
    }
}

#[async_trait]
pub trait Upstream: Send + Sync {
    /// Sends one JSON-RPC request and returns its `result` verbatim.
    async fn request(&self, method: &str, params: Value) -> Result<Box<RawValue>, UpstreamError>;
}

#[derive(Deserialize)]
struct RpcErrorBody {
    code: i64,
    message: String,
    #[serde(default)]
    data: Option<Value>,
}

#[derive(Deserialize)]
struct Reply {
    #[serde(default)]
    id: Value,
    #[serde(default)]
    result: Option<Box<RawValue>>,
    #[serde(default)]
    error: Option<RpcErrorBody>,
}

impl Reply {
    fn into_result(self) -> Result<Box<RawValue>, UpstreamError> {
        match (self.result, self.error) {
            (_, Some(e)) => Err(UpstreamError::Rpc {
                code: e.code,
                message: e.message,
                data: e.data,
            }),
            (Some(r), None) => Ok(r),
            (None, None) => Err(UpstreamError::Transport("reply has neither result nor error".into())),
        }
    }
}

fn envelope(id: u64, method: &str, params: Value) -> String {
    json!({"jsonrpc": "2.0", "id": id, "method": method, "params": params}).to_string()
}

pub struct HttpUpstream {
    client: reqwest::Client,
    url: String,
    next_id: AtomicU64,
}

impl HttpUpstream {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            client: reqwest::Client::new(),
            url: url.into(),
            next_id: AtomicU64::new(1),
        }
    }
}

#[async_trait]
impl Upstream for HttpUpstream {
    async fn request(&self, method: &str, params: Value) -> Result<Box<RawValue>, UpstreamError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let transport = |e: reqwest::Error| UpstreamError::Transport(e.to_string());
        let resp = self
            .client
            .post(&self.url)
            .header("content-type", "application/json")
            .body(envelope(id, method, params))
            .send()
            .await
            .map_err(transport)?;
        let status = resp.status();
        let body = resp.text().await.map_err(transport)?;
        if !status.is_success() {
            return Err(UpstreamError::Transport(format!("HTTP {status}")));
        }
        let reply: Reply =
            serde_json::from_str(&body).map_err(|e| UpstreamError::Transport(format!("malformed reply: {e}")))?;
        reply.into_result()
    }
}

type Pending = Arc<Mutex<HashMap<u64, oneshot::Sender<Result<Box<RawValue>, UpstreamError>>>>>;

/// A child process answering newline-delimited JSON-RPC. Replies are matched
/// to requests by id, so requests may overlap.
pub struct StdioUpstream {
    stdin: tokio::sync::Mutex<ChildStdin>,
    pending: Pending,
    next_id: AtomicU64,
    _child: Child,
}

impl StdioUpstream {
    /// Starts the process. Must be called inside a tokio runtime.
    pub fn spawn(command: &str, args: &[String]) -> std::io::Result<Self> {
        let mut child = Command::new(command)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .kill_on_drop(true)
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let pending: Pending = Arc::default();
        let table = pending.clone();
        tokio::spawn(async move {
            let mut lines = BufReader::new(stdout).lines();
            while let Ok(Some(line)) = lines.next_line().await {
                let Ok(reply) = serde_json::from_str::<Reply>(&line) else {
                    tracing::warn!(line = %line, "ignoring unparsable upstream line");
                    continue;
                };
                let Some(id) = reply.id.as_u64() else { continue };
                if let Some(tx) = table.lock().unwrap().remove(&id) {
                    let _ = tx.send(reply.into_result());
                }
            }
            for (_, tx) in table.lock().unwrap().drain() {
                let _ = tx.send(Err(UpstreamError::Transport("upstream process closed its output".into())));
            }
        });
        Ok(Self {
            stdin: tokio::sync::Mutex::new(stdin),
            pending,
            next_id: AtomicU64::new(1),
            _child: child,
        })
    }
}

#[async_trait]
impl Upstream for StdioUpstream {
    async fn request(&self, method: &str, params: Value) -> Result<Box<RawValue>, UpstreamError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = oneshot::channel();
        self.pending.lock().unwrap().insert(id, tx);
        let mut line = envelope(id, method, params);
        line.push('\n');
        let written = {
            let mut stdin = self.stdin.lock().await;
            match stdin.write_all(line.as_bytes()).await {
                Ok(()) => stdin.flush().await,
                Err(e) => Err(e),
            }
        };
        if let Err(e) = written {
            self.pending.lock().unwrap().remove(&id);
            return Err(UpstreamError::Transport(e.to_string()));
        }
        rx.await
            .unwrap_or_else(|_| Err(UpstreamError::Transport("upstream reader stopped".into())))
    }
}

/// Stands in for an upstream that failed to start; every request fails.
pub(crate) struct Unavailable(pub String);

#[async_trait]
impl Upstream for Unavailable {
    async fn request(&self, _: &str, _: Value) -> Result<Box<RawValue>, UpstreamError> {
        Err(UpstreamError::Transport(self.0.clone()))
    }
}
