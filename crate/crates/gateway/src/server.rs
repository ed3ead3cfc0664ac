//! Transports: newline-delimited JSON-RPC on stdio and `POST /rpc` over HTTP.

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::Router;
use tokio::io::{AsyncBufRead, AsyncBufReadExt, AsyncWrite, AsyncWriteExt};
use tokio::net::TcpListener;

use crate::session::new_session_id;
use crate::{Gateway, GatewayError};

/// Request header carrying the session id; echoed on every response.
pub const SESSION_HEADER: &str = "x-agentguard-session";
const MCP_SESSION_HEADER: &str = "mcp-session-id";

/// Serves one stdio connection (one session) until EOF.
pub async fn serve_stdio<R, W>(gateway: Arc<Gateway>, reader: R, mut writer: W) -> std::io::Result<()>
where
    R: AsyncBufRead + Unpin,
    W: AsyncWrite + Unpin,
{
    let session = new_session_id();
    let mut lines = reader.lines();
    while let Some(line) = lines.next_line().await? {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(mut reply) = gateway.handle_message(&session, &line).await {
            reply.push('\n');
            writer.write_all(reply.as_bytes()).await?;
            writer.flush().await?;
        }
    }
    Ok(())
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new().route("/rpc", post(rpc)).with_state(gateway)
}

async fn rpc(State(gateway): State<Arc<Gateway>>, headers: HeaderMap, body: String) -> Response {
    let session = [SESSION_HEADER, MCP_SESSION_HEADER]
        .iter()
        .find_map(|h| headers.get(*h).and_then(|v| v.to_str().ok()).filter(|s| !s.is_empty()))
        .map(str::to_owned)
        .unwrap_or_else(new_session_id);
    let mut response = match gateway.handle_message(&session, &body).await {
        Some(reply) => ([(header::CONTENT_TYPE, "application/json")], reply).into_response(),
        None => StatusCode::ACCEPTED.into_response(),
    };
    if let Ok(v) = HeaderValue::from_str(&session) {
        response.headers_mut().insert(SESSION_HEADER, v);
    }
    response
}

pub async fn bind(addr: &str) -> Result<TcpListener, GatewayError> {
    TcpListener::bind(addr).await.map_err(|source| GatewayError::Bind {
        addr: addr.to_owned(),
        source,
    })
}

/// Runs the configured listeners until `shutdown` resolves (or stdin closes
/// when stdio is the only listener). In-flight HTTP requests are drained.
pub async fn serve(gateway: Arc<Gateway>, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), GatewayError> {
    let listen = gateway.config().listen.clone();
    let listener = match &listen.http {
        Some(addr) => Some(bind(addr).await?),
        None => None,
    };

    let sweeper = {
        let g = gateway.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(Duration::from_secs(60));
            loop {
                tick.tick().await;
                let n = g.sessions().evict_idle();
                if n > 0 {
                    tracing::debug!(evicted = n, "idle sessions evicted");
                }
            }
        })
    };

    let (stop_tx, stop_rx) = tokio::sync::watch::channel(false);
    tokio::spawn(async move {
        shutdown.await;
        let _ = stop_tx.send(true);
    });

    let http = listener.map(|l| {
        tracing::info!(addr = ?l.local_addr().ok(), "gateway listening on HTTP");
        let mut rx = stop_rx.clone();
        let app = router(gateway.clone());
        tokio::spawn(async move {
            axum::serve(l, app)
                .with_graceful_shutdown(async move {
                    let _ = rx.wait_for(|s| *s).await;
                })
                .await
        })
    });

    let mut rx = stop_rx.clone();
    if listen.stdio {
        let stdin = tokio::io::BufReader::new(tokio::io::stdin());
        let stdout = tokio::io::stdout();
        tokio::select! {
            r = serve_stdio(gateway.clone(), stdin, stdout) => r?,
            _ = rx.wait_for(|s| *s) => {}
        }
        if http.is_none() {
            sweeper.abort();
            return Ok(());
        }
    }
    if let Some(h) = http {
        match h.await {
            Ok(r) => r?,
            Err(e) => tracing::warn!(error = %e, "http listener task failed"),
        }
    }
    sweeper.abort();
    Ok(())
}
