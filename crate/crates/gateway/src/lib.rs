//! JSON-RPC gateway between an agent and its tool servers.
//!
//! Every `tools/call` is routed by tool name, validated before execution,
//! forwarded, reviewed after execution and annotated under
//! `result._meta.agentguard`. Rejections are ordinary results with
//! `isError: true` and a `{rejected: true, ...}` payload so the agent's model
//! reads the feedback instead of the loop aborting on a protocol error.

pub mod config;
mod gateway;
mod log;
pub mod rpc;
pub mod server;
pub mod session;
pub mod upstream;

use thiserror::Error;

pub use config::{ComponentId, ConfigError, GatewayConfig, RouteConfig, UpstreamConfig};
pub use gateway::{Gateway, GatewayBuilder};
pub use rpc::RpcError;
pub use server::{router, serve, serve_stdio, SESSION_HEADER};
pub use upstream::{HttpUpstream, StdioUpstream, Upstream, UpstreamError};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("judge: {0}")]
    Judge(#[from] agentguard_core::judge::JudgeError),
    #[error("lexicon: {0}")]
    Lexicon(#[from] agentguard_core::review::LexiconError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
