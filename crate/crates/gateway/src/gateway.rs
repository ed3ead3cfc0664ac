//! The interception pipeline: route, validate, forward, review, annotate.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

use agentguard_core::judge::{judge_from_env, JudgeClient};
use agentguard_core::jsonq::{extract, run_program};
use agentguard_core::model::{Message, ToolCall, ToolRegistry, ToolResponse, ToolSpec};
use agentguard_core::review::{ReviewBackend, ReviewInput, ReviewOutcome, ReviewResult, SilentReviewComponent};
use agentguard_core::sparc::{sparc_validate, ValidationIssue, ValidationReport};
use globset::GlobMatcher;
use serde::Deserialize;
use serde_json::value::{to_raw_value, RawValue};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{compile_pattern, ComponentId, GatewayConfig, UpstreamConfig};
use crate::log::CallLog;
use crate::rpc::{RpcError, INVALID_PARAMS, INVALID_REQUEST, METHOD_NOT_FOUND, PARSE_ERROR, UPSTREAM_FAILURE};
use crate::session::{SessionState, Sessions};
use crate::upstream::{HttpUpstream, StdioUpstream, Unavailable, Upstream, UpstreamError};
use crate::GatewayError;

struct Route {
    matcher: GlobMatcher,
    upstream: usize,
    pre: Vec<ComponentId>,
    post: Vec<ComponentId>,
}

#[derive(Default)]
struct Catalog {
    registry: Arc<ToolRegistry>,
    tools: Vec<Value>,
    loaded: bool,
}

/// Builder for [`Gateway`]; in-process upstreams and a judge can be
/// injected here instead of coming from the config and environment.
pub struct GatewayBuilder {
    config: GatewayConfig,
    locals: HashMap<String, Arc<dyn Upstream>>,
    judge: Option<Arc<dyn JudgeClient>>,
}

impl GatewayBuilder {
    pub fn local(mut self, name: impl Into<String>, upstream: Arc<dyn Upstream>) -> Self {
        self.locals.insert(name.into(), upstream);
        self
    }

    pub fn judge(mut self, judge: Arc<dyn JudgeClient>) -> Self {
        self.judge = Some(judge);
        self
    }

    /// Starts upstreams and loads the tool catalog. Unreachable upstreams are
    /// logged, not fatal.
    pub async fn connect(self) -> Result<Gateway, GatewayError> {
        let config = self.config;
        config.check()?;
        let mut descriptors: Vec<UpstreamConfig> = Vec::new();
        let mut routes = Vec::new();
        for r in &config.routes {
            let upstream = match descriptors.iter().position(|d| d == &r.upstream) {
                Some(i) => i,
                None => {
                    descriptors.push(r.upstream.clone());
                    descriptors.len() - 1
                }
            };
            routes.push(Route {
                matcher: compile_pattern(&r.tool_name_pattern).expect("checked"),
                upstream,
                pre: r.pre_tool.clone(),
                post: r.post_tool.clone(),
            });
        }
        let mut upstreams: Vec<Arc<dyn Upstream>> = Vec::new();
        for (i, d) in descriptors.iter().enumerate() {
            upstreams.push(match d {
                UpstreamConfig::Http { url } => Arc::new(HttpUpstream::new(url.clone())),
                UpstreamConfig::Stdio { command, args } => match StdioUpstream::spawn(command, args) {
                    Ok(u) => Arc::new(u),
                    Err(e) => {
                        tracing::warn!(%command, error = %e, "upstream failed to start");
                        Arc::new(Unavailable(format!("`{command}` failed to start: {e}")))
                    }
                },
                UpstreamConfig::Local { name } => match self.locals.get(name) {
                    Some(u) => u.clone(),
                    None => {
                        let route = config.routes.iter().position(|r| &r.upstream == d).unwrap_or(i);
                        return Err(crate::config::ConfigError::Invalid {
                            path: format!("routes[{route}].upstream.local.name"),
                            message: format!("no in-process upstream named {name:?}"),
                        }
                        .into());
                    }
                },
            });
        }
        let judge = match (self.judge, config.judge.enabled) {
            (Some(j), _) => Some(j),
            (None, true) => Some(judge_from_env(config.judge.max_inflight)?),
            (None, false) => None,
        };
        let review = Arc::new(SilentReviewComponent::new(judge.clone(), config.review.clone())?);
        let log = match &config.log_file {
            Some(p) => Some(CallLog::open(p)?),
            None => None,
        };
        let gateway = Gateway {
            sessions: Sessions::new(Duration::from_secs(config.session_idle_secs)),
            timeout: Duration::from_millis(config.upstream_timeout_ms),
            config,
            routes,
            upstreams,
            catalog: RwLock::new(Catalog::default()),
            judge,
            review,
            log,
        };
        gateway.refresh_tools().await;
        Ok(gateway)
    }
}

pub struct Gateway {
    config: GatewayConfig,
    routes: Vec<Route>,
    upstreams: Vec<Arc<dyn Upstream>>,
    catalog: RwLock<Catalog>,
    judge: Option<Arc<dyn JudgeClient>>,
    review: Arc<SilentReviewComponent>,
    sessions: Sessions,
    log: Option<CallLog>,
    timeout: Duration,
}

#[derive(Debug, Default, Deserialize)]
struct AgentMeta {
    #[serde(default)]
    tool_call_id: Option<String>,
    /// Conversation messages the gateway cannot otherwise see (user turns).
    #[serde(default)]
    context: Vec<Message>,
    /// Literal extraction program for the JSON processor.
    #[serde(default)]
    query: Option<String>,
    /// Question the judge turns into an extraction program.
    #[serde(default)]
    question: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct CallMeta {
    #[serde(default)]
    agentguard: Option<AgentMeta>,
}

#[derive(Debug, Deserialize)]
struct CallParams {
    name: String,
    #[serde(default)]
    arguments: Map<String, Value>,
    #[serde(default, rename = "_meta")]
    meta: Option<CallMeta>,
}

fn issue_json(i: &ValidationIssue) -> Value {
    json!({"category": i.category.as_str(), "path": i.path, "evidence": i.evidence, "suggestion": i.suggestion})
}

/// A tool result the agent's model will read: text content plus the same
/// payload as structured content.
fn rejection_result(payload: &Value, meta: Value) -> Box<RawValue> {
    let v = json!({
        "content": [{"type": "text", "text": payload.to_string()}],
        "structuredContent": payload,
        "isError": true,
        "_meta": {"agentguard": meta},
    });
    to_raw_value(&v).expect("serializable")
}

/// Stable id for calls that carry none: identical retries share a budget.
fn derived_call_id(name: &str, args: &Map<String, Value>) -> String {
    let digest = Sha256::digest(format!("{name}\n{}", Value::Object(args.clone())));
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("auto-{hex}")
}

/// Reads an upstream tools/call result into a [`ToolResponse`] for review.
fn tool_response(call_id: &str, result: &BTreeMap<String, Box<RawValue>>) -> ToolResponse {
    if let Some(structured) = result.get("structuredContent") {
        if let Ok(v) = serde_json::from_str::<Value>(structured.get()) {
            if !v.is_null() {
                return ToolResponse::from_json(call_id, None, v);
            }
        }
    }
    let content: Value = result
        .get("content")
        .and_then(|raw| serde_json::from_str(raw.get()).ok())
        .unwrap_or(Value::Null);
    let texts: Vec<&str> = content
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|item| item.get("text").and_then(Value::as_str))
        .collect();
    ToolResponse::from_text(call_id, None, &texts.join("\n"))
}

impl Gateway {
    pub fn builder(config: GatewayConfig) -> GatewayBuilder {
        GatewayBuilder {
            config,
            locals: HashMap::new(),
            judge: None,
        }
    }

    pub async fn connect(config: GatewayConfig) -> Result<Self, GatewayError> {
        Self::builder(config).connect().await
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn sessions(&self) -> &Sessions {
        &self.sessions
    }

    /// Tool specs from the last tools/list aggregation, verbatim.
    pub fn tools(&self) -> Vec<Value> {
        self.catalog.read().unwrap().tools.clone()
    }

    pub fn registry(&self) -> Arc<ToolRegistry> {
        self.catalog.read().unwrap().registry.clone()
    }

    fn route_for(&self, tool: &str) -> Option<usize> {
        self.routes.iter().position(|r| r.matcher.is_match(tool))
    }

    /// Re-reads tools/list from every upstream. A tool is kept only from the
    /// upstream its first matching route points at.
    pub async fn refresh_tools(&self) -> Vec<Value> {
        let mut tools = Vec::new();
        let mut registry = ToolRegistry::new();
        let mut all_ok = true;
        for (idx, upstream) in self.upstreams.iter().enumerate() {
            let listed = match tokio::time::timeout(self.timeout, upstream.request("tools/list", json!({}))).await {
                Ok(Ok(raw)) => serde_json::from_str::<Value>(raw.get()).unwrap_or(Value::Null),
                Ok(Err(e)) => {
                    tracing::warn!(upstream = idx, error = %e, "tools/list failed");
                    all_ok = false;
                    continue;
                }
                Err(_) => {
                    tracing::warn!(upstream = idx, "tools/list timed out");
                    all_ok = false;
                    continue;
                }
            };
            for tool in listed.get("tools").and_then(Value::as_array).into_iter().flatten() {
                let Some(name) = tool.get("name").and_then(Value::as_str) else { continue };
                if self.route_for(name).map(|r| self.routes[r].upstream) != Some(idx) || registry.contains(name) {
                    continue;
                }
                let entry = json!({
                    "description": tool.get("description").cloned().unwrap_or(Value::Null),
                    "parameters": tool.get("inputSchema").cloned().unwrap_or(json!({"type": "object"})),
                });
                match ToolSpec::from_entry(name, &entry) {
                    Ok(spec) => {
                        registry.insert(spec);
                    }
                    Err(e) => tracing::warn!(tool = name, error = %e, "tool schema not usable for validation"),
                }
                tools.push(tool.clone());
            }
        }
        let mut catalog = self.catalog.write().unwrap();
        *catalog = Catalog {
            registry: Arc::new(registry),
            tools: tools.clone(),
            loaded: all_ok,
        };
        tools
    }

    /// Handles one JSON-RPC message (single or batch). Returns the serialized
    /// response, or `None` for notifications.
    pub async fn handle_message(&self, session_id: &str, text: &str) -> Option<String> {
        let parsed: Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => return Some(crate::rpc::error_response(&Value::Null, &RpcError::new(PARSE_ERROR, e.to_string()))),
        };
        match parsed {
            Value::Array(items) if items.is_empty() => Some(crate::rpc::error_response(
                &Value::Null,
                &RpcError::new(INVALID_REQUEST, "empty batch"),
            )),
            Value::Array(items) => {
                let mut out = Vec::new();
                for item in items {
                    if let Some(r) = self.handle_request(session_id, item).await {
                        out.push(r);
                    }
                }
                (!out.is_empty()).then(|| format!("[{}]", out.join(",")))
            }
            single => self.handle_request(session_id, single).await,
        }
    }

    async fn handle_request(&self, session_id: &str, request: Value) -> Option<String> {
        let id = request.get("id").cloned();
        let method = request.get("method").and_then(Value::as_str);
        let (Some(method), Some("2.0")) = (method, request.get("jsonrpc").and_then(Value::as_str)) else {
            return Some(crate::rpc::error_response(
                &id.unwrap_or(Value::Null),
                &RpcError::new(INVALID_REQUEST, "expected a JSON-RPC 2.0 request"),
            ));
        };
        let params = request.get("params").cloned().unwrap_or(json!({}));
        let outcome = match method {
            "initialize" => Ok(to_raw_value(&json!({
                "protocolVersion": params.get("protocolVersion").cloned().unwrap_or(json!("2025-06-18")),
                "capabilities": {"tools": {}},
                "serverInfo": {"name": "agentguard-gateway", "version": env!("CARGO_PKG_VERSION")},
            }))
            .expect("serializable")),
            "ping" => Ok(to_raw_value(&json!({})).expect("serializable")),
            "tools/list" => {
                let tools = self.refresh_tools().await;
                Ok(to_raw_value(&json!({ "tools": tools })).expect("serializable"))
            }
            "tools/call" => self.call_tool(session_id, params).await,
            m if m.starts_with("notifications/") => return None,
            m => Err(RpcError::new(METHOD_NOT_FOUND, format!("method not found: {m}"))),
        };
        let id = id?;
        Some(match outcome {
            Ok(result) => crate::rpc::result_response(&id, &result),
            Err(e) => crate::rpc::error_response(&id, &e),
        })
    }

    /// Runs the full pipeline for one tools/call request and returns its
    /// JSON-RPC result.
    pub async fn call_tool(&self, session_id: &str, params: Value) -> Result<Box<RawValue>, RpcError> {
        let started = Instant::now();
        let req: CallParams =
            serde_json::from_value(params).map_err(|e| RpcError::new(INVALID_PARAMS, format!("invalid tools/call params: {e}")))?;
        let Some(route_idx) = self.route_for(&req.name) else {
            return Err(RpcError::new(METHOD_NOT_FOUND, format!("no route for tool `{}`", req.name)));
        };
        let route = &self.routes[route_idx];
        let needs_refresh = {
            let c = self.catalog.read().unwrap();
            !c.loaded && !c.registry.contains(&req.name)
        };
        if needs_refresh {
            self.refresh_tools().await;
        }
        let agent = req.meta.and_then(|m| m.agentguard).unwrap_or_default();
        for m in &agent.context {
            m.check()
                .map_err(|e| RpcError::new(INVALID_PARAMS, format!("_meta.agentguard.context: {e}")))?;
        }

        let session = self.sessions.get(session_id);
        let mut state = session.lock().await;
        for m in agent.context.iter().cloned() {
            state.append(m);
        }
        let call_id = agent.tool_call_id.clone().unwrap_or_else(|| derived_call_id(&req.name, &req.arguments));
        let call = ToolCall::new(call_id.clone(), req.name.clone(), req.arguments);
        let mut meta = Map::new();
        meta.insert("session".into(), json!(session_id));
        meta.insert("tool_call_id".into(), json!(call_id));

        let mut forwarded = call.arguments.clone();
        if route.pre.contains(&ComponentId::Sparc) {
            let report = self.validate(&call, &state, route.pre.contains(&ComponentId::Grounding)).await?;
            if !report.valid {
                let issues: Vec<Value> = report.issues.iter().map(issue_json).collect();
                let payload = json!({"rejected": true, "issues": issues, "feedback": report.feedback()});
                meta.insert("verdict".into(), json!("rejected"));
                meta.insert("latency_ms".into(), json!(started.elapsed().as_millis() as u64));
                state.append(Message::assistant("", vec![call.clone()]));
                state.append(Message::tool(call_id.clone(), payload.to_string()));
                self.log_call(&state, &call.tool_name, "rejected", &issues, None, started);
                return Ok(rejection_result(&payload, Value::Object(meta)));
            }
            if let (true, Some(repaired)) = (self.config.auto_repair, &report.repaired_arguments) {
                forwarded = repaired.clone();
                meta.insert("repairs".into(), json!(report.repairs));
            }
            if !report.issues.is_empty() {
                meta.insert("issues".into(), json!(report.issues.iter().map(issue_json).collect::<Vec<_>>()));
            }
        }

        let forwarded_call = ToolCall::new(call_id.clone(), call.tool_name.clone(), forwarded.clone());
        let upstream = &self.upstreams[route.upstream];
        let request = upstream.request("tools/call", json!({"name": call.tool_name, "arguments": forwarded}));
        let raw = match tokio::time::timeout(self.timeout, request).await {
            Ok(Ok(raw)) => raw,
            Ok(Err(e)) => return Err(self.upstream_error(&state, &call.tool_name, e, started)),
            Err(_) => {
                let e = UpstreamError::Timeout(self.timeout.as_millis() as u64);
                return Err(self.upstream_error(&state, &call.tool_name, e, started));
            }
        };
        let mut result: BTreeMap<String, Box<RawValue>> = serde_json::from_str(raw.get())
            .map_err(|_| RpcError::new(UPSTREAM_FAILURE, "upstream tools/call result is not an object"))?;
        let response = tool_response(&call_id, &result);
        let mut history_call = vec![Message::assistant("", vec![forwarded_call])];

        let mut review_json = None;
        let mut verdict = "forwarded";
        if route.post.contains(&ComponentId::SilentReview) {
            let input = ReviewInput {
                messages: state.history().iter().cloned().chain(history_call.iter().cloned()).collect(),
                tool_response: response.clone(),
                tool_spec: self.registry().get(&call.tool_name).cloned(),
            };
            let review = self.run_review(input).await;
            review_json = Some(json!(review));
            meta.insert("review".into(), json!(review));
            if review.outcome == ReviewOutcome::NotAccomplished {
                let used = state.retry_counts.get(&call_id).copied().unwrap_or(0);
                if used < self.config.max_retries {
                    state.retry_counts.insert(call_id.clone(), used + 1);
                    let remaining = self.config.max_retries - used - 1;
                    let payload = json!({
                        "rejected": true,
                        "reason": "NOT_ACCOMPLISHED",
                        "review": review,
                        "retries_remaining": remaining,
                        "upstream_excerpt": agentguard_core::judge::truncate_utf8(&response.body_text(), 512),
                        "feedback": format!(
                            "The tool call returned without error but did not accomplish its task ({}). Retry the tool, adjusting the arguments if needed.",
                            review.rationale
                        ),
                    });
                    meta.insert("verdict".into(), json!("retry_advised"));
                    meta.insert("latency_ms".into(), json!(started.elapsed().as_millis() as u64));
                    state.append(history_call.remove(0));
                    state.append(Message::tool(call_id.clone(), response.body_text()));
                    self.log_call(&state, &call.tool_name, "retry_advised", &[], review_json, started);
                    return Ok(rejection_result(&payload, Value::Object(meta)));
                }
                verdict = "retries_exhausted";
            }
        }

        if route.post.contains(&ComponentId::JsonProcessor) && response.is_json {
            if let Some(extraction) = self.run_extraction(&agent, &response).await {
                match extraction {
                    Ok((value, info)) => {
                        let content = json!([{"type": "text", "text": value.to_string()}]);
                        result.insert("content".into(), to_raw_value(&content).expect("serializable"));
                        result.remove("structuredContent");
                        meta.insert("extraction".into(), info);
                    }
                    Err(info) => {
                        meta.insert("extraction".into(), info);
                    }
                }
            }
        }

        meta.insert("verdict".into(), json!(verdict));
        meta.insert("latency_ms".into(), json!(started.elapsed().as_millis() as u64));
        let mut upstream_meta = result
            .get("_meta")
            .and_then(|raw| serde_json::from_str::<Map<String, Value>>(raw.get()).ok())
            .unwrap_or_default();
        upstream_meta.insert("agentguard".into(), Value::Object(meta));
        result.insert("_meta".into(), to_raw_value(&upstream_meta).expect("serializable"));

        state.append(history_call.remove(0));
        state.append(Message::tool(call_id, response.body_text()));
        self.log_call(&state, &call.tool_name, verdict, &[], review_json, started);
        Ok(to_raw_value(&result).expect("serializable"))
    }

    async fn validate(&self, call: &ToolCall, state: &SessionState, grounding: bool) -> Result<ValidationReport, RpcError> {
        let mut config = self.config.sparc.clone();
        config.semantic.enabled = grounding;
        let registry = self.registry();
        let judge = self.judge.clone().filter(|_| grounding);
        let outcome = match judge {
            // A judge call blocks on HTTP; keep it off the async workers.
            Some(judge) => {
                let (call, history) = (call.clone(), state.history().to_vec());
                tokio::task::spawn_blocking(move || {
                    sparc_validate(&call, &registry, &history, Some(judge.as_ref()), &config)
                })
                .await
                .map_err(|e| RpcError::new(UPSTREAM_FAILURE, e.to_string()))?
            }
            None => sparc_validate(call, &registry, state.history(), None, &config),
        };
        outcome.map_err(|e| {
            RpcError::new(UPSTREAM_FAILURE, format!("validation judge unavailable: {e}"))
                .with_data(json!({"retriable": true, "kind": "judge_unavailable"}))
        })
    }

    async fn run_review(&self, input: ReviewInput) -> ReviewResult {
        if self.config.review.backend == ReviewBackend::Judge && self.judge.is_some() {
            let review = self.review.clone();
            let fallback = input.clone();
            return match tokio::task::spawn_blocking(move || review.review(&input)).await {
                Ok(r) => r,
                Err(_) => self.review.review(&fallback),
            };
        }
        self.review.review(&input)
    }

    async fn run_extraction(&self, agent: &AgentMeta, response: &ToolResponse) -> Option<Result<(Value, Value), Value>> {
        let config = self.config.json_processor.extract.clone();
        if let Some(query) = &agent.query {
            return Some(match run_program(query, response, config.limits) {
                Ok(r) => Ok((
                    r.value,
                    json!({"program": r.program, "attempts": r.attempts, "bytes_in": r.bytes_in, "bytes_out": r.bytes_out}),
                )),
                Err(e) => Err(json!({"error": e.to_string()})),
            });
        }
        let question = agent.question.clone()?;
        let judge = self.judge.clone()?;
        let response = response.clone();
        let done = tokio::task::spawn_blocking(move || extract(&response, &question, None, judge.as_ref(), &config)).await;
        Some(match done {
            Ok(Ok(r)) => Ok((
                r.value,
                json!({"program": r.program, "attempts": r.attempts, "bytes_in": r.bytes_in, "bytes_out": r.bytes_out}),
            )),
            Ok(Err(e)) => Err(json!({"error": e.to_string()})),
            Err(e) => Err(json!({"error": e.to_string()})),
        })
    }

    fn upstream_error(&self, state: &SessionState, tool: &str, e: UpstreamError, started: Instant) -> RpcError {
        self.log_call(state, tool, "upstream_error", &[], None, started);
        match e {
            UpstreamError::Rpc { code, message, data } => {
                let mut err = RpcError::new(code, message);
                err.data = data;
                err
            }
            other => RpcError::new(UPSTREAM_FAILURE, other.to_string()).with_data(json!({
                "retriable": other.retriable(),
                "kind": if matches!(other, UpstreamError::Timeout(_)) { "upstream_timeout" } else { "upstream_transport" },
            })),
        }
    }

    fn log_call(&self, state: &SessionState, tool: &str, verdict: &str, issues: &[Value], review: Option<Value>, started: Instant) {
        let line = json!({
            "session": state.session_id,
            "tool": tool,
            "verdict": verdict,
            "issues": issues,
            "review": review.as_ref().and_then(|r| r.get("outcome")).cloned().unwrap_or(Value::Null),
            "latency_ms": started.elapsed().as_millis() as u64,
        });
        tracing::info!(target: "agentguard::calls", %line);
        if let Some(log) = &self.log {
            log.write(&line);
        }
    }
}
