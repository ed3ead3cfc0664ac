//! LLM judge clients.
//!
//! [`HttpJudge`] speaks the chat-completions wire convention
//! (`POST {base}/chat/completions` with `{model, messages, temperature, max_tokens}`,
//! reply read from `choices[0].message.content`). [`MockJudge`] replays a
//! script and records every call.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const ENV_JUDGE_URL: &str = "AGENTGUARD_JUDGE_URL";
pub const ENV_JUDGE_MODEL: &str = "AGENTGUARD_JUDGE_MODEL";
pub const ENV_JUDGE_API_KEY: &str = "AGENTGUARD_JUDGE_API_KEY";

/// Reply returned by a [`MockJudge`] whose script has run out.
pub const MOCK_EXHAUSTED: &str = "MOCK_EXHAUSTED";

/// Default upper bound on rendered prompt size.
pub const DEFAULT_PROMPT_BUDGET: usize = 16 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
}

impl JudgeRequest {
    /// Builds a temperature-0 request whose combined prompt size stays within
    /// `budget` bytes. The user prompt is cut on a char boundary if needed.
    pub fn bounded(system_prompt: &str, user_prompt: &str, max_output_tokens: u32, budget: usize) -> Self {
        let room = budget.saturating_sub(system_prompt.len());
        Self {
            system_prompt: truncate_utf8(system_prompt, budget).to_owned(),
            user_prompt: truncate_with_marker(user_prompt, room),
            max_output_tokens,
            temperature: 0.0,
        }
    }

    pub fn prompt_bytes(&self) -> usize {
        self.system_prompt.len() + self.user_prompt.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub text: String,
    pub latency_ms: u64,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JudgeError {
    #[error("judge unavailable after {attempts} attempt(s): {last_error}")]
    Unavailable { attempts: u32, last_error: String },
    #[error("judge rejected credentials (HTTP {status})")]
    Auth { status: u16 },
    #[error("judge misconfigured: {0}")]
    Config(String),
}

pub trait JudgeClient: Send + Sync {
    fn complete(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError>;
}

impl<J: JudgeClient + ?Sized> JudgeClient for Arc<J> {
    fn complete(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        (**self).complete(request)
    }
}

impl<J: JudgeClient + ?Sized> JudgeClient for &J {
    fn complete(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        (**self).complete(request)
    }
}

/// One element of a mock script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptEntry {
    /// Consumed in order by prompts that match no rule.
    Reply(String),
    /// Fires (repeatedly) whenever the rendered prompt contains `contains`.
    Rule { contains: String, reply: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JudgeCall {
    pub request: JudgeRequest,
    pub reply: String,
}

#[derive(Debug)]
pub struct MockJudge {
    rules: Vec<(String, String)>,
    replies: Mutex<VecDeque<String>>,
    transcript: Mutex<Vec<JudgeCall>>,
}

impl MockJudge {
    pub fn new(script: Vec<ScriptEntry>) -> Result<Self, JudgeError> {
        if script.is_empty() {
            return Err(JudgeError::Config("mock judge script is empty".into()));
        }
        let mut rules = Vec::new();
        let mut replies = VecDeque::new();
        for entry in script {
            match entry {
                ScriptEntry::Reply(r) => replies.push_back(r),
                ScriptEntry::Rule { contains, reply } => rules.push((contains, reply)),
            }
        }
        Ok(Self {
            rules,
            replies: Mutex::new(replies),
            transcript: Mutex::new(Vec::new()),
        })
    }

    /// Sequential replies only.
    pub fn replies<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let script: Vec<_> = replies.into_iter().map(|r| ScriptEntry::Reply(r.into())).collect();
        Self::new(script).expect("mock script must not be empty")
    }

    /// Loads a script from a JSON array of strings and `{contains, reply}` rules.
    pub fn from_file(path: &Path) -> Result<Self, JudgeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| JudgeError::Config(format!("reading mock script {}: {e}", path.display())))?;
        let script: Vec<ScriptEntry> = serde_json::from_str(&text)
            .map_err(|e| JudgeError::Config(format!("parsing mock script {}: {e}", path.display())))?;
        Self::new(script)
    }

    pub fn transcript(&self) -> Vec<JudgeCall> {
        self.transcript.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.transcript.lock().unwrap().len()
    }
}

impl JudgeClient for MockJudge {
    fn complete(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        let prompt = format!("{}\n{}", request.system_prompt, request.user_prompt);
        let reply = match self.rules.iter().find(|(needle, _)| prompt.contains(needle.as_str())) {
            Some((_, reply)) => reply.clone(),
            None => self
                .replies
                .lock()
                .unwrap()
                .pop_front()
                .unwrap_or_else(|| MOCK_EXHAUSTED.to_owned()),
        };
        self.transcript.lock().unwrap().push(JudgeCall {
            request: request.clone(),
            reply: reply.clone(),
        });
        Ok(JudgeResponse {
            text: reply,
            latency_ms: 0,
            model_id: "mock".into(),
        })
    }
}

/// Exponential backoff: `base * factor^(attempt-1)` between attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub base: Duration,
    pub factor: u32,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base: Duration::from_millis(250),
            factor: 2,
            max_attempts: 3,
        }
    }
}

impl RetryPolicy {
    /// Delay to wait after the given failed attempt (1-based).
    pub fn delay_after(&self, attempt: u32) -> Duration {
        self.base * self.factor.saturating_pow(attempt.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Blocking HTTP POST used by [`HttpJudge`]. Swappable for tests.
pub trait HttpTransport: Send + Sync {
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpReply, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl HttpTransport for UreqTransport {
    fn post_json(&self, url: &str, headers: &[(String, String)], body: &str) -> Result<HttpReply, String> {
        let mut req = self.agent.post(url).header("content-type", "application/json");
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let mut resp = req.send(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

/// Caps the number of requests in flight; waiters block until a slot frees.
#[derive(Debug)]
pub struct InflightGate {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

impl InflightGate {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            current: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> InflightPermit<'_> {
        let mut n = self.current.lock().unwrap();
        while *n >= self.max {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        InflightPermit { gate: self }
    }

    pub fn max(&self) -> usize {
        self.max
    }
}

pub struct InflightPermit<'a> {
    gate: &'a InflightGate,
}

impl Drop for InflightPermit<'_> {
    fn drop(&mut self) {
        *self.gate.current.lock().unwrap() -= 1;
        self.gate.freed.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeEndpoint {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
}

impl JudgeEndpoint {
    /// Reads the endpoint from `AGENTGUARD_JUDGE_*` environment variables.
    pub fn from_env() -> Result<Self, JudgeError> {
        let base_url = std::env::var(ENV_JUDGE_URL)
            .map_err(|_| JudgeError::Config(format!("{ENV_JUDGE_URL} is not set")))?;
        let model = std::env::var(ENV_JUDGE_MODEL).unwrap_or_else(|_| "default".into());
        let api_key = std::env::var(ENV_JUDGE_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(Self {
            base_url,
            model,
            api_key,
        })
    }

    fn completions_url(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_owned()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

pub struct HttpJudge {
    endpoint: JudgeEndpoint,
    transport: Arc<dyn HttpTransport>,
    retry: RetryPolicy,
    gate: InflightGate,
}

impl HttpJudge {
    pub fn new(endpoint: JudgeEndpoint, max_inflight: usize) -> Self {
        Self::with_transport(
            endpoint,
            Arc::new(UreqTransport::new(Duration::from_secs(60))),
            RetryPolicy::default(),
            max_inflight,
        )
    }

    pub fn with_transport(
        endpoint: JudgeEndpoint,
        transport: Arc<dyn HttpTransport>,
        retry: RetryPolicy,
        max_inflight: usize,
    ) -> Self {
        Self {
            endpoint,
            transport,
            retry,
            gate: InflightGate::new(max_inflight),
        }
    }

    fn wire_body(&self, request: &JudgeRequest) -> String {
        json!({
            "model": self.endpoint.model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        })
        .to_string()
    }
}

fn first_choice_content(body: &str) -> Result<String, String> {
    let v: Value = serde_json::from_str(body).map_err(|e| format!("malformed completion body: {e}"))?;
    v.pointer("/choices/0/message/content")
        .map(|c| c.as_str().unwrap_or_default().to_owned())
        .ok_or_else(|| "completion body has no choices[0].message.content".to_owned())
}

impl JudgeClient for HttpJudge {
    fn complete(&self, request: &JudgeRequest) -> Result<JudgeResponse, JudgeError> {
        let url = self.endpoint.completions_url();
        let mut headers = Vec::new();
        if let Some(key) = &self.endpoint.api_key {
            headers.push(("authorization".to_owned(), format!("Bearer {key}")));
        }
        let body = self.wire_body(request);
        let started = Instant::now();
        let mut last_error = String::new();
        for attempt in 1..=self.retry.max_attempts {
            let outcome = {
                let _permit = self.gate.acquire();
                self.transport.post_json(&url, &headers, &body)
            };
            match outcome {
                Ok(reply) if reply.status == 401 || reply.status == 403 => {
                    return Err(JudgeError::Auth { status: reply.status });
                }
                Ok(reply) if (200..300).contains(&reply.status) => match first_choice_content(&reply.body) {
                    Ok(text) => {
                        return Ok(JudgeResponse {
                            text,
                            latency_ms: started.elapsed().as_millis() as u64,
                            model_id: self.endpoint.model.clone(),
                        })
                    }
                    Err(e) => return Err(JudgeError::Unavailable { attempts: attempt, last_error: e }),
                },
                Ok(reply) if reply.status == 429 || reply.status >= 500 => {
                    last_error = format!("HTTP {}", reply.status);
                }
                Ok(reply) => {
                    return Err(JudgeError::Unavailable {
                        attempts: attempt,
                        last_error: format!("HTTP {}: {}", reply.status, truncate_utf8(&reply.body, 200)),
                    })
                }
                Err(e) => last_error = e,
            }
            if attempt < self.retry.max_attempts {
                tracing::debug!(attempt, %last_error, "judge call failed, backing off");
                std::thread::sleep(self.retry.delay_after(attempt));
            }
        }
        Err(JudgeError::Unavailable {
            attempts: self.retry.max_attempts,
            last_error,
        })
    }
}

/// Builds the judge named by the environment. `AGENTGUARD_JUDGE_URL=mock:<file>`
/// selects a [`MockJudge`] loaded from a script file.
pub fn judge_from_env(max_inflight: usize) -> Result<Arc<dyn JudgeClient>, JudgeError> {
    let endpoint = JudgeEndpoint::from_env()?;
    if let Some(path) = endpoint.base_url.strip_prefix("mock:") {
        return Ok(Arc::new(MockJudge::from_file(Path::new(path))?));
    }
    Ok(Arc::new(HttpJudge::new(endpoint, max_inflight)))
}

pub fn truncate_utf8(s: &str, max_bytes: usize) -> &str {
    if s.len() <= max_bytes {
        return s;
    }
    let mut end = max_bytes;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    &s[..end]
}

fn truncate_with_marker(s: &str, max_bytes: usize) -> String {
    const MARKER: &str = "\n[...truncated]";
    if s.len() <= max_bytes {
        return s.to_owned();
    }
    if max_bytes < MARKER.len() {
        return truncate_utf8(s, max_bytes).to_owned();
    }
    format!("{}{MARKER}", truncate_utf8(s, max_bytes - MARKER.len()))
}
