//! Gateway configuration: a JSON document with routes, component toggles and
//! limits. Unknown keys are rejected with the path of the offending key.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use agentguard_core::jsonq::JsonProcessorConfig;
use agentguard_core::review::ReviewConfig;
use agentguard_core::sparc::SparcConfig;
use globset::{Glob, GlobMatcher};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("config error at {path}: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    /// Dotted path of the offending key (`.` for the document root).
    pub fn key_path(&self) -> Option<&str> {
        match self {
            ConfigError::Io { .. } => None,
            ConfigError::Parse { path, .. } | ConfigError::Invalid { path, .. } => Some(path),
        }
    }
}

/// Where a route's calls go.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UpstreamConfig {
    /// Child process speaking newline-delimited JSON-RPC on stdin/stdout.
    Stdio {
        command: String,
        #[serde(default)]
        args: Vec<String>,
    },
    /// JSON-RPC over HTTP POST.
    Http { url: String },
    /// An in-process upstream registered on the builder by name.
    Local { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentId {
    /// Syntactic and transformation tiers.
    Sparc,
    /// Adds the semantic (grounding) tier; needs `sparc`.
    Grounding,
    SilentReview,
    JsonProcessor,
}

impl ComponentId {
    fn pre_tool(self) -> bool {
        matches!(self, ComponentId::Sparc | ComponentId::Grounding)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteConfig {
    pub tool_name_pattern: String,
    pub upstream: UpstreamConfig,
    #[serde(default = "default_pre")]
    pub pre_tool: Vec<ComponentId>,
    #[serde(default = "default_post")]
    pub post_tool: Vec<ComponentId>,
}

fn default_pre() -> Vec<ComponentId> {
    vec![ComponentId::Sparc]
}

fn default_post() -> Vec<ComponentId> {
    vec![ComponentId::SilentReview]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ListenConfig {
    pub stdio: bool,
    /// `host:port` for the HTTP listener (`POST /rpc`).
    pub http: Option<String>,
}

impl Default for ListenConfig {
    fn default() -> Self {
        Self { stdio: true, http: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JudgeSettings {
    /// Build a judge from the `AGENTGUARD_JUDGE_*` environment.
    pub enabled: bool,
    pub max_inflight: usize,
}

impl Default for JudgeSettings {
    fn default() -> Self {
        Self {
            enabled: false,
            max_inflight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatewayConfig {
    #[serde(default)]
    pub listen: ListenConfig,
    pub routes: Vec<RouteConfig>,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_true")]
    pub auto_repair: bool,
    #[serde(default = "default_timeout_ms")]
    pub upstream_timeout_ms: u64,
    #[serde(default = "default_idle_secs")]
    pub session_idle_secs: u64,
    #[serde(default)]
    pub sparc: SparcConfig,
    #[serde(default)]
    pub review: ReviewConfig,
    #[serde(default)]
    pub json_processor: JsonProcessorConfig,
    #[serde(default)]
    pub judge: JudgeSettings,
    /// JSONL file receiving one line per intercepted call.
    #[serde(default)]
    pub log_file: Option<PathBuf>,
}

fn default_max_retries() -> u32 {
    2
}
fn default_true() -> bool {
    true
}
fn default_timeout_ms() -> u64 {
    30_000
}
fn default_idle_secs() -> u64 {
    30 * 60
}

impl GatewayConfig {
    /// A config with the given routes and every other field at its default.
    pub fn with_routes(routes: Vec<RouteConfig>) -> Self {
        Self {
            listen: ListenConfig::default(),
            routes,
            max_retries: default_max_retries(),
            auto_repair: true,
            upstream_timeout_ms: default_timeout_ms(),
            session_idle_secs: default_idle_secs(),
            sparc: SparcConfig::default(),
            review: ReviewConfig::default(),
            json_processor: JsonProcessorConfig::default(),
            judge: JudgeSettings::default(),
            log_file: None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        config.check()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    /// Semantic checks serde cannot express.
    pub fn check(&self) -> Result<(), ConfigError> {
        let invalid = |path: String, message: String| Err(ConfigError::Invalid { path, message });
        if self.routes.is_empty() {
            return invalid("routes".into(), "at least one route is required".into());
        }
        if !self.listen.stdio && self.listen.http.is_none() {
            return invalid("listen".into(), "enable stdio or set an http address".into());
        }
        for (i, r) in self.routes.iter().enumerate() {
            if let Err(e) = compile_pattern(&r.tool_name_pattern) {
                return invalid(format!("routes[{i}].tool_name_pattern"), e.to_string());
            }
            if let Some(bad) = r.pre_tool.iter().find(|c| !c.pre_tool()) {
                return invalid(format!("routes[{i}].pre_tool"), format!("{bad:?} is a post-tool component"));
            }
            if let Some(bad) = r.post_tool.iter().find(|c| c.pre_tool()) {
                return invalid(format!("routes[{i}].post_tool"), format!("{bad:?} is a pre-tool component"));
            }
            let pre: BTreeSet<_> = r.pre_tool.iter().collect();
            if pre.contains(&ComponentId::Grounding) && !pre.contains(&ComponentId::Sparc) {
                return invalid(format!("routes[{i}].pre_tool"), "grounding requires sparc".into());
            }
        }
        Ok(())
    }
}

pub(crate) fn compile_pattern(pattern: &str) -> Result<GlobMatcher, globset::Error> {
    Ok(Glob::new(pattern)?.compile_matcher())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"routes": [{"tool_name_pattern": "*", "upstream": {"http": {"url": "http://127.0.0.1:9"}}}]}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = GatewayConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(c.max_retries, 2);
        assert_eq!(c.routes[0].pre_tool, [ComponentId::Sparc]);
        assert_eq!(c.routes[0].post_tool, [ComponentId::SilentReview]);
        assert!(c.listen.stdio);
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let text = r#"{"routes": [{"tool_name_pattern": "*", "upstream": {"http": {"url": "x", "proxy": 1}}}]}"#;
        let err = GatewayConfig::from_json_str(text).unwrap_err();
        assert_eq!(err.key_path(), Some("routes[0].upstream.http.proxy"), "{err}");
        let err = GatewayConfig::from_json_str(r#"{"routes": [], "max_retry": 3}"#).unwrap_err();
        assert_eq!(err.key_path(), Some("max_retry"));
    }

    #[test]
    fn misplaced_component_rejected() {
        let text = r#"{"routes": [{"tool_name_pattern": "*", "upstream": {"local": {"name": "a"}}, "pre_tool": ["silent_review"]}]}"#;
        let err = GatewayConfig::from_json_str(text).unwrap_err();
        assert_eq!(err.key_path(), Some("routes[0].pre_tool"));
    }

    #[test]
    fn bad_glob_rejected() {
        let text = r#"{"routes": [{"tool_name_pattern": "a[", "upstream": {"local": {"name": "a"}}}]}"#;
        assert_eq!(GatewayConfig::from_json_str(text).unwrap_err().key_path(), Some("routes[0].tool_name_pattern"));
    }
}
