//! The CLI's merged configuration: flags > environment > config file > defaults.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use agentguard_core::jsonq::JsonProcessorConfig;
use agentguard_core::judge::{HttpJudge, JudgeClient, JudgeEndpoint, MockJudge, ENV_JUDGE_API_KEY, ENV_JUDGE_MODEL, ENV_JUDGE_URL};
use agentguard_core::review::ReviewConfig;
use agentguard_core::sparc::SparcConfig;
use agentguard_gateway::GatewayConfig;
use serde::Deserialize;

use crate::CliError;

pub const ENV_FORMAT: &str = "AGENTGUARD_FORMAT";
pub const ENV_VERBOSE: &str = "AGENTGUARD_VERBOSE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeFileConfig {
    pub url: Option<String>,
    pub model: Option<String>,
    pub api_key: Option<String>,
    pub max_inflight: Option<usize>,
}

/// Contents of the `--config` file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<Format>,
    pub verbose: Option<bool>,
    #[serde(default)]
    pub judge: JudgeFileConfig,
    #[serde(default)]
    pub sparc: SparcConfig,
    #[serde(default)]
    pub review: ReviewConfig,
    #[serde(default)]
    pub json_processor: JsonProcessorConfig,
    /// Used by the `gateway` subcommand.
    pub gateway: Option<GatewayConfig>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            path: path.to_owned(),
            key: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        if let Some(g) = &cfg.gateway {
            g.check().map_err(|e| CliError::Config {
                path: path.to_owned(),
                key: format!("gateway.{}", e.key_path().unwrap_or_default()),
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }
}

/// Effective settings after merging every source.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub format: Format,
    pub verbose: bool,
    pub judge: JudgeFileConfig,
    pub sparc: SparcConfig,
    pub review: ReviewConfig,
    pub json_processor: JsonProcessorConfig,
    pub gateway: Option<GatewayConfig>,
    pub seed: Option<u64>,
    pub source: Option<PathBuf>,
}

fn env(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

impl CliConfig {
    pub fn resolve(file: Option<&Path>, format_flag: Option<Format>, verbose_flag: bool) -> Result<Self, CliError> {
        let f = match file {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let env_format = match env(ENV_FORMAT).as_deref() {
            None => None,
            Some("json") => Some(Format::Json),
            Some("table") => Some(Format::Table),
            Some(other) => return Err(CliError::Usage(format!("{ENV_FORMAT}={other}: expected json or table"))),
        };
        let env_verbose = env(ENV_VERBOSE).map(|v| !matches!(v.as_str(), "0" | "false" | "no"));
        let judge = JudgeFileConfig {
            url: env(ENV_JUDGE_URL).or(f.judge.url),
            model: env(ENV_JUDGE_MODEL).or(f.judge.model),
            api_key: env(ENV_JUDGE_API_KEY).or(f.judge.api_key),
            max_inflight: f.judge.max_inflight,
        };
        Ok(Self {
            format: format_flag.or(env_format).or(f.format).unwrap_or_default(),
            verbose: verbose_flag || env_verbose.or(f.verbose).unwrap_or(false),
            judge,
            sparc: f.sparc,
            review: f.review,
            json_processor: f.json_processor,
            gateway: f.gateway,
            seed: f.seed,
            source: file.map(Path::to_owned),
        })
    }

    /// The configured judge. `mock:<file>` selects a scripted mock.
    pub fn judge(&self) -> Result<Arc<dyn JudgeClient>, CliError> {
        let url = self
            .judge
            .url
            .clone()
            .ok_or_else(|| CliError::Usage(format!("no judge configured: set {ENV_JUDGE_URL} or judge.url in the config file")))?;
        if let Some(script) = url.strip_prefix("mock:") {
            let judge = MockJudge::from_file(Path::new(script)).map_err(|e| CliError::Operational(e.to_string()))?;
            return Ok(Arc::new(judge));
        }
        let endpoint = JudgeEndpoint {
            base_url: url,
            model: self.judge.model.clone().unwrap_or_else(|| "default".into()),
            api_key: self.judge.api_key.clone(),
        };
        Ok(Arc::new(HttpJudge::new(endpoint, self.judge.max_inflight.unwrap_or(4))))
    }
}
