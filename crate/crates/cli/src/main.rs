//! `agentguard`: validate tool calls, extract from tool responses, review
//! responses for silent errors, analyze trajectories, run the gateway and
//! compare gateway configurations on scripted episodes.
//!
//! Exit codes: 0 ok, 1 findings, 2 operational error.

mod commands;
mod config;
mod input;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::{CliConfig, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Findings,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: invalid configuration at `{key}`: {message}", path.display())]
    Config { path: PathBuf, key: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Operational(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "agentguard", version, about = "Guardrails for agent tool calls")]
struct Cli {
    /// JSON config file (unknown keys are rejected).
    #[arg(long, global = true, env = "AGENTGUARD_CONFIG")]
    config: Option<PathBuf>,
    /// Output format for stdout [env: AGENTGUARD_FORMAT].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Debug logging on stderr [env: AGENTGUARD_VERBOSE].
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate one tool call against a tool registry.
    Validate {
        #[arg(long)]
        tools: PathBuf,
        #[arg(long)]
        call: PathBuf,
        /// JSONL conversation the arguments must be grounded in.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Use the configured judge for the semantic tier.
        #[arg(long)]
        judge: bool,
    },
    /// Extract an answer from a JSON tool response.
    #[command(group(clap::ArgGroup::new("q").required(true).args(["query", "query_file", "program"])))]
    Extract {
        #[arg(long)]
        response: PathBuf,
        /// Natural-language question; the judge writes the query program.
        #[arg(long)]
        query: Option<String>,
        /// File holding a query program; runs without a judge.
        #[arg(long)]
        query_file: Option<PathBuf>,
        /// Inline query program; runs without a judge.
        #[arg(long)]
        program: Option<String>,
        /// JSON Schema of the response, included in the judge prompt.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Review a tool response for silent errors.
    Review {
        #[arg(long)]
        response: PathBuf,
        /// Transport status code of the response.
        #[arg(long)]
        status: Option<u16>,
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long, requires = "tool")]
        tools: Option<PathBuf>,
        #[arg(long, requires = "tools")]
        tool: Option<String>,
        #[arg(long)]
        judge: bool,
        /// Failure-phrase lexicon (JSON list or {failure, partial}).
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Run validation and review over every step of a JSONL trajectory.
    AnalyzeTrajectory {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        tools: PathBuf,
        #[arg(long)]
        judge: bool,
    },
    /// Run the intercepting gateway (config from the `gateway` section).
    Gateway {
        /// HTTP listen address, overriding the config.
        #[arg(long)]
        http: Option<String>,
        /// Disable the stdio listener.
        #[arg(long)]
        no_stdio: bool,
    },
    /// Compare two gateway configurations on an episode suite.
    HarnessRun {
        /// Built-in suite (benign, invalid-call, silent-error) or a suite file.
        #[arg(long, default_value = "invalid-call")]
        suite: String,
        /// Config A: none | sparc | review | sparc+review | <gateway config file>.
        #[arg(long)]
        a: Option<String>,
        /// Config B, same forms as A.
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Serve the fault-injecting mock tool server (stdio unless --http).
    MockServer {
        #[arg(long)]
        http: Option<String>,
        /// Tool list (`tools/list` shape); the airline set by default.
        #[arg(long)]
        tools: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        huge_items: Option<usize>,
        #[arg(long, default_value_t = 3)]
        huge_depth: usize,
    },
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let cfg = CliConfig::resolve(cli.config.as_deref(), cli.format, cli.verbose)?;
    let level = if cfg.verbose { "debug" } else { "warn" };
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("AGENTGUARD_LOG").unwrap_or_else(|_| level.into()))
        .try_init();
    match cli.command {
        Command::Validate { tools, call, history, judge } => {
            commands::validate(&cfg, commands::ValidateArgs { tools, call, history, judge })
        }
        Command::Extract {
            response,
            query,
            query_file,
            program,
            schema,
        } => commands::extract_cmd(
            &cfg,
            commands::ExtractArgs {
                response,
                query,
                query_file,
                program,
                schema,
            },
        ),
        Command::Review {
            response,
            status,
            history,
            tools,
            tool,
            judge,
            lexicon,
        } => commands::review(
            &cfg,
            commands::ReviewArgs {
                response,
                status,
                history,
                tools,
                tool,
                judge,
                lexicon,
            },
        ),
        Command::AnalyzeTrajectory { traj, tools, judge } => {
            commands::analyze_trajectory(&cfg, commands::AnalyzeArgs { traj, tools, judge })
        }
        Command::Gateway { http, no_stdio } => commands::gateway(&cfg, commands::GatewayArgs { http, no_stdio }),
        Command::HarnessRun { suite, a, b, seed } => commands::harness_run(&cfg, commands::HarnessArgs { suite, a, b, seed }),
        Command::MockServer {
            http,
            tools,
            rate,
            seed,
            huge_items,
            huge_depth,
        } => commands::mock_server(
            &cfg,
            commands::MockArgs {
                http,
                tools,
                rate,
                seed,
                huge_items,
                huge_depth,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Findings) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
