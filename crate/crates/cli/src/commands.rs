//! One function per subcommand. Each returns the exit status it wants;
//! operational failures come back as `CliError` (exit 2).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use agentguard_core::jsonq::{extract, run_program, ExtractError};
use agentguard_core::judge::JudgeClient;
use agentguard_core::model::{Role, ToolResponse};
use agentguard_core::review::{review_heuristic, Lexicon, ReviewBackend, ReviewInput, ReviewOutcome, SilentReviewComponent};
use agentguard_core::schema::parse_schema;
use agentguard_core::sparc::{sparc_validate, IssueCategory, ValidationIssue};
use agentguard_gateway::{ComponentId, Gateway, GatewayConfig};
use agentguard_harness::suite::{suite_config, Suite, BUILTIN_SUITES};
use agentguard_harness::{run_episode_suite, FaultProfile, HugePayload, MockToolServer};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::CliConfig;
use crate::output::{emit, table};
use crate::{input, CliError, Status};

fn issue_rows(issues: &[ValidationIssue]) -> Vec<Vec<String>> {
    issues
        .iter()
        .map(|i| {
            vec![
                i.category.as_str().to_owned(),
                if i.path.is_empty() { "-".into() } else { i.path.clone() },
                i.evidence.clone(),
                i.suggestion.clone(),
            ]
        })
        .collect()
}

pub struct ValidateArgs {
    pub tools: PathBuf,
    pub call: PathBuf,
    pub history: Option<PathBuf>,
    pub judge: bool,
}

pub fn validate(cfg: &CliConfig, a: ValidateArgs) -> Result<Status, CliError> {
    let registry = input::registry(&a.tools)?;
    let call = input::call(&a.call)?;
    let history = match &a.history {
        Some(p) => input::trajectory(p)?.messages,
        None => Vec::new(),
    };
    let judge = if a.judge { Some(cfg.judge()?) } else { None };
    let mut sparc = cfg.sparc.clone();
    // Grounding needs something to ground against: a judge or a history.
    sparc.semantic.enabled &= a.judge || a.history.is_some();
    let report = sparc_validate(&call, &registry, &history, judge.as_deref(), &sparc)
        .map_err(|e| CliError::Operational(format!("judge: {e}")))?;
    emit(cfg.format, &report, |r| {
        let mut out = format!("valid: {}\n", r.valid);
        if !r.issues.is_empty() {
            out.push_str(&table(&["category", "path", "evidence", "suggestion"], &issue_rows(&r.issues)));
        }
        if let Some(fixed) = &r.repaired_arguments {
            out.push_str(&format!("repaired arguments: {}\n", Value::Object(fixed.clone())));
        }
        out
    });
    Ok(if report.valid { Status::Ok } else { Status::Findings })
}

pub struct ExtractArgs {
    pub response: PathBuf,
    pub query: Option<String>,
    pub query_file: Option<PathBuf>,
    pub program: Option<String>,
    pub schema: Option<PathBuf>,
}

pub fn extract_cmd(cfg: &CliConfig, a: ExtractArgs) -> Result<Status, CliError> {
    let text = input::read(&a.response)?;
    let body: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Operational(format!("{}: response is not JSON: {e}", a.response.display())))?;
    let response = ToolResponse::from_json("cli", None, body);
    let limits = cfg.json_processor.extract.limits;
    let program = match (&a.query_file, &a.program) {
        (Some(p), _) => Some(input::read(p)?.trim().to_owned()),
        (None, Some(p)) => Some(p.clone()),
        (None, None) => None,
    };
    let result = match (program, &a.query) {
        (Some(program), _) => match run_program(&program, &response, limits) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("extraction failed: {e}");
                return Ok(Status::Findings);
            }
        },
        (None, Some(question)) => {
            let schema = match &a.schema {
                Some(p) => Some(
                    parse_schema(&input::read_json(p)?)
                        .map_err(|e| CliError::Operational(format!("{}: {e}", p.display())))?
                        .node,
                ),
                None => None,
            };
            let judge = cfg.judge()?;
            match extract(&response, question, schema.as_ref(), judge.as_ref(), &cfg.json_processor.extract) {
                Ok(r) => r,
                Err(ExtractError::NotJson) => return Err(CliError::Operational("response is not JSON".into())),
                Err(e) => {
                    eprintln!("extraction failed: {e}");
                    for t in e.transcripts() {
                        eprintln!("  attempt {}: query {:?}: {}", t.attempt, t.query, t.error);
                    }
                    return Ok(Status::Findings);
                }
            }
        }
        (None, None) => return Err(CliError::Usage("one of --query, --query-file or --program is required".into())),
    };
    eprintln!(
        "program: {}  attempts: {}  bytes_in: {}  bytes_out: {}",
        result.program.source_text, result.attempts, result.bytes_in, result.bytes_out
    );
    emit(cfg.format, &result.value, |v| format!("{v}\n"));
    Ok(Status::Ok)
}

pub struct ReviewArgs {
    pub response: PathBuf,
    pub status: Option<u16>,
    pub history: Option<PathBuf>,
    pub tools: Option<PathBuf>,
    pub tool: Option<String>,
    pub judge: bool,
    pub lexicon: Option<PathBuf>,
}

pub fn review(cfg: &CliConfig, a: ReviewArgs) -> Result<Status, CliError> {
    let text = input::read(&a.response)?;
    let messages = match &a.history {
        Some(p) => input::trajectory(p)?.messages,
        None => Vec::new(),
    };
    let tool_spec = match (&a.tools, &a.tool) {
        (Some(t), Some(name)) => Some(
            input::registry(t)?
                .get(name)
                .cloned()
                .ok_or_else(|| CliError::Operational(format!("tool `{name}` is not in {}", t.display())))?,
        ),
        _ => None,
    };
    let mut config = cfg.review.clone();
    if a.judge {
        config.backend = ReviewBackend::Judge;
    }
    if a.lexicon.is_some() {
        config.lexicon_file = a.lexicon.clone();
    }
    let judge: Option<Arc<dyn JudgeClient>> = match config.backend {
        ReviewBackend::Judge => Some(cfg.judge()?),
        ReviewBackend::Heuristic => None,
    };
    let component = SilentReviewComponent::new(judge, config).map_err(|e| CliError::Operational(e.to_string()))?;
    let input = ReviewInput {
        messages,
        tool_response: ToolResponse::from_text("cli", a.status, &text),
        tool_spec,
    };
    let result = component.review(&input);
    emit(cfg.format, &result, |r| {
        table(
            &["outcome", "rule", "rationale"],
            &[vec![
                r.outcome.to_string(),
                r.matched_rule.clone().unwrap_or_else(|| "-".into()),
                r.rationale.clone(),
            ]],
        )
    });
    Ok(if result.outcome == ReviewOutcome::Accomplished {
        Status::Ok
    } else {
        Status::Findings
    })
}

#[derive(Debug, Serialize)]
struct Finding {
    category: String,
    path: String,
    evidence: String,
}

#[derive(Debug, Serialize)]
struct StepFindings {
    /// 0-based message index.
    step: usize,
    line: usize,
    role: Role,
    tool: Option<String>,
    tool_call_id: Option<String>,
    findings: Vec<Finding>,
}

#[derive(Debug, Serialize)]
struct TrajectoryReport {
    messages: usize,
    tool_calls: usize,
    tool_responses: usize,
    counts: BTreeMap<String, usize>,
    steps: Vec<StepFindings>,
    diagnostics: Vec<String>,
}

pub struct AnalyzeArgs {
    pub traj: PathBuf,
    pub tools: PathBuf,
    pub judge: bool,
}

pub fn analyze_trajectory(cfg: &CliConfig, a: AnalyzeArgs) -> Result<Status, CliError> {
    let registry = input::registry(&a.tools)?;
    let traj = input::trajectory(&a.traj)?;
    let judge = if a.judge { Some(cfg.judge()?) } else { None };
    let lexicon = match &cfg.review.lexicon_file {
        Some(p) => Lexicon::from_file(p).map_err(|e| CliError::Operational(e.to_string()))?,
        None => Lexicon::default(),
    };
    let mut counts: BTreeMap<String, usize> = IssueCategory::ALL.iter().map(|c| (c.as_str().to_owned(), 0)).collect();
    for o in [ReviewOutcome::NotAccomplished, ReviewOutcome::PartiallyAccomplished] {
        counts.insert(o.as_str().to_owned(), 0);
    }
    let mut report = TrajectoryReport {
        messages: traj.messages.len(),
        tool_calls: 0,
        tool_responses: 0,
        counts,
        steps: Vec::new(),
        diagnostics: traj.diagnostics.iter().map(ToString::to_string).collect(),
    };
    // tool_call_id -> tool name, for finding the spec of a tool response.
    let mut called: BTreeMap<String, String> = BTreeMap::new();
    for (i, m) in traj.messages.iter().enumerate() {
        let history = &traj.messages[..i];
        let line = traj.line_numbers[i];
        match m.role {
            Role::Assistant => {
                for call in &m.tool_calls {
                    report.tool_calls += 1;
                    called.insert(call.id.clone(), call.tool_name.clone());
                    let r = sparc_validate(call, &registry, history, judge.as_deref(), &cfg.sparc)
                        .map_err(|e| CliError::Operational(format!("judge: {e}")))?;
                    if r.issues.is_empty() {
                        continue;
                    }
                    for issue in &r.issues {
                        *report.counts.entry(issue.category.as_str().to_owned()).or_default() += 1;
                    }
                    report.steps.push(StepFindings {
                        step: i,
                        line,
                        role: m.role,
                        tool: Some(call.tool_name.clone()),
                        tool_call_id: Some(call.id.clone()),
                        findings: r
                            .issues
                            .iter()
                            .map(|x| Finding {
                                category: x.category.as_str().to_owned(),
                                path: x.path.clone(),
                                evidence: x.evidence.clone(),
                            })
                            .collect(),
                    });
                }
            }
            Role::Tool => {
                report.tool_responses += 1;
                let id = m.tool_call_id.clone().unwrap_or_default();
                let tool = called.get(&id).cloned();
                let input = ReviewInput {
                    messages: history.to_vec(),
                    tool_response: ToolResponse::from_text(id.clone(), None, &m.content),
                    tool_spec: tool.as_ref().and_then(|t| registry.get(t).cloned()),
                };
                let r = review_heuristic(&input, &lexicon);
                if r.outcome == ReviewOutcome::Accomplished {
                    continue;
                }
                *report.counts.entry(r.outcome.as_str().to_owned()).or_default() += 1;
                report.steps.push(StepFindings {
                    step: i,
                    line,
                    role: m.role,
                    tool,
                    tool_call_id: Some(id),
                    findings: vec![Finding {
                        category: r.outcome.as_str().to_owned(),
                        path: r.matched_rule.clone().unwrap_or_default(),
                        evidence: r.rationale.clone(),
                    }],
                });
            }
            _ => {}
        }
    }
    let findings: usize = report.steps.iter().map(|s| s.findings.len()).sum();
    emit(cfg.format, &report, |r| {
        let nonzero: Vec<Vec<String>> = r
            .counts
            .iter()
            .filter(|(_, n)| **n > 0)
            .map(|(k, n)| vec![k.clone(), n.to_string()])
            .collect();
        let mut out = format!(
            "{} messages, {} tool calls, {} tool responses, {} findings\n",
            r.messages, r.tool_calls, r.tool_responses, findings
        );
        if !nonzero.is_empty() {
            out.push('\n');
            out.push_str(&table(&["category", "count"], &nonzero));
        }
        let rows: Vec<Vec<String>> = r
            .steps
            .iter()
            .flat_map(|s| {
                s.findings.iter().map(move |f| {
                    vec![
                        s.step.to_string(),
                        s.line.to_string(),
                        s.tool.clone().unwrap_or_else(|| "-".into()),
                        f.category.clone(),
                        f.path.clone(),
                        f.evidence.clone(),
                    ]
                })
            })
            .collect();
        if !rows.is_empty() {
            out.push('\n');
            out.push_str(&table(&["step", "line", "tool", "category", "path", "evidence"], &rows));
        }
        out
    });
    Ok(if findings == 0 { Status::Ok } else { Status::Findings })
}

pub struct GatewayArgs {
    pub http: Option<String>,
    pub no_stdio: bool,
}

pub fn gateway(cfg: &CliConfig, a: GatewayArgs) -> Result<Status, CliError> {
    let mut config: GatewayConfig = cfg.gateway.clone().ok_or_else(|| {
        CliError::Usage("the gateway needs a `gateway` section in the --config file".into())
    })?;
    if let Some(addr) = a.http {
        config.listen.http = Some(addr);
    }
    if a.no_stdio {
        config.listen.stdio = false;
    }
    config.check().map_err(|e| CliError::Config {
        path: cfg.source.clone().unwrap_or_default(),
        key: format!("gateway.{}", e.key_path().unwrap_or_default()),
        message: e.to_string(),
    })?;
    let judge = if config.judge.enabled { Some(cfg.judge()?) } else { None };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Operational(e.to_string()))?;
    rt.block_on(async move {
        let mut builder = Gateway::builder(config);
        if let Some(j) = judge {
            builder = builder.judge(j);
        }
        let gateway = Arc::new(builder.connect().await.map_err(gateway_error)?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        agentguard_gateway::serve(gateway, shutdown).await.map_err(gateway_error)
    })?;
    Ok(Status::Ok)
}

fn gateway_error(e: agentguard_gateway::GatewayError) -> CliError {
    match e {
        agentguard_gateway::GatewayError::Config(c) => CliError::Config {
            path: PathBuf::new(),
            key: format!("gateway.{}", c.key_path().unwrap_or_default()),
            message: c.to_string(),
        },
        other => CliError::Operational(other.to_string()),
    }
}

pub struct HarnessArgs {
    pub suite: String,
    pub a: Option<String>,
    pub b: Option<String>,
    pub seed: Option<u64>,
}

/// A preset name (`none`, `sparc`, `review`, `sparc+review`) or a gateway
/// config file.
fn comparison_config(spec: &str) -> Result<GatewayConfig, CliError> {
    let (pre, post): (&[ComponentId], &[ComponentId]) = match spec {
        "none" => (&[], &[]),
        "sparc" => (&[ComponentId::Sparc], &[]),
        "review" => (&[], &[ComponentId::SilentReview]),
        "sparc+review" => (&[ComponentId::Sparc], &[ComponentId::SilentReview]),
        path => {
            return GatewayConfig::from_file(std::path::Path::new(path)).map_err(|e| CliError::Config {
                path: PathBuf::from(path),
                key: e.key_path().unwrap_or_default().to_owned(),
                message: e.to_string(),
            })
        }
    };
    Ok(suite_config(pre, post))
}

pub fn harness_run(cfg: &CliConfig, a: HarnessArgs) -> Result<Status, CliError> {
    let suite = match Suite::builtin(&a.suite) {
        Some(s) => s,
        None => {
            let path = PathBuf::from(&a.suite);
            if !path.exists() {
                return Err(CliError::Usage(format!(
                    "`{}` is neither a built-in suite ({}) nor a file",
                    a.suite,
                    BUILTIN_SUITES.join(", ")
                )));
            }
            Suite::from_json_str(&input::read(&path)?).map_err(|e| CliError::Operational(format!("{}: {e}", path.display())))?
        }
    };
    let (default_a, default_b) = match a.suite.as_str() {
        "invalid-call" => ("sparc", "none"),
        "silent-error" => ("sparc+review", "sparc"),
        _ => ("sparc+review", "none"),
    };
    let config_a = comparison_config(a.a.as_deref().unwrap_or(default_a))?;
    let config_b = comparison_config(a.b.as_deref().unwrap_or(default_b))?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let report = run_episode_suite(&suite, &config_a, &config_b, seed).map_err(|e| CliError::Operational(e.to_string()))?;
    match cfg.format {
        crate::config::Format::Json => println!("{}", report.to_json()),
        crate::config::Format::Table => print!("{}", report.to_table()),
    }
    Ok(Status::Ok)
}

pub struct MockArgs {
    pub http: Option<String>,
    pub tools: Option<PathBuf>,
    pub rate: f64,
    pub seed: u64,
    pub huge_items: Option<usize>,
    pub huge_depth: usize,
}

pub fn mock_server(_cfg: &CliConfig, a: MockArgs) -> Result<Status, CliError> {
    let tools = match &a.tools {
        Some(p) => match input::read_json(p)? {
            Value::Array(list) => list,
            Value::Object(mut m) => match m.remove("tools") {
                Some(Value::Array(list)) => list,
                _ => return Err(CliError::Operational(format!("{}: expected a list of tools", p.display()))),
            },
            _ => return Err(CliError::Operational(format!("{}: expected a list of tools", p.display()))),
        },
        None => agentguard_harness::airline::tools(),
    };
    let profile = FaultProfile {
        silent_error_rate: a.rate,
        huge_payload: a.huge_items.map(|items| HugePayload { items, depth: a.huge_depth }),
        seed: a.seed,
        ..FaultProfile::default()
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Operational(e.to_string()))?;
    rt.block_on(async move {
        match a.http {
            Some(addr) => {
                let endpoint = agentguard_harness::run_mock_upstream(tools, profile, &addr)
                    .await
                    .map_err(|e| CliError::Operational(format!("cannot bind {addr}: {e}")))?;
                eprintln!("mock tool server listening on {}", endpoint.url);
                let _ = tokio::signal::ctrl_c().await;
                eprintln!("{}", json!({"calls": endpoint.server.call_count(), "injected": endpoint.server.injected_count()}));
                Ok(())
            }
            None => {
                let server = MockToolServer::new(tools, profile);
                let stdin = tokio::io::BufReader::new(tokio::io::stdin());
                server.serve_stdio(stdin, tokio::io::stdout()).await.map_err(|e| CliError::Operational(e.to_string()))
            }
        }
    })?;
    Ok(Status::Ok)
}

