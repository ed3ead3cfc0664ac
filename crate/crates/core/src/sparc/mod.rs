//! Pre-tool validation of candidate tool calls.
//!
//! Three tiers run in order:
//!
//! 1. **Syntactic**: the tool exists and the arguments satisfy its schema.
//!    Any violation the transformation tier cannot take over stops the
//!    pipeline here, and the judge is never consulted.
//! 2. **Transformation**: dates, currency amounts, enum casing and numeric
//!    strings are normalized to what the schema asks for. Ambiguous inputs
//!    are flagged rather than guessed.
//! 3. **Semantic**: an LLM judge checks selection, grounding, hallucination,
//!    value format and prerequisites. Without a judge, a deterministic
//!    grounding check runs instead. This tier sees the repaired arguments.
//!
//! The judge-only categories (`WRONG_FUNCTION_SELECTION`,
//! `UNMET_PREREQUISITE`, ...) are never produced without a judge.

mod semantic;
mod syntactic;
mod transform;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::component::{Component, ComponentError, ComponentResult};
use crate::judge::{JudgeClient, JudgeError, DEFAULT_PROMPT_BUDGET};
use crate::model::{AgentPhase, LifecycleStage, Message, ToolCall, ToolRegistry};
use crate::schema::validate;

pub use semantic::{dimension_prompt, parse_judge_verdict, validate_semantic, Dimension, DIMENSIONS, SEMANTIC_PROMPT_VERSION};
pub use syntactic::validate_syntactic;
pub use transform::{convert_date, parse_currency, validate_transform, CurrencyAmount, DateConversion, Repair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tier {
    Syntactic,
    Semantic,
    Transformation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCategory {
    NonexistentTool,
    UnknownArgument,
    MissingRequired,
    TypeMismatch,
    SchemaViolation,
    WrongFunctionSelection,
    UngroundedParameter,
    HallucinatedValue,
    ValueFormatMisaligned,
    UnmetPrerequisite,
    UnconvertibleFormat,
    AmbiguousConversion,
}

impl IssueCategory {
    pub const ALL: [IssueCategory; 12] = [
        IssueCategory::NonexistentTool,
        IssueCategory::UnknownArgument,
        IssueCategory::MissingRequired,
        IssueCategory::TypeMismatch,
        IssueCategory::SchemaViolation,
        IssueCategory::WrongFunctionSelection,
        IssueCategory::UngroundedParameter,
        IssueCategory::HallucinatedValue,
        IssueCategory::ValueFormatMisaligned,
        IssueCategory::UnmetPrerequisite,
        IssueCategory::UnconvertibleFormat,
        IssueCategory::AmbiguousConversion,
    ];

    pub fn tier(self) -> Tier {
        use IssueCategory::*;
        match self {
            NonexistentTool | UnknownArgument | MissingRequired | TypeMismatch | SchemaViolation => Tier::Syntactic,
            WrongFunctionSelection | UngroundedParameter | HallucinatedValue | ValueFormatMisaligned
            | UnmetPrerequisite => Tier::Semantic,
            UnconvertibleFormat | AmbiguousConversion => Tier::Transformation,
        }
    }

    pub fn as_str(self) -> &'static str {
        use IssueCategory::*;
        match self {
            NonexistentTool => "NONEXISTENT_TOOL",
            UnknownArgument => "UNKNOWN_ARGUMENT",
            MissingRequired => "MISSING_REQUIRED",
            TypeMismatch => "TYPE_MISMATCH",
            SchemaViolation => "SCHEMA_VIOLATION",
            WrongFunctionSelection => "WRONG_FUNCTION_SELECTION",
            UngroundedParameter => "UNGROUNDED_PARAMETER",
            HallucinatedValue => "HALLUCINATED_VALUE",
            ValueFormatMisaligned => "VALUE_FORMAT_MISALIGNED",
            UnmetPrerequisite => "UNMET_PREREQUISITE",
            UnconvertibleFormat => "UNCONVERTIBLE_FORMAT",
            AmbiguousConversion => "AMBIGUOUS_CONVERSION",
        }
    }
}

impl fmt::Display for IssueCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub tier: Tier,
    pub category: IssueCategory,
    /// JSON pointer into the arguments; empty for call-level issues.
    pub path: String,
    pub evidence: String,
    pub suggestion: String,
}

impl ValidationIssue {
    /// Builds an issue with the tier implied by `category`. An empty
    /// suggestion is replaced by a generic one.
    pub fn new(category: IssueCategory, path: &str, evidence: impl Into<String>, suggestion: impl Into<String>) -> Self {
        let mut suggestion = suggestion.into();
        if suggestion.trim().is_empty() {
            suggestion = if path.is_empty() {
                "Reconsider this tool call against the user's request and the tool description.".to_owned()
            } else {
                format!("Revise the value at {path} so it matches the user's request and the tool description.")
            };
        }
        Self {
            tier: category.tier(),
            category,
            path: path.to_owned(),
            evidence: evidence.into(),
            suggestion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub issues: Vec<ValidationIssue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repaired_arguments: Option<Map<String, Value>>,
    pub judge_consulted: bool,
    /// Individual rewrites behind `repaired_arguments`.
    #[serde(default, skip_serializing_if = "Vec::is_empty", skip_deserializing)]
    pub repairs: Vec<Repair>,
}

impl ValidationReport {
    fn new(issues: Vec<ValidationIssue>) -> Self {
        Self {
            valid: issues.is_empty(),
            issues,
            repaired_arguments: None,
            judge_consulted: false,
            repairs: Vec::new(),
        }
    }

    /// Agent-facing summary of the issues, one line each.
    pub fn feedback(&self) -> String {
        if self.valid {
            return String::new();
        }
        let mut s = String::from("Tool call rejected before execution.\n");
        for i in &self.issues {
            let at = if i.path.is_empty() { String::new() } else { format!(" at {}", i.path) };
            s.push_str(&format!("- {}{at}: {} Suggestion: {}\n", i.category, i.evidence, i.suggestion));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailMode {
    /// Judge outage: warn and continue without semantic issues.
    #[default]
    Open,
    /// Judge outage: return the error to the caller.
    Closed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DateTarget {
    #[default]
    Iso8601,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemanticConfig {
    pub enabled: bool,
}

impl Default for SemanticConfig {
    fn default() -> Self {
        Self { enabled: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformConfig {
    pub date_target: DateTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SparcConfig {
    pub fail_mode: FailMode,
    pub semantic: SemanticConfig,
    pub transform: TransformConfig,
    pub prompt_budget_bytes: usize,
}

impl Default for SparcConfig {
    fn default() -> Self {
        Self {
            fail_mode: FailMode::Open,
            semantic: SemanticConfig::default(),
            transform: TransformConfig::default(),
            prompt_budget_bytes: DEFAULT_PROMPT_BUDGET,
        }
    }
}

/// Runs all three tiers on a candidate call.
pub fn sparc_validate(
    call: &ToolCall,
    registry: &ToolRegistry,
    history: &[Message],
    judge: Option<&dyn JudgeClient>,
    config: &SparcConfig,
) -> Result<ValidationReport, JudgeError> {
    let syntactic = validate_syntactic(call, registry);
    let Some(spec) = registry.get(&call.tool_name) else {
        return Ok(ValidationReport::new(syntactic));
    };

    let transformed = transform::transform_arguments(&call.arguments, &spec.parameters);
    // Violations the transformation tier neither repaired nor reported on.
    if syntactic.iter().any(|i| !transformed.claimed.contains(&i.path)) {
        return Ok(ValidationReport::new(syntactic));
    }

    let effective = transformed.repaired.as_ref().unwrap_or(&call.arguments);
    let flagged: BTreeSet<&str> = transformed.issues.iter().map(|i| i.path.as_str()).collect();
    let residual: Vec<ValidationIssue> = syntactic::argument_issues(effective, spec)
        .into_iter()
        .filter(|i| !flagged.contains(i.path.as_str()))
        .collect();
    if !residual.is_empty() {
        let mut issues = residual;
        issues.extend(transformed.issues);
        return Ok(ValidationReport::new(issues));
    }

    let repaired_arguments = transformed
        .repaired
        .clone()
        .filter(|r| validate(&Value::Object(r.clone()), &spec.parameters).is_empty());

    let mut issues = transformed.issues.clone();
    let mut judge_consulted = false;
    if config.semantic.enabled {
        let semantic = match judge {
            Some(j) => {
                judge_consulted = true;
                let effective_call = ToolCall::new(call.id.clone(), call.tool_name.clone(), effective.clone());
                match validate_semantic(&effective_call, spec, history, Some(j), config.prompt_budget_bytes) {
                    Ok(found) => found,
                    Err(e) if config.fail_mode == FailMode::Open => {
                        tracing::warn!(tool = %call.tool_name, error = %e, "judge unavailable; semantic tier skipped (fail-open)");
                        Vec::new()
                    }
                    Err(e) => return Err(e),
                }
            }
            None => semantic::grounding_fallback(effective, Some(&call.arguments), spec, history),
        };
        issues.extend(semantic);
    }

    let mut report = ValidationReport::new(issues);
    report.repaired_arguments = repaired_arguments;
    report.judge_consulted = judge_consulted;
    if report.repaired_arguments.is_some() {
        report.repairs = transformed.repairs;
    }
    Ok(report)
}

/// Validates many independent calls, in parallel when the `parallel`
/// feature is enabled. Output order matches input order.
pub fn sparc_validate_batch(
    items: &[(ToolCall, Vec<Message>)],
    registry: &ToolRegistry,
    judge: Option<&dyn JudgeClient>,
    config: &SparcConfig,
) -> Vec<Result<ValidationReport, JudgeError>> {
    crate::par::map(items, |(call, history)| sparc_validate(call, registry, history, judge, config))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparcInput {
    pub call: ToolCall,
    pub history: Vec<Message>,
}

/// [`sparc_validate`] behind the [`Component`] contract.
pub struct SparcComponent {
    registry: Arc<ToolRegistry>,
    judge: Option<Arc<dyn JudgeClient>>,
    config: SparcConfig,
}

impl SparcComponent {
    pub fn new(registry: Arc<ToolRegistry>, judge: Option<Arc<dyn JudgeClient>>, config: SparcConfig) -> Self {
        Self { registry, judge, config }
    }
}

impl Component for SparcComponent {
    type Input = SparcInput;

    fn id(&self) -> &'static str {
        "sparc"
    }

    fn stage(&self) -> LifecycleStage {
        LifecycleStage::PreTool
    }

    fn process(&self, input: &SparcInput, phase: AgentPhase) -> Result<ComponentResult, ComponentError> {
        self.check_phase(phase)?;
        if self.registry.is_empty() {
            return Err(ComponentError::MalformedInput {
                path: "/registry".into(),
                reason: "tool registry is empty".into(),
            });
        }
        let report = sparc_validate(
            &input.call,
            &self.registry,
            &input.history,
            self.judge.as_deref(),
            &self.config,
        )?;
        let payload = json!(report);
        Ok(if !report.valid {
            ComponentResult::fail(payload, report.feedback())
        } else if report.repaired_arguments.is_some() {
            ComponentResult::transformed(payload)
        } else {
            ComponentResult::pass(payload)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::component::Outcome;
    use crate::judge::MockJudge;
    use serde_json::json;

    fn registry() -> ToolRegistry {
        ToolRegistry::from_json(&json!({
            "book_flight": {"description": "Book a flight", "parameters": {"type":"object","properties":{
                "destination": {"type":"string"},
                "date": {"type":"string","format":"date"},
                "class": {"type":"string","enum":["economy","business"]},
                "budget": {"type":"number","format":"currency"}
            }, "required": ["destination","date"]}}
        }))
        .unwrap()
    }

    fn call(name: &str, args: Value) -> ToolCall {
        ToolCall::new("c1", name, args.as_object().unwrap().clone())
    }

    fn history() -> Vec<Message> {
        vec![Message::user("Book me a flight to Paris on March 13, 2026, budget $1,234.50")]
    }

    #[test]
    fn fully_valid_call() {
        let r = sparc_validate(
            &call("book_flight", json!({"destination":"Paris","date":"2026-03-13"})),
            &registry(),
            &history(),
            None,
            &SparcConfig::default(),
        )
        .unwrap();
        assert!(r.valid && r.issues.is_empty() && r.repaired_arguments.is_none());
    }

    #[test]
    fn nonexistent_tool_short_circuits() {
        let judge = MockJudge::replies(["PASS"]);
        let r = sparc_validate(&call("book", json!({})), &registry(), &history(), Some(&judge), &SparcConfig::default()).unwrap();
        assert!(!r.valid);
        assert_eq!(r.issues.len(), 1);
        assert_eq!(r.issues[0].category, IssueCategory::NonexistentTool);
        assert!(!r.judge_consulted);
        assert_eq!(judge.call_count(), 0);
    }

    #[test]
    fn convertible_date_is_repaired() {
        let r = sparc_validate(
            &call("book_flight", json!({"destination":"Paris","date":"March 13, 2026","budget":"$1,234.50"})),
            &registry(),
            &history(),
            None,
            &SparcConfig::default(),
        )
        .unwrap();
        assert!(r.valid, "{:?}", r.issues);
        let fixed = r.repaired_arguments.unwrap();
        assert_eq!(fixed["date"], "2026-03-13");
        assert_eq!(fixed["budget"], json!(1234.5));
        assert_eq!(r.repairs.len(), 2);
    }

    #[test]
    fn ambiguous_date_blocks_without_repair() {
        let h = vec![Message::user("Paris on 03/04/2026")];
        let r = sparc_validate(
            &call("book_flight", json!({"destination":"Paris","date":"03/04/2026"})),
            &registry(),
            &h,
            None,
            &SparcConfig::default(),
        )
        .unwrap();
        assert!(!r.valid);
        assert_eq!(r.issues.len(), 1);
        assert_eq!(r.issues[0].category, IssueCategory::AmbiguousConversion);
        assert!(r.repaired_arguments.is_none());
    }

    #[test]
    fn hard_violation_hides_later_tiers() {
        let judge = MockJudge::replies(["PASS"]);
        let r = sparc_validate(
            &call("book_flight", json!({"destination":"Paris","date":"March 13, 2026","extra":1})),
            &registry(),
            &history(),
            Some(&judge),
            &SparcConfig::default(),
        )
        .unwrap();
        let cats: Vec<_> = r.issues.iter().map(|i| i.category).collect();
        assert_eq!(cats, vec![IssueCategory::SchemaViolation, IssueCategory::UnknownArgument]);
        assert!(r.issues.iter().all(|i| i.tier == Tier::Syntactic));
        assert!(!r.judge_consulted);
    }

    #[test]
    fn fail_open_and_fail_closed() {
        let garbage = MockJudge::replies(["???"]);
        let c = call("book_flight", json!({"destination":"Paris","date":"2026-03-13"}));
        let open = sparc_validate(&c, &registry(), &history(), Some(&garbage), &SparcConfig::default()).unwrap();
        assert!(open.valid && open.judge_consulted);
        let closed_cfg = SparcConfig {
            fail_mode: FailMode::Closed,
            ..SparcConfig::default()
        };
        let garbage = MockJudge::replies(["???"]);
        assert!(sparc_validate(&c, &registry(), &history(), Some(&garbage), &closed_cfg).is_err());
    }

    #[test]
    fn semantic_disabled_skips_grounding() {
        let cfg = SparcConfig {
            semantic: SemanticConfig { enabled: false },
            ..SparcConfig::default()
        };
        let r = sparc_validate(&call("book_flight", json!({"destination":"Rome","date":"2026-03-13"})), &registry(), &history(), None, &cfg).unwrap();
        assert!(r.valid);
    }

    #[test]
    fn component_outcomes() {
        let comp = SparcComponent::new(Arc::new(registry()), None, SparcConfig::default());
        assert_eq!(comp.stage(), LifecycleStage::PreTool);
        let input = |args: Value| SparcInput {
            call: call("book_flight", args),
            history: history(),
        };
        let pass = comp.process(&input(json!({"destination":"Paris","date":"2026-03-13"})), AgentPhase::Runtime).unwrap();
        assert_eq!(pass.outcome, Outcome::Pass);
        assert!(pass.feedback.is_none());
        let t = comp.process(&input(json!({"destination":"Paris","date":"March 13, 2026"})), AgentPhase::Runtime).unwrap();
        assert_eq!(t.outcome, Outcome::Transformed);
        let f = comp.process(&input(json!({"destination":"Paris"})), AgentPhase::Runtime).unwrap();
        assert_eq!(f.outcome, Outcome::Fail);
        assert!(f.feedback.unwrap().contains("MISSING_REQUIRED"));
        assert!(matches!(
            comp.process(&input(json!({})), AgentPhase::Buildtime),
            Err(ComponentError::UnsupportedPhase { .. })
        ));
    }
}
