//! Post-tool JSON processing. Instead of handing a large response to the
//! agent, a judge writes a query in a small loop-free language; the query is
//! executed here and only its result moves on. Parse and execution errors go
//! back to the judge for another attempt.

mod ast;
mod exec;
mod extract;
mod parse;

use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::json;
use thiserror::Error;

pub use ast::{AggregateOp, Comparator, Path, QueryProgram, QueryStep, Segment};
pub use exec::{execute, execute_with_stats, ExecError, ExecStats, Limits};
pub use extract::{
    canonical_len, extract, fallback_excerpt, query_from_reply, run_program, skeleton, AttemptTranscript,
    ExtractConfig, ExtractError, ExtractionResult, EXTRACT_SYSTEM_PROMPT,
};
pub use parse::{parse_query, QueryParseError};

use crate::component::{Component, ComponentError, ComponentResult};
use crate::judge::JudgeClient;
use crate::model::{AgentPhase, LifecycleStage, ToolResponse};
use crate::schema::SchemaNode;

/// Either way a query can fail; the message is what the judge sees on retry.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error(transparent)]
    Parse(#[from] QueryParseError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

impl Serialize for QueryProgram {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source_text)
    }
}

#[derive(Debug, Clone, Default)]
pub struct JsonProcessorInput {
    pub response: ToolResponse,
    /// Natural-language question; the judge turns it into a query.
    pub question: Option<String>,
    /// Literal program text; takes precedence over `question`.
    pub program: Option<String>,
    pub schema: Option<SchemaNode>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JsonProcessorConfig {
    pub extract: ExtractConfig,
}

pub struct JsonProcessorComponent {
    judge: Option<Arc<dyn JudgeClient>>,
    config: JsonProcessorConfig,
}

impl JsonProcessorComponent {
    pub fn new(judge: Option<Arc<dyn JudgeClient>>, config: JsonProcessorConfig) -> Self {
        Self { judge, config }
    }
}

impl Component for JsonProcessorComponent {
    type Input = JsonProcessorInput;

    fn id(&self) -> &'static str {
        "json_processor"
    }

    fn stage(&self) -> LifecycleStage {
        LifecycleStage::PostTool
    }

    /// `TRANSFORMED` carries the extraction result; `FAIL` carries the
    /// attempt transcripts and a truncated raw body to fall back on.
    fn process(&self, input: &JsonProcessorInput, phase: AgentPhase) -> Result<ComponentResult, ComponentError> {
        self.check_phase(phase)?;
        if !input.response.is_json {
            return Err(ComponentError::MalformedInput {
                path: "/response/body".into(),
                reason: "body is not JSON".into(),
            });
        }
        let cfg = &self.config.extract;
        let fallback = || fallback_excerpt(&input.response, cfg.fallback_bytes);
        if let Some(text) = &input.program {
            return Ok(match run_program(text, &input.response, cfg.limits) {
                Ok(r) => ComponentResult::transformed(json!(r)),
                Err(e) => ComponentResult::fail(json!({"fallback": fallback(), "error": e.to_string()}), e.to_string()),
            });
        }
        let (Some(question), Some(judge)) = (&input.question, &self.judge) else {
            return Err(ComponentError::MalformedInput {
                path: "/question".into(),
                reason: "need a literal program, or a question and a judge".into(),
            });
        };
        Ok(
            match extract(&input.response, question, input.schema.as_ref(), judge.as_ref(), cfg) {
                Ok(r) => ComponentResult::transformed(json!(r)),
                Err(e) => ComponentResult::fail(
                    json!({"fallback": fallback(), "attempts": e.transcripts()}),
                    e.to_string(),
                ),
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::component::Outcome;
    use crate::judge::MockJudge;

    #[test]
    fn literal_program_bypasses_judge() {
        let c = JsonProcessorComponent::new(None, JsonProcessorConfig::default());
        let input = JsonProcessorInput {
            response: ToolResponse::from_json("t", None, json!({"items": [1, 2, 3]})),
            program: Some(".items | count".into()),
            ..Default::default()
        };
        let r = c.process(&input, AgentPhase::Runtime).unwrap();
        assert_eq!(r.outcome, Outcome::Transformed);
        assert_eq!(r.payload["value"], json!(3));
        assert_eq!(r.payload["program"], json!(".items | count"));
    }

    #[test]
    fn failure_carries_fallback() {
        let judge: Arc<dyn JudgeClient> = Arc::new(MockJudge::replies([".x", ".y", ".z"]));
        let c = JsonProcessorComponent::new(Some(judge), JsonProcessorConfig::default());
        let input = JsonProcessorInput {
            response: ToolResponse::from_json("t", None, json!({"items": []})),
            question: Some("?".into()),
            ..Default::default()
        };
        let r = c.process(&input, AgentPhase::Runtime).unwrap();
        assert_eq!(r.outcome, Outcome::Fail);
        assert_eq!(r.payload["fallback"], json!(r#"{"items":[]}"#));
        assert_eq!(r.payload["attempts"].as_array().unwrap().len(), 3);
        assert!(c.process(&input, AgentPhase::Buildtime).is_err());
    }
}
