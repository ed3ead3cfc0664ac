//! The uniform component contract: define the input, build the component,
//! call [`Component::process`] and inspect the [`ComponentResult`].

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::judge::JudgeError;
use crate::model::{AgentPhase, LifecycleStage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Fail,
    /// Proceed, but with the rewritten payload.
    Transformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentResult {
    pub outcome: Outcome,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
}

impl ComponentResult {
    pub fn pass(payload: Value) -> Self {
        Self {
            outcome: Outcome::Pass,
            payload,
            feedback: None,
        }
    }

    pub fn transformed(payload: Value) -> Self {
        Self {
            outcome: Outcome::Transformed,
            payload,
            feedback: None,
        }
    }

    /// A failing result. Empty feedback is replaced by a generic message so
    /// that a failure always tells the agent something.
    pub fn fail(payload: Value, feedback: impl Into<String>) -> Self {
        let mut feedback = feedback.into();
        if feedback.trim().is_empty() {
            feedback = "The component rejected this step; revise it and try again.".into();
        }
        Self {
            outcome: Outcome::Fail,
            payload,
            feedback: Some(feedback),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComponentError {
    #[error("component `{component}` does not support phase {phase:?}")]
    UnsupportedPhase { component: &'static str, phase: AgentPhase },
    #[error("malformed input at {path}: {reason}")]
    MalformedInput { path: String, reason: String },
    #[error(transparent)]
    Judge(#[from] JudgeError),
}

pub trait Component {
    type Input;

    /// Stable identifier used in configuration (`sparc`, `silent_review`, ...).
    fn id(&self) -> &'static str;

    fn stage(&self) -> LifecycleStage;

    fn supports(&self, phase: AgentPhase) -> bool {
        phase == AgentPhase::Runtime
    }

    fn process(&self, input: &Self::Input, phase: AgentPhase) -> Result<ComponentResult, ComponentError>;

    /// Phase gate shared by implementations.
    fn check_phase(&self, phase: AgentPhase) -> Result<(), ComponentError> {
        if self.supports(phase) {
            Ok(())
        } else {
            Err(ComponentError::UnsupportedPhase {
                component: self.id(),
                phase,
            })
        }
    }
}
