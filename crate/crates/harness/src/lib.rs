//! Deterministic test rig: a mock tool server with fault injection, a large
//! JSON payload generator, a labelled review corpus and a scripted ReAct
//! agent that compares gateway configurations on the same episodes.

pub mod airline;
pub mod episode;
pub mod fault;
pub mod mock;
pub mod payload;
pub mod review_corpus;
pub mod suite;

use thiserror::Error;

pub use episode::{run_episode, Decision, Episode, EpisodeOutcome, GoalPredicate};
pub use fault::{FaultProfile, HugePayload};
pub use mock::{run_mock_upstream, MockEndpoint, MockToolServer};
pub use payload::{huge_payload, EXTRACTION_QUERIES};
pub use suite::{run_episode_suite, suite_config, ComparisonReport, Suite};

#[derive(Debug, Error)]
pub enum HarnessError {
    /// The agent exceeded its hard step cap; this is a harness bug.
    #[error("episode `{episode}` did not terminate within {cap} steps")]
    EpisodeNonTermination { episode: String, cap: usize },
    #[error("gateway: {0}")]
    Gateway(#[from] agentguard_gateway::GatewayError),
    #[error("invalid suite: {0}")]
    Suite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<agentguard_gateway::ConfigError> for HarnessError {
    fn from(e: agentguard_gateway::ConfigError) -> Self {
        HarnessError::Gateway(e.into())
    }
}
