use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Bodies injected as silent errors: transport-successful, semantically failed.
pub const DEFAULT_SILENT_BODIES: &[&str] = &[
    "No results found",
    "Service under maintenance",
    "Temporarily unavailable, please try again later",
    r#"{"results": [], "message": "No results found for this query"}"#,
    r#"{"error": {"code": "RATE_LIMIT", "message": "rate limit exceeded"}}"#,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HugePayload {
    pub items: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultProfile {
    #[serde(default)]
    pub silent_error_rate: f64,
    #[serde(default = "default_bodies")]
    pub silent_error_bodies: Vec<String>,
    #[serde(default)]
    pub huge_payload: Option<HugePayload>,
    #[serde(default)]
    pub seed: u64,
}

fn default_bodies() -> Vec<String> {
    DEFAULT_SILENT_BODIES.iter().map(|s| s.to_string()).collect()
}

impl Default for FaultProfile {
    fn default() -> Self {
        Self {
            silent_error_rate: 0.0,
            silent_error_bodies: default_bodies(),
            huge_payload: None,
            seed: 0,
        }
    }
}

impl FaultProfile {
    pub fn with_rate(rate: f64, seed: u64) -> Self {
        Self {
            silent_error_rate: rate,
            seed,
            ..Self::default()
        }
    }

    /// The silent-error body for the `nth` (0-based) occurrence of this exact
    /// call, if one is injected.
    ///
    /// The draw depends only on the seed, the tool, the arguments and `nth`,
    /// not on global call order, so two runs that issue the same calls see the
    /// same faults regardless of interleaving.
    pub fn injection(&self, tool: &str, arguments: &Map<String, Value>, nth: u64) -> Option<&str> {
        if self.silent_error_rate <= 0.0 || self.silent_error_bodies.is_empty() {
            return None;
        }
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(tool.as_bytes());
        h.update([0]);
        h.update(Value::Object(arguments.clone()).to_string().as_bytes());
        h.update(nth.to_le_bytes());
        let seed: [u8; 32] = h.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        if !rng.random_bool(self.silent_error_rate.min(1.0)) {
            return None;
        }
        let i = rng.random_range(0..self.silent_error_bodies.len());
        Some(&self.silent_error_bodies[i])
    }
}
