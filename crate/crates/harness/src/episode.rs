//! Scripted ReAct episodes.
//!
//! The agent follows a fixed list of decisions. It only reacts to what the
//! gateway sends back: a SPARC rejection makes it try the next scripted
//! alternate, retry advice makes it repeat the call, and a result it cannot
//! use (a placeholder that does not resolve) costs a reasoning step and a
//! redo of the call that produced it.

use agentguard_core::jsonq::{run_program, Limits};
use agentguard_core::model::ToolResponse;
use agentguard_gateway::Gateway;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::mock::MockToolServer;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Episode {
    pub name: String,
    pub user_goal: String,
    pub decisions: Vec<Decision>,
    pub goal: GoalPredicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Decision {
    /// String argument values of the form `"$<query>"` are resolved against
    /// the result of the previous tool decision.
    ToolCall {
        tool: String,
        arguments: Map<String, Value>,
        #[serde(default)]
        alternates: Vec<Alternate>,
    },
    /// Each `requires` query must resolve (non-null) against the previous tool
    /// result; the resolved values are appended to `text`.
    FinalAnswer {
        text: String,
        #[serde(default)]
        requires: Vec<String>,
    },
}

/// What the agent tries after a rejection. `tool` defaults to the original.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alternate {
    #[serde(default)]
    pub tool: Option<String>,
    pub arguments: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalPredicate {
    pub all: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Condition {
    /// Some call to `tool` came back as a plain success whose text contains
    /// every string in `contains`.
    ToolSucceeded {
        tool: String,
        #[serde(default)]
        contains: Vec<String>,
    },
    FinalAnswer {
        #[serde(default)]
        contains: Vec<String>,
    },
}

/// One step of the agent's loop, as seen from the agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Step {
    Call {
        tool: String,
        arguments: Map<String, Value>,
        outcome: CallOutcome,
        /// Whether the upstream saw this request.
        reached_upstream: bool,
    },
    Think {
        note: String,
    },
    Final {
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CallOutcome {
    Ok { text: String },
    Rejected { categories: Vec<String> },
    RetryAdvised,
    ToolError { text: String },
    RpcError { code: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeOutcome {
    pub name: String,
    pub success: bool,
    pub steps: usize,
    pub upstream_calls: usize,
    pub rejected: usize,
    /// Rejected calls that nonetheless reached the upstream (must be 0).
    pub rejected_reaching_upstream: usize,
    pub trajectory: Vec<Step>,
}

impl Episode {
    /// Hard cap on agent steps. Tool attempts are bounded by
    /// `decisions × (max_retries + 1)`; reasoning steps at most double that.
    pub fn step_cap(&self, max_retries: u32) -> usize {
        2 * self.decisions.len() * (max_retries as usize + 1) + 1
    }
}

fn resolve_query(query: &str, last: Option<&str>) -> Option<Value> {
    let text = last?;
    let response = ToolResponse::from_text("", Some(200), text);
    if !response.is_json {
        return None;
    }
    let limits = Limits::default();
    match run_program(query, &response, limits) {
        Ok(r) if !r.value.is_null() => Some(r.value),
        _ => None,
    }
}

fn resolve_arguments(args: &Map<String, Value>, last: Option<&str>) -> Option<Map<String, Value>> {
    let mut out = Map::new();
    for (k, v) in args {
        let v = match v.as_str().and_then(|s| s.strip_prefix('$')) {
            Some(q) => resolve_query(q, last)?,
            None => v.clone(),
        };
        out.insert(k.clone(), v);
    }
    Some(out)
}

fn classify(reply: &str) -> CallOutcome {
    let v: Value = serde_json::from_str(reply).unwrap_or(Value::Null);
    if let Some(err) = v.get("error") {
        return CallOutcome::RpcError {
            code: err["code"].as_i64().unwrap_or(0),
        };
    }
    let result = &v["result"];
    let text: String = result["content"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|c| c["text"].as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let sc = &result["structuredContent"];
    if result["isError"] == true {
        if sc["rejected"] == true {
            if sc["reason"] == "NOT_ACCOMPLISHED" {
                return CallOutcome::RetryAdvised;
            }
            let categories = sc["issues"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|i| i["category"].as_str().map(str::to_owned))
                .collect();
            return CallOutcome::Rejected { categories };
        }
        return CallOutcome::ToolError { text };
    }
    CallOutcome::Ok { text }
}

struct Agent<'a> {
    gateway: &'a Gateway,
    mock: &'a MockToolServer,
    episode: &'a Episode,
    session: String,
    steps: Vec<Step>,
    cap: usize,
}

impl Agent<'_> {
    fn push(&mut self, step: Step) -> Result<(), HarnessError> {
        self.steps.push(step);
        if self.steps.len() > self.cap {
            return Err(HarnessError::EpisodeNonTermination {
                episode: self.episode.name.clone(),
                cap: self.cap,
            });
        }
        Ok(())
    }

    async fn call(&mut self, idx: usize, tool: &str, arguments: Map<String, Value>) -> Result<CallOutcome, HarnessError> {
        let before = self.mock.call_count();
        // The user turn is sent once; the gateway keeps the session history.
        let context = if self.steps.is_empty() {
            json!([{"role": "user", "content": self.episode.user_goal}])
        } else {
            json!([])
        };
        let request = json!({
            "jsonrpc": "2.0",
            "id": self.steps.len() + 1,
            "method": "tools/call",
            "params": {
                "name": tool,
                "arguments": arguments,
                "_meta": {"agentguard": {
                    "tool_call_id": format!("{}-{idx}", self.episode.name),
                    "context": context,
                }},
            },
        });
        let reply = self
            .gateway
            .handle_message(&self.session, &request.to_string())
            .await
            .unwrap_or_default();
        let outcome = classify(&reply);
        let reached = self.mock.call_count() > before;
        self.push(Step::Call {
            tool: tool.to_owned(),
            arguments,
            outcome: outcome.clone(),
            reached_upstream: reached,
        })?;
        Ok(outcome)
    }

    /// Runs the script; returns the final answer if one was given.
    async fn run(&mut self, max_retries: u32) -> Result<Option<String>, HarnessError> {
        let budget = max_retries as usize + 1;
        // Last successful result text per tool decision index.
        let mut results: Vec<Option<String>> = vec![None; self.episode.decisions.len()];
        let mut attempts = vec![0usize; self.episode.decisions.len()];
        let decisions = &self.episode.decisions;
        let prev_tool = |i: usize| (0..i).rev().find(|&j| matches!(decisions[j], Decision::ToolCall { .. }));
        let mut i = 0;
        while i < decisions.len() {
            let producer = prev_tool(i);
            let last = producer.and_then(|p| results[p].clone());
            match &decisions[i] {
                Decision::FinalAnswer { text, requires } => {
                    let resolved: Option<Vec<Value>> = requires.iter().map(|q| resolve_query(q, last.as_deref())).collect();
                    match resolved {
                        Some(values) => {
                            let mut answer = text.clone();
                            for v in values {
                                answer.push(' ');
                                answer.push_str(&match v {
                                    Value::String(s) => s,
                                    other => other.to_string(),
                                });
                            }
                            self.push(Step::Final { text: answer.clone() })?;
                            return Ok(Some(answer));
                        }
                        None => match self.redo(producer, &attempts, budget)? {
                            Some(p) => i = p,
                            None => return Ok(None),
                        },
                    }
                }
                Decision::ToolCall { tool, arguments, alternates } => {
                    let Some(args) = resolve_arguments(arguments, last.as_deref()) else {
                        match self.redo(producer, &attempts, budget)? {
                            Some(p) => {
                                i = p;
                                continue;
                            }
                            None => return Ok(None),
                        }
                    };
                    let mut candidates = vec![(tool.clone(), args)];
                    for alt in alternates {
                        let Some(a) = resolve_arguments(&alt.arguments, last.as_deref()) else { continue };
                        candidates.push((alt.tool.clone().unwrap_or_else(|| tool.clone()), a));
                    }
                    let mut which = 0;
                    let mut done = false;
                    while attempts[i] < budget {
                        attempts[i] += 1;
                        let (t, a) = candidates[which].clone();
                        match self.call(i, &t, a).await? {
                            CallOutcome::Ok { text } => {
                                results[i] = Some(text);
                                done = true;
                                break;
                            }
                            CallOutcome::RetryAdvised => {}
                            CallOutcome::Rejected { .. } if which + 1 < candidates.len() => which += 1,
                            _ => return Ok(None),
                        }
                    }
                    if !done {
                        return Ok(None);
                    }
                    i += 1;
                }
            }
        }
        Ok(None)
    }

    /// After an unusable result: think, then go back to the producing call if
    /// it has budget left.
    fn redo(&mut self, producer: Option<usize>, attempts: &[usize], budget: usize) -> Result<Option<usize>, HarnessError> {
        let Some(p) = producer else { return Ok(None) };
        self.push(Step::Think {
            note: format!("result of step {p} does not contain what the next step needs"),
        })?;
        Ok((attempts[p] < budget).then_some(p))
    }
}

fn goal_met(goal: &GoalPredicate, steps: &[Step], answer: Option<&str>) -> bool {
    goal.all.iter().all(|c| match c {
        Condition::ToolSucceeded { tool, contains } => steps.iter().any(|s| match s {
            Step::Call {
                tool: t,
                outcome: CallOutcome::Ok { text },
                ..
            } => t == tool && contains.iter().all(|needle| text.contains(needle.as_str())),
            _ => false,
        }),
        Condition::FinalAnswer { contains } => {
            answer.is_some_and(|a| contains.iter().all(|needle| a.contains(needle.as_str())))
        }
    })
}

/// Plays one episode through `gateway`, whose upstream is `mock`.
pub async fn run_episode(gateway: &Gateway, mock: &MockToolServer, episode: &Episode) -> Result<EpisodeOutcome, HarnessError> {
    let max_retries = gateway.config().max_retries;
    let mut agent = Agent {
        gateway,
        mock,
        episode,
        session: format!("episode-{}", episode.name),
        steps: Vec::new(),
        cap: episode.step_cap(max_retries),
    };
    let upstream_before = mock.call_count();
    let answer = agent.run(max_retries).await?;
    let steps = agent.steps;
    let mut rejected = 0;
    let mut leaked = 0;
    for s in &steps {
        if let Step::Call {
            outcome: CallOutcome::Rejected { .. },
            reached_upstream,
            ..
        } = s
        {
            rejected += 1;
            leaked += usize::from(*reached_upstream);
        }
    }
    Ok(EpisodeOutcome {
        name: episode.name.clone(),
        success: goal_met(&episode.goal, &steps, answer.as_deref()),
        steps: steps.len(),
        upstream_calls: mock.call_count() - upstream_before,
        rejected,
        rejected_reaching_upstream: leaked,
        trajectory: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholders_resolve_against_json_only() {
        let body = r#"{"flights":[{"id":"FL1"}]}"#;
        assert_eq!(resolve_query(".flights[0].id", Some(body)), Some(json!("FL1")));
        assert_eq!(resolve_query(".flights[0].id", Some("No results found")), None);
        assert_eq!(resolve_query(".flights[0].id", Some(r#"{"results": []}"#)), None);
        let args = json!({"flight_id": "$.flights[0].id", "passengers": 2});
        let r = resolve_arguments(args.as_object().unwrap(), Some(body)).unwrap();
        assert_eq!(Value::Object(r), json!({"flight_id": "FL1", "passengers": 2}));
    }

    #[test]
    fn episode_documents_round_trip() {
        let doc = json!({
            "name": "e1",
            "user_goal": "book",
            "decisions": [
                {"kind": "tool_call", "tool": "get_booking", "arguments": {"booking_id": "B1"},
                 "alternates": [{"arguments": {"booking_id": "B2"}}]},
                {"kind": "final_answer", "text": "done", "requires": [".status"]}
            ],
            "goal": {"all": [{"kind": "final_answer", "contains": ["confirmed"]}]}
        });
        let e: Episode = serde_json::from_value(doc.clone()).unwrap();
        assert_eq!(serde_json::to_value(&e).unwrap()["decisions"][1]["requires"], json!([".status"]));
        let mut bad = doc;
        bad["decisions"][0]["extra"] = json!(1);
        assert!(serde_json::from_value::<Episode>(bad).is_err());
    }
}
