//! Episode suites and the A/B comparison.

use std::fmt::Write as _;
use std::sync::Arc;

use agentguard_core::par;
use agentguard_gateway::{ComponentId, Gateway, GatewayConfig, RouteConfig, UpstreamConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::airline;
use crate::episode::{run_episode, Alternate, Condition, Decision, Episode, EpisodeOutcome, GoalPredicate};
use crate::fault::FaultProfile;
use crate::mock::MockToolServer;
use crate::HarnessError;

/// Name under which the mock is registered with the gateway.
pub const MOCK_UPSTREAM: &str = "mock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub name: String,
    /// Tool specs in `tools/list` shape; the airline set when omitted.
    #[serde(default = "airline::tools")]
    pub tools: Vec<Value>,
    #[serde(default)]
    pub profile: FaultProfile,
    pub episodes: Vec<Episode>,
}

impl Suite {
    /// Accepts either a suite object or a bare JSON list of episodes.
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let v: Value = serde_json::from_str(text).map_err(|e| HarnessError::Suite(e.to_string()))?;
        let suite = if v.is_array() {
            let episodes = serde_json::from_value(v).map_err(|e| HarnessError::Suite(e.to_string()))?;
            Suite {
                name: "episodes".into(),
                tools: airline::tools(),
                profile: FaultProfile::default(),
                episodes,
            }
        } else {
            serde_json::from_value(v).map_err(|e| HarnessError::Suite(e.to_string()))?
        };
        Ok(suite)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "benign" => Some(benign()),
            "invalid-call" => Some(invalid_call()),
            "silent-error" => Some(silent_error()),
            _ => None,
        }
    }
}

pub const BUILTIN_SUITES: [&str; 3] = ["benign", "invalid-call", "silent-error"];

/// A single catch-all route to the mock with the given components.
pub fn suite_config(pre: &[ComponentId], post: &[ComponentId]) -> GatewayConfig {
    GatewayConfig::with_routes(vec![RouteConfig {
        tool_name_pattern: "*".into(),
        upstream: UpstreamConfig::Local { name: MOCK_UPSTREAM.into() },
        pre_tool: pre.to_vec(),
        post_tool: post.to_vec(),
    }])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigSummary {
    pub label: String,
    pub components: String,
    pub episodes: usize,
    pub wins: usize,
    pub win_rate: f64,
    pub mean_steps: f64,
    pub upstream_calls: usize,
    pub rejected_calls: usize,
    pub rejected_reaching_upstream: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRow {
    pub name: String,
    pub success_a: bool,
    pub steps_a: usize,
    pub success_b: bool,
    pub steps_b: usize,
}

/// Contains no timings, so equal inputs give byte-identical output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub suite: String,
    pub seed: u64,
    pub win_rate_a: f64,
    pub win_rate_b: f64,
    pub mean_steps_a: f64,
    pub mean_steps_b: f64,
    pub a: ConfigSummary,
    pub b: ConfigSummary,
    pub episodes: Vec<EpisodeRow>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Aligned-column text table.
    pub fn to_table(&self) -> String {
        let mut rows = vec![[
            "config".to_owned(),
            "components".to_owned(),
            "wins".to_owned(),
            "win_rate".to_owned(),
            "mean_steps".to_owned(),
            "upstream_calls".to_owned(),
            "rejected".to_owned(),
            "rejected_upstream".to_owned(),
        ]];
        for s in [&self.a, &self.b] {
            rows.push([
                s.label.clone(),
                s.components.clone(),
                format!("{}/{}", s.wins, s.episodes),
                format!("{:.3}", s.win_rate),
                format!("{:.3}", s.mean_steps),
                s.upstream_calls.to_string(),
                s.rejected_calls.to_string(),
                s.rejected_reaching_upstream.to_string(),
            ]);
        }
        let mut out = format!("suite {} (seed {})\n", self.suite, self.seed);
        out.push_str(&align(&rows));
        out.push('\n');
        let mut ep = vec![[
            "episode".to_owned(),
            "A".to_owned(),
            "steps_A".to_owned(),
            "B".to_owned(),
            "steps_B".to_owned(),
        ]];
        let mark = |b: bool| if b { "win" } else { "loss" }.to_owned();
        for r in &self.episodes {
            ep.push([r.name.clone(), mark(r.success_a), r.steps_a.to_string(), mark(r.success_b), r.steps_b.to_string()]);
        }
        out.push_str(&align(&ep));
        out
    }
}

fn align<const N: usize>(rows: &[[String; N]]) -> String {
    let widths: Vec<usize> = (0..N).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

fn components(config: &GatewayConfig) -> String {
    let name = |c: &ComponentId| serde_json::to_value(c).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
    let route = &config.routes[0];
    let pre: Vec<String> = route.pre_tool.iter().map(name).collect();
    let post: Vec<String> = route.post_tool.iter().map(name).collect();
    let show = |v: Vec<String>| if v.is_empty() { "-".to_owned() } else { v.join("+") };
    format!("pre={} post={}", show(pre), show(post))
}

/// Every route is pointed at the mock, so both configs see the same upstream.
fn rewire(config: &GatewayConfig) -> GatewayConfig {
    let mut c = config.clone();
    for r in &mut c.routes {
        r.upstream = UpstreamConfig::Local { name: MOCK_UPSTREAM.into() };
    }
    c.log_file = None;
    c
}

fn run_one(suite: &Suite, config: &GatewayConfig, profile: &FaultProfile, episode: &Episode) -> Result<EpisodeOutcome, HarnessError> {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
    rt.block_on(async {
        let mock = MockToolServer::new(suite.tools.clone(), profile.clone());
        let gateway = Gateway::builder(config.clone())
            .local(MOCK_UPSTREAM, mock.clone() as Arc<dyn agentguard_gateway::Upstream>)
            .connect()
            .await?;
        run_episode(&gateway, &mock, episode).await
    })
}

fn run_config(suite: &Suite, config: &GatewayConfig, seed: u64) -> Result<Vec<EpisodeOutcome>, HarnessError> {
    let config = rewire(config);
    let profile = FaultProfile {
        seed,
        ..suite.profile.clone()
    };
    par::map(&suite.episodes, |e| run_one(suite, &config, &profile, e))
        .into_iter()
        .collect()
}

fn summarize(label: &str, config: &GatewayConfig, outcomes: &[EpisodeOutcome]) -> ConfigSummary {
    let n = outcomes.len();
    let wins = outcomes.iter().filter(|o| o.success).count();
    let steps: usize = outcomes.iter().map(|o| o.steps).sum();
    let ratio = |x: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
    ConfigSummary {
        label: label.to_owned(),
        components: components(config),
        episodes: n,
        wins,
        win_rate: ratio(wins),
        mean_steps: ratio(steps),
        upstream_calls: outcomes.iter().map(|o| o.upstream_calls).sum(),
        rejected_calls: outcomes.iter().map(|o| o.rejected).sum(),
        rejected_reaching_upstream: outcomes.iter().map(|o| o.rejected_reaching_upstream).sum(),
    }
}

/// Runs every episode of `suite` under both configs against fresh mocks
/// sharing one fault profile (with `seed`), and compares the results.
pub fn run_episode_suite(suite: &Suite, config_a: &GatewayConfig, config_b: &GatewayConfig, seed: u64) -> Result<ComparisonReport, HarnessError> {
    for c in [config_a, config_b] {
        c.check()?;
    }
    let a = run_config(suite, config_a, seed)?;
    let b = run_config(suite, config_b, seed)?;
    let sa = summarize("A", config_a, &a);
    let sb = summarize("B", config_b, &b);
    Ok(ComparisonReport {
        suite: suite.name.clone(),
        seed,
        win_rate_a: sa.win_rate,
        win_rate_b: sb.win_rate,
        mean_steps_a: sa.mean_steps,
        mean_steps_b: sb.mean_steps,
        episodes: a
            .iter()
            .zip(&b)
            .map(|(x, y)| EpisodeRow {
                name: x.name.clone(),
                success_a: x.success,
                steps_a: x.steps,
                success_b: y.success,
                steps_b: y.steps,
            })
            .collect(),
        a: sa,
        b: sb,
    })
}

/// Full per-episode outcomes for one config (trajectories included).
pub fn run_suite_detailed(suite: &Suite, config: &GatewayConfig, seed: u64) -> Result<Vec<EpisodeOutcome>, HarnessError> {
    config.check()?;
    run_config(suite, config, seed)
}

// --- built-in suites -------------------------------------------------------

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn call(tool: &str, args: Value) -> Decision {
    Decision::ToolCall {
        tool: tool.into(),
        arguments: obj(args),
        alternates: Vec::new(),
    }
}

fn call_or(tool: &str, args: Value, alt_tool: Option<&str>, alt: Value) -> Decision {
    Decision::ToolCall {
        tool: tool.into(),
        arguments: obj(args),
        alternates: vec![Alternate {
            tool: alt_tool.map(str::to_owned),
            arguments: obj(alt),
        }],
    }
}

fn answer(text: &str, requires: &[&str]) -> Decision {
    Decision::FinalAnswer {
        text: text.into(),
        requires: requires.iter().map(|s| s.to_string()).collect(),
    }
}

fn succeeded(tool: &str, contains: &[&str]) -> Condition {
    Condition::ToolSucceeded {
        tool: tool.into(),
        contains: contains.iter().map(|s| s.to_string()).collect(),
    }
}

fn answered(contains: &[&str]) -> Condition {
    Condition::FinalAnswer {
        contains: contains.iter().map(|s| s.to_string()).collect(),
    }
}

const ROUTES: [(&str, &str); 8] = [
    ("JFK", "LHR"),
    ("SFO", "NRT"),
    ("CDG", "FCO"),
    ("GRU", "LIS"),
    ("SYD", "SIN"),
    ("YYZ", "MEX"),
    ("AMS", "BCN"),
    ("DXB", "BOM"),
];

fn booking_episode(name: String, o: &str, d: &str, date: &str, passengers: u32) -> Episode {
    Episode {
        name,
        user_goal: format!("Book {passengers} seat(s) from {o} to {d} on {date}."),
        decisions: vec![
            call("search_flights", json!({"origin": o, "destination": d, "date": date})),
            call("book_flight", json!({"flight_id": "$.flights[0].id", "passengers": passengers})),
            answer("Booked:", &[".booking_id"]),
        ],
        goal: GoalPredicate {
            all: vec![succeeded("book_flight", &["\"status\":\"confirmed\""]), answered(&["BK-"])],
        },
    }
}

/// Well-formed calls against a healthy upstream.
pub fn benign() -> Suite {
    let mut episodes: Vec<Episode> = ROUTES
        .iter()
        .enumerate()
        .take(6)
        .map(|(i, (o, d))| booking_episode(format!("benign-{i}"), o, d, &format!("2026-11-{:02}", i + 3), 1 + i as u32 % 3))
        .collect();
    episodes.push(Episode {
        name: "benign-lookup".into(),
        user_goal: "What is the status of booking BK-77?".into(),
        decisions: vec![call("get_booking", json!({"booking_id": "BK-77"})), answer("Status:", &[".status"])],
        goal: GoalPredicate {
            all: vec![answered(&["confirmed"])],
        },
    });
    episodes.push(Episode {
        name: "benign-cancel".into(),
        user_goal: "Cancel BK-12, my schedule changed.".into(),
        decisions: vec![
            call("cancel_booking", json!({"booking_id": "BK-12", "reason": "schedule_change"})),
            answer("Cancelled:", &[".status"]),
        ],
        goal: GoalPredicate {
            all: vec![succeeded("cancel_booking", &["cancelled"]), answered(&["cancelled"])],
        },
    });
    Suite {
        name: "benign".into(),
        tools: airline::tools(),
        profile: FaultProfile::default(),
        episodes,
    }
}

/// Each episode's first attempt carries a defect that no repair rule fixes;
/// the scripted alternate is only used after a validation rejection.
pub fn invalid_call() -> Suite {
    let search = |o: &str, d: &str| call("search_flights", json!({"origin": o, "destination": d, "date": "2026-12-01"}));
    let ep = |name: &str, goal: &str, decisions: Vec<Decision>, all: Vec<Condition>| Episode {
        name: name.into(),
        user_goal: goal.into(),
        decisions,
        goal: GoalPredicate { all },
    };
    let episodes = vec![
        ep(
            "unknown-arg",
            "Book 2 business seats JFK to LHR on 2026-12-01.",
            vec![
                search("JFK", "LHR"),
                call_or(
                    "book_flight",
                    json!({"flight_id": "$.flights[0].id", "passengers": 2, "seat_class": "business"}),
                    None,
                    json!({"flight_id": "$.flights[0].id", "passengers": 2, "cabin": "business"}),
                ),
                answer("Booked:", &[".booking_id"]),
            ],
            vec![succeeded("book_flight", &["\"cabin\":\"business\""]), answered(&["BK-"])],
        ),
        ep(
            "missing-required",
            "Book 3 seats SFO to NRT on 2026-12-01.",
            vec![
                search("SFO", "NRT"),
                call_or(
                    "book_flight",
                    json!({"flight_id": "$.flights[0].id"}),
                    None,
                    json!({"flight_id": "$.flights[0].id", "passengers": 3}),
                ),
                answer("Booked:", &[".booking_id"]),
            ],
            vec![succeeded("book_flight", &["\"passengers\":3"]), answered(&["BK-"])],
        ),
        ep(
            "enum-violation",
            "Cancel BK-9, the price went up.",
            vec![
                call_or(
                    "cancel_booking",
                    json!({"booking_id": "BK-9", "reason": "too expensive"}),
                    None,
                    json!({"booking_id": "BK-9", "reason": "price"}),
                ),
                answer("Cancelled:", &[".status"]),
            ],
            vec![succeeded("cancel_booking", &["\"reason\":\"price\""]), answered(&["cancelled"])],
        ),
        ep(
            "nonexistent-tool",
            "Book 1 seat CDG to FCO on 2026-12-01.",
            vec![
                search("CDG", "FCO"),
                call_or(
                    "book_flights",
                    json!({"flight_id": "$.flights[0].id", "passengers": 1}),
                    Some("book_flight"),
                    json!({"flight_id": "$.flights[0].id", "passengers": 1}),
                ),
                answer("Booked:", &[".booking_id"]),
            ],
            vec![succeeded("book_flight", &["confirmed"]), answered(&["BK-"])],
        ),
        ep(
            "type-mismatch",
            "Book 2 seats GRU to LIS on 2026-12-01.",
            vec![
                search("GRU", "LIS"),
                call_or(
                    "book_flight",
                    json!({"flight_id": "$.flights[0].id", "passengers": true}),
                    None,
                    json!({"flight_id": "$.flights[0].id", "passengers": 2}),
                ),
                answer("Booked:", &[".booking_id"]),
            ],
            vec![succeeded("book_flight", &["\"passengers\":2"]), answered(&["BK-"])],
        ),
        ep(
            "renamed-arg",
            "Look up booking BK-31.",
            vec![
                call_or("get_booking", json!({"booking_ref": "BK-31"}), None, json!({"booking_id": "BK-31"})),
                answer("Status:", &[".status"]),
            ],
            vec![answered(&["confirmed"])],
        ),
        ep(
            "cabin-typo",
            "Search SYD to SIN on 2026-12-01 in premium economy.",
            vec![
                call_or(
                    "search_flights",
                    json!({"origin": "SYD", "destination": "SIN", "date": "2026-12-01", "cabin": "premium"}),
                    None,
                    json!({"origin": "SYD", "destination": "SIN", "date": "2026-12-01", "cabin": "premium_economy"}),
                ),
                answer("First option:", &[".flights[0].id"]),
            ],
            vec![answered(&["FL"])],
        ),
        ep(
            "clean",
            "Book 1 seat AMS to BCN on 2026-12-01.",
            vec![
                search("AMS", "BCN"),
                call("book_flight", json!({"flight_id": "$.flights[0].id", "passengers": 1})),
                answer("Booked:", &[".booking_id"]),
            ],
            vec![succeeded("book_flight", &["confirmed"]), answered(&["BK-"])],
        ),
    ];
    Suite {
        name: "invalid-call".into(),
        tools: airline::tools(),
        profile: FaultProfile::default(),
        episodes,
    }
}

/// Healthy calls against an upstream that answers with silent errors at a
/// fixed rate.
pub fn silent_error() -> Suite {
    let mut episodes = Vec::new();
    for (i, (o, d)) in ROUTES.iter().enumerate() {
        for k in 0..2 {
            let date = format!("2027-0{}-{:02}", 1 + k, 10 + i);
            episodes.push(booking_episode(format!("silent-{i}-{k}"), o, d, &date, 1 + (i + k) as u32 % 4));
        }
    }
    Suite {
        name: "silent-error".into(),
        tools: airline::tools(),
        profile: FaultProfile::with_rate(0.35, 0),
        episodes,
    }
}
