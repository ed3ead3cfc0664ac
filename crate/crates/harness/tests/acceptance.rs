//! Acceptance suite: one PASS/FAIL line per criterion. Runs with no live
//! model; every judge is a `MockJudge`.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use agentguard_core::judge::MockJudge;
use agentguard_core::jsonq::{execute, execute_with_stats, parse_query, run_program, ExecError, Limits};
use agentguard_core::model::{Message, ToolCall, ToolRegistry, ToolResponse, ToolSpec};
use agentguard_core::review::{review_heuristic, Lexicon, ReviewInput};
use agentguard_core::schema::{parse_schema, validate};
use agentguard_core::sparc::{convert_date, sparc_validate, validate_transform, DateConversion, SparcConfig};
use agentguard_gateway::ComponentId::{SilentReview, Sparc};
use agentguard_gateway::{Gateway, GatewayConfig, RouteConfig, Upstream, UpstreamConfig, UpstreamError};
use agentguard_harness::review_corpus::corpus;
use agentguard_harness::suite::{invalid_call, run_suite_detailed, silent_error};
use agentguard_harness::{airline, huge_payload, run_episode_suite, suite_config, MockToolServer, FaultProfile, EXTRACTION_QUERIES};
use agentguard_testkit::date_oracle::{self, Reading};
use agentguard_testkit::jsonq_oracle::{self, outcome_json, Failure, GOLDEN_FILE};
use agentguard_testkit::transform_cases::{self, Expect};
use agentguard_testkit::{schema_gen, schema_oracle, sparc_corpus};
use async_trait::async_trait;
use serde_json::value::RawValue;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn schema_fuzz() -> Outcome {
    let started = Instant::now();
    let mut rng = agentguard_testkit::rng(0xacce_0001);
    let mut conforming = 0;
    for i in 0..10_000 {
        let (value, schema) = schema_gen::pair(&mut rng);
        let node = parse_schema(&schema).map_err(|e| format!("#{i}: {e}"))?.node;
        let ours = validate(&value, &node).is_empty();
        let reference = schema_oracle::conforms(&value, &schema);
        ensure(ours == reference, || format!("#{i} disagrees: value {value} schema {schema}"))?;
        conforming += usize::from(reference);
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("10000/10000 agree ({conforming} conforming) in {:.2}s", elapsed.as_secs_f64()))
}

fn registry_doc() -> Value {
    let mut doc = Map::new();
    for t in airline::tools() {
        doc.insert(
            t["name"].as_str().unwrap().to_owned(),
            json!({"description": t["description"], "parameters": t["inputSchema"]}),
        );
    }
    Value::Object(doc)
}

fn sparc_corpus_check() -> Outcome {
    let doc = registry_doc();
    let registry = ToolRegistry::from_json(&doc).map_err(|e| e.to_string())?;
    let judge = MockJudge::replies(["PASS"]);
    let config = SparcConfig::default();
    // category -> (true positives, reported, expected)
    let mut tally: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for m in sparc_corpus::mutants(&doc, 500, 0xacce_0002) {
        let call = ToolCall::new("m", m.tool.clone(), m.arguments.clone());
        let history = [Message::user("please help with my trip")];
        let report = sparc_validate(&call, &registry, &history, Some(&judge), &config).map_err(|e| e.to_string())?;
        ensure(!report.judge_consulted, || format!("judge consulted on {m:?}"))?;
        tally.entry(m.label).or_default().2 += 1;
        for issue in &report.issues {
            let cat = sparc_corpus::LABELS
                .iter()
                .find(|l| **l == issue.category.as_str())
                .copied()
                .unwrap_or("OTHER");
            let e = tally.entry(cat).or_default();
            e.1 += 1;
            if cat == m.label && issue.path == m.path {
                e.0 += 1;
            }
        }
    }
    let mut parts = Vec::new();
    for (cat, (tp, reported, expected)) in &tally {
        let precision = if *reported == 0 { 0.0 } else { *tp as f64 / *reported as f64 };
        let recall = if *expected == 0 { 0.0 } else { *tp as f64 / *expected as f64 };
        ensure(precision == 1.0 && recall == 1.0, || {
            format!("{cat}: precision {precision:.3} recall {recall:.3}")
        })?;
        parts.push(format!("{cat} {tp}/{expected}"));
    }
    ensure(judge.call_count() == 0, || format!("judge called {} times", judge.call_count()))?;
    Ok(format!("P=R=1.0 per category [{}]; judge calls 0", parts.join(", ")))
}

fn transformation_suite() -> Outcome {
    let spec = ToolSpec::from_entry("t", &json!({"description": "", "parameters": transform_cases::schema()}))
        .map_err(|e| e.to_string())?;
    let one = |field: &str, v: &Value| {
        let mut m = Map::new();
        m.insert(field.into(), v.clone());
        ToolCall::new("c", "t", m)
    };
    let fixtures = transform_cases::fixtures();
    for f in &fixtures {
        let (issues, repaired) = validate_transform(&one(f.field, &f.input), &spec);
        let ok = match &f.expect {
            Expect::Repaired(want) => issues.is_empty()
                && repaired.as_ref().is_some_and(|r| r[f.field] == *want || r[f.field].as_f64().is_some_and(|x| Some(x) == want.as_f64())),
            Expect::Issue(cat) => repaired.is_none() && issues.len() == 1 && issues[0].category.as_str() == *cat,
            Expect::Untouched => issues.is_empty() && repaired.is_none(),
        };
        ensure(ok, || format!("fixture {} on {}: {issues:?} {repaired:?}", f.input, f.field))?;
    }
    let mut rng = agentguard_testkit::rng(0xacce_0003);
    let mut repaired = 0;
    while repaired < 1_000 {
        let args = transform_cases::repairable_arguments(&mut rng);
        let (first, fixed) = validate_transform(&ToolCall::new("c", "t", args.as_object().unwrap().clone()), &spec);
        let Some(fixed) = fixed else { continue };
        repaired += 1;
        let (again, twice) = validate_transform(&ToolCall::new("c", "t", fixed.clone()), &spec);
        ensure(twice.is_none() && again == first, || format!("not idempotent: {args} -> {fixed:?}"))?;
    }
    let mut ambiguous = 0;
    for y in [1999, 2026, 2050] {
        for a in 1..=12 {
            for b in 1..=12 {
                if a == b {
                    continue;
                }
                for text in [format!("{a:02}/{b:02}/{y}"), format!("{a}/{b}/{y}")] {
                    ensure(date_oracle::read(&text) == Reading::Ambiguous, || format!("oracle: {text}"))?;
                    ensure(!matches!(convert_date(&text), DateConversion::Converted { .. }), || format!("converted {text}"))?;
                    ambiguous += 1;
                }
            }
        }
    }
    Ok(format!("{} fixtures, 1000 idempotent repairs, {ambiguous} ambiguous dates left alone", fixtures.len()))
}

const ROOMY: Limits = Limits {
    max_visits: 10_000_000,
    max_output_bytes: 10 << 20,
};

fn as_outcome(r: Result<Value, ExecError>) -> Result<Value, String> {
    let mapped = match r {
        Ok(v) => Ok(v),
        Err(ExecError::MissingField { available_keys, .. }) => Err(Failure::Missing(available_keys)),
        Err(ExecError::TypeError { .. }) => Err(Failure::WrongKind),
        Err(ExecError::IndexOutOfRange { .. }) => Err(Failure::OutOfRange),
        Err(e @ ExecError::LimitExceeded { .. }) => return Err(format!("unexpected {e}")),
    };
    Ok(outcome_json(&mapped))
}

fn digest(v: &Value) -> Vec<u8> {
    Sha256::digest(serde_json::to_vec(v).unwrap()).to_vec()
}

fn jsonq_equivalence() -> Outcome {
    let golden: Value = serde_json::from_str(GOLDEN_FILE).map_err(|e| e.to_string())?;
    let cases = golden["cases"].as_array().ok_or("golden file has no cases")?;
    ensure(cases.len() == 50, || format!("{} golden cases", cases.len()))?;
    for case in cases {
        let doc = &golden["documents"][case["document"].as_str().unwrap_or_default()];
        let query = case["query"].as_str().unwrap_or_default();
        let program = parse_query(query).map_err(|e| format!("{query}: {e}"))?;
        let before = digest(doc);
        let got = as_outcome(execute(&program, doc, ROOMY))?;
        ensure(got == case["expected"], || format!("golden {query}: {got} != {}", case["expected"]))?;
        ensure(digest(doc) == before, || format!("{query} mutated its document"))?;
    }
    let mut rng = agentguard_testkit::rng(0xacce_0004);
    let mut max_seen = 0;
    for i in 0..5_000 {
        let doc = jsonq_oracle::document(&mut rng);
        let prog = jsonq_oracle::program(&mut rng);
        let text = jsonq_oracle::render(&prog);
        let parsed = parse_query(&text).map_err(|e| format!("#{i} {text}: {e}"))?;
        let before = digest(&doc);
        let expected = outcome_json(&jsonq_oracle::eval(&prog, &doc));
        let got = as_outcome(execute(&parsed, &doc, ROOMY))?;
        ensure(got == expected, || format!("#{i} {text}: {got} != {expected}"))?;
        for max_visits in [1, 10, 100] {
            if let Ok((_, stats)) = execute_with_stats(&parsed, &doc, Limits { max_visits, max_output_bytes: 1 << 20 }) {
                ensure(stats.visits <= max_visits, || format!("#{i} {text}: {} visits > {max_visits}", stats.visits))?;
                max_seen = max_seen.max(stats.visits);
            }
        }
        ensure(digest(&doc) == before, || format!("#{i} mutated its document"))?;
    }
    Ok("50/50 golden, 5000/5000 fuzzed match; visits bounded; documents unchanged".into())
}

fn review_corpus_check() -> Outcome {
    let lexicon = Lexicon::default();
    let cases = corpus();
    let mut per_rule: BTreeMap<&str, usize> = BTreeMap::new();
    for c in &cases {
        let input = ReviewInput {
            messages: vec![Message::user("find me a flight")],
            tool_response: ToolResponse::from_text("t", c.status, &c.body),
            tool_spec: None,
        };
        let r = review_heuristic(&input, &lexicon);
        ensure(r.outcome.as_str() == c.outcome && r.matched_rule.as_deref() == Some(c.rule), || {
            format!("{}: got {} {:?}", c.name, r.outcome, r.matched_rule)
        })?;
        *per_rule.entry(c.rule).or_default() += 1;
    }
    ensure(per_rule.len() == 6 && per_rule.values().all(|n| *n >= 3), || format!("coverage {per_rule:?}"))?;
    Ok(format!("{}/{} agree; per rule {per_rule:?}", cases.len(), cases.len()))
}

/// Upstream that answers every call with fixed, oddly formatted bytes.
struct Verbatim;

const VERBATIM: &str = r#"{"isError": false, "content":[ {"type":"text", "text":"Ünïcode \"q\" \\ x\nline"} ]}"#;

#[async_trait]
impl Upstream for Verbatim {
    async fn request(&self, method: &str, _params: Value) -> Result<Box<RawValue>, UpstreamError> {
        match method {
            "tools/list" => Ok(serde_json::value::to_raw_value(&json!({"tools": airline::tools()})).unwrap()),
            _ => Ok(RawValue::from_string(VERBATIM.to_owned()).unwrap()),
        }
    }
}

fn gateway_safety() -> Outcome {
    // No side effects on rejection.
    let outcomes = run_suite_detailed(&invalid_call(), &suite_config(&[Sparc], &[SilentReview]), 1).map_err(|e| e.to_string())?;
    let rejected: usize = outcomes.iter().map(|o| o.rejected).sum();
    let leaked: usize = outcomes.iter().map(|o| o.rejected_reaching_upstream).sum();
    ensure(rejected > 0 && leaked == 0, || format!("{leaked} of {rejected} rejected calls reached upstream"))?;

    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let route = |pre: Vec<_>, name: &str| {
            GatewayConfig::with_routes(vec![RouteConfig {
                tool_name_pattern: "*".into(),
                upstream: UpstreamConfig::Local { name: name.into() },
                pre_tool: pre,
                post_tool: vec![],
            }])
        };
        // Byte-exact relay with components off.
        let g = Gateway::builder(route(vec![], "v")).local("v", Arc::new(Verbatim)).connect().await.map_err(|e| e.to_string())?;
        let req = json!({"jsonrpc": "2.0", "id": 1, "method": "tools/call", "params": {"name": "get_booking", "arguments": {"booking_id": "B"}}});
        let reply = g.handle_message("s", &req.to_string()).await.ok_or("no reply")?;
        #[derive(serde::Deserialize)]
        struct Env {
            result: BTreeMap<String, Box<RawValue>>,
        }
        let direct: BTreeMap<String, Box<RawValue>> = serde_json::from_str(VERBATIM).unwrap();
        let proxied: Env = serde_json::from_str(&reply).map_err(|e| e.to_string())?;
        let sum = |r: &RawValue| Sha256::digest(r.get().as_bytes());
        ensure(sum(&proxied.result["content"]) == sum(&direct["content"]), || "content bytes changed".into())?;

        // Interception overhead, syntactic tier only.
        let mock = MockToolServer::airline(FaultProfile::default());
        let g = Gateway::builder(route(vec![Sparc], "m"))
            .local("m", mock.clone() as Arc<dyn Upstream>)
            .connect()
            .await
            .map_err(|e| e.to_string())?;
        let n = 300;
        let params = json!({"name": "search_flights", "arguments": {"origin": "JFK", "destination": "LHR", "date": "2026-12-01"}});
        let t0 = Instant::now();
        for _ in 0..n {
            mock.request("tools/call", params.clone()).await.map_err(|e| e.to_string())?;
        }
        let direct = t0.elapsed();
        let req = json!({"jsonrpc": "2.0", "id": 1, "method": "tools/call", "params": params}).to_string();
        let t1 = Instant::now();
        for i in 0..n {
            g.handle_message(&format!("s{i}"), &req).await.ok_or("no reply")?;
        }
        let proxied = t1.elapsed();
        let overhead_ms = proxied.saturating_sub(direct).as_secs_f64() * 1000.0 / n as f64;
        ensure(overhead_ms < 10.0, || format!("overhead {overhead_ms:.3} ms/call"))?;
        Ok(format!(
            "{rejected} rejected calls, 0 reached upstream; relay byte-exact; overhead {overhead_ms:.3} ms/call"
        ))
    })
}

fn harness_comparison() -> Outcome {
    let seed = 2026;
    let inv = run_episode_suite(&invalid_call(), &suite_config(&[Sparc], &[]), &suite_config(&[], &[]), seed).map_err(|e| e.to_string())?;
    ensure(inv.win_rate_a >= inv.win_rate_b, || format!("invalid-call win rate {} < {}", inv.win_rate_a, inv.win_rate_b))?;
    let on = suite_config(&[Sparc], &[SilentReview]);
    let off = suite_config(&[Sparc], &[]);
    let silent = run_episode_suite(&silent_error(), &on, &off, seed).map_err(|e| e.to_string())?;
    ensure(silent.mean_steps_a < silent.mean_steps_b, || {
        format!("silent-error mean steps {} !< {}", silent.mean_steps_a, silent.mean_steps_b)
    })?;
    let again = run_episode_suite(&silent_error(), &on, &off, seed).map_err(|e| e.to_string())?;
    let inv_again = run_episode_suite(&invalid_call(), &suite_config(&[Sparc], &[]), &suite_config(&[], &[]), seed).map_err(|e| e.to_string())?;
    ensure(
        again.to_json() == silent.to_json() && again.to_table() == silent.to_table() && inv_again.to_json() == inv.to_json(),
        || "reports differ across re-runs".into(),
    )?;
    Ok(format!(
        "invalid-call win rate {:.3} vs {:.3}; silent-error mean steps {:.3} vs {:.3}; reports byte-identical",
        inv.win_rate_a, inv.win_rate_b, silent.mean_steps_a, silent.mean_steps_b
    ))
}

fn token_efficiency() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut sizes = Vec::new();
    for seed in [1, 2] {
        let doc = huge_payload(1000, 4, seed);
        let text = doc.to_string();
        ensure(text.len() >= 1 << 20, || format!("payload only {} bytes", text.len()))?;
        sizes.push(text.len());
        let response = ToolResponse::from_text("x", Some(200), &text);
        for q in EXTRACTION_QUERIES {
            let r = run_program(q, &response, Limits::default()).map_err(|e| format!("{q}: {e}"))?;
            let ratio = r.bytes_out as f64 / r.bytes_in as f64;
            ensure(ratio <= 0.05, || format!("{q}: ratio {ratio:.4}"))?;
            worst = worst.max(ratio);
        }
    }
    Ok(format!(
        "{} queries on payloads of {:?} bytes; worst bytes_out/bytes_in {worst:.5}",
        EXTRACTION_QUERIES.len(),
        sizes
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("schema validator fuzz oracle", schema_fuzz),
        ("sparc mutant corpus", sparc_corpus_check),
        ("transformation suite", transformation_suite),
        ("jsonq oracle equivalence", jsonq_equivalence),
        ("silent review corpus", review_corpus_check),
        ("gateway safety", gateway_safety),
        ("harness comparison", harness_comparison),
        ("token efficiency", token_efficiency),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL [{}] {name}: {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
