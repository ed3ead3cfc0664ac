use agentguard_core::jsonq::{execute, execute_with_stats, parse_query, ExecError, Limits};
use agentguard_testkit::jsonq_oracle::{self, outcome_json, Failure, GOLDEN_FILE};
use proptest::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

const ROOMY: Limits = Limits {
    max_visits: 10_000_000,
    max_output_bytes: 10 << 20,
};

fn as_outcome(r: Result<Value, ExecError>) -> Value {
    let mapped = match r {
        Ok(v) => Ok(v),
        Err(ExecError::MissingField { available_keys, .. }) => Err(Failure::Missing(available_keys)),
        Err(ExecError::TypeError { .. }) => Err(Failure::WrongKind),
        Err(ExecError::IndexOutOfRange { .. }) => Err(Failure::OutOfRange),
        Err(e @ ExecError::LimitExceeded { .. }) => panic!("unexpected {e}"),
    };
    outcome_json(&mapped)
}

fn digest(v: &Value) -> Vec<u8> {
    Sha256::digest(serde_json::to_vec(v).unwrap()).to_vec()
}

#[test]
fn golden_programs_match_committed_results() {
    let golden: Value = serde_json::from_str(GOLDEN_FILE).unwrap();
    let cases = golden["cases"].as_array().unwrap();
    assert_eq!(cases.len(), 50);
    for case in cases {
        let doc = &golden["documents"][case["document"].as_str().unwrap()];
        let query = case["query"].as_str().unwrap();
        let program = parse_query(query).unwrap_or_else(|e| panic!("{query}: {e}"));
        let before = digest(doc);
        let got = as_outcome(execute(&program, doc, ROOMY));
        assert_eq!(got, case["expected"], "{}: {query}", case["name"]);
        assert_eq!(digest(doc), before);
    }
}

#[test]
fn fuzzed_programs_match_oracle() {
    let mut rng = agentguard_testkit::rng(0x5eed_0001);
    let mut errors = 0;
    for i in 0..5_000 {
        let doc = jsonq_oracle::document(&mut rng);
        let prog = jsonq_oracle::program(&mut rng);
        let text = jsonq_oracle::render(&prog);
        let parsed = parse_query(&text).unwrap_or_else(|e| panic!("#{i} {text}: {e}"));
        let before = digest(&doc);
        let expected = outcome_json(&jsonq_oracle::eval(&prog, &doc));
        let got = as_outcome(execute(&parsed, &doc, ROOMY));
        assert_eq!(got, expected, "#{i} {text}\n{doc}");
        assert_eq!(digest(&doc), before);
        errors += usize::from(expected.get("error").is_some());
    }
    // Both outcomes should be well represented.
    assert!((500..4_500).contains(&errors), "{errors} errors out of 5000");
}

#[test]
fn visits_never_exceed_the_limit() {
    let mut rng = agentguard_testkit::rng(0x5eed_0002);
    for _ in 0..2_000 {
        let doc = jsonq_oracle::document(&mut rng);
        let text = jsonq_oracle::render(&jsonq_oracle::program(&mut rng));
        let program = parse_query(&text).unwrap();
        for max_visits in [1, 5, 20, 100] {
            let limits = Limits {
                max_visits,
                max_output_bytes: 1 << 20,
            };
            if let Ok((_, stats)) = execute_with_stats(&program, &doc, limits) {
                assert!(stats.visits <= max_visits, "{text}: {} > {max_visits}", stats.visits);
            }
        }
    }
}

#[test]
fn spec_examples() {
    let run = |q: &str, d: Value| execute(&parse_query(q).unwrap(), &d, Limits::default());
    assert_eq!(run(".items | count", json!({"items": [1, 2, 3]})), Ok(json!(3)));
    assert_eq!(
        run(
            ".items[] | select(.ok == true) | .id",
            json!({"items": [{"id": 1, "ok": true}, {"id": 2, "ok": false}]})
        ),
        Ok(json!(1))
    );
    assert!(matches!(
        run(".missing", json!({})),
        Err(ExecError::MissingField { available_keys, .. }) if available_keys.is_empty()
    ));
}

proptest! {
    #[test]
    fn count_is_length(xs in prop::collection::vec(any::<i32>(), 0..200)) {
        let doc = json!({"xs": xs});
        let n = xs.len();
        prop_assert_eq!(execute(&parse_query(".xs | count").unwrap(), &doc, Limits::default()), Ok(json!(n)));
        prop_assert_eq!(execute(&parse_query(".xs[] | count").unwrap(), &doc, Limits::default()), Ok(json!(n)));
    }

    #[test]
    fn execution_is_deterministic(seed in any::<u64>()) {
        let mut rng = agentguard_testkit::rng(seed);
        let doc = jsonq_oracle::document(&mut rng);
        let program = parse_query(&jsonq_oracle::render(&jsonq_oracle::program(&mut rng))).unwrap();
        prop_assert_eq!(execute(&program, &doc, ROOMY), execute(&program, &doc, ROOMY));
    }

    #[test]
    fn parser_never_panics(text in "[ .a-z0-9\\[\\]|(){}:,\"=<>!-]{0,40}") {
        let _ = parse_query(&text);
    }
}
