use std::collections::BTreeSet;

use agentguard_core::judge::MockJudge;
use agentguard_core::model::{Message, ToolCall, ToolRegistry, ToolSpec};
use agentguard_core::schema::validate;
use agentguard_core::sparc::{
    convert_date, sparc_validate, validate_transform, DateConversion, IssueCategory, SparcConfig,
};
use agentguard_testkit::date_oracle::{self, Reading};
use agentguard_testkit::transform_cases::{self, Expect};
use agentguard_testkit::{schema_oracle, sparc_corpus};
use proptest::prelude::*;
use serde_json::{json, Map, Value};

fn registry_doc() -> Value {
    json!({
        "book_flight": {"description": "Book a seat on a flight", "parameters": {"type": "object", "properties": {
            "origin": {"type": "string"}, "destination": {"type": "string"},
            "date": {"type": "string", "format": "date"},
            "cabin": {"type": "string", "enum": ["economy", "business", "first"]},
            "passengers": {"type": "integer"}, "max_price": {"type": "number", "format": "currency"}
        }, "required": ["origin", "destination", "date"]}},
        "cancel_booking": {"description": "Cancel a booking", "parameters": {"type": "object", "properties": {
            "booking_id": {"type": "string"}, "reason": {"type": "string", "enum": ["schedule", "price", "other"]},
            "refund": {"type": "boolean"}
        }, "required": ["booking_id"]}},
        "search_hotels": {"description": "Find hotels", "parameters": {"type": "object", "properties": {
            "city": {"type": "string"}, "nights": {"type": "integer"}, "stars": {"type": "integer", "enum": [3, 4, 5]},
            "amenities": {"type": "array", "items": {"type": "string"}}
        }, "required": ["city", "nights"]}}
    })
}

fn spec() -> ToolSpec {
    ToolSpec::from_entry("book", &json!({"description": "", "parameters": transform_cases::schema()})).unwrap()
}

fn call(tool: &str, args: Map<String, Value>) -> ToolCall {
    ToolCall::new("c1", tool, args)
}

fn one(field: &str, v: Value) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert(field.into(), v);
    m
}

#[test]
fn transformation_fixtures() {
    let spec = spec();
    for f in transform_cases::fixtures() {
        let (issues, repaired) = validate_transform(&call("book", one(f.field, f.input.clone())), &spec);
        let path = format!("/{}", f.field);
        match &f.expect {
            Expect::Repaired(want) => {
                assert!(issues.is_empty(), "{}: {issues:?}", f.input);
                let got = &repaired.unwrap_or_else(|| panic!("{} not repaired", f.input))[f.field];
                assert!(
                    got == want || (got.is_number() && got.as_f64() == want.as_f64()),
                    "{}: {got} != {want}",
                    f.input
                );
            }
            Expect::Issue(cat) => {
                assert!(repaired.is_none(), "{} repaired", f.input);
                assert_eq!(issues.len(), 1, "{}: {issues:?}", f.input);
                assert_eq!((issues[0].category.as_str(), issues[0].path.as_str()), (*cat, path.as_str()), "{}", f.input);
            }
            Expect::Untouched => assert!(issues.is_empty() && repaired.is_none(), "{}: {issues:?}", f.input),
        }
    }
}

#[test]
fn dates_agree_with_brute_force_table() {
    let mut rng = agentguard_testkit::rng(0xda7e);
    for _ in 0..3_000 {
        let text = transform_cases::date_text(&mut rng);
        let got = convert_date(&text);
        if schema_oracle::date_ok(&text) {
            continue;
        }
        match (date_oracle::read(&text), got) {
            (Reading::Date(iso), DateConversion::Converted { iso: got, .. }) => assert_eq!(iso, got, "{text}"),
            (Reading::Ambiguous, DateConversion::Ambiguous { .. }) => {}
            (Reading::Unknown, DateConversion::Invalid(_) | DateConversion::NoRule(_)) => {}
            (want, got) => panic!("{text}: oracle {want:?}, got {got:?}"),
        }
    }
}

#[test]
fn ambiguous_numeric_dates_never_converted() {
    let spec = spec();
    for y in [1999, 2026, 2050] {
        for a in 1..=12 {
            for b in 1..=12 {
                for text in [format!("{a:02}/{b:02}/{y}"), format!("{a}/{b}/{y}")] {
                    let (issues, repaired) = validate_transform(&call("book", one("date", json!(text))), &spec);
                    assert!(repaired.is_none(), "{text}");
                    assert_eq!(issues[0].category, IssueCategory::AmbiguousConversion, "{text}");
                }
            }
        }
    }
}

#[test]
fn fuzzed_repairs_are_idempotent_and_valid() {
    let spec = spec();
    let mut rng = agentguard_testkit::rng(0x1de0);
    let mut repaired_count = 0;
    while repaired_count < 1_000 {
        let args = transform_cases::repairable_arguments(&mut rng);
        let (first_issues, repaired) = validate_transform(&call("book", args.as_object().unwrap().clone()), &spec);
        let Some(fixed) = repaired else { continue };
        repaired_count += 1;
        let (again_issues, again) = validate_transform(&call("book", fixed.clone()), &spec);
        assert!(again.is_none(), "{args} -> {fixed:?} repaired again to {again:?}");
        // Whatever could not be repaired the first time is reported again, unchanged.
        assert_eq!(again_issues, first_issues, "{fixed:?}");
    }
}

#[test]
fn mutant_corpus_detected_without_judge() {
    let doc = registry_doc();
    let registry = ToolRegistry::from_json(&doc).unwrap();
    let judge = MockJudge::replies(["PASS"]);
    for m in sparc_corpus::mutants(&doc, 500, 7) {
        let report = sparc_validate(&call(&m.tool, m.arguments.clone()), &registry, &[], Some(&judge), &SparcConfig::default())
            .unwrap();
        let found: Vec<(&str, &str)> = report.issues.iter().map(|i| (i.category.as_str(), i.path.as_str())).collect();
        assert_eq!(found, [(m.label, m.path.as_str())], "{m:?}");
        assert!(!report.judge_consulted);
    }
    assert_eq!(judge.call_count(), 0);
}

fn history_pool() -> Vec<&'static str> {
    vec![
        "I want to fly from Paris to Rome on March 13, 2026",
        "Book business class please, budget $1,200",
        "Actually make it 2 passengers",
        "{\"flights\": [{\"id\": \"AF1\", \"price\": 420}]}",
        "Hotel in Lisbon for 3 nights",
        "cancel booking BK-7781 due to schedule",
    ]
}

fn args_strategy() -> impl Strategy<Value = (String, Map<String, Value>)> {
    let tools = prop_oneof![Just("book_flight"), Just("cancel_booking"), Just("search_hotels")];
    (tools, any::<u64>()).prop_map(|(tool, seed)| {
        let mut rng = agentguard_testkit::rng(seed);
        let schema = registry_doc()[tool]["parameters"].clone();
        (tool.to_owned(), sparc_corpus::conforming_arguments(&mut rng, &schema))
    })
}

fn hallucinated(report: &agentguard_core::sparc::ValidationReport) -> BTreeSet<String> {
    report
        .issues
        .iter()
        .filter(|i| i.category == IssueCategory::HallucinatedValue)
        .map(|i| i.path.clone())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn repaired_arguments_always_validate(seed in any::<u64>()) {
        let mut rng = agentguard_testkit::rng(seed);
        let args = transform_cases::repairable_arguments(&mut rng);
        let mut registry = ToolRegistry::new();
        registry.insert(spec());
        let report = sparc_validate(&call("book", args.as_object().unwrap().clone()), &registry, &[], None, &SparcConfig::default()).unwrap();
        if let Some(r) = &report.repaired_arguments {
            prop_assert!(validate(&Value::Object(r.clone()), &spec().parameters).is_empty());
        }
    }

    #[test]
    fn deterministic_without_judge((tool, args) in args_strategy(), k in 0usize..6) {
        let registry = ToolRegistry::from_json(&registry_doc()).unwrap();
        let history: Vec<Message> = history_pool()[..k].iter().map(|s| Message::user(*s)).collect();
        let c = call(&tool, args);
        let a = sparc_validate(&c, &registry, &history, None, &SparcConfig::default()).unwrap();
        let b = sparc_validate(&c, &registry, &history, None, &SparcConfig::default()).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn grounding_is_monotone((tool, args) in args_strategy(), k in 0usize..6, extra in 1usize..4) {
        let registry = ToolRegistry::from_json(&registry_doc()).unwrap();
        let pool = history_pool();
        let short: Vec<Message> = pool[..k].iter().map(|s| Message::user(*s)).collect();
        let mut long = short.clone();
        long.extend(pool.iter().cycle().skip(k).take(extra).map(|s| Message::tool("t", *s)));
        let c = call(&tool, args);
        let before = hallucinated(&sparc_validate(&c, &registry, &short, None, &SparcConfig::default()).unwrap());
        let after = hallucinated(&sparc_validate(&c, &registry, &long, None, &SparcConfig::default()).unwrap());
        prop_assert!(after.is_subset(&before), "{:?} ⊄ {:?}", after, before);
    }

    #[test]
    fn judge_untouched_on_syntactic_failure(seed in any::<u64>()) {
        let doc = registry_doc();
        let registry = ToolRegistry::from_json(&doc).unwrap();
        let judge = MockJudge::replies(["PASS"]);
        for m in sparc_corpus::mutants(&doc, 5, seed) {
            let r = sparc_validate(&call(&m.tool, m.arguments), &registry, &[], Some(&judge), &SparcConfig::default()).unwrap();
            prop_assert!(!r.judge_consulted && !r.valid);
        }
        prop_assert_eq!(judge.call_count(), 0);
    }
}
