use agentguard_core::schema::{parse_schema, validate, ViolationCategory};
use agentguard_testkit::{schema_gen, schema_oracle};
use proptest::prelude::*;
use serde_json::{json, Value};

#[test]
fn fuzzed_pairs_agree_with_reference() {
    let mut rng = agentguard_testkit::rng(0x5c4e_0001);
    let mut conforming = 0;
    for i in 0..10_000 {
        let (value, schema) = schema_gen::pair(&mut rng);
        let node = parse_schema(&schema).unwrap_or_else(|e| panic!("#{i} {schema}: {e}")).node;
        let violations = validate(&value, &node);
        let reference = schema_oracle::conforms(&value, &schema);
        assert_eq!(violations.is_empty(), reference, "#{i}\nvalue {value}\nschema {schema}\n{violations:?}");
        conforming += usize::from(reference);
    }
    assert!((2_000..8_000).contains(&conforming), "{conforming} conforming");
}

#[test]
fn reference_cross_check_examples() {
    let schema = json!({"type":"object","properties":{"a":{"type":"integer"}},"required":["a"]});
    let node = parse_schema(&schema).unwrap().node;
    let v = validate(&json!({"a":"1","b":true}), &node);
    assert_eq!(
        v.iter().map(|x| (x.path.as_str(), x.category)).collect::<Vec<_>>(),
        [("/a", ViolationCategory::TypeMismatch), ("/b", ViolationCategory::UnknownArgument)]
    );
    assert!(!schema_oracle::conforms(&json!({"a":"1","b":true}), &schema));
}

/// Paths of every object inside `v`, as JSON pointers.
fn object_paths(v: &Value, at: String, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            out.push(at.clone());
            for (k, x) in m {
                object_paths(x, format!("{at}/{k}"), out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                object_paths(x, format!("{at}/{i}"), out);
            }
        }
        _ => {}
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn closed_world(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let mut rng = agentguard_testkit::rng(seed);
        let schema = schema_gen::object_schema(&mut rng, 3);
        let value = schema_gen::value(&mut rng, &schema, 0.0);
        let node = parse_schema(&schema).unwrap().node;
        prop_assume!(validate(&value, &node).is_empty());
        let mut objects = Vec::new();
        object_paths(&value, String::new(), &mut objects);
        prop_assume!(!objects.is_empty());
        let target = pick.get(&objects).clone();
        let mut widened = value.clone();
        widened.pointer_mut(&target).unwrap().as_object_mut().unwrap().insert("zz_undeclared".into(), json!(1));
        let after = validate(&widened, &node);
        prop_assert_eq!(after.len(), 1);
        prop_assert_eq!(after[0].category, ViolationCategory::UnknownArgument);
        prop_assert_eq!(&after[0].path, &format!("{target}/zz_undeclared"));
    }

    #[test]
    fn validate_is_pure(seed in any::<u64>()) {
        let mut rng = agentguard_testkit::rng(seed);
        let (value, schema) = schema_gen::pair(&mut rng);
        let node = parse_schema(&schema).unwrap().node;
        prop_assert_eq!(validate(&value, &node), validate(&value, &node));
    }
}
