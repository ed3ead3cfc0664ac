use agentguard_core::model::{parse_trajectory, serialize_trajectory, Message, Role, ToolCall};
use proptest::prelude::*;
use serde_json::{Map, Value};

fn scalar() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::from),
        any::<i64>().prop_map(Value::from),
        "\\PC{0,12}".prop_map(Value::from),
    ]
}

fn call() -> impl Strategy<Value = ToolCall> {
    ("[a-z0-9]{1,6}", "[a-z_]{1,10}", prop::collection::btree_map("[a-z]{1,5}", scalar(), 0..4))
        .prop_map(|(id, name, args)| ToolCall::new(id, name, args.into_iter().collect::<Map<_, _>>()))
}

fn message() -> impl Strategy<Value = Message> {
    let text = "\\PC{0,40}";
    let stamp = prop::option::of(Just("2026-03-13T09:30:00Z".to_owned()));
    prop_oneof![
        text.prop_map(Message::user),
        text.prop_map(Message::system),
        (text, prop::collection::vec(call(), 0..3)).prop_map(|(c, calls)| Message::assistant(c, calls)),
        ("[a-z0-9]{1,6}", text).prop_map(|(id, c)| Message::tool(id, c)),
    ]
    .prop_flat_map(move |m| (Just(m), stamp.clone()))
    .prop_map(|(mut m, ts)| {
        m.timestamp = ts;
        m
    })
}

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(messages in prop::collection::vec(message(), 0..12)) {
        let text = serialize_trajectory(&messages);
        let t = parse_trajectory(&text).unwrap();
        prop_assert!(t.diagnostics.is_empty());
        prop_assert_eq!(&t.messages, &messages);
        prop_assert_eq!(t.line_numbers, (1..=messages.len()).collect::<Vec<_>>());
    }

    #[test]
    fn garbage_lines_become_diagnostics(messages in prop::collection::vec(message(), 1..6), junk in "[^\\n{}]{1,10}") {
        let mut text = serialize_trajectory(&messages);
        text.push_str(&junk);
        text.push('\n');
        let t = parse_trajectory(&text).unwrap();
        prop_assert_eq!(t.messages.len(), messages.len());
        if junk.trim().is_empty() {
            prop_assert!(t.diagnostics.is_empty());
        } else {
            prop_assert_eq!(t.diagnostics.len(), 1);
            prop_assert_eq!(t.diagnostics[0].line, messages.len() + 1);
        }
    }
}

#[test]
fn tool_calls_on_user_message_rejected() {
    let line = r#"{"role":"user","content":"x","tool_calls":[{"id":"1","tool_name":"t","arguments":{}}]}"#;
    let err = parse_trajectory(line).unwrap_err();
    assert_eq!(err.diagnostics[0].line, 1);
    assert_eq!(Role::User.to_string(), "user");
}
