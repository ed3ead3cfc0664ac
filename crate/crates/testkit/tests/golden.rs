use agentguard_testkit::jsonq_oracle::{golden_json, GOLDEN_FILE};

/// Set `REGENERATE_GOLDEN=1` to rewrite the committed file from the oracle.
#[test]
fn committed_golden_matches_oracle() {
    let fresh = golden_json();
    if std::env::var_os("REGENERATE_GOLDEN").is_some() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/golden/jsonq_golden.json");
        std::fs::write(path, serde_json::to_string_pretty(&fresh).unwrap() + "\n").unwrap();
        return;
    }
    let committed: serde_json::Value = serde_json::from_str(GOLDEN_FILE).unwrap();
    assert_eq!(committed, fresh, "golden file is stale; rerun with REGENERATE_GOLDEN=1");
}
