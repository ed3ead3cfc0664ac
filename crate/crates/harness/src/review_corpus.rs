//! Labelled responses for the silent-review cascade. Each case is built to
//! trigger exactly one rule; the label is the rule it was built for.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReviewCase {
    pub name: String,
    pub status: Option<u16>,
    pub body: String,
    /// Wire name of the expected outcome.
    pub outcome: &'static str,
    pub rule: &'static str,
}

const NOT: &str = "NOT_ACCOMPLISHED";
const PARTIAL: &str = "PARTIALLY_ACCOMPLISHED";
const OK: &str = "ACCOMPLISHED";

fn case(rule: &'static str, outcome: &'static str, i: usize, status: Option<u16>, body: &str) -> ReviewCase {
    ReviewCase {
        name: format!("{}-{i:02}", rule.to_lowercase()),
        status,
        body: body.to_owned(),
        outcome,
        rule,
    }
}

/// Sixty cases, ten per rule R0–R5.
pub fn corpus() -> Vec<ReviewCase> {
    let mut out = Vec::with_capacity(60);

    // R0: error status wins over whatever the body says.
    let r0: [(u16, &str); 10] = [
        (400, r#"{"message":"bad request"}"#),
        (401, ""),
        (403, r#"{"ok":true}"#),
        (404, "<html><body>Not Found</body></html>"),
        (409, r#"{"flights":[{"id":"FL1"}]}"#),
        (429, "slow down"),
        (500, "Internal Server Error"),
        (502, r#"{"status":"confirmed"}"#),
        (503, "Service under maintenance"),
        (599, "x"),
    ];
    out.extend(r0.iter().enumerate().map(|(i, (s, b))| case("R0", NOT, i, Some(*s), b)));

    // R1: nothing came back.
    let r1: [(Option<u16>, &str); 10] = [
        (Some(200), ""),
        (Some(200), "   "),
        (Some(200), "{}"),
        (Some(200), "[]"),
        (None, "\n\t \n"),
        (Some(201), "{ }"),
        (Some(204), ""),
        (None, "[ ]"),
        (Some(302), "{}"),
        (None, "null"),
    ];
    out.extend(r1.iter().enumerate().map(|(i, (s, b))| case("R1", NOT, i, *s, b)));

    // R2: a failure phrase in plain text or any JSON string value.
    let r2 = [
        "No results found",
        "Service under maintenance",
        "Temporarily unavailable, please try again later",
        r#"{"results": [], "message": "No results found for this query"}"#,
        r#"{"error": {"code": "RATE_LIMIT", "message": "rate limit exceeded"}}"#,
        "<h1>SERVICE UNDER MAINTENANCE</h1><p>Back soon.</p>",
        r#"{"data":{"items":[{"note":"Booking not found"}]}}"#,
        "Request  Unauthorized: token expired",
        r#"["ok", "internal error while rendering"]"#,
        "Sérvice  indisponible? No: Forbidden.",
    ];
    out.extend(r2.iter().enumerate().map(|(i, b)| case("R2", NOT, i, Some(200), b)));

    // R3: a top-level error field with content, worded so no phrase matches.
    let r3 = [
        r#"{"error":"invalid token"}"#,
        r#"{"error":{"code":7}}"#,
        r#"{"errors":[{"code":12,"field":"date"}]}"#,
        r#"{"error":true}"#,
        r#"{"error":1,"data":{"x":2}}"#,
        r#"{"errors":["bad cabin value"]}"#,
        r#"{"data":[1,2,3],"error":"quota exceeded"}"#,
        r#"{"error":{"message":"upstream timeout","retry":true}}"#,
        r#"{"errors":{"date":"must be in the future"}}"#,
        r#"{"error":"E_CONFLICT"}"#,
    ];
    out.extend(r3.iter().enumerate().map(|(i, b)| case("R3", NOT, i, Some(200), b)));

    // R4: data plus a partial marker.
    let r4 = [
        r#"{"items":[1,2],"note":"truncated"}"#,
        r#"{"flights":[{"id":"FL1"}],"status":"partial results"}"#,
        "Showing 10 flights; more results available",
        r#"{"rows":[{"n":1}],"meta":{"hint":"More Results Available"}}"#,
        r#"{"count":3,"warning":"list truncated at 3"}"#,
        "partial results: FL1, FL2",
        r#"[{"id":1},"truncated"]"#,
        r#"{"summary":"Paris trip","flags":["partial results"]}"#,
        "TRUNCATED output follows: abc",
        r#"{"total":120,"page":1,"info":"more results available via cursor"}"#,
    ];
    out.extend(r4.iter().enumerate().map(|(i, b)| case("R4", PARTIAL, i, Some(200), b)));

    // R5: healthy, including near misses for the earlier rules.
    let r5: [(Option<u16>, &str); 10] = [
        (Some(200), r#"{"booking_id":"BK-1","status":"confirmed"}"#),
        (Some(200), r#"{"not found":1,"unavailable":2}"#),
        (Some(200), r#"{"data":{"error_rate":0.2,"errors_seen":3}}"#),
        (Some(200), r#"{"data":{"x":1},"errors":[]}"#),
        (Some(200), r#"{"ok":true,"error":null}"#),
        (Some(302), "moved to /v2"),
        (None, "Found 3 flights to Rome"),
        (Some(200), "42"),
        (Some(200), r#"{"seats":"available","error":false}"#),
        (Some(200), r#"{"data":{"error":"nested errors are not top-level"}}"#),
    ];
    out.extend(r5.iter().enumerate().map(|(i, (s, b))| case("R5", OK, i, *s, b)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_per_rule() {
        let c = corpus();
        assert_eq!(c.len(), 60);
        for r in ["R0", "R1", "R2", "R3", "R4", "R5"] {
            assert_eq!(c.iter().filter(|x| x.rule == r).count(), 10);
        }
    }
}
