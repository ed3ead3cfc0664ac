//! A small airline tool set used by the built-in suites.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::payload::huge_payload;
use crate::fault::HugePayload;

pub const CABINS: [&str; 4] = ["economy", "premium_economy", "business", "first"];

/// Tool specs in `tools/list` shape (`name`, `description`, `inputSchema`).
pub fn tools() -> Vec<Value> {
    vec![
        json!({"name": "search_flights", "description": "Find flights between two airports on a date.", "inputSchema": {
            "type": "object",
            "properties": {
                "origin": {"type": "string", "description": "IATA code"},
                "destination": {"type": "string", "description": "IATA code"},
                "date": {"type": "string", "format": "date"},
                "cabin": {"type": "string", "enum": CABINS}
            },
            "required": ["origin", "destination", "date"]
        }}),
        json!({"name": "book_flight", "description": "Book seats on a flight returned by search_flights.", "inputSchema": {
            "type": "object",
            "properties": {
                "flight_id": {"type": "string"},
                "passengers": {"type": "integer"},
                "cabin": {"type": "string", "enum": CABINS}
            },
            "required": ["flight_id", "passengers"]
        }}),
        json!({"name": "cancel_booking", "description": "Cancel an existing booking.", "inputSchema": {
            "type": "object",
            "properties": {
                "booking_id": {"type": "string"},
                "reason": {"type": "string", "enum": ["schedule_change", "price", "other"]}
            },
            "required": ["booking_id"]
        }}),
        json!({"name": "get_booking", "description": "Look up a booking.", "inputSchema": {
            "type": "object",
            "properties": {"booking_id": {"type": "string"}},
            "required": ["booking_id"]
        }}),
        json!({"name": "list_catalog", "description": "Dump the onboard shop catalog.", "inputSchema": {
            "type": "object",
            "properties": {"category": {"type": "string"}}
        }}),
    ]
}

fn tag(parts: &[&Value]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.to_string().as_bytes());
        h.update([0]);
    }
    h.finalize().iter().take(3).map(|b| format!("{b:02X}")).collect()
}

fn arg<'a>(args: &'a Map<String, Value>, k: &str) -> &'a Value {
    args.get(k).unwrap_or(&Value::Null)
}

/// The healthy answer for a call: deterministic in the arguments, and lenient
/// the way real services are (values are echoed, not validated).
pub fn respond(tool: &str, args: &Map<String, Value>, huge: Option<HugePayload>, seed: u64) -> Value {
    match tool {
        "search_flights" => {
            let (o, d, date) = (arg(args, "origin"), arg(args, "destination"), arg(args, "date"));
            let base = tag(&[o, d, date]);
            let flights: Vec<Value> = (0..3)
                .map(|i| {
                    json!({
                        "id": format!("FL{base}{i}"),
                        "origin": o, "destination": d, "date": date,
                        "departs": format!("{:02}:{:02}", 7 + 4 * i, 5 * i),
                        "price": 180 + 55 * i,
                    })
                })
                .collect();
            json!({"flights": flights})
        }
        "book_flight" => json!({
            "booking_id": format!("BK-{}", tag(&[arg(args, "flight_id"), arg(args, "passengers")])),
            "status": "confirmed",
            "flight_id": arg(args, "flight_id"),
            "passengers": arg(args, "passengers"),
            "cabin": args.get("cabin").cloned().unwrap_or(json!("economy")),
        }),
        "cancel_booking" => json!({
            "booking_id": arg(args, "booking_id"),
            "status": "cancelled",
            "reason": args.get("reason").cloned().unwrap_or(json!("other")),
        }),
        "get_booking" => json!({"booking_id": arg(args, "booking_id"), "status": "confirmed"}),
        "list_catalog" => {
            let h = huge.unwrap_or(HugePayload { items: 25, depth: 2 });
            huge_payload(h.items, h.depth, seed)
        }
        other => json!({"tool": other, "ok": true, "arguments": args}),
    }
}
