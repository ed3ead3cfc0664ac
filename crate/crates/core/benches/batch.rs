//! Batch workloads through `par::map` (rayon when `parallel` is on) against
//! the plain sequential map.

use std::hint::black_box;

use agentguard_core::jsonq::{execute, parse_query, Limits};
use agentguard_core::model::{Message, ToolCall, ToolRegistry};
use agentguard_core::par;
use agentguard_core::sparc::{sparc_validate, SparcConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use serde_json::{json, Map, Value};

fn registry() -> ToolRegistry {
    ToolRegistry::from_json(&json!({
        "book_flight": {"description": "Book a flight", "parameters": {"type": "object", "properties": {
            "origin": {"type": "string"}, "destination": {"type": "string"},
            "date": {"type": "string", "format": "date"},
            "cabin": {"type": "string", "enum": ["economy", "business", "first"]},
            "max_price": {"type": "number", "format": "currency"}
        }, "required": ["origin", "destination", "date"]}}
    }))
    .unwrap()
}

fn calls(n: usize) -> Vec<(ToolCall, Vec<Message>)> {
    let cities = ["Paris", "Rome", "Lisbon", "Oslo", "Tokyo"];
    (0..n)
        .map(|i| {
            let (o, d) = (cities[i % 5], cities[(i + 2) % 5]);
            let mut args = Map::new();
            args.insert("origin".into(), json!(o));
            args.insert("destination".into(), json!(d));
            args.insert("date".into(), json!(format!("March {}, 2026", 1 + i % 28)));
            args.insert("cabin".into(), json!(if i % 3 == 0 { "Business" } else { "economy" }));
            args.insert("max_price".into(), json!(format!("${},{:03}.00", 1 + i % 9, i % 1000)));
            let history = vec![Message::user(format!(
                "Fly {o} to {d} on March {}, 2026, business if possible, budget {}",
                1 + i % 28,
                i
            ))];
            (ToolCall::new(format!("c{i}"), "book_flight", args), history)
        })
        .collect()
}

fn documents(n: usize) -> Vec<Value> {
    (0..n)
        .map(|d| {
            let rows: Vec<Value> = (0..400)
                .map(|i| json!({"id": i, "price": (i * 37 + d) % 1000, "tags": ["a", "b"], "ok": i % 7 != 0}))
                .collect();
            json!({"rows": rows})
        })
        .collect()
}

fn bench_sparc(c: &mut Criterion) {
    let registry = registry();
    let config = SparcConfig::default();
    let mut group = c.benchmark_group("sparc_batch");
    for n in [64, 512] {
        let items = calls(n);
        group.throughput(Throughput::Elements(n as u64));
        let run = |(call, history): &(ToolCall, Vec<Message>)| sparc_validate(call, &registry, history, None, &config);
        group.bench_with_input(BenchmarkId::new("par_map", n), &items, |b, items| {
            b.iter(|| black_box(par::map(items, run)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &items, |b, items| {
            b.iter(|| black_box(par::map_sequential(items, run)))
        });
    }
    group.finish();
}

fn bench_jsonq(c: &mut Criterion) {
    let program = parse_query(".rows[] | select(.price > 500) | {id: .id, price: .price} | count").unwrap();
    let limits = Limits::default();
    let mut group = c.benchmark_group("jsonq_batch");
    for n in [16, 128] {
        let docs = documents(n);
        group.throughput(Throughput::Elements(n as u64));
        let run = |doc: &Value| execute(&program, doc, limits).unwrap();
        group.bench_with_input(BenchmarkId::new("par_map", n), &docs, |b, docs| {
            b.iter(|| black_box(par::map(docs, run)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &docs, |b, docs| {
            b.iter(|| black_box(par::map_sequential(docs, run)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sparc, bench_jsonq);
criterion_main!(benches);
