//! Large nested JSON documents for extraction tests.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const WORDS: [&str; 24] = [
    "aurora", "basalt", "cobalt", "dune", "ember", "fjord", "garnet", "harbor", "indigo", "juniper", "kelp", "lagoon",
    "mesa", "nectar", "onyx", "prairie", "quartz", "ridge", "saffron", "tundra", "umber", "violet", "willow", "zephyr",
];
const CATEGORIES: [&str; 8] = ["audio", "books", "camera", "garden", "kitchen", "outdoor", "toys", "travel"];

/// Extraction programs used for the payload-reduction measurement.
pub const EXTRACTION_QUERIES: &[&str] = &[
    ".items | count",
    ".total",
    ".items[] | .price | max",
    ".items[] | select(.in_stock == false) | count",
    ".items[] | .category | unique",
    ".items[] | select(.rating >= 4.8) | {id: .id, price: .price}",
    ".items[3].attributes.child.child.label",
    ".items[] | select(.category == \"audio\") | .price | sum",
];

fn words<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn nested<R: Rng>(rng: &mut R, depth: usize) -> Value {
    if depth == 0 {
        return json!({"leaf": words(rng, 2), "value": rng.random_range(0..10_000)});
    }
    let metrics: Vec<i64> = (0..6).map(|_| rng.random_range(-5_000..5_000)).collect();
    json!({
        "level": depth,
        "label": words(rng, 6),
        "metrics": metrics,
        "child": nested(rng, depth - 1),
    })
}

/// A catalog of `items` products, each with an attribute chain `depth` deep.
/// Deterministic in `seed`. With 1000 items and depth 4 the compact
/// serialization exceeds 1 MB.
pub fn huge_payload(items: usize, depth: usize, seed: u64) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Value> = (0..items)
        .map(|i| {
            let cents = rng.random_range(100..100_000);
            json!({
                "id": i,
                "sku": format!("SKU-{i:06}"),
                "name": words(&mut rng, 3),
                "category": CATEGORIES.choose(&mut rng).unwrap(),
                "price": cents as f64 / 100.0,
                "in_stock": rng.random_bool(0.8),
                "rating": rng.random_range(10..=50) as f64 / 10.0,
                "tags": (0..4).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>(),
                "description": words(&mut rng, 60),
                "attributes": nested(&mut rng, depth),
            })
        })
        .collect();
    json!({"catalog": "harness", "seed": seed, "total": items, "items": rows})
}
