//! Test-only reference implementations and generators. Nothing here depends
//! on the crates under test: each oracle re-derives its answers from first
//! principles so that agreement means something.

pub mod date_oracle;
pub mod jsonq_oracle;
pub mod schema_gen;
pub mod schema_oracle;
pub mod sparc_corpus;
pub mod transform_cases;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
