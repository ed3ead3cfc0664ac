//! Reliability middleware for tool-using agents.
//!
//! Each lifecycle component follows the same three steps: build its input,
//! construct and configure it, then call [`component::Component::process`]
//! and act on the [`component::ComponentResult`].
//!
//! - [`sparc`]: pre-tool validation (syntactic, transformation, semantic).
//! - [`jsonq`]: post-tool extraction from large JSON responses through a
//!   small, loop-free query language.
//! - [`review`]: post-tool silent-error review of transport-successful
//!   responses.
//!
//! [`schema`] is the JSON-Schema subset they share, [`judge`] the LLM judge
//! clients and [`model`] the trajectory data model.

pub mod component;
pub mod judge;
pub mod jsonq;
pub mod model;
pub mod par;
pub mod review;
pub mod schema;
pub mod sparc;
pub mod text;
