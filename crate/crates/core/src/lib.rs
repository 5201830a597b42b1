//! Semantic-state engine for intent-driven UI generation.
//!
//! Design intent lives in a four-level [`SemanticState`] (product, design
//! system, feature, component). The engine compiles it into a generation
//! prompt, reads implemented semantics back out of generated code, relates
//! slots to each other in a typed graph, and regenerates code scoped to a
//! [`SemanticDiff`]. Every model call goes through one [`Gateway`] that can
//! run live, replay recorded fixtures, or answer from a deterministic mock.

pub mod augmentation_analyzer;
pub mod diff_engine;
pub mod error;
mod fsutil;
pub mod generation_engine;
pub mod prompt_parser;
pub mod provider_gateway;
pub mod relation_engine;
pub mod semantic_model;
pub mod session_store;
mod wire;

pub use diff_engine::SemanticDiff;
pub use error::{Error, Result};
pub use provider_gateway::Gateway;
pub use semantic_model::{AttributePath, AttributeValue, Level, Provenance, SemanticState, SlotRef};
