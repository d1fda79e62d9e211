//! Knowledge-graph assisted medical question answering.
//!
//! Candidate answers come from a pluggable generator, one per retrieved
//! context; the final answer is the candidate whose ROUGE-L F1 against the
//! question's knowledge-graph subgraph is highest. The crate also carries the
//! evaluation bench used to compare systems: lexical, semantic, readability
//! and contradiction metrics, TransE link prediction and report tables.

pub mod config;
pub mod corpus;
pub mod error;
pub mod generation;
pub mod harness;
pub mod jsonl;
pub mod kg_embedding;
pub mod knowledge_graph;
pub mod metrics;
pub mod provider;
pub mod reasoning;
pub mod text;
pub mod vector_store;

pub use error::{Error, Result};
