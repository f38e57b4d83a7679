//! semap turns sets of text documents into positioned networks of words:
//! units×words occurrence matrices in the vector-space model, cosine (or
//! Pearson) similarities between word vectors, thresholded semantic graphs
//! with isolated nodes pruned, spring-embedded map layouts, and a
//! factor-analytic view of the main dimensions. Everything a run produces
//! is deterministic given the same inputs and seed.

#![forbid(unsafe_code)]

pub mod corpus;
pub mod error;
pub mod export;
pub mod factors;
pub mod layout;
pub mod lexicon;
pub mod pipeline;
pub mod semgraph;
pub mod vsm;

pub use error::{Error, Result};
pub use pipeline::{compare_runs, run_pipeline, PipelineConfig};
