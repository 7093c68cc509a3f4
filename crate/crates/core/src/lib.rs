//! Hashtag segmentation by beam search over delimiter placements, with a
//! second-opinion re-ranker, a two-candidate ensembler, evaluation metrics
//! and code-mixed translation pipelines.
//!
//! Language models are reached through the [`scoring::Scorer`] trait: either
//! the built-in smoothed unigram scorer or an external process speaking the
//! newline-delimited JSON protocol in [`scoring::protocol`].

pub mod beam;
pub mod cli;
pub mod codemix;
pub mod evaluation;
pub mod pipeline;
pub mod rerank;
pub mod scoring;
pub mod segmentation;
pub mod translate;

pub use beam::{hsbs, BeamParams, SearchOutcome};
pub use pipeline::SegmentationPipeline;
pub use rerank::EnsembleWeights;
pub use segmentation::{generate, parse, Hashtag, ScoredCandidates, Segmentation};
