//! Batch-scoring contract shared by the segmenter and the re-ranker.
//!
//! Scores are natural-log scale, higher is better, and only comparable
//! between candidates scored by the same scorer.

mod corpus;
mod external;
pub mod protocol;

use std::collections::HashMap;
use std::sync::Arc;

pub use corpus::{CorpusError, CorpusModel, CorpusScorer, DEFAULT_DELTA};
pub use external::ExternalScorer;
pub use protocol::BackendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    CorpusUnigram,
    ExternalAutoregressive,
    ExternalMasked,
    Table,
}

pub trait Scorer: Send + Sync {
    /// Scores `texts`, returning exactly one finite value per text.
    fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, BackendError>;

    fn kind(&self) -> ScorerKind;

    /// Identity tag; scores from scorers with different ids are never
    /// compared with each other.
    fn id(&self) -> &str;
}

pub type ScorerHandle = Arc<dyn Scorer>;

impl<S: Scorer + ?Sized> Scorer for Arc<S> {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, BackendError> {
        (**self).score_batch(texts)
    }

    fn kind(&self) -> ScorerKind {
        (**self).kind()
    }

    fn id(&self) -> &str {
        (**self).id()
    }
}

/// Fixed lookup scorer. Texts missing from the table receive `fallback`.
#[derive(Debug, Clone)]
pub struct TableScorer {
    id: String,
    table: HashMap<String, f64>,
    fallback: f64,
}

impl TableScorer {
    pub fn new(id: impl Into<String>, fallback: f64) -> Self {
        Self {
            id: id.into(),
            table: HashMap::new(),
            fallback,
        }
    }

    pub fn with(mut self, text: impl Into<String>, score: f64) -> Self {
        self.insert(text, score);
        self
    }

    pub fn insert(&mut self, text: impl Into<String>, score: f64) {
        self.table.insert(text.into(), score);
    }
}

impl Scorer for TableScorer {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, BackendError> {
        Ok(texts
            .iter()
            .map(|t| self.table.get(t).copied().unwrap_or(self.fallback))
            .collect())
    }

    fn kind(&self) -> ScorerKind {
        ScorerKind::Table
    }

    fn id(&self) -> &str {
        &self.id
    }
}

/// Divides each score by the number of space-separated words.
pub struct LengthNormalized<S> {
    inner: S,
    id: String,
}

impl<S: Scorer> LengthNormalized<S> {
    pub fn new(inner: S) -> Self {
        let id = format!("{}/length-normalized", inner.id());
        Self { inner, id }
    }
}

impl<S: Scorer> Scorer for LengthNormalized<S> {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, BackendError> {
        let scores = self.inner.score_batch(texts)?;
        Ok(scores
            .into_iter()
            .zip(texts)
            .map(|(s, t)| s / t.split(' ').count() as f64)
            .collect())
    }

    fn kind(&self) -> ScorerKind {
        self.inner.kind()
    }

    fn id(&self) -> &str {
        &self.id
    }
}
