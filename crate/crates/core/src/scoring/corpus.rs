use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use super::{BackendError, Scorer, ScorerKind};

pub const DEFAULT_DELTA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading corpus {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("smoothing mass must be finite and > 0, got {0}")]
    BadDelta(f64),
}

/// Additively smoothed unigram model over a word frequency table.
///
/// `p(w) = (count(w) + delta) / (total + delta * (V + 1))`, where `V` is the
/// vocabulary size; the extra `+1` reserves mass for unseen words.
#[derive(Debug, Clone)]
pub struct CorpusModel {
    counts: HashMap<String, u64>,
    total: u64,
    delta: f64,
    denominator: f64,
}

impl CorpusModel {
    pub fn from_counts<I, W>(counts: I, delta: f64) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (W, u64)>,
        W: Into<String>,
    {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(CorpusError::BadDelta(delta));
        }
        let mut table: HashMap<String, u64> = HashMap::new();
        for (w, c) in counts {
            *table.entry(w.into()).or_default() += c;
        }
        let total = table.values().sum();
        let denominator = total as f64 + delta * (table.len() as f64 + 1.0);
        Ok(Self {
            counts: table,
            total,
            delta,
            denominator,
        })
    }

    /// Reads `word<TAB>count` lines. Blank lines are ignored; repeated
    /// words accumulate.
    pub fn load(path: impl AsRef<Path>, delta: f64) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, delta)
    }

    pub fn parse(text: &str, delta: f64) -> Result<Self, CorpusError> {
        let mut counts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (word, count) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
                line: line_no,
                reason: "missing tab".into(),
            })?;
            if word.is_empty() || word.contains(char::is_whitespace) {
                return Err(CorpusError::Parse {
                    line: line_no,
                    reason: format!("invalid word {word:?}"),
                });
            }
            let count: u64 = count.trim().parse().map_err(|_| CorpusError::Parse {
                line: line_no,
                reason: format!("invalid count {count:?}"),
            })?;
            if count == 0 {
                return Err(CorpusError::Parse {
                    line: line_no,
                    reason: "count must be positive".into(),
                });
            }
            counts.push((word.to_string(), count));
        }
        Self::from_counts(counts, delta)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn probability(&self, word: &str) -> f64 {
        (self.count(word) as f64 + self.delta) / self.denominator
    }

    /// Sum of `ln p(w)` over the space-separated words of `candidate`.
    pub fn score(&self, candidate: &str) -> f64 {
        candidate
            .split(' ')
            .filter(|w| !w.is_empty())
            .fold(0.0, |acc, w| acc + self.probability(w).ln())
    }
}

#[derive(Debug, Clone)]
pub struct CorpusScorer {
    model: Arc<CorpusModel>,
    id: String,
}

impl CorpusScorer {
    pub fn new(model: CorpusModel, id: impl Into<String>) -> Self {
        Self {
            model: Arc::new(model),
            id: id.into(),
        }
    }

    pub fn model(&self) -> &CorpusModel {
        &self.model
    }
}

impl Scorer for CorpusScorer {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, BackendError> {
        Ok(texts.iter().map(|t| self.model.score(t)).collect())
    }

    fn kind(&self) -> ScorerKind {
        ScorerKind::CorpusUnigram
    }

    fn id(&self) -> &str {
        &self.id
    }
}
