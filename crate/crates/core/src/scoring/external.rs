use std::time::Duration;

use super::protocol::{decode_scores, Endpoint, JsonLineClient, ScoreRequest};
use super::{BackendError, Scorer, ScorerKind};

/// Scorer backed by a remote process speaking the line protocol.
///
/// The adapter does not care whether the remote computes autoregressive
/// log-likelihood or masked pseudo-log-likelihood; `kind` only labels it.
pub struct ExternalScorer {
    client: JsonLineClient,
    kind: ScorerKind,
    id: String,
}

impl ExternalScorer {
    pub fn new(endpoint: Endpoint, kind: ScorerKind, timeout: Duration) -> Self {
        let id = format!("external:{endpoint}");
        Self {
            client: JsonLineClient::new(endpoint, timeout),
            kind,
            id,
        }
    }

    pub fn connect(
        endpoint: &str,
        kind: ScorerKind,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        Ok(Self::new(endpoint.parse()?, kind, timeout))
    }
}

impl Scorer for ExternalScorer {
    fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let (id, line) = self.client.round_trip(texts, |id| {
            serde_json::to_string(&ScoreRequest {
                id,
                texts: texts.to_vec(),
            })
            .expect("string request serializes")
        })?;
        decode_scores(&line, id, texts.len())
    }

    fn kind(&self) -> ScorerKind {
        self.kind
    }

    fn id(&self) -> &str {
        &self.id
    }
}
