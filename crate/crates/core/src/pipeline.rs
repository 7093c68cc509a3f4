//! Segmenter -> re-ranker -> ensembler, assembled for one hashtag at a time.

use thiserror::Error;

use crate::beam::{hsbs, BeamParams, SearchError};
use crate::evaluation::GoldPair;
use crate::rerank::{
    ensemble, grid_search, rerank, DualScored, DualScoredCandidates, EnsembleError,
    EnsembleWeights, TuningItem, TuningReport,
};
use crate::scoring::ScorerHandle;
use crate::segmentation::{Hashtag, SegmentationError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Hashtag(#[from] SegmentationError),
    #[error("segmenter failed")]
    Search(#[from] SearchError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Beam output in segmenter order with both scores.
    pub candidates: DualScoredCandidates,
    /// Final order after ensembling.
    pub ranking: Vec<DualScored>,
    pub truncated: bool,
}

impl PipelineOutput {
    pub fn best(&self) -> &DualScored {
        &self.ranking[0]
    }
}

#[derive(Clone)]
pub struct SegmentationPipeline {
    segmenter: ScorerHandle,
    reranker: ScorerHandle,
    params: BeamParams,
    weights: EnsembleWeights,
}

impl SegmentationPipeline {
    pub fn new(
        segmenter: ScorerHandle,
        reranker: ScorerHandle,
        params: BeamParams,
        weights: EnsembleWeights,
    ) -> Self {
        Self {
            segmenter,
            reranker,
            params,
            weights,
        }
    }

    pub fn with_weights(mut self, weights: EnsembleWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn weights(&self) -> EnsembleWeights {
        self.weights
    }

    pub fn params(&self) -> BeamParams {
        self.params
    }

    /// Beam search plus re-ranker scores, before ensembling.
    pub fn candidates(
        &self,
        hashtag: &Hashtag,
    ) -> Result<(DualScoredCandidates, bool), PipelineError> {
        let outcome = hsbs(hashtag, self.params, self.segmenter.as_ref())?;
        let dual = rerank(
            &outcome.candidates,
            self.segmenter.id(),
            self.reranker.as_ref(),
        )?;
        Ok((dual, outcome.truncated))
    }

    pub fn run(&self, hashtag: &Hashtag) -> Result<PipelineOutput, PipelineError> {
        let (candidates, truncated) = self.candidates(hashtag)?;
        let ranking = ensemble(&candidates, self.weights);
        Ok(PipelineOutput {
            candidates,
            ranking,
            truncated,
        })
    }

    /// Segments free text such as a hashtag body, returning the spaced form.
    ///
    /// With `lowercase`, scoring runs on the folded text and the chosen
    /// boundaries are moved back onto the original characters when folding
    /// kept the character count.
    pub fn segment_text(&self, body: &str, lowercase: bool) -> Result<String, PipelineError> {
        let original = Hashtag::new(body)?;
        if !lowercase {
            return Ok(self.run(&original)?.best().text.clone());
        }
        let folded = Hashtag::new(&body.to_lowercase())?;
        let best = self.run(&folded)?.best().segmentation.clone();
        Ok(best
            .transfer_to(&original)
            .map(|s| s.render())
            .unwrap_or_else(|| best.render()))
    }

    /// Scores every dev hashtag once; the result feeds any number of grid
    /// points.
    pub fn tuning_items(&self, dev: &[GoldPair]) -> Result<Vec<TuningItem>, PipelineError> {
        dev.iter()
            .map(|pair| {
                let (candidates, _) = self.candidates(&pair.hashtag)?;
                Ok(TuningItem {
                    candidates,
                    gold: pair.gold.clone(),
                })
            })
            .collect()
    }

    pub fn tune(
        &self,
        dev: &[GoldPair],
        alpha_grid: &[f64],
        beta_grid: &[f64],
    ) -> Result<TuningReport, PipelineError> {
        let items = self.tuning_items(dev)?;
        Ok(grid_search(&items, alpha_grid, beta_grid)?)
    }
}
