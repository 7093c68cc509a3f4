//! Re-ranking and the two-candidate ensembler.
//!
//! The ensembler looks only at the segmenter's top two candidates `c1` and
//! `c2` and computes
//!
//! ```text
//! f_E = alpha * |s(c1) - s(c2)| - beta * |s'(c1) - s'(c2)|
//! ```
//!
//! where `s` is the segmenter score and `s'` the re-ranker score. A negative
//! value hands the order of the pair to the re-ranker; otherwise the
//! segmenter order stands. Candidates below the top two keep their place.

use serde::Serialize;
use thiserror::Error;

use crate::beam::checked_scores;
use crate::evaluation::{span_f1, EvalError};
use crate::scoring::{BackendError, Scorer};
use crate::segmentation::{ScoredCandidates, Segmentation};

pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_GRID_STEP: f64 = 0.05;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("weight {name}={value} outside [0, 1]")]
    WeightOutOfRange { name: &'static str, value: f64 },
    #[error("nothing to re-rank")]
    NoCandidates,
    #[error("re-ranker failed")]
    Reranker(#[from] BackendError),
    #[error("grid is empty")]
    EmptyGrid,
    #[error("development set is empty")]
    EmptyDev,
    #[error("item {index} was scored by {found}, expected {expected}")]
    ScaleMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("grid step must be in (0, 1], got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Metric(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualScored {
    #[serde(skip)]
    pub segmentation: Segmentation,
    pub text: String,
    /// Segmenter score.
    pub segmenter: f64,
    /// Re-ranker score.
    pub reranker: f64,
}

/// Candidates in segmenter order, each with both scores, tagged with the
/// ids of the scorers that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DualScoredCandidates {
    pub segmenter_id: String,
    pub reranker_id: String,
    pub entries: Vec<DualScored>,
}

impl DualScoredCandidates {
    fn same_scale(&self, other: &DualScoredCandidates) -> bool {
        self.segmenter_id == other.segmenter_id && self.reranker_id == other.reranker_id
    }
}

/// Attaches re-ranker scores to the segmenter's candidates.
pub fn rerank(
    top: &ScoredCandidates,
    segmenter_id: &str,
    reranker: &dyn Scorer,
) -> Result<DualScoredCandidates, EnsembleError> {
    if top.is_empty() {
        return Err(EnsembleError::NoCandidates);
    }
    let texts: Vec<String> = top.entries().iter().map(|e| e.text.clone()).collect();
    let scores = checked_scores(reranker, &texts)?;
    Ok(DualScoredCandidates {
        segmenter_id: segmenter_id.to_string(),
        reranker_id: reranker.id().to_string(),
        entries: top
            .entries()
            .iter()
            .zip(scores)
            .map(|(e, r)| DualScored {
                segmentation: e.segmentation.clone(),
                text: e.text.clone(),
                segmenter: e.score,
                reranker: r,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleWeights {
    alpha: f64,
    beta: f64,
}

impl EnsembleWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, EnsembleError> {
        for (name, value) in [("alpha", alpha), ("beta", beta)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(EnsembleError::WeightOutOfRange { name, value });
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for EnsembleWeights {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairOrder {
    Segmenter,
    Reranker,
}

pub fn decision_value(c1: &DualScored, c2: &DualScored, w: EnsembleWeights) -> f64 {
    w.alpha * (c1.segmenter - c2.segmenter).abs() - w.beta * (c1.reranker - c2.reranker).abs()
}

/// Orders the pair `(c1, c2)`, given in segmenter order. Zero keeps the
/// segmenter order.
pub fn ensemble_decide<'a>(
    c1: &'a DualScored,
    c2: &'a DualScored,
    w: EnsembleWeights,
) -> (PairOrder, [&'a DualScored; 2]) {
    if decision_value(c1, c2, w) < 0.0 {
        let pair = if c2.reranker > c1.reranker {
            [c2, c1]
        } else {
            [c1, c2]
        };
        (PairOrder::Reranker, pair)
    } else {
        (PairOrder::Segmenter, [c1, c2])
    }
}

/// Final ranking: the decided top pair followed by the rest in segmenter
/// order.
pub fn ensemble(candidates: &DualScoredCandidates, w: EnsembleWeights) -> Vec<DualScored> {
    let entries = &candidates.entries;
    if entries.len() < 2 {
        return entries.clone();
    }
    let (_, pair) = ensemble_decide(&entries[0], &entries[1], w);
    pair.into_iter()
        .cloned()
        .chain(entries[2..].iter().cloned())
        .collect()
}

/// `0, step, 2*step, ..., 1` with each point computed as `i / n` so that
/// lattice values such as 0.2 and 0.1 are exact.
pub fn default_grid(step: f64) -> Result<Vec<f64>, EnsembleError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(EnsembleError::BadStep(step));
    }
    let n = (1.0 / step).round().max(1.0) as usize;
    Ok((0..=n).map(|i| i as f64 / n as f64).collect())
}

#[derive(Debug, Clone)]
pub struct TuningItem {
    pub candidates: DualScoredCandidates,
    pub gold: Segmentation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    pub f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuningReport {
    pub selected: EnsembleWeights,
    pub f1: f64,
    pub accuracy: f64,
    pub points: Vec<GridPoint>,
}

impl TuningReport {
    /// `key = value` lines loadable as a config file.
    pub fn config_fragment(&self) -> String {
        format!(
            "alpha = {}\nbeta = {}\n",
            self.selected.alpha, self.selected.beta
        )
    }
}

fn sorted_grid(grid: &[f64], name: &'static str) -> Result<Vec<f64>, EnsembleError> {
    let mut g = grid.to_vec();
    if let Some(&value) = g.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(EnsembleError::WeightOutOfRange { name, value });
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

/// Picks the weights maximizing dev-set F1 of the ensembled top-1.
/// Ties go to the smaller alpha, then the smaller beta.
pub fn grid_search(
    items: &[TuningItem],
    alpha_grid: &[f64],
    beta_grid: &[f64],
) -> Result<TuningReport, EnsembleError> {
    if alpha_grid.is_empty() || beta_grid.is_empty() {
        return Err(EnsembleError::EmptyGrid);
    }
    let first = items.first().ok_or(EnsembleError::EmptyDev)?;
    for (index, item) in items.iter().enumerate() {
        if !item.candidates.same_scale(&first.candidates) {
            return Err(EnsembleError::ScaleMismatch {
                index,
                expected: format!(
                    "{}+{}",
                    first.candidates.segmenter_id, first.candidates.reranker_id
                ),
                found: format!(
                    "{}+{}",
                    item.candidates.segmenter_id, item.candidates.reranker_id
                ),
            });
        }
        if item.candidates.entries.is_empty() {
            return Err(EnsembleError::NoCandidates);
        }
    }
    let alphas = sorted_grid(alpha_grid, "alpha")?;
    let betas = sorted_grid(beta_grid, "beta")?;
    let gold: Vec<Segmentation> = items.iter().map(|i| i.gold.clone()).collect();

    let mut points = Vec::with_capacity(alphas.len() * betas.len());
    let mut best: Option<GridPoint> = None;
    for &alpha in &alphas {
        for &beta in &betas {
            let w = EnsembleWeights { alpha, beta };
            let preds: Vec<Segmentation> = items
                .iter()
                .map(|i| ensemble(&i.candidates, w)[0].segmentation.clone())
                .collect();
            let m = span_f1(&preds, &gold)?;
            let point = GridPoint {
                alpha,
                beta,
                f1: m.f1,
                accuracy: m.accuracy,
            };
            if best.is_none_or(|b| point.f1 > b.f1) {
                best = Some(point);
            }
            points.push(point);
        }
    }
    let best = best.expect("non-empty grids");
    Ok(TuningReport {
        selected: EnsembleWeights {
            alpha: best.alpha,
            beta: best.beta,
        },
        f1: best.f1,
        accuracy: best.accuracy,
        points,
    })
}
