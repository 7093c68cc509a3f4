//! Beam search over delimiter placements.
//!
//! Each iteration `t` expands every surviving candidate that carries `t - 1`
//! spaces into one child per remaining empty slot, scores the new children,
//! and keeps the `top_k` best candidates scored so far. Keeping older,
//! shallower candidates in the beam is what lets a single-word hashtag win;
//! the `counts(S) >= t - 1` guard stops those from being expanded again.

use std::collections::{HashMap, HashSet};

use log::warn;
use thiserror::Error;

use crate::scoring::{BackendError, Scorer};
use crate::segmentation::{
    generate, CandidateTree, Hashtag, ScoredCandidates, ScoredEntry, Segmentation,
};

pub const DEFAULT_EXPANSIONS: usize = 13;
pub const DEFAULT_TOP_K: usize = 20;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("beam parameters must be >= 1 (expansions={expansions}, top_k={top_k})")]
    BadParams { expansions: usize, top_k: usize },
    #[error("scoring failed at iteration {iteration}")]
    Scorer {
        iteration: usize,
        #[source]
        source: BackendError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamParams {
    expansions: usize,
    top_k: usize,
}

impl BeamParams {
    pub fn new(expansions: usize, top_k: usize) -> Result<Self, SearchError> {
        if expansions == 0 || top_k == 0 {
            return Err(SearchError::BadParams { expansions, top_k });
        }
        Ok(Self { expansions, top_k })
    }

    pub fn expansions(&self) -> usize {
        self.expansions
    }

    pub fn top_k(&self) -> usize {
        self.top_k
    }

    /// Expansions actually run for a hashtag of `n` characters.
    pub fn effective_expansions(&self, n: usize) -> usize {
        self.expansions.min(n.saturating_sub(1))
    }
}

impl Default for BeamParams {
    fn default() -> Self {
        Self {
            expansions: DEFAULT_EXPANSIONS,
            top_k: DEFAULT_TOP_K,
        }
    }
}

/// One child per empty slot of every node with at least `t - 1` spaces.
pub fn expand(tree: &[Segmentation], t: usize) -> CandidateTree {
    let min_spaces = t.saturating_sub(1);
    let mut out = Vec::new();
    for node in tree.iter().filter(|s| s.counts() >= min_spaces) {
        for slot in 0..node.slot_count() {
            if !node.is_space(slot) {
                out.push(node.with_space(slot));
            }
        }
    }
    out
}

pub(crate) fn checked_scores(
    scorer: &dyn Scorer,
    texts: &[String],
) -> Result<Vec<f64>, BackendError> {
    let scores = scorer.score_batch(texts)?;
    if scores.len() != texts.len() {
        return Err(BackendError::CountMismatch {
            expected: texts.len(),
            got: scores.len(),
        });
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(BackendError::NonFiniteScore { index });
    }
    Ok(scores)
}

/// Scores each distinct candidate of `tree` in a single batch.
pub fn score(tree: &[Segmentation], scorer: &dyn Scorer) -> Result<ScoredCandidates, BackendError> {
    let mut seen = HashSet::new();
    let unique: Vec<_> = tree
        .iter()
        .filter(|s| seen.insert(s.render()))
        .cloned()
        .collect();
    if unique.is_empty() {
        return Ok(ScoredCandidates::new());
    }
    let texts: Vec<String> = unique.iter().map(|s| s.render()).collect();
    let scores = checked_scores(scorer, &texts)?;
    Ok(ScoredCandidates::from_entries(
        unique
            .into_iter()
            .zip(scores)
            .map(|(s, v)| ScoredEntry::new(s, v)),
    ))
}

/// The `top_k` best candidates of `scored`, best first.
pub fn prune(scored: &ScoredCandidates, top_k: usize) -> CandidateTree {
    scored
        .select(top_k)
        .iter()
        .map(|e| e.segmentation.clone())
        .collect()
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Final beam plus the unsegmented candidate, best first.
    pub candidates: ScoredCandidates,
    /// Every candidate scored during the search.
    pub explored: ScoredCandidates,
    /// Set when an iteration had no node left to expand.
    pub truncated: bool,
    pub iterations: usize,
}

/// Scores the nodes whose rendering is not cached yet, in one batch.
fn score_new(
    cache: &mut HashMap<String, ScoredEntry>,
    nodes: &[Segmentation],
    scorer: &dyn Scorer,
    iteration: usize,
) -> Result<(), SearchError> {
    let mut fresh = Vec::new();
    let mut pending = HashSet::new();
    for node in nodes {
        let text = node.render();
        if !cache.contains_key(&text) && pending.insert(text.clone()) {
            fresh.push((node.clone(), text));
        }
    }
    if fresh.is_empty() {
        return Ok(());
    }
    let texts: Vec<String> = fresh.iter().map(|(_, t)| t.clone()).collect();
    let scores = checked_scores(scorer, &texts)
        .map_err(|source| SearchError::Scorer { iteration, source })?;
    for ((segmentation, text), score) in fresh.into_iter().zip(scores) {
        cache.insert(
            text.clone(),
            ScoredEntry {
                segmentation,
                text,
                score,
            },
        );
    }
    Ok(())
}

/// Runs the beam search for one hashtag.
pub fn hsbs(
    hashtag: &Hashtag,
    params: BeamParams,
    scorer: &dyn Scorer,
) -> Result<SearchOutcome, SearchError> {
    let expansions = params.effective_expansions(hashtag.len());
    let root = generate(hashtag);
    let mut cache: HashMap<String, ScoredEntry> = HashMap::new();

    score_new(&mut cache, std::slice::from_ref(&root), scorer, 0)?;
    let mut tree = vec![root.clone()];
    let mut truncated = false;
    let mut iterations = 0;

    for t in 1..=expansions {
        let children = expand(&tree, t);
        if children.is_empty() {
            warn!(
                "beam search for {hashtag} stopped at iteration {t} of {expansions}: no node to expand"
            );
            truncated = true;
            break;
        }
        score_new(&mut cache, &children, scorer, t)?;
        iterations = t;
        let scored = ScoredCandidates::from_entries(cache.values().cloned());
        tree = prune(&scored, params.top_k);
    }

    // every survivor already has a cached score, so the final pass makes
    // no scorer calls
    let root_text = root.render();
    let mut finals: Vec<ScoredEntry> = tree.iter().map(|s| cache[&s.render()].clone()).collect();
    if !finals.iter().any(|e| e.text == root_text) {
        finals.push(cache[&root_text].clone());
    }

    Ok(SearchOutcome {
        candidates: ScoredCandidates::from_entries(finals),
        explored: ScoredCandidates::from_entries(cache.into_values()),
        truncated,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{CorpusModel, CorpusScorer, TableScorer};
    use crate::segmentation::parse;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn h(s: &str) -> Hashtag {
        Hashtag::new(s).unwrap()
    }

    #[test]
    fn first_expansion_of_beamsearch() {
        let kids = expand(&[generate(&h("beamsearch"))], 1);
        let texts: Vec<String> = kids.iter().map(|s| s.render()).collect();
        assert_eq!(kids.len(), 9);
        assert_eq!(texts[0], "b eamsearch");
        assert_eq!(texts[8], "beamsearc h");
        assert!(kids.iter().all(|k| k.counts() == 1));
    }

    #[test]
    fn minimal_expansion() {
        let kids = expand(&[generate(&h("ab"))], 1);
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].render(), "a b");
    }

    #[test]
    fn guard_skips_shallow_nodes() {
        let tree = vec![parse("beam search").unwrap(), generate(&h("beamsearch"))];
        let kids = expand(&tree, 2);
        assert_eq!(kids.len(), 8);
        assert!(kids.iter().all(|k| k.counts() == 2));
        assert!(kids.iter().all(|k| k.is_space(3)));
        assert!(expand(&[], 1).is_empty());
    }

    #[test]
    fn score_deduplicates() {
        let s = parse("beam search").unwrap();
        let scorer = TableScorer::new("t", -1.0);
        let d = score(&[s.clone(), s], &scorer).unwrap();
        assert_eq!(d.len(), 1);
        assert!(score(&[], &scorer).unwrap().is_empty());
    }

    #[test]
    fn prune_keeps_best_and_breaks_ties() {
        let root = generate(&h("abcd"));
        let tree: Vec<_> = std::iter::once(root.clone())
            .chain(expand(&[root], 1))
            .collect();
        let d = score(&tree, &TableScorer::new("t", -1.0)).unwrap();
        let kept: Vec<String> = prune(&d, 3).iter().map(|s| s.render()).collect();
        assert_eq!(kept, vec!["abcd", "a bcd", "ab cd"]);
        assert_eq!(prune(&d, 20).len(), 4);
    }

    #[test]
    fn two_character_hashtag_enumerates_fully() {
        let model = CorpusModel::from_counts([("a", 1), ("b", 1), ("ab", 1)], 0.5).unwrap();
        let scorer = CorpusScorer::new(model, "c");
        let out = hsbs(&h("ab"), BeamParams::new(1, 2).unwrap(), &scorer).unwrap();
        let mut texts: Vec<&str> = out
            .candidates
            .entries()
            .iter()
            .map(|e| e.text.as_str())
            .collect();
        texts.sort();
        assert_eq!(texts, vec!["a b", "ab"]);
        assert_eq!(out.candidates.get("ab"), Some(scorer.model().score("ab")));
        assert!(!out.truncated);
    }

    #[test]
    fn root_is_always_returned() {
        // root scores worst, so the beam drops it, but it is re-added
        let scorer = TableScorer::new("t", 0.0).with("abcdef", -100.0);
        let out = hsbs(&h("abcdef"), BeamParams::new(3, 2).unwrap(), &scorer).unwrap();
        assert_eq!(out.candidates.len(), 3);
        assert_eq!(out.candidates.get("abcdef"), Some(-100.0));
    }

    struct Counting<'a> {
        inner: &'a dyn Scorer,
        texts: AtomicUsize,
        seen: std::sync::Mutex<HashSet<String>>,
    }

    impl Scorer for Counting<'_> {
        fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, BackendError> {
            self.texts.fetch_add(texts.len(), Ordering::SeqCst);
            let mut seen = self.seen.lock().unwrap();
            for t in texts {
                assert!(seen.insert(t.clone()), "{t} scored twice");
            }
            self.inner.score_batch(texts)
        }
        fn kind(&self) -> crate::scoring::ScorerKind {
            self.inner.kind()
        }
        fn id(&self) -> &str {
            "counting"
        }
    }

    #[test]
    fn no_candidate_is_scored_twice() {
        let model =
            CorpusModel::from_counts([("beam", 10), ("search", 10), ("bea", 3)], 0.5).unwrap();
        let base = CorpusScorer::new(model, "c");
        let scorer = Counting {
            inner: &base,
            texts: AtomicUsize::new(0),
            seen: Default::default(),
        };
        let out = hsbs(&h("beamsearch"), BeamParams::default(), &scorer).unwrap();
        assert_eq!(scorer.texts.load(Ordering::SeqCst), out.explored.len());
        assert_eq!(out.candidates.best().unwrap().text, "beam search");
        assert!(out.candidates.len() <= DEFAULT_TOP_K + 1);
    }

    #[test]
    fn expansions_are_clamped() {
        let p = BeamParams::default();
        assert_eq!(p.effective_expansions(5), 4);
        assert_eq!(p.effective_expansions(30), 13);
        assert!(BeamParams::new(0, 1).is_err());
        assert!(BeamParams::new(1, 0).is_err());
    }

    #[test]
    fn truncation_is_flagged() {
        // with a beam of one and a root that always wins, iteration 2 has
        // nothing to expand
        let scorer = TableScorer::new("t", -5.0).with("abcd", 0.0);
        let out = hsbs(&h("abcd"), BeamParams::new(3, 1).unwrap(), &scorer).unwrap();
        assert!(out.truncated);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.candidates.best().unwrap().text, "abcd");
    }

    struct Broken;
    impl Scorer for Broken {
        fn score_batch(&self, texts: &[String]) -> Result<Vec<f64>, BackendError> {
            Ok(vec![0.0; texts.len() + 1])
        }
        fn kind(&self) -> crate::scoring::ScorerKind {
            crate::scoring::ScorerKind::Table
        }
        fn id(&self) -> &str {
            "broken"
        }
    }

    #[test]
    fn misaligned_scorer_is_an_error() {
        let err = hsbs(&h("abc"), BeamParams::default(), &Broken).unwrap_err();
        assert!(matches!(
            err,
            SearchError::Scorer {
                iteration: 0,
                source: BackendError::CountMismatch { .. }
            }
        ));
    }
}
