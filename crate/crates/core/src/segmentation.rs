//! Delimiter-slot representation of hashtags and their segmentations.
//!
//! A hashtag of `n` characters has `n - 1` delimiter slots, one between each
//! pair of adjacent characters. A segmentation fixes each slot to either
//! "no boundary" or "space". Characters themselves never change, so every
//! segmentation strips back to the hashtag it came from.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentationError {
    #[error("hashtag must have at least 2 characters, got {0}")]
    TooShort(usize),
    #[error("hashtag contains whitespace at character {0}")]
    Whitespace(usize),
    #[error("segmented text has a leading or trailing space")]
    EdgeSpace,
    #[error("segmented text has an empty token at character {0}")]
    EmptyToken(usize),
}

/// The raw, unsegmented character sequence of a hashtag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hashtag {
    chars: Arc<[char]>,
}

impl Hashtag {
    /// Builds a hashtag from text, stripping a single leading `#`.
    pub fn new(text: &str) -> Result<Self, SegmentationError> {
        let body = text.strip_prefix('#').unwrap_or(text);
        let chars: Vec<char> = body.chars().collect();
        if let Some(pos) = chars.iter().position(|c| c.is_whitespace()) {
            return Err(SegmentationError::Whitespace(pos));
        }
        if chars.len() < 2 {
            return Err(SegmentationError::TooShort(chars.len()));
        }
        Ok(Self {
            chars: chars.into(),
        })
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn as_string(&self) -> String {
        self.chars.iter().collect()
    }
}

impl fmt::Display for Hashtag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.chars.iter() {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Content of a delimiter slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Delimiter {
    /// No word boundary.
    None,
    /// A single space.
    Space,
}

/// One position of the interleaved `<c1, d1, c2, ..., c_n>` sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Char(char),
    Delim(Delimiter),
}

/// A hashtag with every delimiter slot fixed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segmentation {
    chars: Arc<[char]>,
    spaces: Vec<bool>,
}

/// All delimiter slots set to "no boundary".
pub fn generate(hashtag: &Hashtag) -> Segmentation {
    Segmentation {
        chars: Arc::clone(&hashtag.chars),
        spaces: vec![false; hashtag.len() - 1],
    }
}

/// Inverse of [`Segmentation::render`]: single spaces become boundaries.
pub fn parse(text: &str) -> Result<Segmentation, SegmentationError> {
    if text.starts_with(' ') || text.ends_with(' ') {
        return Err(SegmentationError::EdgeSpace);
    }
    let mut chars = Vec::new();
    let mut spaces = Vec::new();
    let mut pending_space = false;
    for (i, c) in text.chars().enumerate() {
        if c == ' ' {
            if pending_space {
                return Err(SegmentationError::EmptyToken(i));
            }
            pending_space = true;
            continue;
        }
        if c.is_whitespace() {
            return Err(SegmentationError::Whitespace(i));
        }
        if !chars.is_empty() {
            spaces.push(pending_space);
        }
        pending_space = false;
        chars.push(c);
    }
    if chars.len() < 2 {
        return Err(SegmentationError::TooShort(chars.len()));
    }
    Ok(Segmentation {
        chars: chars.into(),
        spaces,
    })
}

impl Segmentation {
    /// Size of the interleaved slot sequence, `2n - 1`.
    pub fn length(&self) -> usize {
        self.chars.len() + self.spaces.len()
    }

    /// Number of slots holding a space.
    pub fn counts(&self) -> usize {
        self.spaces.iter().filter(|&&s| s).count()
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.chars.len() + self.spaces.len());
        for (i, c) in self.chars.iter().enumerate() {
            if i > 0 && self.spaces[i - 1] {
                out.push(' ');
            }
            out.push(*c);
        }
        out
    }

    /// Number of delimiter slots, `n - 1`.
    pub fn slot_count(&self) -> usize {
        self.spaces.len()
    }

    pub fn delimiter(&self, slot: usize) -> Delimiter {
        if self.spaces[slot] {
            Delimiter::Space
        } else {
            Delimiter::None
        }
    }

    pub fn is_space(&self, slot: usize) -> bool {
        self.spaces[slot]
    }

    /// Returns a copy with delimiter slot `slot` (0-based) set to a space.
    pub fn with_space(&self, slot: usize) -> Segmentation {
        let mut spaces = self.spaces.clone();
        spaces[slot] = true;
        Segmentation {
            chars: Arc::clone(&self.chars),
            spaces,
        }
    }

    /// The interleaved character/delimiter sequence.
    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        self.chars.iter().enumerate().flat_map(move |(i, &c)| {
            let delim = self
                .spaces
                .get(i)
                .map(|&s| Slot::Delim(if s { Delimiter::Space } else { Delimiter::None }));
            std::iter::once(Slot::Char(c)).chain(delim)
        })
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn hashtag(&self) -> Hashtag {
        Hashtag {
            chars: Arc::clone(&self.chars),
        }
    }

    /// Maximal runs of characters between spaces as half-open offsets.
    pub fn word_spans(&self) -> Vec<(usize, usize)> {
        let mut spans = Vec::with_capacity(self.counts() + 1);
        let mut start = 0;
        for (slot, &space) in self.spaces.iter().enumerate() {
            if space {
                spans.push((start, slot + 1));
                start = slot + 1;
            }
        }
        spans.push((start, self.chars.len()));
        spans
    }

    /// Moves the boundaries of this segmentation onto other characters of
    /// the same length, e.g. the original-case form of a folded hashtag.
    pub fn transfer_to(&self, target: &Hashtag) -> Option<Segmentation> {
        (target.len() == self.chars.len()).then(|| Segmentation {
            chars: Arc::clone(&target.chars),
            spaces: self.spaces.clone(),
        })
    }
}

impl fmt::Display for Segmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A list of candidate segmentations forming one level of the search tree.
pub type CandidateTree = Vec<Segmentation>;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntry {
    pub segmentation: Segmentation,
    pub text: String,
    pub score: f64,
}

impl ScoredEntry {
    pub fn new(segmentation: Segmentation, score: f64) -> Self {
        let text = segmentation.render();
        Self {
            segmentation,
            text,
            score,
        }
    }
}

/// Best-first ordering: higher score, then fewer spaces, then rendered text.
pub fn rank_order(a: &ScoredEntry, b: &ScoredEntry) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.segmentation.counts().cmp(&b.segmentation.counts()))
        .then_with(|| a.text.cmp(&b.text))
}

/// Scored candidates, unique by segmentation and kept in best-first order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredCandidates {
    entries: Vec<ScoredEntry>,
}

impl ScoredCandidates {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from entries; later duplicates of a segmentation are dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = ScoredEntry>) -> Self {
        let mut seen = std::collections::HashSet::new();
        let mut entries: Vec<ScoredEntry> = entries
            .into_iter()
            .filter(|e| seen.insert(e.text.clone()))
            .collect();
        entries.sort_by(rank_order);
        Self { entries }
    }

    pub fn entries(&self) -> &[ScoredEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&ScoredEntry> {
        self.entries.first()
    }

    pub fn get(&self, text: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.text == text)
            .map(|e| e.score)
    }

    /// The `top_k` best entries.
    pub fn select(&self, top_k: usize) -> &[ScoredEntry] {
        &self.entries[..top_k.min(self.entries.len())]
    }

    pub fn ranking(&self) -> Vec<Segmentation> {
        self.entries
            .iter()
            .map(|e| e.segmentation.clone())
            .collect()
    }

    pub fn into_entries(self) -> Vec<ScoredEntry> {
        self.entries
    }
}
