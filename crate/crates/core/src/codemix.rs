//! Tweet translation with and without hashtag segmentation.
//!
//! * `T`: translate the tweet as is.
//! * `CMT`: segment each hashtag, translate the segmented words, glue the
//!   translation back into a single `#token`, then translate the resulting
//!   code-mixed tweet.
//! * `CMTS`: run CMT, then put the spaces back into each glued hashtag that
//!   survived the final translation verbatim.

use std::error::Error as StdError;

use log::warn;
use serde::Serialize;
use thiserror::Error;

use crate::pipeline::SegmentationPipeline;
use crate::scoring::BackendError;
use crate::translate::Translator;

pub type SegmentFailure = Box<dyn StdError + Send + Sync>;

/// Anything that turns a hashtag body into space-separated words.
pub trait HashtagSegmenter: Send + Sync {
    fn segment(&self, body: &str) -> Result<String, SegmentFailure>;
}

/// Adapts a [`SegmentationPipeline`], optionally scoring on lowercased text.
pub struct PipelineSegmenter {
    pub pipeline: SegmentationPipeline,
    pub lowercase: bool,
}

impl HashtagSegmenter for PipelineSegmenter {
    fn segment(&self, body: &str) -> Result<String, SegmentFailure> {
        Ok(self.pipeline.segment_text(body, self.lowercase)?)
    }
}

#[derive(Debug, Error)]
pub enum CodemixError {
    #[error("translating tweet")]
    Translate(#[source] BackendError),
    #[error("hashtag {surface} at byte {start}: {reason}")]
    Span {
        surface: String,
        start: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailurePolicy {
    /// Abort the tweet on the first failing hashtag.
    Strict,
    /// Keep the original surface of a failing hashtag.
    #[default]
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    T,
    Cmt,
    Cmts,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "t" => Ok(Method::T),
            "cmt" => Ok(Method::Cmt),
            "cmts" => Ok(Method::Cmts),
            other => Err(format!("unknown method {other:?}, expected t, cmt or cmts")),
        }
    }
}

/// A `#token` occurrence; offsets are byte positions in the tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HashtagSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl HashtagSpan {
    pub fn body(&self) -> &str {
        &self.surface[1..]
    }
}

/// An error and its sources joined with `: `, for logs that only carry text.
pub fn describe(e: &(dyn StdError + 'static)) -> String {
    let mut out = e.to_string();
    let mut cur = e.source();
    while let Some(inner) = cur {
        out.push_str(": ");
        out.push_str(&inner.to_string());
        cur = inner.source();
    }
    out
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Finds `#` tokens that start at a whitespace or string boundary. The body
/// runs until whitespace or another `#`, minus trailing punctuation, and
/// must keep at least two characters.
pub fn extract_hashtags(text: &str) -> Vec<HashtagSpan> {
    let mut spans = Vec::new();
    let mut prev_is_space = true;
    let mut iter = text.char_indices().peekable();
    while let Some((start, c)) = iter.next() {
        if c != '#' || !prev_is_space {
            prev_is_space = c.is_whitespace();
            continue;
        }
        let body_start = start + 1;
        let mut body_end = body_start;
        while let Some(&(i, next)) = iter.peek() {
            if next.is_whitespace() || next == '#' {
                break;
            }
            body_end = i + next.len_utf8();
            iter.next();
        }
        let body = text[body_start..body_end].trim_end_matches(|c: char| !is_word_char(c));
        if body.chars().count() >= 2 {
            let end = body_start + body.len();
            spans.push(HashtagSpan {
                start,
                end,
                surface: text[start..end].to_string(),
            });
        }
        prev_is_space = false;
    }
    spans
}

#[derive(Debug, Clone)]
pub struct Tweet {
    pub text: String,
    pub hashtags: Vec<HashtagSpan>,
}

impl Tweet {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let hashtags = extract_hashtags(&text);
        Self { text, hashtags }
    }
}

/// Per-hashtag bookkeeping for the sidecar log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HashtagRecord {
    pub span: HashtagSpan,
    pub segmented: Option<String>,
    pub translated: Option<String>,
    /// Surface substituted into the code-mixed tweet.
    pub joined: String,
    /// `#` plus the translated words with single spaces, when known.
    pub spaced: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CmtOutcome {
    pub text: String,
    pub code_mixed: String,
    pub hashtags: Vec<HashtagRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Restoration {
    pub joined: String,
    pub spaced: String,
    pub occurrences: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CmtsOutcome {
    pub text: String,
    pub code_mixed: String,
    pub hashtags: Vec<HashtagRecord>,
    pub restorations: Vec<Restoration>,
    /// Recorded hashtags not found verbatim in the final translation.
    pub unmatched: Vec<String>,
}

pub fn method_t(tweet: &Tweet, tr: &dyn Translator) -> Result<String, CodemixError> {
    tr.translate(&tweet.text).map_err(CodemixError::Translate)
}

fn fail(
    policy: FailurePolicy,
    record: &mut HashtagRecord,
    reason: String,
) -> Result<(), CodemixError> {
    if policy == FailurePolicy::Strict {
        return Err(CodemixError::Span {
            surface: record.span.surface.clone(),
            start: record.span.start,
            reason,
        });
    }
    warn!("hashtag {} left as is: {reason}", record.span.surface);
    record.error = Some(reason);
    Ok(())
}

pub fn method_cmt(
    tweet: &Tweet,
    seg: &dyn HashtagSegmenter,
    tr: &dyn Translator,
    policy: FailurePolicy,
) -> Result<CmtOutcome, CodemixError> {
    let mut records: Vec<HashtagRecord> = tweet
        .hashtags
        .iter()
        .map(|span| HashtagRecord {
            span: span.clone(),
            segmented: None,
            translated: None,
            joined: span.surface.clone(),
            spaced: None,
            error: None,
        })
        .collect();

    for record in records.iter_mut() {
        match seg.segment(record.span.body()) {
            Ok(s) => record.segmented = Some(s),
            Err(e) => fail(
                policy,
                record,
                format!("segmentation failed: {}", describe(e.as_ref())),
            )?,
        }
    }

    let pending: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].segmented.is_some())
        .collect();
    if !pending.is_empty() {
        let batch: Vec<String> = pending
            .iter()
            .map(|&i| records[i].segmented.clone().expect("filtered"))
            .collect();
        match tr.translate_batch(&batch) {
            Ok(out) if out.len() == batch.len() => {
                for (&i, translated) in pending.iter().zip(out) {
                    let record = &mut records[i];
                    let glued: String = translated.chars().filter(|c| !c.is_whitespace()).collect();
                    if glued.is_empty() {
                        fail(policy, record, "empty translation".into())?;
                        continue;
                    }
                    record.joined = format!("#{glued}");
                    record.spaced = Some(format!(
                        "#{}",
                        translated.split_whitespace().collect::<Vec<_>>().join(" ")
                    ));
                    record.translated = Some(translated);
                }
            }
            result => {
                let reason = match result {
                    Err(e) => format!("translation failed: {}", describe(&e)),
                    Ok(out) => format!(
                        "translator returned {} texts for {}",
                        out.len(),
                        batch.len()
                    ),
                };
                for &i in &pending {
                    fail(policy, &mut records[i], reason.clone())?;
                }
            }
        }
    }

    let mut code_mixed = tweet.text.clone();
    for record in records.iter().rev() {
        code_mixed.replace_range(record.span.start..record.span.end, &record.joined);
    }
    let text = tr.translate(&code_mixed).map_err(CodemixError::Translate)?;
    Ok(CmtOutcome {
        text,
        code_mixed,
        hashtags: records,
    })
}

pub fn method_cmts(
    tweet: &Tweet,
    seg: &dyn HashtagSegmenter,
    tr: &dyn Translator,
    policy: FailurePolicy,
) -> Result<CmtsOutcome, CodemixError> {
    let cmt = method_cmt(tweet, seg, tr, policy)?;

    let mut restorations: Vec<Restoration> = Vec::new();
    for r in &cmt.hashtags {
        if let Some(spaced) = &r.spaced {
            if !restorations.iter().any(|x| x.joined == r.joined) {
                restorations.push(Restoration {
                    joined: r.joined.clone(),
                    spaced: spaced.clone(),
                    occurrences: 0,
                });
            }
        }
    }
    // longest first so that a glued form never matches inside a longer one
    let mut order: Vec<usize> = (0..restorations.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(restorations[i].joined.len()));

    let source = &cmt.text;
    let mut text = String::with_capacity(source.len() + 16);
    let mut pos = 0;
    while pos < source.len() {
        let rest = &source[pos..];
        let hit = order.iter().copied().find(|&i| {
            let joined = &restorations[i].joined;
            rest.starts_with(joined.as_str()) && !rest[joined.len()..].starts_with(is_word_char)
        });
        match hit {
            Some(i) => {
                text.push_str(&restorations[i].spaced);
                pos += restorations[i].joined.len();
                restorations[i].occurrences += 1;
            }
            None => {
                let c = rest.chars().next().expect("pos < len");
                text.push(c);
                pos += c.len_utf8();
            }
        }
    }

    let unmatched: Vec<String> = restorations
        .iter()
        .filter(|r| r.occurrences == 0)
        .map(|r| r.joined.clone())
        .collect();
    for u in &unmatched {
        warn!("hashtag {u} not found in translated tweet; spaces not restored");
    }
    Ok(CmtsOutcome {
        text,
        code_mixed: cmt.code_mixed,
        hashtags: cmt.hashtags,
        restorations,
        unmatched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::translate::{IdentityTranslator, PhraseTableTranslator};
    use std::collections::HashMap;

    struct Fixed(HashMap<&'static str, &'static str>);

    impl HashtagSegmenter for Fixed {
        fn segment(&self, body: &str) -> Result<String, SegmentFailure> {
            self.0
                .get(body)
                .map(|s| s.to_string())
                .ok_or_else(|| format!("no segmentation for {body}").into())
        }
    }

    fn fixed() -> Fixed {
        Fixed(HashMap::from([
            ("vamosequipo", "vamos equipo"),
            ("VamosEquipo", "Vamos Equipo"),
            ("golazo", "golazo"),
        ]))
    }

    fn table() -> PhraseTableTranslator {
        PhraseTableTranslator::new()
            .with("vamos equipo", "let's go team")
            .with("gol!", "goal!")
            .with("ya", "now")
            .with("golazo", "great goal")
    }

    #[test]
    fn extraction() {
        let spans = extract_hashtags("gol! #VamosEquipo ya");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].surface, "#VamosEquipo");
        assert_eq!(
            &"gol! #VamosEquipo ya"[spans[0].start..spans[0].end],
            "#VamosEquipo"
        );
        assert!(extract_hashtags("no tags here").is_empty());
        assert!(extract_hashtags("#a b").is_empty());
        assert_eq!(extract_hashtags("#ab").len(), 1);
        assert!(extract_hashtags("mail a#bc").is_empty());
        let t = extract_hashtags("#Olé! ¡#no y #fútbol, #x");
        let surfaces: Vec<&str> = t.iter().map(|s| s.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["#Olé", "#fútbol"]);
        let glued = extract_hashtags("#uno#dos");
        assert_eq!(glued.len(), 1);
        assert_eq!(glued[0].surface, "#uno");
    }

    #[test]
    fn identity_translation_is_identity() {
        let tweet = Tweet::new("gol! #VamosEquipo ya");
        assert_eq!(method_t(&tweet, &IdentityTranslator).unwrap(), tweet.text);
        let cmt = method_cmt(&tweet, &fixed(), &IdentityTranslator, FailurePolicy::Strict).unwrap();
        assert_eq!(cmt.text, tweet.text);
        let cmts =
            method_cmts(&tweet, &fixed(), &IdentityTranslator, FailurePolicy::Strict).unwrap();
        assert_eq!(cmts.text, "gol! #Vamos Equipo ya");
    }

    #[test]
    fn phrase_table_cmt_and_cmts() {
        let tweet = Tweet::new("gol! #vamosequipo ya");
        let cmt = method_cmt(&tweet, &fixed(), &table(), FailurePolicy::Strict).unwrap();
        assert_eq!(cmt.code_mixed, "gol! #let'sgoteam ya");
        assert_eq!(cmt.text, "goal! #let'sgoteam now");
        let cmts = method_cmts(&tweet, &fixed(), &table(), FailurePolicy::Strict).unwrap();
        assert_eq!(cmts.text, "goal! #let's go team now");
        assert!(cmts.unmatched.is_empty());
        assert_eq!(cmts.restorations[0].occurrences, 1);
    }

    #[test]
    fn no_hashtags_degenerates_to_t() {
        let tweet = Tweet::new("gol! ya");
        let t = method_t(&tweet, &table()).unwrap();
        assert_eq!(
            method_cmt(&tweet, &fixed(), &table(), FailurePolicy::Strict)
                .unwrap()
                .text,
            t
        );
        assert_eq!(
            method_cmts(&tweet, &fixed(), &table(), FailurePolicy::Strict)
                .unwrap()
                .text,
            t
        );
    }

    #[test]
    fn deleted_hashtag_is_reported() {
        // the final translation drops the glued hashtag entirely
        let tr = table().with("#let'sgoteam", "");
        let tweet = Tweet::new("gol! #vamosequipo ya");
        let cmts = method_cmts(&tweet, &fixed(), &tr, FailurePolicy::Strict).unwrap();
        assert_eq!(cmts.text, "goal! now");
        assert_eq!(cmts.unmatched, vec!["#let'sgoteam".to_string()]);
    }

    #[test]
    fn unknown_hashtag_policy() {
        let tweet = Tweet::new("#desconocido ya");
        let lenient = method_cmt(&tweet, &fixed(), &table(), FailurePolicy::Lenient).unwrap();
        assert_eq!(lenient.code_mixed, "#desconocido ya");
        assert!(lenient.hashtags[0].error.is_some());
        let strict = method_cmt(&tweet, &fixed(), &table(), FailurePolicy::Strict);
        assert!(matches!(strict, Err(CodemixError::Span { start: 0, .. })));
    }

    #[test]
    fn substitution_leaves_other_text_alone() {
        let tweet = Tweet::new("¡ole!  #golazo y #vamosequipo.");
        let cmt = method_cmt(&tweet, &fixed(), &IdentityTranslator, FailurePolicy::Strict).unwrap();
        assert_eq!(cmt.code_mixed, tweet.text);
        let cmt = method_cmt(&tweet, &fixed(), &table(), FailurePolicy::Strict).unwrap();
        assert_eq!(cmt.code_mixed, "¡ole!  #greatgoal y #let'sgoteam.");
        let cmts =
            method_cmts(&tweet, &fixed(), &IdentityTranslator, FailurePolicy::Strict).unwrap();
        assert_eq!(cmts.text, "¡ole!  #golazo y #vamos equipo.");
        assert_eq!(cmts.hashtags.len(), 2);
    }

    #[test]
    fn glued_prefix_does_not_match_inside_longer_tag() {
        let seg = Fixed(HashMap::from([("ab", "a b"), ("abcd", "ab cd")]));
        let tweet = Tweet::new("#ab #abcd");
        let cmts = method_cmts(&tweet, &seg, &IdentityTranslator, FailurePolicy::Strict).unwrap();
        assert_eq!(cmts.text, "#a b #ab cd");
    }
}
