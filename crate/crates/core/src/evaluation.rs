//! Gold-file loading and segmentation metrics.
//!
//! F1 is micro-averaged over word spans: a predicted word counts as matched
//! only if a gold word covers exactly the same character offsets.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::segmentation::{parse, Hashtag, Segmentation};

pub const DEFAULT_ORACLE_N: [usize; 4] = [1, 2, 5, 10];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reading {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("{pred} predictions for {gold} gold items")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("item {index}: prediction {pred:?} is not over gold hashtag {gold:?}")]
    HashtagMismatch {
        index: usize,
        pred: String,
        gold: String,
    },
    #[error("item {0} has no candidates")]
    EmptyRanking(usize),
    #[error("oracle N must be >= 1")]
    ZeroN,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldPair {
    pub hashtag: Hashtag,
    pub gold: Segmentation,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub lowercase: bool,
    pub strict: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            lowercase: true,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct GoldSet {
    pub pairs: Vec<GoldPair>,
    /// Lines skipped in lenient mode.
    pub skipped: Vec<LineError>,
}

pub fn load_gold(path: impl AsRef<Path>, opts: LoadOptions) -> Result<GoldSet, EvalError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_gold(&text, opts)
}

pub fn parse_gold(text: &str, opts: LoadOptions) -> Result<GoldSet, EvalError> {
    let mut set = GoldSet::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match parse_gold_line(line, opts.lowercase) {
            Ok(pair) => set.pairs.push(pair),
            Err(reason) if opts.strict => {
                return Err(EvalError::Line {
                    line: i + 1,
                    reason,
                })
            }
            Err(reason) => set.skipped.push(LineError {
                line: i + 1,
                reason,
            }),
        }
    }
    Ok(set)
}

fn parse_gold_line(line: &str, lowercase: bool) -> Result<GoldPair, String> {
    let (tag, gold) = line.split_once('\t').ok_or("missing tab")?;
    let fold = |s: &str| {
        if lowercase {
            s.to_lowercase()
        } else {
            s.to_string()
        }
    };
    let hashtag = Hashtag::new(&fold(tag.trim())).map_err(|e| e.to_string())?;
    let gold_text = fold(gold.trim());
    let gold_text = gold_text.strip_prefix('#').unwrap_or(&gold_text);
    let gold = parse(gold_text).map_err(|e| format!("gold segmentation: {e}"))?;
    if gold.chars() != hashtag.chars() {
        return Err(format!(
            "gold {:?} does not spell hashtag {:?}",
            gold.render(),
            hashtag.as_string()
        ));
    }
    Ok(GoldPair { hashtag, gold })
}

pub fn word_spans(s: &Segmentation) -> HashSet<(usize, usize)> {
    s.word_spans().into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub matched_words: usize,
    pub predicted_words: usize,
    pub gold_words: usize,
    pub exact_matches: usize,
    pub items: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn span_f1(pred: &[Segmentation], gold: &[Segmentation]) -> Result<MetricsReport, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let (mut matched, mut predicted, mut gold_words, mut exact) = (0, 0, 0, 0);
    for (index, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.chars() != g.chars() {
            return Err(EvalError::HashtagMismatch {
                index,
                pred: p.render(),
                gold: g.render(),
            });
        }
        let ps = word_spans(p);
        let gs = word_spans(g);
        matched += ps.intersection(&gs).count();
        predicted += ps.len();
        gold_words += gs.len();
        exact += usize::from(p == g);
    }
    let precision = ratio(matched, predicted);
    let recall = ratio(matched, gold_words);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MetricsReport {
        precision,
        recall,
        f1,
        accuracy: ratio(exact, pred.len()),
        matched_words: matched,
        predicted_words: predicted,
        gold_words,
        exact_matches: exact,
        items: pred.len(),
    })
}

/// Scores each item as gold when gold is among its first `n` candidates,
/// otherwise as its top-1 candidate.
pub fn oracle_topn<R: AsRef<[Segmentation]>>(
    rankings: &[R],
    gold: &[Segmentation],
    n: usize,
) -> Result<MetricsReport, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroN);
    }
    if rankings.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: rankings.len(),
            gold: gold.len(),
        });
    }
    let picks = rankings
        .iter()
        .zip(gold)
        .enumerate()
        .map(|(i, (ranking, g))| {
            let ranking = ranking.as_ref();
            let top = ranking.first().ok_or(EvalError::EmptyRanking(i))?;
            Ok(if ranking.iter().take(n).any(|c| c == g) {
                g.clone()
            } else {
                top.clone()
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    span_f1(&picks, gold)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub n: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    /// Top-1 of the final (ensembled) ranking.
    pub overall: MetricsReport,
    /// Oracle top-N over the segmenter's ranking.
    pub oracle: Vec<OracleRow>,
    pub skipped_lines: Vec<LineError>,
}

impl EvaluationReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14} {:>7} {:>7} {:>7} {:>7}",
            "ranking", "P", "R", "F1", "Acc"
        );
        let mut row = |label: &str, m: &MetricsReport| {
            let _ = writeln!(
                out,
                "{:<14} {:>7.2} {:>7.2} {:>7.2} {:>7.2}",
                label,
                100.0 * m.precision,
                100.0 * m.recall,
                100.0 * m.f1,
                100.0 * m.accuracy
            );
        };
        row("final@1", &self.overall);
        for r in &self.oracle {
            row(&format!("segmenter@{}", r.n), &r.metrics);
        }
        out
    }
}
