//! Translator contract plus identity, phrase-table and external backends.

use std::collections::HashMap;
use std::time::Duration;

use crate::scoring::protocol::{decode_translations, Endpoint, JsonLineClient, TranslateRequest};
use crate::scoring::BackendError;

pub trait Translator: Send + Sync {
    /// Translates each text, returning one output per input in order.
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, BackendError>;

    fn translate(&self, text: &str) -> Result<String, BackendError> {
        let mut out = self.translate_batch(&[text.to_string()])?;
        if out.len() != 1 {
            return Err(BackendError::CountMismatch {
                expected: 1,
                got: out.len(),
            });
        }
        Ok(out.remove(0))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        Ok(texts.to_vec())
    }
}

/// Greedy longest-match word-phrase substitution.
///
/// Input is split on whitespace; at each position the longest run of words
/// found in the table is replaced, other words pass through. Output words
/// are joined with single spaces.
#[derive(Debug, Clone, Default)]
pub struct PhraseTableTranslator {
    table: HashMap<Vec<String>, String>,
    longest: usize,
}

impl PhraseTableTranslator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, source: &str, target: &str) -> Self {
        self.insert(source, target);
        self
    }

    pub fn insert(&mut self, source: &str, target: &str) {
        let key: Vec<String> = source.split_whitespace().map(str::to_string).collect();
        if key.is_empty() {
            return;
        }
        self.longest = self.longest.max(key.len());
        self.table.insert(key, target.to_string());
    }

    /// Reads `source<TAB>target` lines.
    pub fn parse(text: &str) -> Self {
        let mut t = Self::new();
        for line in text.lines() {
            if let Some((src, tgt)) = line.split_once('\t') {
                t.insert(src, tgt);
            }
        }
        t
    }

    pub fn translate_text(&self, text: &str) -> String {
        let words: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let mut out: Vec<String> = Vec::with_capacity(words.len());
        let mut i = 0;
        while i < words.len() {
            let max = self.longest.min(words.len() - i);
            let hit = (1..=max)
                .rev()
                .find_map(|len| self.table.get(&words[i..i + len]).map(|t| (len, t)));
            match hit {
                Some((len, target)) => {
                    if !target.is_empty() {
                        out.push(target.clone());
                    }
                    i += len;
                }
                None => {
                    out.push(words[i].clone());
                    i += 1;
                }
            }
        }
        out.join(" ")
    }
}

impl Translator for PhraseTableTranslator {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        Ok(texts.iter().map(|t| self.translate_text(t)).collect())
    }
}

pub struct ExternalTranslator {
    client: JsonLineClient,
    src: String,
    tgt: String,
}

impl ExternalTranslator {
    pub fn new(endpoint: Endpoint, src: &str, tgt: &str, timeout: Duration) -> Self {
        Self {
            client: JsonLineClient::new(endpoint, timeout),
            src: src.to_string(),
            tgt: tgt.to_string(),
        }
    }
}

impl Translator for ExternalTranslator {
    fn translate_batch(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let (id, line) = self.client.round_trip(texts, |id| {
            serde_json::to_string(&TranslateRequest {
                id,
                texts: texts.to_vec(),
                src: self.src.clone(),
                tgt: self.tgt.clone(),
            })
            .expect("string request serializes")
        })?;
        decode_translations(&line, id, texts.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_identity() {
        assert_eq!(IdentityTranslator.translate("gol! #x").unwrap(), "gol! #x");
    }

    #[test]
    fn longest_phrase_wins() {
        let t = PhraseTableTranslator::new()
            .with("vamos", "let's")
            .with("vamos equipo", "let's go team")
            .with("ya", "now");
        assert_eq!(t.translate_text("vamos equipo ya"), "let's go team now");
        assert_eq!(t.translate_text("vamos  otra"), "let's otra");
    }

    #[test]
    fn parse_table() {
        let t = PhraseTableTranslator::parse("hola\thello\nmundo\tworld\nbad line\n");
        assert_eq!(t.translate_text("hola mundo"), "hello world");
    }
}
