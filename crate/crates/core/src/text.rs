//! Tokenization shared by the TF-IDF and topic-model representations.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Tokens shorter than this (in characters) are dropped.
pub const MIN_TOKEN_CHARS: usize = 2;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// One word per line; blank lines and surrounding whitespace are ignored.
    pub fn parse(text: &str) -> Self {
        Self(
            text.lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.into().to_lowercase()).collect())
    }
}

/// Lowercases, splits on non-alphanumerics, drops stopwords and short tokens,
/// then emits every n-gram up to `ngram_max`: all unigrams first, then all
/// bigrams (joined by one space). Bigrams span removed stopwords.
pub fn tokenize(text: &str, ngram_max: usize, stopwords: &Stopwords) -> Vec<String> {
    let lower = text.to_lowercase();
    let unigrams: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= MIN_TOKEN_CHARS)
        .filter(|t| !stopwords.contains(t))
        .collect();

    let mut out: Vec<String> = unigrams.iter().map(|s| s.to_string()).collect();
    for n in 2..=ngram_max {
        out.extend(unigrams.windows(n).map(|w| w.join(" ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigrams_after_stopword_removal() {
        let sw: Stopwords = ["the"].into_iter().collect();
        assert_eq!(
            tokenize("the White Dwarf", 2, &sw),
            vec!["white", "dwarf", "white dwarf"]
        );
    }

    #[test]
    fn empty_and_all_stopword_inputs() {
        let sw: Stopwords = ["a"].into_iter().collect();
        assert!(tokenize("", 2, &sw).is_empty());
        assert!(tokenize("a a a", 2, &sw).is_empty());
    }

    #[test]
    fn short_tokens_and_punctuation() {
        let toks = tokenize("H-alpha emission (z~2) of M31!", 1, &Stopwords::none());
        assert_eq!(toks, vec!["alpha", "emission", "of", "m31"]);
    }

    #[test]
    fn bundled_english_list_loads() {
        let sw = Stopwords::english();
        assert!(sw.contains("the") && sw.contains("because"));
        assert!(!sw.contains("galaxy"));
        assert!(sw.len() > 300);
    }

    #[test]
    fn unigram_mode_has_no_spaces() {
        let toks = tokenize("stellar evolution models", 1, &Stopwords::english());
        assert!(toks.iter().all(|t| !t.contains(' ')));
    }
}
