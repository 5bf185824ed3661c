//! Smoothed TF-IDF over a shared reviewer + proposal vocabulary.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{tokenize, Stopwords};

/// Sparse vector with strictly increasing indices and no explicit zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Sorts by index, sums duplicates and drops zeros.
    pub fn from_unsorted(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|e| e.1 != 0.0);
        Self { entries: out }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        for &(i, x) in &self.entries {
            v[i] = x;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// term -> column
    pub index: BTreeMap<String, usize>,
    /// document frequency by column
    pub document_frequency: Vec<usize>,
    pub n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.document_frequency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.document_frequency.is_empty()
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.index.get(term).map(|&i| self.document_frequency[i])
    }
}

/// `ln((1 + N) / (1 + n_t)) + 1`
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

pub fn idf(term: &str, vocabulary: &Vocabulary) -> Result<f64> {
    let df = vocabulary.df(term).ok_or_else(|| Error::Unknown {
        kind: "term",
        id: term.to_string(),
    })?;
    Ok(smoothed_idf(vocabulary.n_docs, df))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfOptions {
    pub ngram_max: usize,
    /// Terms found in fewer documents are dropped. 1 keeps everything.
    pub min_df: usize,
}

impl Default for TfidfOptions {
    fn default() -> Self {
        Self {
            ngram_max: 2,
            min_df: 1,
        }
    }
}

/// Fits the vocabulary on all `documents` and returns raw-count × smoothed-IDF
/// vectors, one per document. Columns are assigned in lexicographic term order.
pub fn tfidf_vectorize<S: AsRef<str>>(
    documents: &[S],
    options: &TfidfOptions,
    stopwords: &Stopwords,
) -> Result<(Vocabulary, Vec<SparseVector>)> {
    if !(1..=2).contains(&options.ngram_max) {
        return Err(Error::Config(format!(
            "ngram_max must be 1 or 2, got {}",
            options.ngram_max
        )));
    }
    let counts: Vec<HashMap<String, usize>> = documents
        .iter()
        .map(|d| {
            let mut m = HashMap::new();
            for t in tokenize(d.as_ref(), options.ngram_max, stopwords) {
                *m.entry(t).or_insert(0) += 1;
            }
            m
        })
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &counts {
        for term in doc.keys() {
            *df.entry(term.as_str()).or_insert(0) += 1;
        }
    }
    df.retain(|_, n| *n >= options.min_df.max(1));
    if df.is_empty() {
        return Err(Error::Empty("all documents are empty after tokenization"));
    }

    let mut vocab = Vocabulary {
        index: BTreeMap::new(),
        document_frequency: Vec::with_capacity(df.len()),
        n_docs: documents.len(),
    };
    for (i, (term, n)) in df.into_iter().enumerate() {
        vocab.index.insert(term.to_string(), i);
        vocab.document_frequency.push(n);
    }

    let idfs: Vec<f64> = vocab
        .document_frequency
        .iter()
        .map(|&n| smoothed_idf(vocab.n_docs, n))
        .collect();
    let vectors = counts
        .iter()
        .map(|doc| {
            SparseVector::from_unsorted(
                doc.iter()
                    .filter_map(|(t, &c)| vocab.index.get(t).map(|&i| (i, c as f64 * idfs[i])))
                    .collect(),
            )
        })
        .collect();
    Ok((vocab, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(docs: &[&str]) -> (Vocabulary, Vec<SparseVector>) {
        tfidf_vectorize(docs, &TfidfOptions { ngram_max: 1, min_df: 1 }, &Stopwords::none())
            .unwrap()
    }

    #[test]
    fn idf_of_ubiquitous_term_is_one() {
        let (v, _) = fit(&["nova dwarf", "nova", "nova star"]);
        assert_eq!(idf("nova", &v).unwrap(), 1.0);
    }

    #[test]
    fn idf_three_docs_one_hit() {
        assert!((smoothed_idf(3, 1) - (1.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(smoothed_idf(1, 1), 1.0);
    }

    #[test]
    fn idf_unknown_term_errors() {
        let (v, _) = fit(&["nova"]);
        assert!(idf("pulsar", &v).is_err());
    }

    #[test]
    fn single_document_counts() {
        let (v, vecs) = fit(&["dwarf dwarf"]);
        assert_eq!(vecs[0].get(v.index["dwarf"]), Some(2.0));
    }

    #[test]
    fn three_document_value() {
        let (v, vecs) = fit(&["nova", "nova dwarf", "dwarf"]);
        let got = vecs[1].get(v.index["nova"]).unwrap();
        assert!((got - (1.0 + (4.0f64 / 3.0).ln())).abs() < 1e-12);
        assert!((got - 1.28768).abs() < 1e-5);
    }

    #[test]
    fn empty_document_gives_empty_vector() {
        let (_, vecs) = fit(&["nova", ""]);
        assert!(vecs[1].is_empty());
    }

    #[test]
    fn all_empty_documents_error() {
        let r = tfidf_vectorize(&["", "  "], &TfidfOptions::default(), &Stopwords::none());
        assert!(r.is_err());
    }

    #[test]
    fn min_df_prunes_rare_terms() {
        let (v, _) = tfidf_vectorize(
            &["nova dwarf", "nova"],
            &TfidfOptions { ngram_max: 1, min_df: 2 },
            &Stopwords::none(),
        )
        .unwrap();
        assert_eq!(v.len(), 1);
        assert!(v.index.contains_key("nova"));
    }

    #[test]
    fn sparse_dot_and_dedup() {
        let a = SparseVector::from_unsorted(vec![(3, 1.0), (1, 2.0), (3, 1.0), (5, 0.0)]);
        assert_eq!(a.entries, vec![(1, 2.0), (3, 2.0)]);
        let b = SparseVector::from_unsorted(vec![(3, 4.0), (7, 1.0)]);
        assert_eq!(a.dot(&b), 8.0);
    }
}
