//! Vector normalization, cosine similarity and the proposals × reviewers
//! expertise matrix.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

/// Unit-norm copy of `v`. A zero vector comes back unchanged with the flag set.
pub fn l2_normalize(v: &[f64]) -> Result<(Vec<f64>, bool)> {
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("vector component {x}")));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok((v.to_vec(), true));
    }
    Ok((v.iter().map(|x| x / norm).collect(), false))
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Keywords,
    Tfidf,
    Lda,
    Embedding,
    Llm,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Keywords,
        Method::Tfidf,
        Method::Lda,
        Method::Embedding,
        Method::Llm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Keywords => "keywords",
            Method::Tfidf => "tfidf",
            Method::Lda => "lda",
            Method::Embedding => "embedding",
            Method::Llm => "llm",
        }
    }

    /// Closed range every matrix entry of this method must fall in.
    pub fn score_range(self) -> (f64, f64) {
        match self {
            Method::Keywords => (0.0, 2.0),
            Method::Llm => (0.0, 1.0),
            Method::Tfidf | Method::Lda => (0.0, 1.0),
            Method::Embedding => (-1.0, 1.0),
        }
    }

    /// Entries at or below this magnitude count as zeros in [`matrix_stats`].
    pub fn zero_threshold(self) -> f64 {
        match self {
            Method::Lda => 0.01,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Small slack for floating-point cosine values sitting on a range boundary.
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub method: Method,
    /// Human-readable variant name, e.g. `tfidf` or `specter2-mean`.
    pub label: String,
    pub proposal_ids: Vec<String>,
    pub reviewer_ids: Vec<String>,
    /// Resolved configuration that produced the matrix.
    #[serde(default)]
    pub provenance: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertiseMatrix {
    pub header: MatrixHeader,
    /// Row-major, one row per proposal.
    pub scores: Vec<f64>,
}

impl ExpertiseMatrix {
    pub fn new(
        method: Method,
        label: impl Into<String>,
        proposal_ids: Vec<String>,
        reviewer_ids: Vec<String>,
        scores: Vec<f64>,
    ) -> Result<Self> {
        let m = Self {
            header: MatrixHeader {
                method,
                label: label.into(),
                proposal_ids,
                reviewer_ids,
                provenance: serde_json::Value::Null,
            },
            scores,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_provenance(mut self, provenance: serde_json::Value) -> Self {
        self.header.provenance = provenance;
        self
    }

    pub fn method(&self) -> Method {
        self.header.method
    }

    pub fn label(&self) -> &str {
        &self.header.label
    }

    pub fn proposal_ids(&self) -> &[String] {
        &self.header.proposal_ids
    }

    pub fn reviewer_ids(&self) -> &[String] {
        &self.header.reviewer_ids
    }

    pub fn n_proposals(&self) -> usize {
        self.header.proposal_ids.len()
    }

    pub fn n_reviewers(&self) -> usize {
        self.header.reviewer_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let r = self.n_reviewers();
        &self.scores[i * r..(i + 1) * r]
    }

    pub fn get(&self, proposal: usize, reviewer: usize) -> f64 {
        self.scores[proposal * self.n_reviewers() + reviewer]
    }

    pub fn proposal_index(&self, id: &str) -> Result<usize> {
        self.header
            .proposal_ids
            .iter()
            .position(|p| p == id)
            .ok_or_else(|| Error::Unknown {
                kind: "proposal",
                id: id.to_string(),
            })
    }

    pub fn reviewer_index(&self, id: &str) -> Result<usize> {
        self.header
            .reviewer_ids
            .iter()
            .position(|r| r == id)
            .ok_or_else(|| Error::Unknown {
                kind: "reviewer",
                id: id.to_string(),
            })
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.n_proposals() * self.n_reviewers();
        if self.scores.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.scores.len(),
            });
        }
        let (lo, hi) = self.method().score_range();
        for (i, &s) in self.scores.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::NonFinite(format!("matrix entry {i}")));
            }
            if s < lo - RANGE_SLACK || s > hi + RANGE_SLACK {
                return Err(Error::Validation(format!(
                    "{} matrix entry {i} = {s} outside [{lo}, {hi}]",
                    self.method()
                )));
            }
        }
        Ok(())
    }

    /// JSON header line, then row-major little-endian f64 scores.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = serde_json::to_vec(&self.header)?;
        buf.push(b'\n');
        buf.reserve(self.scores.len() * 8);
        for s in &self.scores {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = BufReader::new(file);
        let mut line = Vec::new();
        rdr.read_until(b'\n', &mut line).map_err(|e| Error::io(path, e))?;
        let header: MatrixHeader =
            serde_json::from_slice(&line).map_err(|e| Error::parse(&name, "header", e))?;
        let mut body = Vec::new();
        rdr.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
        let n = header.proposal_ids.len() * header.reviewer_ids.len();
        if body.len() != n * 8 {
            return Err(Error::parse(
                &name,
                "body",
                format!("expected {} bytes of scores, got {}", n * 8, body.len()),
            ));
        }
        let scores = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let m = Self { header, scores };
        m.validate()?;
        Ok(m)
    }

    /// Heatmap-style CSV: header row of reviewer ids, one row per proposal.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::parse("matrix csv", "write", e);
        let mut head = vec!["proposal_id".to_string()];
        head.extend(self.reviewer_ids().iter().cloned());
        w.write_record(&head).map_err(csv_err)?;
        for (i, pid) in self.proposal_ids().iter().enumerate() {
            let mut rec = vec![pid.clone()];
            rec.extend(self.row(i).iter().map(|s| s.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("matrix csv", e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixStats {
    /// Percentage (0–100) of entries whose magnitude is at or below the zero threshold.
    pub pct_zeros: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Distribution summary of all matrix entries; quantiles are linearly
/// interpolated between order statistics.
pub fn matrix_stats(m: &ExpertiseMatrix, zero_threshold: f64) -> Result<MatrixStats> {
    if m.scores.is_empty() {
        return Err(Error::Empty("matrix has no entries"));
    }
    let mut sorted = m.scores.clone();
    sorted.sort_by(f64::total_cmp);
    let zeros = sorted.iter().filter(|x| x.abs() <= zero_threshold).count();
    Ok(MatrixStats {
        pct_zeros: 100.0 * zeros as f64 / sorted.len() as f64,
        min: sorted[0],
        q25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q75: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn normalize_cases() {
        assert_eq!(l2_normalize(&[3.0, 4.0]).unwrap(), (vec![0.6, 0.8], false));
        assert_eq!(l2_normalize(&[0.0, 1.0]).unwrap(), (vec![0.0, 1.0], false));
        assert_eq!(l2_normalize(&[0.0, 0.0]).unwrap(), (vec![0.0, 0.0], true));
        assert!(l2_normalize(&[f64::NAN]).is_err());
    }

    #[test]
    fn cosine_cases() {
        assert!((cosine(&[2.0, 1.0], &[2.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 5.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0, 0.0], &[1.0, 0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn matrix_shape_and_range_checks() {
        assert!(ExpertiseMatrix::new(Method::Tfidf, "t", ids("p", 2), ids("r", 2), vec![0.0; 3]).is_err());
        assert!(ExpertiseMatrix::new(Method::Llm, "g", ids("p", 1), ids("r", 1), vec![1.5]).is_err());
        assert!(ExpertiseMatrix::new(Method::Keywords, "k", ids("p", 1), ids("r", 1), vec![1.5]).is_ok());
        assert!(ExpertiseMatrix::new(Method::Embedding, "e", ids("p", 1), ids("r", 1), vec![-0.3]).is_ok());
    }

    #[test]
    fn binary_round_trip() {
        let m = ExpertiseMatrix::new(
            Method::Tfidf,
            "tfidf",
            ids("p", 2),
            ids("r", 3),
            vec![0.1, 0.2, 0.3, 0.0, 1.0, 0.123456789],
        )
        .unwrap()
        .with_provenance(serde_json::json!({"ngram_max": 2}));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        m.save(&path).unwrap();
        assert_eq!(ExpertiseMatrix::load(&path).unwrap(), m);
    }

    #[test]
    fn stats_all_zero() {
        let m = ExpertiseMatrix::new(Method::Tfidf, "t", ids("p", 2), ids("r", 2), vec![0.0; 4]).unwrap();
        let s = matrix_stats(&m, 0.0).unwrap();
        assert_eq!(s.pct_zeros, 100.0);
        assert_eq!((s.min, s.q25, s.median, s.q75, s.max), (0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn stats_interpolated_median() {
        let m = ExpertiseMatrix::new(Method::Keywords, "k", ids("p", 2), ids("r", 2), vec![0.0, 1.0, 2.0, 0.5])
            .unwrap();
        // entries {0, 0.5, 1, 2}
        let s = matrix_stats(&m, 0.0).unwrap();
        assert_eq!(s.median, 0.75);
        assert_eq!(s.pct_zeros, 25.0);
        assert_eq!(s.q25, 0.375);
    }

    #[test]
    fn csv_export_layout() {
        let m = ExpertiseMatrix::new(Method::Tfidf, "t", ids("p", 1), ids("r", 2), vec![0.5, 0.25]).unwrap();
        let mut out = Vec::new();
        m.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "proposal_id,r0,r1\np0,0.5,0.25\n");
    }
}
