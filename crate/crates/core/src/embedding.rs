//! Precomputed encoder vectors: the line-oriented interchange file and the
//! pooling of per-abstract vectors into entity vectors.
//!
//! The file is UTF-8 with LF line endings. Line 1 is a header
//! `{"model": str, "dim": int, "count": int}`; each following line is one
//! record `{"id": str, "v": [floats]}`. Publication records use the id
//! `<reviewer_id>#<publication_index>`, proposals use the proposal id.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingHeader {
    pub model: String,
    pub dim: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EmbeddingRecord {
    id: String,
    v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub header: EmbeddingHeader,
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingFile {
    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn dim(&self) -> usize {
        self.header.dim
    }
}

/// Record id of a reviewer's `index`-th publication.
pub fn publication_id(reviewer_id: &str, index: usize) -> String {
    format!("{reviewer_id}#{index}")
}

/// Reads and validates an interchange file.
pub fn import_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();

    let first = lines
        .next()
        .ok_or_else(|| Error::parse(&name, "header", "missing header line"))?
        .map_err(|e| Error::io(path, e))?;
    let header: EmbeddingHeader =
        serde_json::from_str(&first).map_err(|e| Error::parse(&name, "header", e))?;

    let mut vectors = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let at = format!("line {}", i + 2);
        let rec: EmbeddingRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(&name, &at, e))?;
        let at = format!("{at} (id `{}`)", rec.id);
        if rec.v.len() != header.dim {
            return Err(Error::parse(
                &name,
                at,
                format!("vector has {} components, header says {}", rec.v.len(), header.dim),
            ));
        }
        if rec.v.iter().any(|x| !x.is_finite()) {
            return Err(Error::parse(&name, at, "non-finite component"));
        }
        if vectors.insert(rec.id, rec.v).is_some() {
            return Err(Error::parse(&name, at, "duplicate id"));
        }
    }
    if vectors.len() != header.count {
        return Err(Error::parse(
            &name,
            "header",
            format!("count {} but {} records", header.count, vectors.len()),
        ));
    }
    Ok(EmbeddingFile { header, vectors })
}

/// Writes records in the given order.
pub fn write_embeddings<'a, I>(path: impl AsRef<Path>, model: &str, dim: usize, records: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let path = path.as_ref();
    let records: Vec<(&str, &[f64])> = records.into_iter().collect();
    let mut seen = HashSet::new();
    for (id, v) in &records {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        if !seen.insert(*id) {
            return Err(Error::Validation(format!("duplicate embedding id `{id}`")));
        }
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = EmbeddingHeader {
        model: model.to_string(),
        dim,
        count: records.len(),
    };
    let io = |e| Error::io(path, e);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n").map_err(io)?;
    for (id, v) in records {
        serde_json::to_writer(
            &mut w,
            &EmbeddingRecord {
                id: id.to_string(),
                v: v.to_vec(),
            },
        )?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Mean,
    Max,
}

impl fmt::Display for Pooling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pooling::Mean => "mean",
            Pooling::Max => "max",
        })
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Pooling::Mean),
            "max" => Ok(Pooling::Max),
            _ => Err(Error::Config(format!("unknown pooling mode `{s}`"))),
        }
    }
}

/// Componentwise mean or max of equally sized vectors.
pub fn pool<V: AsRef<[f64]>>(vectors: &[V], mode: Pooling) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or(Error::Empty("pooling needs at least one vector"))?
        .as_ref();
    let dim = first.len();
    let mut acc = first.to_vec();
    for v in &vectors[1..] {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        for (a, &x) in acc.iter_mut().zip(v) {
            match mode {
                Pooling::Mean => *a += x,
                Pooling::Max => *a = a.max(x),
            }
        }
    }
    if mode == Pooling::Mean {
        let n = vectors.len() as f64;
        for a in &mut acc {
            *a /= n;
        }
    }
    Ok(acc)
}
