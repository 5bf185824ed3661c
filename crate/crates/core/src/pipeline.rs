//! Builds per-method entity vectors and turns them into expertise matrices.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{Corpus, QueryConfig};
use crate::embedding::{import_embeddings, pool, publication_id, Pooling};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, EvalReport};
use crate::keyword::{keyword_similarity, keyword_vector, KeywordVector};
use crate::lda::{fit_lda, truncate_theta, LdaConfig};
use crate::llm::{ChatTransport, HttpTransport, LlmConfig, LlmScorer};
use crate::similarity::{dot, l2_normalize, ExpertiseMatrix, Method};
use crate::text::{tokenize, Stopwords};
use crate::tfidf::{tfidf_vectorize, SparseVector, TfidfOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingParams {
    pub path: PathBuf,
    #[serde(default)]
    pub pooling: Pooling,
}

/// `default` with the top-level fields of `overrides` replaced.
pub fn merge_params<T: Serialize + for<'de> Deserialize<'de>>(default: T, overrides: &serde_json::Value) -> Result<T> {
    let mut base = serde_json::to_value(default)?;
    if let (Some(b), Some(o)) = (base.as_object_mut(), overrides.as_object()) {
        for (k, v) in o {
            b.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(base).map_err(|e| Error::Config(format!("parameters: {e}")))
}

/// A representation method together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", content = "params", rename_all = "lowercase")]
pub enum MethodSpec {
    Keywords,
    Tfidf(TfidfOptions),
    Lda(LdaConfig),
    Embedding(EmbeddingParams),
    Llm(LlmConfig),
}

impl MethodSpec {
    pub fn method(&self) -> Method {
        match self {
            MethodSpec::Keywords => Method::Keywords,
            MethodSpec::Tfidf(_) => Method::Tfidf,
            MethodSpec::Lda(_) => Method::Lda,
            MethodSpec::Embedding(_) => Method::Embedding,
            MethodSpec::Llm(_) => Method::Llm,
        }
    }

    /// Builds a spec from a method name and a (possibly partial) parameter
    /// object; missing fields take their defaults.
    pub fn from_parts(method: Method, params: &serde_json::Value) -> Result<Self> {
        Ok(match method {
            Method::Keywords => MethodSpec::Keywords,
            Method::Tfidf => MethodSpec::Tfidf(merge_params(TfidfOptions::default(), params)?),
            Method::Lda => MethodSpec::Lda(merge_params(LdaConfig::default(), params)?),
            Method::Embedding => MethodSpec::Embedding(
                serde_json::from_value(params.clone())
                    .map_err(|e| Error::Config(format!("embedding params: {e}")))?,
            ),
            Method::Llm => MethodSpec::Llm(merge_params(LlmConfig::default(), params)?),
        })
    }

    /// Short name used for tables, e.g. `lda-k50` or `minilm-mean`.
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Keywords => "keywords".into(),
            MethodSpec::Tfidf(o) => format!("tfidf-ngram{}", o.ngram_max),
            MethodSpec::Lda(c) => format!("lda-k{}", c.topics),
            MethodSpec::Embedding(p) => {
                let stem = p
                    .path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "embedding".into());
                format!("{stem}-{}", p.pooling)
            }
            MethodSpec::Llm(c) => format!("llm-{}", c.model),
        }
    }
}

/// Shared settings for one pipeline run.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub query: QueryConfig,
    /// Drives every random choice of the run (currently the LDA sampler).
    pub seed: u64,
    pub stopwords: Stopwords,
}

impl Default for RunContext {
    fn default() -> Self {
        Self {
            query: QueryConfig::default(),
            seed: 0,
            stopwords: Stopwords::english(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "vectors", rename_all = "lowercase")]
pub enum EntityVectors {
    Keyword(Vec<KeywordVector>),
    Sparse(Vec<SparseVector>),
    Dense(Vec<Vec<f64>>),
}

impl EntityVectors {
    fn len(&self) -> usize {
        match self {
            EntityVectors::Keyword(v) => v.len(),
            EntityVectors::Sparse(v) => v.len(),
            EntityVectors::Dense(v) => v.len(),
        }
    }
}

/// Vectors for every proposal and reviewer in one shared space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    pub method: Method,
    pub label: String,
    pub provenance: serde_json::Value,
    pub proposal_ids: Vec<String>,
    pub reviewer_ids: Vec<String>,
    pub proposals: EntityVectors,
    pub reviewers: EntityVectors,
    /// Entities whose vector is all zeros.
    pub zero_vectors: Vec<String>,
}

impl Representation {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_vec(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let rep: Self = serde_json::from_slice(&bytes)
            .map_err(|e| Error::parse(path.display().to_string(), "root", e))?;
        if rep.proposals.len() != rep.proposal_ids.len() || rep.reviewers.len() != rep.reviewer_ids.len() {
            return Err(Error::parse(path.display().to_string(), "root", "vector count does not match ids"));
        }
        Ok(rep)
    }
}

fn provenance(spec: &MethodSpec, ctx: &RunContext) -> serde_json::Value {
    json!({ "spec": spec, "query": ctx.query, "seed": ctx.seed })
}

/// Builds the vector representation for `spec`. LLM scoring has no vector
/// form; use [`expertise_matrix`] for it.
pub fn build_representation(corpus: &Corpus, spec: &MethodSpec, ctx: &RunContext) -> Result<Representation> {
    ctx.query.validate()?;
    let proposal_ids: Vec<String> = corpus.proposals.iter().map(|p| p.id.clone()).collect();
    let reviewer_ids: Vec<String> = corpus.reviewers.iter().map(|r| r.id.clone()).collect();

    let (proposals, reviewers) = match spec {
        MethodSpec::Keywords => {
            let p = corpus
                .proposals
                .iter()
                .map(|p| keyword_vector(&p.keywords, &corpus.category_map))
                .collect::<Result<Vec<_>>>()?;
            let r = corpus
                .reviewers
                .iter()
                .map(|r| keyword_vector(&r.keywords, &corpus.category_map))
                .collect::<Result<Vec<_>>>()?;
            (EntityVectors::Keyword(p), EntityVectors::Keyword(r))
        }
        MethodSpec::Tfidf(options) => {
            let docs = corpus.build_reviewer_documents(&ctx.query)?;
            let mut texts: Vec<&str> = reviewer_ids.iter().map(|id| docs.documents[id].as_str()).collect();
            texts.extend(corpus.proposals.iter().map(|p| p.abstract_text.as_str()));
            let (_, mut vectors) = tfidf_vectorize(&texts, options, &ctx.stopwords)?;
            let p = vectors.split_off(reviewer_ids.len());
            (EntityVectors::Sparse(p), EntityVectors::Sparse(vectors))
        }
        MethodSpec::Lda(config) => {
            let docs = corpus.build_reviewer_documents(&ctx.query)?;
            let mut tokens: Vec<Vec<String>> = reviewer_ids
                .iter()
                .map(|id| tokenize(&docs.documents[id], 1, &ctx.stopwords))
                .collect();
            tokens.extend(
                corpus
                    .proposals
                    .iter()
                    .map(|p| tokenize(&p.abstract_text, 1, &ctx.stopwords)),
            );
            let config = LdaConfig {
                seed: ctx.seed,
                ..config.clone()
            };
            let fit = fit_lda(&tokens, &config)?;
            let mut theta: Vec<Vec<f64>> = fit
                .theta
                .iter()
                .map(|t| truncate_theta(t, config.truncation_threshold))
                .collect();
            let p = theta.split_off(reviewer_ids.len());
            (EntityVectors::Dense(p), EntityVectors::Dense(theta))
        }
        MethodSpec::Embedding(params) => {
            let file = import_embeddings(&params.path)?;
            let p = corpus
                .proposals
                .iter()
                .map(|p| {
                    file.get(&p.id).map(<[f64]>::to_vec).ok_or_else(|| {
                        Error::Validation(format!("missing representation: no embedding for proposal `{}`", p.id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let r = corpus
                .reviewers
                .iter()
                .map(|r| {
                    let vectors = corpus
                        .select_publications(r, &ctx.query)
                        .into_iter()
                        .map(|(i, _)| {
                            let id = publication_id(&r.id, i);
                            file.get(&id).ok_or_else(|| {
                                Error::Validation(format!("missing representation: no embedding for `{id}`"))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if vectors.is_empty() {
                        Ok(vec![0.0; file.dim()])
                    } else {
                        pool(&vectors, params.pooling)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            (EntityVectors::Dense(p), EntityVectors::Dense(r))
        }
        MethodSpec::Llm(_) => {
            return Err(Error::Config(
                "llm scoring has no vector representation; score it directly".into(),
            ))
        }
    };

    let zero_vectors = zero_entities(&proposals, &proposal_ids)
        .chain(zero_entities(&reviewers, &reviewer_ids))
        .collect::<Vec<_>>();
    if !zero_vectors.is_empty() {
        log::warn!("{} entities have all-zero {} vectors", zero_vectors.len(), spec.method());
    }

    Ok(Representation {
        method: spec.method(),
        label: spec.label(),
        provenance: provenance(spec, ctx),
        proposal_ids,
        reviewer_ids,
        proposals,
        reviewers,
        zero_vectors,
    })
}

fn zero_entities<'a>(v: &'a EntityVectors, ids: &'a [String]) -> impl Iterator<Item = String> + 'a {
    let zero: Vec<bool> = match v {
        EntityVectors::Keyword(v) => v.iter().map(|k| k.weights.is_empty()).collect(),
        EntityVectors::Sparse(v) => v.iter().map(SparseVector::is_empty).collect(),
        EntityVectors::Dense(v) => v.iter().map(|x| x.iter().all(|&c| c == 0.0)).collect(),
    };
    ids.iter().zip(zero).filter(|(_, z)| *z).map(|(id, _)| id.clone())
}

fn normalize_sparse(v: &SparseVector) -> SparseVector {
    let n = v.norm();
    if n == 0.0 {
        return v.clone();
    }
    SparseVector {
        entries: v.entries.iter().map(|&(i, x)| (i, x / n)).collect(),
    }
}

/// Scores every proposal against every reviewer: keyword total score for
/// keyword vectors, otherwise the dot product of L2-normalized vectors.
pub fn score_representation(rep: &Representation) -> Result<ExpertiseMatrix> {
    let n_r = rep.reviewer_ids.len();
    let scores: Vec<f64> = match (&rep.proposals, &rep.reviewers) {
        (EntityVectors::Keyword(p), EntityVectors::Keyword(r)) => p
            .par_iter()
            .flat_map_iter(|pv| r.iter().map(move |rv| keyword_similarity(pv, rv).total))
            .collect(),
        (EntityVectors::Sparse(p), EntityVectors::Sparse(r)) => {
            let p: Vec<SparseVector> = p.iter().map(normalize_sparse).collect();
            let r: Vec<SparseVector> = r.iter().map(normalize_sparse).collect();
            p.par_iter()
                .flat_map_iter(|pv| r.iter().map(move |rv| pv.dot(rv)))
                .collect()
        }
        (EntityVectors::Dense(p), EntityVectors::Dense(r)) => {
            let norm = |v: &Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>> {
                v.iter().map(|x| l2_normalize(x).map(|(n, _)| n)).collect()
            };
            let (p, r) = (norm(p)?, norm(r)?);
            if let Some(dim) = p.first().or(r.first()).map(Vec::len) {
                if let Some(bad) = p.iter().chain(&r).find(|v| v.len() != dim) {
                    return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
                }
            }
            p.par_iter()
                .flat_map_iter(|pv| r.iter().map(move |rv| dot(pv, rv)))
                .collect()
        }
        _ => return Err(Error::Validation("proposal and reviewer vectors are of different kinds".into())),
    };
    debug_assert_eq!(scores.len(), rep.proposal_ids.len() * n_r);
    let scores = match rep.method {
        // cosines of nonnegative vectors: strip rounding spill past the range
        Method::Tfidf | Method::Lda => scores.into_iter().map(|s| s.clamp(0.0, 1.0)).collect(),
        _ => scores,
    };
    Ok(ExpertiseMatrix::new(
        rep.method,
        rep.label.clone(),
        rep.proposal_ids.clone(),
        rep.reviewer_ids.clone(),
        scores,
    )?
    .with_provenance(rep.provenance.clone()))
}

/// LLM matrix through an arbitrary transport.
pub fn llm_matrix<T: ChatTransport>(
    corpus: &Corpus,
    config: &LlmConfig,
    transport: T,
    ctx: &RunContext,
) -> Result<ExpertiseMatrix> {
    let scorer = LlmScorer::new(config.clone(), transport)?;
    let m = scorer.score_matrix(corpus, &ctx.query)?;
    log::info!("llm scoring sent {} request(s)", scorer.requests_sent());
    Ok(m.with_provenance(provenance(&MethodSpec::Llm(config.clone()), ctx)))
}

/// Expertise matrix for any method. LLM scoring goes over HTTP.
pub fn expertise_matrix(corpus: &Corpus, spec: &MethodSpec, ctx: &RunContext) -> Result<ExpertiseMatrix> {
    match spec {
        MethodSpec::Llm(config) => llm_matrix(corpus, config, HttpTransport::new(&config.endpoint), ctx),
        _ => score_representation(&build_representation(corpus, spec, ctx)?),
    }
}

/// Matrix plus evaluation for one method under one configuration.
pub fn run_method(
    corpus: &Corpus,
    spec: &MethodSpec,
    ctx: &RunContext,
    eval: &EvalConfig,
) -> Result<(ExpertiseMatrix, EvalReport)> {
    let matrix = expertise_matrix(corpus, spec, ctx)?;
    let report = evaluate(&matrix, &corpus.designated_pairs(), &corpus.labels, eval)?;
    Ok((matrix, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::tiny;
    use crate::embedding::write_embeddings;

    fn ctx() -> RunContext {
        RunContext {
            query: QueryConfig {
                reference_year: Some(2022),
                ..QueryConfig::default()
            },
            ..RunContext::default()
        }
    }

    #[test]
    fn keyword_matrix_matches_pairwise_scores() {
        let c = tiny();
        let m = expertise_matrix(&c, &MethodSpec::Keywords, &ctx()).unwrap();
        assert_eq!((m.n_proposals(), m.n_reviewers()), (2, 2));
        let p = keyword_vector(&c.proposals[0].keywords, &c.category_map).unwrap();
        let r = keyword_vector(&c.reviewers[0].keywords, &c.category_map).unwrap();
        assert_eq!(m.get(0, 0), keyword_similarity(&p, &r).total);
        assert!(m.scores.iter().all(|&s| (0.0..=2.0).contains(&s)));
    }

    #[test]
    fn tfidf_identical_document_scores_one() {
        let mut c = tiny();
        for r in &mut c.reviewers {
            let pid = &r.designated_proposal_ids[0];
            let text = c.proposals.iter().find(|p| &p.id == pid).unwrap().abstract_text.clone();
            r.publications[0].abstract_text = text;
            r.publications.truncate(1);
            r.publications[0].year = 2022;
        }
        let m = expertise_matrix(&c, &MethodSpec::Tfidf(TfidfOptions::default()), &ctx()).unwrap();
        assert!((m.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((m.get(1, 1) - 1.0).abs() < 1e-12);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn embedding_pools_selected_publications() {
        let c = tiny();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.jsonl");
        let recs: Vec<(String, Vec<f64>)> = vec![
            ("P1".into(), vec![1.0, 0.0]),
            ("P2".into(), vec![0.0, 1.0]),
            ("R1#0".into(), vec![1.0, 0.0]),
            ("R1#1".into(), vec![1.0, 0.0]),
            ("R2#0".into(), vec![0.0, 2.0]),
        ];
        write_embeddings(&path, "toy", 2, recs.iter().map(|(i, v)| (i.as_str(), v.as_slice()))).unwrap();
        let spec = MethodSpec::Embedding(EmbeddingParams { path, pooling: Pooling::Mean });
        let m = expertise_matrix(&c, &spec, &ctx()).unwrap();
        assert_eq!(m.scores, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(m.label(), "enc-mean");
    }

    #[test]
    fn missing_embedding_is_an_error() {
        let c = tiny();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.jsonl");
        write_embeddings(&path, "toy", 1, [("P1", &[1.0][..])]).unwrap();
        let spec = MethodSpec::Embedding(EmbeddingParams { path, pooling: Pooling::Max });
        let err = expertise_matrix(&c, &spec, &ctx()).unwrap_err().to_string();
        assert!(err.contains("missing representation"), "{err}");
    }

    #[test]
    fn partial_params_fill_defaults() {
        let spec = MethodSpec::from_parts(Method::Lda, &json!({"topics": 15})).unwrap();
        match spec {
            MethodSpec::Lda(c) => {
                assert_eq!(c.topics, 15);
                assert_eq!(c.iterations, LdaConfig::default().iterations);
            }
            other => panic!("{other:?}"),
        }
        assert!(MethodSpec::from_parts(Method::Tfidf, &json!({"ngram_max": "two"})).is_err());
    }

    #[test]
    fn representation_round_trips() {
        let c = tiny();
        let rep = build_representation(&c, &MethodSpec::Tfidf(TfidfOptions::default()), &ctx()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rep.json");
        rep.save(&path).unwrap();
        let back = Representation::load(&path).unwrap();
        assert_eq!(score_representation(&back).unwrap(), score_representation(&rep).unwrap());
    }

    #[test]
    fn llm_has_no_vector_form() {
        let spec = MethodSpec::Llm(LlmConfig::default());
        assert!(build_representation(&tiny(), &spec, &ctx()).is_err());
    }
}
