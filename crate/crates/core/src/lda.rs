//! Latent Dirichlet allocation fit by collapsed Gibbs sampling.
//!
//! Reviewer documents and proposal abstracts are fit jointly, so every
//! document's topic proportions live in the same topic space. Proportions are
//! averaged over thinned post-burn-in samples.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    /// Symmetric document-topic prior. `None` means `1 / topics`.
    #[serde(default)]
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    /// Sweeps between retained samples after burn-in.
    pub sample_stride: usize,
    pub seed: u64,
    pub truncation_threshold: f64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 50,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            burn_in: 500,
            sample_stride: 10,
            seed: 0,
            truncation_threshold: 0.01,
        }
    }
}

impl LdaConfig {
    pub fn with_topics(topics: usize) -> Self {
        Self {
            topics,
            ..Self::default()
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(1.0 / self.topics as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("lda: {m}")));
        if self.topics < 2 {
            return bad("topics must be at least 2");
        }
        if [self.alpha(), self.beta].iter().any(|x| x.is_nan() || *x <= 0.0) {
            return bad("alpha and beta must be positive");
        }
        if self.iterations <= self.burn_in {
            return bad("iterations must exceed burn_in");
        }
        if self.sample_stride == 0 {
            return bad("sample_stride must be positive");
        }
        Ok(())
    }
}

/// Topic proportions of one document.
pub type TopicVector = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub vocabulary: Vec<String>,
    /// Row-major `topics × vocabulary` assignment counts from the final sweep.
    pub topic_word: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    config: LdaConfig,
    vocabulary: Vec<String>,
}

impl LdaModel {
    pub fn topics(&self) -> usize {
        self.config.topics
    }

    /// Tokens assigned to each topic.
    pub fn topic_sizes(&self) -> Vec<f64> {
        let v = self.vocabulary.len();
        self.topic_word.chunks(v.max(1)).map(|r| r.iter().sum()).collect()
    }

    /// JSON header line followed by little-endian f64 topic-word counts.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let header = ModelHeader {
            config: self.config.clone(),
            vocabulary: self.vocabulary.clone(),
        };
        let mut buf = serde_json::to_vec(&header)?;
        buf.push(b'\n');
        for x in &self.topic_word {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = BufReader::new(file);
        let mut line = String::new();
        rdr.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        let header: ModelHeader = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path.display().to_string(), "header", e))?;
        let mut body = Vec::new();
        rdr.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
        let expected = header.config.topics * header.vocabulary.len();
        if body.len() != expected * 8 {
            return Err(Error::parse(
                path.display().to_string(),
                "body",
                format!("expected {} bytes, got {}", expected * 8, body.len()),
            ));
        }
        let topic_word = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            config: header.config,
            vocabulary: header.vocabulary,
            topic_word,
        })
    }
}

pub struct LdaFit {
    pub model: LdaModel,
    /// One untruncated topic vector per input document, in input order.
    pub theta: Vec<TopicVector>,
}

/// Fits LDA to pre-tokenized documents. Deterministic for a given seed.
pub fn fit_lda<S: AsRef<str>>(documents: &[Vec<S>], config: &LdaConfig) -> Result<LdaFit> {
    config.validate()?;
    if documents.is_empty() {
        return Err(Error::Empty("lda corpus has no documents"));
    }

    let mut word_ids: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in documents {
        for w in doc {
            word_ids.entry(w.as_ref()).or_insert(0);
        }
    }
    if word_ids.is_empty() {
        return Err(Error::Empty("lda corpus has no tokens"));
    }
    for (i, id) in word_ids.values_mut().enumerate() {
        *id = i;
    }
    let vocabulary: Vec<String> = word_ids.keys().map(|s| s.to_string()).collect();
    let docs: Vec<Vec<usize>> = documents
        .iter()
        .map(|d| d.iter().map(|w| word_ids[w.as_ref()]).collect())
        .collect();

    let k = config.topics;
    let v = vocabulary.len();
    let alpha = config.alpha();
    let beta = config.beta;
    let v_beta = v as f64 * beta;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut doc_topic = vec![0u32; docs.len() * k];
    let mut topic_word = vec![0u32; k * v];
    let mut topic_total = vec![0u32; k];
    let mut assignments: Vec<Vec<usize>> = Vec::with_capacity(docs.len());

    for (d, doc) in docs.iter().enumerate() {
        let z: Vec<usize> = doc.iter().map(|_| rng.random_range(0..k)).collect();
        for (&w, &t) in doc.iter().zip(&z) {
            doc_topic[d * k + t] += 1;
            topic_word[t * v + w] += 1;
            topic_total[t] += 1;
        }
        assignments.push(z);
    }

    let mut theta_sum = vec![0.0f64; docs.len() * k];
    let mut samples = 0usize;
    let mut weights = vec![0.0f64; k];

    for sweep in 0..config.iterations {
        for (d, doc) in docs.iter().enumerate() {
            let dt = &mut doc_topic[d * k..(d + 1) * k];
            for (i, &w) in doc.iter().enumerate() {
                let old = assignments[d][i];
                dt[old] -= 1;
                topic_word[old * v + w] -= 1;
                topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (f64::from(dt[t]) + alpha)
                        * (f64::from(topic_word[t * v + w]) + beta)
                        / (f64::from(topic_total[t]) + v_beta);
                    weights[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = weights.partition_point(|&c| c <= u).min(k - 1);

                assignments[d][i] = new;
                dt[new] += 1;
                topic_word[new * v + w] += 1;
                topic_total[new] += 1;
            }
        }

        if sweep >= config.burn_in && (sweep - config.burn_in).is_multiple_of(config.sample_stride) {
            for (d, doc) in docs.iter().enumerate() {
                let denom = doc.len() as f64 + k as f64 * alpha;
                for t in 0..k {
                    theta_sum[d * k + t] += (f64::from(doc_topic[d * k + t]) + alpha) / denom;
                }
            }
            samples += 1;
        }
    }

    let theta = theta_sum
        .chunks(k)
        .map(|row| row.iter().map(|x| x / samples as f64).collect())
        .collect();
    let model = LdaModel {
        config: config.clone(),
        vocabulary,
        topic_word: topic_word.into_iter().map(f64::from).collect(),
    };
    Ok(LdaFit { model, theta })
}

/// Zeroes every component below `threshold`. No renormalization.
pub fn truncate_theta(theta: &[f64], threshold: f64) -> TopicVector {
    theta
        .iter()
        .map(|&x| if x < threshold { 0.0 } else { x })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disjoint_docs() -> Vec<Vec<String>> {
        let a = ["quasar", "redshift", "lensing", "halo", "cluster"];
        let b = ["exoplanet", "transit", "orbit", "atmosphere", "disk"];
        let mk = |ws: &[&str]| -> Vec<String> {
            (0..60).map(|i| ws[i % ws.len()].to_string()).collect()
        };
        vec![mk(&a), mk(&b)]
    }

    fn quick(topics: usize, seed: u64) -> LdaConfig {
        LdaConfig {
            topics,
            iterations: 200,
            burn_in: 100,
            seed,
            ..LdaConfig::default()
        }
    }

    #[test]
    fn theta_rows_sum_to_one() {
        let fit = fit_lda(&disjoint_docs(), &quick(5, 3)).unwrap();
        for row in &fit.theta {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn disjoint_vocabularies_separate() {
        let fit = fit_lda(&disjoint_docs(), &quick(2, 11)).unwrap();
        let top = |r: &Vec<f64>| (0..2).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap();
        let (t0, t1) = (top(&fit.theta[0]), top(&fit.theta[1]));
        assert_ne!(t0, t1);
        assert!(fit.theta[0][t0] > 0.8 && fit.theta[1][t1] > 0.8);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let a = fit_lda(&disjoint_docs(), &quick(3, 99)).unwrap();
        let b = fit_lda(&disjoint_docs(), &quick(3, 99)).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn seeds_agree_up_to_topic_relabeling() {
        let sizes = |seed| {
            let mut s = fit_lda(&disjoint_docs(), &quick(2, seed)).unwrap().model.topic_sizes();
            s.sort_by(f64::total_cmp);
            s
        };
        assert_eq!(sizes(1), sizes(2));
    }

    #[test]
    fn empty_document_is_uniform() {
        let mut docs = disjoint_docs();
        docs.push(vec![]);
        let fit = fit_lda(&docs, &quick(4, 0)).unwrap();
        assert!(fit.theta[2].iter().all(|&x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn empty_corpus_errors() {
        let docs: Vec<Vec<String>> = vec![];
        assert!(fit_lda(&docs, &quick(2, 0)).is_err());
        assert!(fit_lda(&[Vec::<String>::new()], &quick(2, 0)).is_err());
    }

    #[test]
    fn bad_config_rejected() {
        let mut c = quick(1, 0);
        assert!(c.validate().is_err());
        c.topics = 2;
        c.burn_in = c.iterations;
        assert!(c.validate().is_err());
    }

    #[test]
    fn truncation_cases() {
        assert_eq!(truncate_theta(&[0.005, 0.995], 0.01), vec![0.0, 0.995]);
        assert_eq!(truncate_theta(&[0.4, 0.6], 0.01), vec![0.4, 0.6]);
        let uniform = vec![0.005; 200];
        assert!(truncate_theta(&uniform, 0.01).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn model_save_load_round_trip() {
        let fit = fit_lda(&disjoint_docs(), &quick(3, 5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lda.bin");
        fit.model.save(&path).unwrap();
        assert_eq!(LdaModel::load(&path).unwrap(), fit.model);
    }
}
