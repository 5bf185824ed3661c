//! Synthetic distributed-peer-review corpora built from public proposal
//! metadata and literature-search responses.
//!
//! A source directory holds
//!
//! ```text
//! proposals.json      [{"id", "title", "abstract", "authors": [...]}]
//! ads/<hash>.json     one cached search response per reviewer query
//! ```
//!
//! Fixture mode reads only those files. Live mode queries the search API for
//! any response missing from `ads/` and stores it there, so every live run can
//! be replayed offline.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    assemble_corpus, shipped_keywords, Corpus, Grade, Proposal, PublicationRecord, RankedKeyword,
    ReviewerProfile, SelfReportedLabel, MAX_KEYWORDS, MIN_PROPOSAL_KEYWORDS,
};
use crate::error::{Error, Result};
use crate::keyword::{keyword_similarity, keyword_vector};
use crate::text::{tokenize, Stopwords};

pub const ADS_KEY_ENV: &str = "EXPERTMATCH_ADS_KEY";
pub const DEFAULT_ADS_ENDPOINT: &str = "https://api.adsabs.harvard.edu/v1/search/query";
pub const SOURCE_PROPOSALS_FILE: &str = "proposals.json";
pub const RESPONSES_DIR: &str = "ads";
/// Minimum spacing between live requests.
pub const MIN_REQUEST_INTERVAL: Duration = Duration::from_millis(200);
/// Upper bound on self-reported labels per proposal.
pub const MAX_LABELS_PER_PROPOSAL: usize = 10;

/// A public proposal with its author list, as found in the source directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceProposal {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub authors: Vec<String>,
}

/// Publication search for one author.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdsQuery {
    pub author: String,
    pub max_rows: usize,
    pub year_from: i32,
    pub year_to: i32,
    pub first_author: bool,
    pub fields: Vec<String>,
}

impl AdsQuery {
    pub fn new(author: impl Into<String>, max_rows: usize, year_from: i32, year_to: i32) -> Self {
        Self {
            author: author.into(),
            max_rows,
            year_from,
            year_to,
            first_author: false,
            fields: ["title", "abstract", "year", "author"].map(String::from).to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rows == 0 {
            return Err(Error::Validation("search query: max_rows must be at least 1".into()));
        }
        if self.year_from > self.year_to {
            return Err(Error::Validation(format!(
                "search query: year range {}-{} is empty",
                self.year_from, self.year_to
            )));
        }
        Ok(())
    }

    /// The `q` parameter in the search API's query syntax.
    pub fn query_string(&self) -> String {
        let caret = if self.first_author { "^" } else { "" };
        format!(
            "author:\"{caret}{}\" year:{}-{}",
            self.author.replace('"', ""),
            self.year_from,
            self.year_to
        )
    }

    pub fn params(&self) -> Vec<(&'static str, String)> {
        vec![
            ("q", self.query_string()),
            ("fl", self.fields.join(",")),
            ("rows", self.max_rows.to_string()),
            ("sort", "date desc".into()),
        ]
    }

    /// File stem of the cached response: SHA-256 over the request parameters.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.params() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdsResponse {
    pub response: AdsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdsResult {
    #[serde(rename = "numFound", default)]
    pub num_found: usize,
    pub docs: Vec<AdsDoc>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdsDoc {
    #[serde(default)]
    pub title: Vec<String>,
    #[serde(rename = "abstract", default)]
    pub abstract_text: Option<String>,
    #[serde(default)]
    pub year: Option<String>,
    #[serde(default)]
    pub author: Vec<String>,
}

impl AdsDoc {
    /// Converts to a publication of `author`; documents without an abstract
    /// or a readable year yield `None`.
    pub fn to_publication(&self, author: &str) -> Option<PublicationRecord> {
        let abstract_text = self.abstract_text.as_deref()?.trim();
        if abstract_text.is_empty() {
            return None;
        }
        let year: i32 = self.year.as_deref()?.get(..4)?.parse().ok()?;
        Some(PublicationRecord {
            title: self.title.first().cloned().unwrap_or_default(),
            abstract_text: abstract_text.to_string(),
            year,
            first_author: self.author.first().is_some_and(|a| same_name(a, author)),
        })
    }
}

fn same_name(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

/// Rate-limited client for the literature-search API.
pub struct AdsClient {
    agent: ureq::Agent,
    endpoint: String,
    token: String,
    last_request: Mutex<Option<Instant>>,
}

impl AdsClient {
    pub fn new(endpoint: impl Into<String>, token: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.into(),
            token: token.into(),
            last_request: Mutex::new(None),
        }
    }

    /// Client for `endpoint` with the token from [`ADS_KEY_ENV`].
    pub fn from_env(endpoint: impl Into<String>) -> Result<Self> {
        let token = std::env::var(ADS_KEY_ENV)
            .map_err(|_| Error::Config(format!("live mode needs a token in {ADS_KEY_ENV}")))?;
        Ok(Self::new(endpoint, token))
    }

    /// Raw response body for `query`.
    pub fn fetch(&self, query: &AdsQuery) -> Result<String> {
        {
            let mut last = self.last_request.lock().unwrap();
            if let Some(t) = *last {
                let since = t.elapsed();
                if since < MIN_REQUEST_INTERVAL {
                    std::thread::sleep(MIN_REQUEST_INTERVAL - since);
                }
            }
            *last = Some(Instant::now());
        }
        let mut req = self
            .agent
            .get(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.token));
        for (k, v) in query.params() {
            req = req.query(k, &v);
        }
        let mut resp = req.call().map_err(|e| Error::Transport(e.to_string()))?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(format!("bad response body: {e}")))
    }
}

/// Where proposals and search responses come from.
pub struct SynthSource {
    dir: PathBuf,
    live: Option<AdsClient>,
}

impl SynthSource {
    pub fn fixture(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into(), live: None }
    }

    /// Live mode; fetched responses are written under `dir`.
    pub fn live(dir: impl Into<PathBuf>, client: AdsClient) -> Self {
        Self {
            dir: dir.into(),
            live: Some(client),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn proposals(&self) -> Result<Vec<SourceProposal>> {
        let path = self.dir.join(SOURCE_PROPOSALS_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let records: Vec<SourceProposal> = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), "root", e))?;
        for (i, r) in records.iter().enumerate() {
            if r.id.trim().is_empty() || r.abstract_text.trim().is_empty() || r.authors.is_empty() {
                return Err(Error::parse(
                    path.display().to_string(),
                    format!("record {i}"),
                    "needs a non-empty id, abstract and author list",
                ));
            }
        }
        Ok(records)
    }

    pub fn response_path(&self, query: &AdsQuery) -> PathBuf {
        self.dir.join(RESPONSES_DIR).join(format!("{}.json", query.hash()))
    }

    pub fn response(&self, query: &AdsQuery) -> Result<AdsResponse> {
        query.validate()?;
        let path = self.response_path(query);
        let body = match (path.exists(), &self.live) {
            (true, _) => fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?,
            (false, Some(client)) => {
                let body = client.fetch(query)?;
                let dir = path.parent().expect("response path has a parent");
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                fs::write(&path, &body).map_err(|e| Error::io(&path, e))?;
                body
            }
            (false, None) => {
                return Err(Error::Validation(format!(
                    "fixture has no cached response for `{}` (expected {})",
                    query.query_string(),
                    path.display()
                )))
            }
        };
        serde_json::from_str(&body).map_err(|e| Error::parse(path.display().to_string(), "root", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub size: usize,
    pub seed: u64,
    /// Last year covered by the reviewer publication queries.
    pub reference_year: i32,
    pub query_years: i32,
    pub query_rows: usize,
}

impl SynthConfig {
    pub fn new(size: usize, seed: u64) -> Self {
        Self {
            size,
            seed,
            reference_year: 2024,
            query_years: 10,
            query_rows: 50,
        }
    }

    pub fn query_for(&self, author: &str) -> AdsQuery {
        AdsQuery::new(
            author,
            self.query_rows,
            self.reference_year - self.query_years + 1,
            self.reference_year,
        )
    }
}

/// Cheap stem used to match keyword terms against free text.
fn stem(token: &str) -> String {
    token.chars().take(5).collect()
}

/// Draws between two and five ranked keywords, each keyword weighted by how
/// often its terms occur in `text`.
fn fabricate_keywords(
    text: &str,
    vocabulary: &[String],
    keyword_stems: &[HashSet<String>],
    stopwords: &Stopwords,
    rng: &mut ChaCha8Rng,
) -> Vec<RankedKeyword> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in tokenize(text, 1, stopwords) {
        *counts.entry(stem(&t)).or_default() += 1;
    }
    let mut weights: Vec<f64> = keyword_stems
        .iter()
        .map(|stems| 0.25 + stems.iter().map(|s| counts.get(s).copied().unwrap_or(0)).sum::<usize>() as f64)
        .collect();
    let k = rng.random_range(MIN_PROPOSAL_KEYWORDS..=MAX_KEYWORDS);
    let mut out = Vec::with_capacity(k);
    for rank in 1..=k {
        let dist = WeightedIndex::new(&weights).expect("positive weights remain");
        let i = dist.sample(rng);
        weights[i] = 0.0;
        out.push(RankedKeyword::new(vocabulary[i].clone(), rank as u8));
    }
    out
}

fn grade_for(score: f64) -> Grade {
    if score >= 1.0 {
        Grade::Expert
    } else if score > 0.0 {
        Grade::Intermediate
    } else {
        Grade::NonExpert
    }
}

/// Builds a corpus of `config.size` proposals, each designating a distinct
/// author as its reviewer. Keywords and self-reported labels are fabricated
/// and only meaningful for testing.
pub fn generate_synthetic_corpus(source: &SynthSource, config: &SynthConfig) -> Result<Corpus> {
    if config.size == 0 {
        return Err(Error::Validation("synthetic corpus size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pool = source.proposals()?;
    if pool.len() < config.size {
        return Err(Error::InsufficientSource {
            needed: config.size,
            available: pool.len(),
        });
    }
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    pool.shuffle(&mut rng);

    let mut used_authors: HashSet<String> = HashSet::new();
    let mut picked: Vec<(SourceProposal, String)> = Vec::new();
    let mut seen_ids = HashSet::new();
    for p in pool {
        if picked.len() == config.size {
            break;
        }
        if !seen_ids.insert(p.id.clone()) {
            continue;
        }
        let author = p
            .authors
            .iter()
            .map(|a| a.trim())
            .find(|a| !a.is_empty() && !used_authors.contains(&a.to_lowercase()));
        if let Some(a) = author.map(str::to_string) {
            used_authors.insert(a.to_lowercase());
            picked.push((p, a));
        }
    }
    if picked.len() < config.size {
        return Err(Error::InsufficientSource {
            needed: config.size,
            available: picked.len(),
        });
    }

    let (vocabulary, categories) = shipped_keywords();
    let stopwords = Stopwords::english();
    let keyword_stems: Vec<HashSet<String>> = vocabulary
        .iter()
        .map(|kw| tokenize(kw, 1, &stopwords).iter().map(|t| stem(t)).collect())
        .collect();

    let width = picked.len().to_string().len().max(3);
    let mut proposals = Vec::with_capacity(picked.len());
    let mut reviewers = Vec::with_capacity(picked.len());
    for (i, (p, author)) in picked.iter().enumerate() {
        let response = source.response(&config.query_for(author))?;
        let publications: Vec<PublicationRecord> = response
            .response
            .docs
            .iter()
            .filter_map(|d| d.to_publication(author))
            .collect();
        let reviewer_text = publications
            .iter()
            .map(|p| p.abstract_text.as_str())
            .collect::<Vec<_>>()
            .join(" ");

        proposals.push(Proposal {
            id: p.id.clone(),
            abstract_text: p.abstract_text.clone(),
            keywords: fabricate_keywords(&p.abstract_text, &vocabulary, &keyword_stems, &stopwords, &mut rng),
            categories: Vec::new(),
        });
        reviewers.push(ReviewerProfile {
            id: format!("R{:0width$}", i + 1),
            designated_proposal_ids: vec![p.id.clone()],
            keywords: fabricate_keywords(&reviewer_text, &vocabulary, &keyword_stems, &stopwords, &mut rng),
            publications,
        });
    }

    let labels = synthetic_labels(&proposals, &reviewers, &categories, &mut rng)?;
    assemble_corpus(proposals, reviewers, labels, vocabulary, categories)
}

/// Every proposal gets the same number of labels, drawn from reviewers other
/// than its designated one and graded by keyword agreement.
fn synthetic_labels(
    proposals: &[Proposal],
    reviewers: &[ReviewerProfile],
    categories: &BTreeMap<String, String>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SelfReportedLabel>> {
    let per_proposal = MAX_LABELS_PER_PROPOSAL.min(reviewers.len().saturating_sub(1));
    let reviewer_vectors = reviewers
        .iter()
        .map(|r| keyword_vector(&r.keywords, categories))
        .collect::<Result<Vec<_>>>()?;
    let mut labels = Vec::with_capacity(per_proposal * proposals.len());
    for (pi, p) in proposals.iter().enumerate() {
        let pv = keyword_vector(&p.keywords, categories)?;
        // reviewer `pi` is the designated one
        let mut others: Vec<usize> = (0..reviewers.len()).filter(|&r| r != pi).collect();
        others.shuffle(rng);
        others.truncate(per_proposal);
        others.sort_unstable();
        for r in others {
            labels.push(SelfReportedLabel {
                proposal_id: p.id.clone(),
                reviewer_id: reviewers[r].id.clone(),
                grade: grade_for(keyword_similarity(&pv, &reviewer_vectors[r]).total),
            });
        }
    }
    Ok(labels)
}

/// Copy of `corpus` where each reviewer's only publications are the abstracts
/// of their designated proposals, dated `year`. Any text method should then
/// rank every designated reviewer first.
pub fn self_retrieval_corpus(corpus: &Corpus, year: i32) -> Result<Corpus> {
    let mut reviewers = corpus.reviewers.clone();
    for r in &mut reviewers {
        r.publications = r
            .designated_proposal_ids
            .iter()
            .map(|pid| {
                let p = corpus.proposal(pid).ok_or_else(|| Error::Unknown {
                    kind: "proposal",
                    id: pid.clone(),
                })?;
                Ok(PublicationRecord {
                    title: pid.clone(),
                    abstract_text: p.abstract_text.clone(),
                    year,
                    first_author: true,
                })
            })
            .collect::<Result<Vec<_>>>()?;
    }
    assemble_corpus(
        corpus.proposals.clone(),
        reviewers,
        corpus.labels.clone(),
        corpus.keyword_vocabulary.clone(),
        corpus.category_map.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOPICS: [&str; 5] = [
        "supernova explosions and stellar binaries observed in the galactic disk",
        "dark matter halos traced by weak lensing of distant galaxy clusters",
        "exoplanet atmospheres probed with transmission spectroscopy of hot jupiters",
        "molecular clouds and star formation in nearby spiral galaxies",
        "accretion onto supermassive black holes in active galactic nuclei",
    ];

    fn write_fixture(dir: &Path, n: usize) -> SynthConfig {
        let config = SynthConfig::new(n, 0);
        let proposals: Vec<SourceProposal> = (0..n)
            .map(|i| SourceProposal {
                id: format!("P{i:02}"),
                title: format!("Proposal {i}"),
                abstract_text: format!("We propose to study {} in sample {i}.", TOPICS[i % TOPICS.len()]),
                authors: vec![format!("Author, A{i}"), "Shared, S.".into()],
            })
            .collect();
        fs::write(dir.join(SOURCE_PROPOSALS_FILE), serde_json::to_string(&proposals).unwrap()).unwrap();
        let source = SynthSource::fixture(dir);
        fs::create_dir_all(dir.join(RESPONSES_DIR)).unwrap();
        for (i, p) in proposals.iter().enumerate() {
            let q = config.query_for(&p.authors[0]);
            let docs: Vec<AdsDoc> = (0..3)
                .map(|j| AdsDoc {
                    title: vec![format!("Paper {i}.{j}")],
                    abstract_text: Some(format!("Results on {} from survey {j}.", TOPICS[(i + j) % TOPICS.len()])),
                    year: Some(format!("{}", 2020 + j)),
                    author: vec![p.authors[0].clone()],
                })
                .collect();
            let body = AdsResponse {
                response: AdsResult { num_found: docs.len(), docs },
            };
            fs::write(source.response_path(&q), serde_json::to_string(&body).unwrap()).unwrap();
        }
        config
    }

    #[test]
    fn fixture_corpus_is_valid_and_closed() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = write_fixture(dir.path(), 8);
        config.size = 5;
        config.seed = 7;
        let c = generate_synthetic_corpus(&SynthSource::fixture(dir.path()), &config).unwrap();
        assert_eq!(c.proposals.len(), 5);
        assert_eq!(c.designated_pairs().len(), 5);
        let designated: HashSet<_> = c.designated_pairs().into_iter().map(|(_, r)| r).collect();
        assert_eq!(designated.len(), 5);
        assert!(c.labels.len() == 5 * 4);

        let out = tempfile::tempdir().unwrap();
        c.save(out.path()).unwrap();
        assert_eq!(crate::corpus::load_corpus(out.path()).unwrap(), c);
    }

    #[test]
    fn same_seed_same_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_fixture(dir.path(), 6);
        let src = SynthSource::fixture(dir.path());
        let a = generate_synthetic_corpus(&src, &config).unwrap();
        let b = generate_synthetic_corpus(&src, &config).unwrap();
        assert_eq!(a, b);
        let other = generate_synthetic_corpus(&src, &SynthConfig { seed: 99, ..config }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn oversized_request_fails() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_fixture(dir.path(), 4);
        let err = generate_synthetic_corpus(&SynthSource::fixture(dir.path()), &SynthConfig { size: 9, ..config })
            .unwrap_err();
        assert!(err.to_string().contains("insufficient source records"), "{err}");
    }

    #[test]
    fn missing_response_names_query() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_fixture(dir.path(), 3);
        fs::remove_dir_all(dir.path().join(RESPONSES_DIR)).unwrap();
        let err = generate_synthetic_corpus(&SynthSource::fixture(dir.path()), &config).unwrap_err();
        assert!(err.to_string().contains("no cached response"), "{err}");
    }

    #[test]
    fn malformed_proposals_file_fails() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(SOURCE_PROPOSALS_FILE), "[{\"id\": 3}]").unwrap();
        let err = SynthSource::fixture(dir.path()).proposals().unwrap_err();
        assert!(err.to_string().contains(SOURCE_PROPOSALS_FILE), "{err}");
    }

    #[test]
    fn query_hash_depends_on_every_parameter() {
        let q = AdsQuery::new("Doe, J.", 50, 2015, 2024);
        let mut first = q.clone();
        first.first_author = true;
        assert_ne!(q.hash(), first.hash());
        assert_ne!(q.hash(), AdsQuery { max_rows: 25, ..q.clone() }.hash());
        assert_eq!(q.query_string(), "author:\"Doe, J.\" year:2015-2024");
        assert!(AdsQuery { max_rows: 0, ..q }.validate().is_err());
    }

    #[test]
    fn docs_without_abstract_are_skipped() {
        let d = AdsDoc {
            title: vec!["T".into()],
            abstract_text: None,
            year: Some("2020".into()),
            author: vec![],
        };
        assert!(d.to_publication("X").is_none());
        let d = AdsDoc {
            abstract_text: Some("text".into()),
            author: vec!["x".into()],
            ..d
        };
        assert!(d.to_publication("X").unwrap().first_author);
    }

    #[test]
    fn self_retrieval_replaces_publications() {
        let dir = tempfile::tempdir().unwrap();
        let config = write_fixture(dir.path(), 4);
        let c = generate_synthetic_corpus(&SynthSource::fixture(dir.path()), &config).unwrap();
        let s = self_retrieval_corpus(&c, 2024).unwrap();
        for r in &s.reviewers {
            assert_eq!(r.publications.len(), 1);
            assert_eq!(r.publications[0].abstract_text, s.proposal(&r.designated_proposal_ids[0]).unwrap().abstract_text);
        }
    }
}
