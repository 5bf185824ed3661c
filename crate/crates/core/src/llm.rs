//! Reviewer–proposal scoring with a generative model behind a
//! chat-completions style HTTP endpoint.
//!
//! Prompts are deterministic, requests pin temperature and seed, and every
//! parsed score is cached on disk under the SHA-256 of
//! `(model, system prompt, user prompt)`, so a fully cached run replays with no
//! network traffic.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, QueryConfig};
use crate::error::{Error, Result};
use crate::similarity::{ExpertiseMatrix, Method};

/// Environment variable holding the endpoint API key.
pub const API_KEY_ENV: &str = "EXPERTMATCH_LLM_KEY";

/// Extra attempts after an unparseable completion. The request is re-sent
/// unchanged.
pub const PARSE_RETRIES: usize = 3;

pub const SYSTEM_PROMPT: &str = "\
You are an expert in assigning reviewers to proposals at astronomical observatories.
You want to make sure that the reviewers can give high quality and relevant reviews to the proposal they are assigned.

You are given the following input:
- \"REVIEWER PAPERS\", which is a selection of the most recent papers by the reviewer, containing the title and abstract of each paper.
- \"NEW PROPOSAL\", which contains the proposal abstract that is under consideration for assignment.

Your task is to assign a score (0-100) evaluating how well the NEW PROPOSAL matches the REVIEWER'S PAPERS.

Consider the following criteria:
1. The score should be based on the similarity between the proposal and the reviewer papers.
2. The score should be higher if the reviewer has more background knowledge and expertise in the proposal.
3. The score should be lower if the reviewer has less background knowledge and expertise in the proposal.

Scoring Scale: Assign any integer score from 0 to 100.
NOTE: Output ONLY the score. Use integer or float. Do not hallucinate.";

pub const REVIEWER_MARKER: &str = "REVIEWER PAPERS:";
pub const PROPOSAL_MARKER: &str = "NEW PROPOSAL:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub seed: u64,
    pub max_in_flight: usize,
    /// Extra attempts after a transport failure.
    pub retry_budget: usize,
    pub cache_dir: PathBuf,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            temperature: 0.0,
            seed: 42,
            max_in_flight: 4,
            retry_budget: 3,
            cache_dir: PathBuf::from("llm-cache"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

/// System prompt plus a user message holding the reviewer's papers (title and
/// abstract, in the order given) followed by the proposal abstract. The
/// reviewer block comes first so consecutive requests for the same reviewer
/// share a prefix.
pub fn build_prompt(reviewer_papers: &[(&str, &str)], proposal_abstract: &str) -> Result<Prompt> {
    if proposal_abstract.trim().is_empty() {
        return Err(Error::Validation("proposal abstract is empty".into()));
    }
    let mut user = String::from(REVIEWER_MARKER);
    user.push('\n');
    for (i, (title, abs)) in reviewer_papers.iter().enumerate() {
        user.push_str(&format!("[{}] Title: {}\nAbstract: {}\n\n", i + 1, title.trim(), abs.trim()));
    }
    if reviewer_papers.is_empty() {
        user.push('\n');
    }
    user.push_str(PROPOSAL_MARKER);
    user.push('\n');
    user.push_str(proposal_abstract.trim());
    user.push('\n');
    Ok(Prompt {
        system: SYSTEM_PROMPT.to_string(),
        user,
    })
}

/// Accepts one integer or float token in `[0, 100]`, surrounding whitespace allowed.
pub fn parse_score(completion: &str) -> Result<f64> {
    let token = completion.trim();
    if token.is_empty() || token.split_whitespace().count() != 1 {
        return Err(Error::ScoreParse(completion.to_string()));
    }
    let value: f64 = token
        .parse()
        .map_err(|_| Error::ScoreParse(completion.to_string()))?;
    if !value.is_finite() {
        return Err(Error::ScoreParse(completion.to_string()));
    }
    if !(0.0..=100.0).contains(&value) {
        return Err(Error::ScoreRange(value));
    }
    Ok(value)
}

/// Hex SHA-256 over length-prefixed model name, system text and user text.
pub fn cache_key(model: &str, prompt: &Prompt) -> String {
    let mut h = Sha256::new();
    for part in [model, prompt.system.as_str(), prompt.user.as_str()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

/// Request body sent to the endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub seed: u64,
}

impl ChatRequest {
    pub fn new(config: &LlmConfig, prompt: &Prompt) -> Self {
        Self {
            model: config.model.clone(),
            messages: vec![
                ChatMessage {
                    role: "system".into(),
                    content: prompt.system.clone(),
                },
                ChatMessage {
                    role: "user".into(),
                    content: prompt.user.clone(),
                },
            ],
            temperature: config.temperature,
            seed: config.seed,
        }
    }
}

/// Something that turns a chat request into completion text.
pub trait ChatTransport: Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String>;
}

impl<T: ChatTransport + ?Sized> ChatTransport for &T {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        (**self).complete(request)
    }
}

/// Blocking HTTP transport for chat-completions style endpoints.
pub struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpTransport {
    /// Reads the API key from [`API_KEY_ENV`] when set.
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self::with_key(endpoint, std::env::var(API_KEY_ENV).ok())
    }

    pub fn with_key(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.into(),
            api_key,
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

impl ChatTransport for HttpTransport {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(request)
            .map_err(|e| Error::Transport(e.to_string()))?;
        let body: ChatResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Transport(format!("bad response body: {e}")))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Error::Transport("response has no choices".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub proposal_id: String,
    pub reviewer_id: String,
    pub raw_score: f64,
    /// `raw_score / 100`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheEntry {
    model: String,
    raw_score: f64,
    completion: String,
}

pub struct LlmScorer<T> {
    config: LlmConfig,
    transport: T,
    cache_lock: Mutex<()>,
    requests: AtomicUsize,
}

impl<T: ChatTransport> LlmScorer<T> {
    pub fn new(config: LlmConfig, transport: T) -> Result<Self> {
        if config.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be at least 1".into()));
        }
        fs::create_dir_all(&config.cache_dir).map_err(|e| Error::io(&config.cache_dir, e))?;
        Ok(Self {
            config,
            transport,
            cache_lock: Mutex::new(()),
            requests: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// Requests issued to the transport so far.
    pub fn requests_sent(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    fn cache_path(&self, key: &str) -> PathBuf {
        self.config.cache_dir.join(format!("{key}.json"))
    }

    fn read_cache(&self, key: &str) -> Result<Option<CacheEntry>> {
        let path = self.cache_path(key);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| Error::parse(path.display().to_string(), "cache entry", e)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    fn write_cache(&self, key: &str, entry: &CacheEntry) -> Result<()> {
        let _guard = self.cache_lock.lock().unwrap_or_else(|p| p.into_inner());
        let path = self.cache_path(key);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(entry)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    fn send(&self, request: &ChatRequest) -> Result<String> {
        let mut attempt = 0;
        loop {
            self.requests.fetch_add(1, Ordering::SeqCst);
            match self.transport.complete(request) {
                Ok(text) => return Ok(text),
                Err(e @ Error::Transport(_)) if attempt < self.config.retry_budget => {
                    attempt += 1;
                    log::warn!("llm request failed ({e}); retry {attempt}");
                    std::thread::sleep(Duration::from_millis(200 * attempt as u64));
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Scores one pair, from cache when this exact prompt was scored before.
    pub fn score_prompt(&self, proposal_id: &str, reviewer_id: &str, prompt: &Prompt) -> Result<PairScore> {
        let key = cache_key(&self.config.model, prompt);
        let raw = match self.read_cache(&key)? {
            Some(entry) => entry.raw_score,
            None => {
                let request = ChatRequest::new(&self.config, prompt);
                let mut last = String::new();
                let mut parsed = None;
                for _ in 0..=PARSE_RETRIES {
                    last = self.send(&request)?;
                    match parse_score(&last) {
                        Ok(v) => {
                            parsed = Some(v);
                            break;
                        }
                        Err(Error::ScoreParse(_)) => continue,
                        Err(e) => return Err(e),
                    }
                }
                let raw = parsed.ok_or(Error::ScoreParse(last.clone()))?;
                self.write_cache(
                    &key,
                    &CacheEntry {
                        model: self.config.model.clone(),
                        raw_score: raw,
                        completion: last,
                    },
                )?;
                raw
            }
        };
        Ok(PairScore {
            proposal_id: proposal_id.to_string(),
            reviewer_id: reviewer_id.to_string(),
            raw_score: raw,
            scaled: raw / 100.0,
        })
    }

    pub fn score_pair(
        &self,
        corpus: &Corpus,
        proposal_id: &str,
        reviewer_id: &str,
        query: &QueryConfig,
    ) -> Result<PairScore> {
        let proposal = corpus.proposal(proposal_id).ok_or_else(|| Error::Unknown {
            kind: "proposal",
            id: proposal_id.to_string(),
        })?;
        let reviewer = corpus.reviewer(reviewer_id).ok_or_else(|| Error::Unknown {
            kind: "reviewer",
            id: reviewer_id.to_string(),
        })?;
        let papers: Vec<(&str, &str)> = corpus
            .select_publications(reviewer, query)
            .into_iter()
            .map(|(_, p)| (p.title.as_str(), p.abstract_text.as_str()))
            .collect();
        let prompt = build_prompt(&papers, &proposal.abstract_text)?;
        self.score_prompt(proposal_id, reviewer_id, &prompt)
    }

    /// Scores every proposal × reviewer pair with at most `max_in_flight`
    /// concurrent requests. Reviewer-major order keeps shared prompt prefixes
    /// adjacent.
    pub fn score_matrix(&self, corpus: &Corpus, query: &QueryConfig) -> Result<ExpertiseMatrix> {
        let n_p = corpus.proposals.len();
        let n_r = corpus.reviewers.len();
        let jobs: Vec<(usize, usize)> = (0..n_r)
            .flat_map(|j| (0..n_p).map(move |i| (i, j)))
            .collect();
        let results: Vec<Mutex<Option<Result<f64>>>> = (0..jobs.len()).map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.min(jobs.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let n = next.fetch_add(1, Ordering::SeqCst);
                    let Some(&(i, j)) = jobs.get(n) else { break };
                    let r = self.score_pair(
                        corpus,
                        &corpus.proposals[i].id,
                        &corpus.reviewers[j].id,
                        query,
                    );
                    let failed = r.is_err();
                    *results[n].lock().unwrap() = Some(r.map(|p| p.scaled));
                    if failed {
                        next.store(jobs.len(), Ordering::SeqCst);
                        break;
                    }
                });
            }
        });

        let mut scores = vec![0.0; n_p * n_r];
        let mut missing = false;
        for ((i, j), slot) in jobs.iter().zip(results) {
            match slot.into_inner().unwrap_or_else(|p| p.into_inner()) {
                Some(Ok(v)) => scores[i * n_r + j] = v,
                Some(Err(e)) => return Err(e),
                None => missing = true,
            }
        }
        debug_assert!(!missing, "jobs only go unscored after a failure");
        ExpertiseMatrix::new(
            Method::Llm,
            format!("llm-{}", self.config.model),
            corpus.proposals.iter().map(|p| p.id.clone()).collect(),
            corpus.reviewers.iter().map(|r| r.id.clone()).collect(),
            scores,
        )
        .map(|m| {
            m.with_provenance(serde_json::json!({
                "model": self.config.model,
                "temperature": self.config.temperature,
                "seed": self.config.seed,
                "query": query,
            }))
        })
    }
}

/// Cache directory under `root` for a model, so different models never share entries.
pub fn default_cache_dir(root: &Path, model: &str) -> PathBuf {
    root.join(model.replace(['/', '\\'], "_"))
}
