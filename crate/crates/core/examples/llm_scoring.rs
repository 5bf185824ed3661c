//! Score pairs through the LLM harness with an offline transport.
//!
//! The transport here counts words shared between the reviewer section and the
//! proposal section of the prompt. Swap in `HttpTransport` for a real endpoint.

use std::collections::HashSet;

use expertmatch::eval::{evaluate, EvalConfig};
use expertmatch::llm::{ChatRequest, ChatTransport, LlmConfig, LlmScorer, PROPOSAL_MARKER};
use expertmatch::{load_corpus, QueryConfig};

struct Overlap;

impl ChatTransport for Overlap {
    fn complete(&self, request: &ChatRequest) -> expertmatch::Result<String> {
        let user = &request.messages.last().unwrap().content;
        let (papers, proposal) = user.split_once(PROPOSAL_MARKER).unwrap_or((user, ""));
        let words = |s: &str| -> HashSet<String> {
            s.split(|c: char| !c.is_alphanumeric())
                .filter(|w| w.len() > 5)
                .map(str::to_lowercase)
                .collect()
        };
        let shared = words(papers).intersection(&words(proposal)).count();
        Ok(format!("{}", (shared * 4).min(100)))
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus"))?;
    let cache = tempfile::tempdir()?;
    let config = LlmConfig {
        cache_dir: cache.path().to_path_buf(),
        ..LlmConfig::default()
    };
    let scorer = LlmScorer::new(config, Overlap)?;
    let query = QueryConfig::default();

    let (p, r) = &corpus.designated_pairs()[0];
    let s = scorer.score_pair(&corpus, p, r, &query)?;
    println!("{p} x {r}: raw {} scaled {}", s.raw_score, s.scaled);

    let m = scorer.score_matrix(&corpus, &query)?;
    println!("{} requests for {} pairs", scorer.requests_sent(), m.n_proposals() * m.n_reviewers());
    scorer.score_matrix(&corpus, &query)?;
    println!("{} requests after a second pass (cache hits)", scorer.requests_sent());

    let eval = EvalConfig {
        bootstrap_resamples: 200,
        ..EvalConfig::default()
    };
    let report = evaluate(&m, &corpus.designated_pairs(), &corpus.labels, &eval)?;
    println!("MRR {:.3}, Hit@25 {:.3}", report.summary.mrr.point, report.summary.hit_at_k.point);
    Ok(())
}
