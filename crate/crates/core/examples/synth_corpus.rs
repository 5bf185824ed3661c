//! Build a synthetic benchmark corpus from cached literature-search responses.
//!
//! cargo run --example synth_corpus -- [SIZE] [SEED]

use expertmatch::synth::{generate_synthetic_corpus, self_retrieval_corpus, SynthConfig, SynthSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(12);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let source = SynthSource::fixture(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/ads-source"));
    let config = SynthConfig::new(size, seed);
    println!("example query: {}", config.query_for("Doe, J.").query_string());

    let corpus = generate_synthetic_corpus(&source, &config)?;
    println!("{} proposals, {} reviewers, {} labels", corpus.proposals.len(), corpus.reviewers.len(), corpus.labels.len());
    for r in corpus.reviewers.iter().take(4) {
        let kws: Vec<&str> = r.keywords.iter().map(|k| k.keyword.as_str()).collect();
        println!("{} -> {:?}: {} papers; {}", r.id, r.designated_proposal_ids, r.publications.len(), kws.join(" | "));
    }

    let sr = self_retrieval_corpus(&corpus, config.reference_year)?;
    let r = &sr.reviewers[0];
    println!("self-retrieval: {} now holds {} paper(s), the designated abstract", r.id, r.publications.len());

    let out = tempfile::tempdir()?;
    corpus.save(out.path())?;
    for entry in std::fs::read_dir(out.path())? {
        let e = entry?;
        println!("  {} ({} bytes)", e.file_name().to_string_lossy(), e.metadata()?.len());
    }
    Ok(())
}
