//! Rank reviewers for one proposal by overlap of their ranked keyword choices.
//!
//! cargo run --example keyword_match -- [PROPOSAL_ID]

use expertmatch::keyword::{keyword_similarity, keyword_vector};
use expertmatch::load_corpus;

fn main() -> expertmatch::Result<()> {
    let corpus = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus"))?;
    let wanted = std::env::args().nth(1);
    let proposal = match &wanted {
        Some(id) => corpus.proposal(id).expect("unknown proposal id"),
        None => &corpus.proposals[0],
    };

    let pv = keyword_vector(&proposal.keywords, &corpus.category_map)?;
    println!("{}: {:?}", proposal.id, pv.weights);

    let mut scored = Vec::new();
    for r in &corpus.reviewers {
        let rv = keyword_vector(&r.keywords, &corpus.category_map)?;
        scored.push((keyword_similarity(&pv, &rv), &r.id));
    }
    scored.sort_by(|a, b| b.0.total.total_cmp(&a.0.total).then(a.1.cmp(b.1)));

    println!("{:<6} {:>8} {:>8} {:>8}", "rev", "keyword", "category", "total");
    for (s, id) in scored.iter().take(8) {
        println!("{id:<6} {:>8.3} {:>8.3} {:>8.3}", s.keyword, s.category, s.total);
    }
    let designated: Vec<_> = corpus
        .designated_pairs()
        .into_iter()
        .filter(|(p, _)| *p == proposal.id)
        .map(|(_, r)| r)
        .collect();
    println!("designated: {designated:?}");
    Ok(())
}
