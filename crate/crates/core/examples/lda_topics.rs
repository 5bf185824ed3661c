//! Fit a small topic model on proposal abstracts and inspect the topics.
//!
//! cargo run --release --example lda_topics

use expertmatch::lda::{fit_lda, truncate_theta, LdaConfig};
use expertmatch::text::{tokenize, Stopwords};
use expertmatch::load_corpus;

fn main() -> expertmatch::Result<()> {
    let corpus = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus"))?;
    let stop = Stopwords::english();
    let docs: Vec<Vec<String>> = corpus
        .proposals
        .iter()
        .map(|p| tokenize(&p.abstract_text, 1, &stop))
        .collect();

    let config = LdaConfig {
        iterations: 300,
        burn_in: 150,
        seed: 7,
        ..LdaConfig::with_topics(10)
    };
    let fit = fit_lda(&docs, &config)?;
    let model = &fit.model;
    let v = model.vocabulary.len();

    for (k, size) in model.topic_sizes().iter().enumerate() {
        let row = &model.topic_word[k * v..(k + 1) * v];
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
        let words: Vec<&str> = order.iter().take(6).map(|&j| model.vocabulary[j].as_str()).collect();
        println!("topic {k:>2} ({size:>4} tokens): {}", words.join(" "));
    }

    for (p, theta) in corpus.proposals.iter().zip(&fit.theta).take(5) {
        let kept = truncate_theta(theta, config.truncation_threshold);
        let mut top: Vec<(usize, f64)> = kept.iter().copied().enumerate().filter(|&(_, x)| x > 0.0).collect();
        top.sort_by(|a, b| b.1.total_cmp(&a.1));
        let shown: Vec<String> = top.iter().take(3).map(|(k, x)| format!("t{k}={x:.2}")).collect();
        println!("{}: {}", p.id, shown.join(" "));
    }
    Ok(())
}
