//! TF-IDF over a handful of abstracts, then over the whole fixture corpus.

use expertmatch::pipeline::{expertise_matrix, MethodSpec, RunContext};
use expertmatch::similarity::cosine;
use expertmatch::text::Stopwords;
use expertmatch::tfidf::{tfidf_vectorize, TfidfOptions};
use expertmatch::load_corpus;

fn main() -> expertmatch::Result<()> {
    let docs = [
        "Weak lensing maps of dark matter in galaxy clusters.",
        "Dark matter halos traced by strong lensing arcs.",
        "Flare loops and coronal heating in the solar atmosphere.",
    ];
    let (vocab, vectors) = tfidf_vectorize(&docs, &TfidfOptions::default(), &Stopwords::english())?;
    println!("{} terms over {} documents", vocab.len(), vocab.n_docs);

    let terms: Vec<&String> = vocab.index.keys().collect();
    let dense: Vec<Vec<f64>> = vectors.iter().map(|v| v.to_dense(vocab.len())).collect();
    for (i, v) in vectors.iter().enumerate() {
        let mut top = v.entries.clone();
        top.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top: Vec<_> = top.iter().take(4).map(|&(j, w)| format!("{} {w:.2}", terms[j])).collect();
        println!("doc {i}: {}", top.join(", "));
    }
    println!("cos(0,1) = {:.3}", cosine(&dense[0], &dense[1])?);
    println!("cos(0,2) = {:.3}", cosine(&dense[0], &dense[2])?);

    let corpus = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus"))?;
    let m = expertise_matrix(&corpus, &MethodSpec::Tfidf(TfidfOptions::default()), &RunContext::default())?;
    let row = m.row(0);
    let best = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
    println!("{}: best match {} ({:.3})", m.proposal_ids()[0], m.reviewer_ids()[best], row[best]);
    Ok(())
}
