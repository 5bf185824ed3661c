//! Pool per-abstract embeddings into reviewer vectors and compare mean vs max.

use std::path::PathBuf;

use expertmatch::embedding::{import_embeddings, pool, publication_id, Pooling};
use expertmatch::eval::{evaluate, EvalConfig};
use expertmatch::pipeline::{expertise_matrix, EmbeddingParams, MethodSpec, RunContext};
use expertmatch::load_corpus;

fn main() -> expertmatch::Result<()> {
    let root = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"));
    let corpus = load_corpus(root.join("corpus"))?;
    let file = root.join("hashproj-32.jsonl");

    let emb = import_embeddings(&file)?;
    println!("{}: dim {}, {} records", emb.header.model, emb.dim(), emb.header.count);

    let reviewer = &corpus.reviewers[0];
    let vectors: Vec<&[f64]> = (0..reviewer.publications.len())
        .filter_map(|i| emb.get(&publication_id(&reviewer.id, i)))
        .collect();
    let mean = pool(&vectors, Pooling::Mean)?;
    let max = pool(&vectors, Pooling::Max)?;
    println!("{} pools {} abstracts; first dims mean {:.3?} max {:.3?}", reviewer.id, vectors.len(), &mean[..3], &max[..3]);

    let eval = EvalConfig {
        bootstrap_resamples: 200,
        ..EvalConfig::default()
    };
    for pooling in [Pooling::Mean, Pooling::Max] {
        let spec = MethodSpec::Embedding(EmbeddingParams {
            path: file.clone(),
            pooling,
        });
        let m = expertise_matrix(&corpus, &spec, &RunContext::default())?;
        let r = evaluate(&m, &corpus.designated_pairs(), &corpus.labels, &eval)?;
        println!("{:<18} MRR {:.3}  median rank {}", m.label(), r.summary.mrr.point, r.summary.median_rank.point);
    }
    Ok(())
}
