//! Corpus to representation to matrix to report, saving each artifact.
//!
//! cargo run --release --example pipeline -- [OUT_DIR]

use std::path::PathBuf;

use expertmatch::eval::{evaluate, EvalConfig};
use expertmatch::lda::LdaConfig;
use expertmatch::pipeline::{build_representation, score_representation, MethodSpec, Representation, RunContext};
use expertmatch::report::results_table;
use expertmatch::{load_corpus, ExpertiseMatrix, QueryConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("expertmatch-pipeline"));
    std::fs::create_dir_all(&out)?;

    let corpus = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus"))?;
    corpus.validate()?;
    let ctx = RunContext {
        query: QueryConfig::new(25, 5, false),
        seed: 11,
        ..RunContext::default()
    };
    let docs = corpus.build_reviewer_documents(&ctx.query)?;
    println!("{} reviewer documents, {} empty: {:?}", docs.documents.len(), docs.empty.len(), docs.empty);

    let lda = LdaConfig {
        iterations: 200,
        burn_in: 100,
        ..LdaConfig::with_topics(12)
    };
    let mut reports = Vec::new();
    for spec in [MethodSpec::Keywords, MethodSpec::Lda(lda)] {
        let label = spec.label();
        let rep_path = out.join(format!("{label}.rep.json"));
        build_representation(&corpus, &spec, &ctx)?.save(&rep_path)?;

        let matrix = score_representation(&Representation::load(&rep_path)?)?;
        let m_path = out.join(format!("{label}.matrix.json"));
        matrix.save(&m_path)?;

        let report = evaluate(&ExpertiseMatrix::load(&m_path)?, &corpus.designated_pairs(), &corpus.labels, &EvalConfig::default())?;
        report.save(out.join(format!("{label}.eval.json")))?;
        reports.push(report);
    }
    print!("{}", results_table(&reports, Some("keywords"))?.to_text());
    println!("artifacts in {}", out.display());
    Ok(())
}
