//! Sweep query construction for two methods and print the results table.

use expertmatch::ablation::{query_grid, run_ablation};
use expertmatch::eval::EvalConfig;
use expertmatch::pipeline::RunContext;
use expertmatch::report::results_table;
use expertmatch::{load_corpus, Method};
use serde_json::json;

fn main() -> expertmatch::Result<()> {
    let corpus = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus"))?;
    let cells = query_grid(&[(Method::Keywords, json!({})), (Method::Tfidf, json!({}))]);
    for c in &cells {
        println!("{:<28} max {:>2} window {:>2}y first-author {}", c.name, c.query_config.max_papers, c.query_config.window_years, c.query_config.first_author_only);
    }

    let eval = EvalConfig {
        bootstrap_resamples: 300,
        ..EvalConfig::default()
    };
    let table = run_ablation(&corpus, &cells, &RunContext::default(), &eval)?;
    let reports: Vec<_> = table.reports().cloned().collect();
    println!();
    print!("{}", results_table(&reports, Some("keywords/25-papers-5y"))?.to_text());
    for f in table.failures() {
        println!("{} failed: {}", f.name, f.error.as_deref().unwrap_or(""));
    }
    Ok(())
}
