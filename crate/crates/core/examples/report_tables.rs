//! Results and distribution tables, a heatmap and the rank histogram as CSV.

use expertmatch::eval::EvalConfig;
use expertmatch::pipeline::{run_method, MethodSpec, RunContext};
use expertmatch::report::{results_table, stats_table, stats_text, write_heatmap_csv, write_rank_distribution_csv};
use expertmatch::tfidf::TfidfOptions;
use expertmatch::load_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus"))?;
    let ctx = RunContext::default();
    let eval = EvalConfig::default();

    let mut matrices = Vec::new();
    let mut reports = Vec::new();
    for spec in [
        MethodSpec::Keywords,
        MethodSpec::Tfidf(TfidfOptions::default()),
        MethodSpec::Tfidf(TfidfOptions { ngram_max: 1, min_df: 1 }),
    ] {
        let (m, r) = run_method(&corpus, &spec, &ctx, &eval)?;
        matrices.push(m);
        reports.push(r);
    }

    let table = results_table(&reports, Some("keywords"))?;
    print!("{}", table.to_text());
    println!();
    print!("{}", stats_text(&stats_table(&matrices)?));
    println!();
    table.write_csv(std::io::stdout())?;

    let out = tempfile::tempdir()?;
    let heat = out.path().join("heatmap.csv");
    write_heatmap_csv(&matrices[1], &corpus.designated_pairs(), std::fs::File::create(&heat)?)?;
    let ranks = out.path().join("ranks.csv");
    write_rank_distribution_csv(&reports, std::fs::File::create(&ranks)?)?;
    let head: Vec<String> = std::fs::read_to_string(&ranks)?.lines().take(4).map(String::from).collect();
    println!("\nranks.csv:\n{}", head.join("\n"));
    Ok(())
}
