//! Designated-reviewer ranks, label-based metrics, bootstrap intervals and a
//! paired significance test between two methods.

use expertmatch::eval::{compare, evaluate, EvalConfig};
use expertmatch::pipeline::{expertise_matrix, MethodSpec, RunContext};
use expertmatch::tfidf::TfidfOptions;
use expertmatch::load_corpus;

fn main() -> expertmatch::Result<()> {
    let corpus = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus"))?;
    let ctx = RunContext::default();
    let eval = EvalConfig::default();
    let pairs = corpus.designated_pairs();

    let mut reports = Vec::new();
    for spec in [MethodSpec::Keywords, MethodSpec::Tfidf(TfidfOptions::default())] {
        let m = expertise_matrix(&corpus, &spec, &ctx)?;
        let r = evaluate(&m, &pairs, &corpus.labels, &eval)?;
        let s = &r.summary;
        println!("{}", r.label);
        for metric in [&s.median_rank, &s.mrr, &s.hit_at_k] {
            println!("  {:<12} {:.3}  95% CI [{:.3}, {:.3}]", metric.metric, metric.point, metric.ci_low, metric.ci_high);
        }
        for metric in [&s.zscore, &s.ndcg].into_iter().flatten() {
            println!("  {:<12} {:.3}  95% CI [{:.3}, {:.3}]", metric.metric, metric.point, metric.ci_low, metric.ci_high);
        }
        println!("  undefined z-scores {}, degenerate NDCG {}", r.undefined_zscores, r.degenerate_ndcg().len());
        reports.push(r);
    }

    let worst = reports[0].ranks.iter().max_by_key(|r| r.rank).unwrap();
    println!("worst keyword rank: {} for {} x {}", worst.rank, worst.proposal_id, worst.designated_reviewer_id);

    let c = compare(&reports[1], &reports[0]);
    match &c.reciprocal_rank {
        Ok(w) => println!("{} vs {}: W = {}, n = {}, p = {:.4} {}", c.candidate, c.baseline, w.statistic, w.n, w.p_value, c.rank_marker()),
        Err(e) => println!("rank test undefined: {e}"),
    }
    Ok(())
}
