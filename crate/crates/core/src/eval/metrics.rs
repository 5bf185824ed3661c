use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::ExpertiseMatrix;
use crate::stats;

/// Where a proposal's designated reviewer lands in that proposal's ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankResult {
    pub proposal_id: String,
    pub designated_reviewer_id: String,
    /// 1-based.
    pub rank: usize,
    pub similarity: f64,
    /// Reviewers sharing the designated reviewer's score, itself included.
    pub tie_count: usize,
}

/// Reviewer column indices of row `proposal`, best first. Equal scores are
/// ordered by ascending reviewer id.
pub fn ranked_reviewers(matrix: &ExpertiseMatrix, proposal: usize) -> Vec<usize> {
    let row = matrix.row(proposal);
    let ids = matrix.reviewer_ids();
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then_with(|| ids[a].cmp(&ids[b])));
    order
}

pub fn designated_rank(
    matrix: &ExpertiseMatrix,
    proposal_id: &str,
    designated_reviewer_id: &str,
) -> Result<RankResult> {
    let p = matrix.proposal_index(proposal_id)?;
    let r = matrix.reviewer_index(designated_reviewer_id)?;
    let order = ranked_reviewers(matrix, p);
    let position = order.iter().position(|&j| j == r).expect("reviewer in its own row");
    let score = matrix.get(p, r);
    let tie_count = matrix.row(p).iter().filter(|&&s| s == score).count();
    Ok(RankResult {
        proposal_id: proposal_id.to_string(),
        designated_reviewer_id: designated_reviewer_id.to_string(),
        rank: position + 1,
        similarity: score,
        tie_count,
    })
}

fn check_ranks(ranks: &[usize]) -> Result<()> {
    if ranks.is_empty() {
        return Err(Error::Empty("no ranks"));
    }
    if ranks.contains(&0) {
        return Err(Error::Validation("ranks are 1-based".into()));
    }
    Ok(())
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[usize]) -> Result<f64> {
    check_ranks(ranks)?;
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Fraction of ranks within the top `k`.
pub fn hit_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    check_ranks(ranks)?;
    if k == 0 {
        return Err(Error::Config("hit@k needs k >= 1".into()));
    }
    Ok(ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64)
}

pub fn median_rank(ranks: &[usize]) -> Result<f64> {
    check_ranks(ranks)?;
    let v: Vec<f64> = ranks.iter().map(|&r| r as f64).collect();
    Ok(stats::median(&v))
}

/// Standardized score of the designated reviewer against every reviewer's
/// score for the proposal (population standard deviation). `None` when all
/// scores are equal.
pub fn zscore(
    matrix: &ExpertiseMatrix,
    proposal_id: &str,
    designated_reviewer_id: &str,
) -> Result<Option<f64>> {
    let p = matrix.proposal_index(proposal_id)?;
    let r = matrix.reviewer_index(designated_reviewer_id)?;
    let row = matrix.row(p);
    if row.len() < 2 {
        return Err(Error::Validation("z-score needs at least two reviewers".into()));
    }
    let sigma = stats::population_std(row);
    if sigma == 0.0 {
        return Ok(None);
    }
    Ok(Some((row[r] - stats::mean(row)) / sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::Method;

    fn matrix(rows: &[&[f64]], reviewer_ids: &[&str]) -> ExpertiseMatrix {
        ExpertiseMatrix::new(
            Method::Embedding,
            "t",
            (0..rows.len()).map(|i| format!("P{i}")).collect(),
            reviewer_ids.iter().map(|s| s.to_string()).collect(),
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn strict_best_is_rank_one() {
        let m = matrix(&[&[0.1, 0.9, 0.3]], &["a", "b", "c"]);
        let r = designated_rank(&m, "P0", "b").unwrap();
        assert_eq!((r.rank, r.tie_count), (1, 1));
    }

    #[test]
    fn full_tie_orders_by_id() {
        let m = matrix(&[&[0.5; 5]], &["e", "b", "a", "d", "c"]);
        let r = designated_rank(&m, "P0", "e").unwrap();
        assert_eq!((r.rank, r.tie_count), (5, 5));
        assert_eq!(designated_rank(&m, "P0", "a").unwrap().rank, 1);
    }

    #[test]
    fn tie_with_smaller_id_wins() {
        let m = matrix(&[&[0.9, 0.8, 0.8, 0.1]], &["w", "a", "z", "y"]);
        let r = designated_rank(&m, "P0", "a").unwrap();
        assert_eq!((r.rank, r.tie_count), (2, 2));
        assert_eq!(designated_rank(&m, "P0", "z").unwrap().rank, 3);
    }

    #[test]
    fn unknown_ids_error() {
        let m = matrix(&[&[0.1, 0.2]], &["a", "b"]);
        assert!(designated_rank(&m, "P9", "a").is_err());
        assert!(designated_rank(&m, "P0", "q").is_err());
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(mrr(&[1, 1, 1]).unwrap(), 1.0);
        assert_eq!(mrr(&[2, 4]).unwrap(), 0.375);
        assert_eq!(hit_at_k(&[1, 1], 25).unwrap(), 1.0);
        assert_eq!(hit_at_k(&[10, 30], 25).unwrap(), 0.5);
        assert_eq!(median_rank(&[4, 1, 9, 2]).unwrap(), 3.0);
        assert!(mrr(&[]).is_err());
        assert!(hit_at_k(&[], 3).is_err());
        assert!(hit_at_k(&[1], 0).is_err());
    }

    #[test]
    fn zscore_examples() {
        let m = matrix(&[&[3.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], &[0.2; 4]], &["a", "b", "c", "d"]);
        let z = zscore(&m, "P0", "a").unwrap().unwrap();
        assert!((z - 1.5 / 0.75f64.sqrt()).abs() < 1e-12);
        assert!((z - 1.7321).abs() < 1e-4);
        assert_eq!(zscore(&m, "P1", "a").unwrap(), None);

        let m = matrix(&[&[0.0, 0.5, 1.0]], &["a", "b", "c"]);
        assert_eq!(zscore(&m, "P0", "b").unwrap(), Some(0.0));
    }
}
