//! Retrieval metrics against proxy gold labels (the designated reviewer),
//! NDCG against self-reported labels, bootstrap intervals and paired
//! significance tests.

mod bootstrap;
mod metrics;
mod ndcg;
mod wilcoxon;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use bootstrap::{bootstrap_ci, MetricSummary, Statistic};
pub use metrics::{designated_rank, hit_at_k, median_rank, mrr, ranked_reviewers, zscore, RankResult};
pub use ndcg::{dcg, ndcg_at_k, Gains, Ndcg};
pub use wilcoxon::{
    average_ranks, significance_marker, wilcoxon_signed_rank, PValueMethod, WilcoxonResult,
    EXACT_MAX_N, MIN_NONZERO_PAIRS,
};

use crate::corpus::{Grade, SelfReportedLabel};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::similarity::{ExpertiseMatrix, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Cutoff for Hit@k.
    pub k: usize,
    pub gains: Gains,
    pub bootstrap_resamples: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 25,
            gains: Gains::default(),
            bootstrap_resamples: 10_000,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        self.gains.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairZScore {
    pub proposal_id: String,
    pub reviewer_id: String,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalNdcg {
    pub proposal_id: String,
    pub value: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    /// Bootstrapped median of designated-reviewer ranks.
    pub median_rank: MetricSummary,
    pub mrr: MetricSummary,
    pub hit_at_k: MetricSummary,
    /// Mean z-score over pairs where it is defined.
    pub zscore: Option<MetricSummary>,
    pub ndcg: Option<MetricSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    pub label: String,
    pub matrix_provenance: serde_json::Value,
    pub config: EvalConfig,
    pub ranks: Vec<RankResult>,
    pub zscores: Vec<PairZScore>,
    /// Pairs whose proposal row has zero spread.
    pub undefined_zscores: usize,
    pub ndcg: Vec<ProposalNdcg>,
    pub summary: EvalSummary,
}

impl EvalReport {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), "root", e))
    }

    pub fn rank_values(&self) -> Vec<usize> {
        self.ranks.iter().map(|r| r.rank).collect()
    }

    pub fn degenerate_ndcg(&self) -> Vec<&str> {
        self.ndcg
            .iter()
            .filter(|n| n.degenerate)
            .map(|n| n.proposal_id.as_str())
            .collect()
    }
}

/// Labeled reviewers' grades for `proposal_id`, in descending score order
/// (ties by ascending reviewer id). Reviewers absent from the matrix are skipped.
pub fn ordered_grades(
    matrix: &ExpertiseMatrix,
    proposal_id: &str,
    labels: &[&SelfReportedLabel],
) -> Result<Vec<Grade>> {
    let p = matrix.proposal_index(proposal_id)?;
    let grade_of: HashMap<usize, Grade> = labels
        .iter()
        .filter_map(|l| matrix.reviewer_index(&l.reviewer_id).ok().map(|j| (j, l.grade)))
        .collect();
    Ok(ranked_reviewers(matrix, p)
        .into_iter()
        .filter_map(|j| grade_of.get(&j).copied())
        .collect())
}

/// Evaluates `matrix` on every designated (proposal, reviewer) pair and on the
/// self-reported `labels`. Each designated pair counts independently.
pub fn evaluate(
    matrix: &ExpertiseMatrix,
    designated: &[(String, String)],
    labels: &[SelfReportedLabel],
    config: &EvalConfig,
) -> Result<EvalReport> {
    config.validate()?;
    if designated.is_empty() {
        return Err(Error::Empty("no designated pairs to evaluate"));
    }
    let mut ranks = Vec::with_capacity(designated.len());
    let mut zscores = Vec::with_capacity(designated.len());
    for (pid, rid) in designated {
        ranks.push(designated_rank(matrix, pid, rid)?);
        zscores.push(PairZScore {
            proposal_id: pid.clone(),
            reviewer_id: rid.clone(),
            z: zscore(matrix, pid, rid)?,
        });
    }

    let mut by_proposal: BTreeMap<&str, Vec<&SelfReportedLabel>> = BTreeMap::new();
    for l in labels {
        by_proposal.entry(l.proposal_id.as_str()).or_default().push(l);
    }
    let mut ndcg = Vec::new();
    for (pid, ls) in by_proposal {
        if matrix.proposal_index(pid).is_err() {
            continue;
        }
        let grades = ordered_grades(matrix, pid, &ls)?;
        if grades.is_empty() {
            continue;
        }
        let n = ndcg_at_k(&grades, &config.gains);
        ndcg.push(ProposalNdcg {
            proposal_id: pid.to_string(),
            value: n.value,
            degenerate: n.degenerate,
        });
    }

    let n = config.bootstrap_resamples;
    let seed = |name: &str| derive_seed(config.seed, name);
    let rank_f: Vec<f64> = ranks.iter().map(|r| r.rank as f64).collect();
    let rr: Vec<f64> = ranks.iter().map(|r| 1.0 / r.rank as f64).collect();
    let hits: Vec<f64> = ranks
        .iter()
        .map(|r| if r.rank <= config.k { 1.0 } else { 0.0 })
        .collect();
    let defined_z: Vec<f64> = zscores.iter().filter_map(|z| z.z).collect();
    let ndcg_values: Vec<f64> = ndcg.iter().map(|n| n.value).collect();

    let summary = EvalSummary {
        median_rank: bootstrap_ci("median_rank", &rank_f, Statistic::Median, n, seed("median_rank"))?,
        mrr: bootstrap_ci("mrr", &rr, Statistic::Mean, n, seed("mrr"))?,
        hit_at_k: bootstrap_ci(&format!("hit@{}", config.k), &hits, Statistic::Mean, n, seed("hit_at_k"))?,
        zscore: if defined_z.is_empty() {
            None
        } else {
            Some(bootstrap_ci("zscore", &defined_z, Statistic::Mean, n, seed("zscore"))?)
        },
        ndcg: if ndcg_values.is_empty() {
            None
        } else {
            Some(bootstrap_ci("ndcg", &ndcg_values, Statistic::Mean, n, seed("ndcg"))?)
        },
    };

    Ok(EvalReport {
        method: matrix.method(),
        label: matrix.label().to_string(),
        matrix_provenance: matrix.header.provenance.clone(),
        config: config.clone(),
        undefined_zscores: zscores.iter().filter(|z| z.z.is_none()).count(),
        ranks,
        zscores,
        ndcg,
        summary,
    })
}

/// Paired significance of a candidate against a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub candidate: String,
    pub baseline: String,
    /// Per-pair reciprocal ranks; backs the MRR and median-rank markers.
    pub reciprocal_rank: std::result::Result<WilcoxonResult, String>,
    /// Per-proposal NDCG.
    pub ndcg: std::result::Result<WilcoxonResult, String>,
}

impl Comparison {
    pub fn rank_marker(&self) -> &'static str {
        self.reciprocal_rank
            .as_ref()
            .map(|w| significance_marker(w.p_value))
            .unwrap_or("")
    }

    pub fn ndcg_marker(&self) -> &'static str {
        self.ndcg
            .as_ref()
            .map(|w| significance_marker(w.p_value))
            .unwrap_or("")
    }
}

pub fn compare(candidate: &EvalReport, baseline: &EvalReport) -> Comparison {
    let base_rr: HashMap<(&str, &str), f64> = baseline
        .ranks
        .iter()
        .map(|r| ((r.proposal_id.as_str(), r.designated_reviewer_id.as_str()), 1.0 / r.rank as f64))
        .collect();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for r in &candidate.ranks {
        if let Some(&x) = base_rr.get(&(r.proposal_id.as_str(), r.designated_reviewer_id.as_str())) {
            a.push(1.0 / r.rank as f64);
            b.push(x);
        }
    }
    let reciprocal_rank = wilcoxon_signed_rank(&a, &b).map_err(|e| e.to_string());

    let base_ndcg: HashMap<&str, f64> = baseline
        .ndcg
        .iter()
        .map(|n| (n.proposal_id.as_str(), n.value))
        .collect();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for n in &candidate.ndcg {
        if let Some(&x) = base_ndcg.get(n.proposal_id.as_str()) {
            a.push(n.value);
            b.push(x);
        }
    }
    let ndcg = wilcoxon_signed_rank(&a, &b).map_err(|e| e.to_string());

    Comparison {
        candidate: candidate.label.clone(),
        baseline: baseline.label.clone(),
        reciprocal_rank,
        ndcg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (ExpertiseMatrix, Vec<(String, String)>, Vec<SelfReportedLabel>) {
        let m = ExpertiseMatrix::new(
            Method::Tfidf,
            "tfidf",
            vec!["P1".into(), "P2".into()],
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.9, 0.2, 0.1, 0.3, 0.3, 0.3],
        )
        .unwrap();
        let pairs = vec![("P1".into(), "a".into()), ("P2".into(), "c".into())];
        let label = |p: &str, r: &str, g| SelfReportedLabel {
            proposal_id: p.into(),
            reviewer_id: r.into(),
            grade: g,
        };
        let labels = vec![
            label("P1", "b", Grade::NonExpert),
            label("P1", "c", Grade::Expert),
            label("P2", "a", Grade::NonExpert),
            label("P2", "b", Grade::NonExpert),
        ];
        (m, pairs, labels)
    }

    #[test]
    fn evaluate_fixture() {
        let (m, pairs, labels) = fixture();
        let cfg = EvalConfig {
            k: 1,
            bootstrap_resamples: 200,
            ..EvalConfig::default()
        };
        let r = evaluate(&m, &pairs, &labels, &cfg).unwrap();
        assert_eq!(r.rank_values(), vec![1, 3]);
        assert_eq!(r.summary.mrr.point, (1.0 + 1.0 / 3.0) / 2.0);
        assert_eq!(r.summary.hit_at_k.point, 0.5);
        assert_eq!(r.summary.median_rank.point, 2.0);
        assert_eq!(r.undefined_zscores, 1);
        assert_eq!(r.ndcg.len(), 2);
        // P1: b (0.2) ahead of c (0.1) puts the expert second
        assert!((r.ndcg[0].value - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert!(r.ndcg[1].degenerate);
        assert_eq!(r.degenerate_ndcg(), vec!["P2"]);
    }

    #[test]
    fn report_round_trips_through_json() {
        let (m, pairs, labels) = fixture();
        let cfg = EvalConfig { bootstrap_resamples: 50, ..EvalConfig::default() };
        let r = evaluate(&m, &pairs, &labels, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        r.save(&path).unwrap();
        assert_eq!(EvalReport::load(&path).unwrap(), r);
    }

    #[test]
    fn comparison_with_too_few_pairs_is_reported() {
        let (m, pairs, labels) = fixture();
        let cfg = EvalConfig { bootstrap_resamples: 50, ..EvalConfig::default() };
        let r = evaluate(&m, &pairs, &labels, &cfg).unwrap();
        let c = compare(&r, &r);
        assert!(c.reciprocal_rank.is_err());
        assert_eq!(c.rank_marker(), "");
    }
}
