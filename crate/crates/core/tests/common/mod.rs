//! Shared fixtures and independent oracles for the integration suites.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use expertmatch::corpus::Grade;
use expertmatch::eval::Gains;
use expertmatch::{ExpertiseMatrix, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

pub fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

/// Random proposals × reviewers matrix with one designated reviewer per
/// proposal. Scores are drawn from a few levels so ties are common.
pub fn random_case(rng: &mut ChaCha8Rng) -> (ExpertiseMatrix, Vec<(String, String)>) {
    let np = rng.random_range(1..=20);
    let nr = rng.random_range(1..=20);
    let levels = rng.random_range(2..=8);
    let scores: Vec<f64> = (0..np * nr)
        .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
        .collect();
    let pids = ids("P", np);
    // shuffled reviewer ids so column order differs from id order
    let mut rids = ids("R", nr);
    for i in (1..nr).rev() {
        rids.swap(i, rng.random_range(0..=i));
    }
    let designated = pids
        .iter()
        .map(|p| (p.clone(), rids[rng.random_range(0..nr)].clone()))
        .collect();
    let m = ExpertiseMatrix::new(Method::Tfidf, "random", pids, rids, scores).unwrap();
    (m, designated)
}

/// Rank by direct count: reviewers scoring strictly higher, plus tied
/// reviewers with a smaller id, plus one.
pub fn scan_rank(m: &ExpertiseMatrix, pid: &str, rid: &str) -> usize {
    let p = m.proposal_ids().iter().position(|x| x == pid).unwrap();
    let r = m.reviewer_ids().iter().position(|x| x == rid).unwrap();
    let s = m.get(p, r);
    let mut rank = 1;
    for j in 0..m.n_reviewers() {
        let o = m.get(p, j);
        if o > s || (o == s && m.reviewer_ids()[j] < m.reviewer_ids()[r]) {
            rank += 1;
        }
    }
    rank
}

pub fn scan_mrr(ranks: &[usize]) -> f64 {
    let mut total = 0.0;
    for &r in ranks {
        total += 1.0 / r as f64;
    }
    total / ranks.len() as f64
}

pub fn scan_hit(ranks: &[usize], k: usize) -> f64 {
    let mut hits = 0;
    for &r in ranks {
        if r <= k {
            hits += 1;
        }
    }
    hits as f64 / ranks.len() as f64
}

pub fn scan_median(ranks: &[usize]) -> f64 {
    let mut v = ranks.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn plain_dcg(gains: &[f64]) -> f64 {
    gains
        .iter()
        .enumerate()
        .map(|(i, g)| g / (i as f64 + 2.0).log2())
        .sum()
}

/// NDCG whose ideal DCG is the best DCG over every ordering of the list.
pub fn enumerated_ndcg(grades: &[Grade], gains: &Gains) -> (f64, bool) {
    let g: Vec<f64> = grades.iter().map(|&x| gains.gain(x)).collect();
    let best = permutations(g.len())
        .iter()
        .map(|p| plain_dcg(&p.iter().map(|&i| g[i]).collect::<Vec<_>>()))
        .fold(0.0f64, f64::max);
    if best == 0.0 {
        (0.0, true)
    } else {
        (plain_dcg(&g) / best, false)
    }
}

/// Two-sided exact signed-rank p-value by listing all 2^n sign patterns.
pub fn enumerated_wilcoxon_p(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = d.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[idx[j + 1]].abs() == d[idx[i]].abs() {
            j += 1;
        }
        for k in i..=j {
            ranks[idx[k]] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    let observed: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

/// Deterministic fake completion: a score derived from the prompt bytes.
pub fn hashed_score(text: &str) -> String {
    let mut h: u64 = 1469598103934665603;
    for b in text.bytes() {
        h = (h ^ b as u64).wrapping_mul(1099511628211);
    }
    format!("{}", h % 101)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
