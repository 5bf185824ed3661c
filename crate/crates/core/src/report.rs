//! Result tables, matrix distribution tables and plotting CSVs.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{compare, Comparison, EvalReport, MetricSummary};
use crate::similarity::{matrix_stats, ExpertiseMatrix, MatrixStats, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "text" | "txt" => Ok(Format::Text),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub method: Method,
    pub n_pairs: usize,
    pub median_rank: MetricSummary,
    pub mrr: MetricSummary,
    pub hit_at_k: MetricSummary,
    pub zscore: Option<MetricSummary>,
    pub ndcg: Option<MetricSummary>,
    pub undefined_zscores: usize,
    pub degenerate_ndcg: usize,
    /// Against the baseline; `None` for the baseline itself or without one.
    pub comparison: Option<Comparison>,
}

impl TableRow {
    fn rank_marker(&self) -> &'static str {
        self.comparison.as_ref().map_or("", Comparison::rank_marker)
    }

    fn ndcg_marker(&self) -> &'static str {
        self.comparison.as_ref().map_or("", Comparison::ndcg_marker)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub k: usize,
    pub baseline: Option<String>,
    pub rows: Vec<TableRow>,
}

/// One row per report. With a baseline label, every other row is tested
/// against it with paired Wilcoxon signed-rank tests.
pub fn results_table(reports: &[EvalReport], baseline: Option<&str>) -> Result<ResultsTable> {
    if reports.is_empty() {
        return Err(Error::Empty("no evaluation reports"));
    }
    let base = baseline
        .map(|b| {
            reports.iter().find(|r| r.label == b).ok_or_else(|| Error::Unknown {
                kind: "baseline",
                id: b.to_string(),
            })
        })
        .transpose()?;
    let rows = reports
        .iter()
        .map(|r| TableRow {
            label: r.label.clone(),
            method: r.method,
            n_pairs: r.ranks.len(),
            median_rank: r.summary.median_rank.clone(),
            mrr: r.summary.mrr.clone(),
            hit_at_k: r.summary.hit_at_k.clone(),
            zscore: r.summary.zscore.clone(),
            ndcg: r.summary.ndcg.clone(),
            undefined_zscores: r.undefined_zscores,
            degenerate_ndcg: r.degenerate_ndcg().len(),
            comparison: base.filter(|b| b.label != r.label).map(|b| compare(r, b)),
        })
        .collect();
    Ok(ResultsTable {
        k: reports[0].config.k,
        baseline: baseline.map(str::to_string),
        rows,
    })
}

fn cell(m: Option<&MetricSummary>, decimals: usize, marker: &str) -> String {
    match m {
        Some(m) => format!("{:.*} ± {:.*}{marker}", decimals, m.point, decimals, m.half_width()),
        None => "n/a".into(),
    }
}

fn p_value(r: Option<&std::result::Result<crate::eval::WilcoxonResult, String>>) -> String {
    match r {
        Some(Ok(w)) => format!("{:.6}", w.p_value),
        _ => String::new(),
    }
}

impl ResultsTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::parse("results csv", "write", e);
        let hit = format!("hit_at_{}", self.k);
        w.write_record([
            "label",
            "method",
            "n_pairs",
            "median_rank",
            "median_rank_hw",
            "mrr",
            "mrr_hw",
            hit.as_str(),
            &format!("{hit}_hw"),
            "zscore",
            "zscore_hw",
            "ndcg",
            "ndcg_hw",
            "rank_marker",
            "rank_p",
            "ndcg_marker",
            "ndcg_p",
            "undefined_zscores",
            "degenerate_ndcg",
        ])
        .map_err(err)?;
        let num = |m: Option<&MetricSummary>| -> [String; 2] {
            m.map_or([String::new(), String::new()], |m| [m.point.to_string(), m.half_width().to_string()])
        };
        for r in &self.rows {
            let mut rec = vec![r.label.clone(), r.method.to_string(), r.n_pairs.to_string()];
            for m in [Some(&r.median_rank), Some(&r.mrr), Some(&r.hit_at_k), r.zscore.as_ref(), r.ndcg.as_ref()] {
                rec.extend(num(m));
            }
            rec.push(r.rank_marker().into());
            rec.push(p_value(r.comparison.as_ref().map(|c| &c.reciprocal_rank)));
            rec.push(r.ndcg_marker().into());
            rec.push(p_value(r.comparison.as_ref().map(|c| &c.ndcg)));
            rec.push(r.undefined_zscores.to_string());
            rec.push(r.degenerate_ndcg.to_string());
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("results csv", e))
    }

    /// Aligned plain-text table, values as `point ± CI half-width`.
    pub fn to_text(&self) -> String {
        let head = [
            "Method".to_string(),
            "Median Rank".into(),
            "MRR".into(),
            format!("Hit@{}", self.k),
            "z-score".into(),
            "NDCG".into(),
        ];
        let mut lines: Vec<Vec<String>> = vec![head.to_vec()];
        // keep columns aligned whether or not a row carries a marker
        let pad = |m: &'static str| if self.baseline.is_some() && m.is_empty() { " " } else { m };
        for r in &self.rows {
            let mark = pad(r.rank_marker());
            lines.push(vec![
                r.label.clone(),
                cell(Some(&r.median_rank), 1, mark),
                cell(Some(&r.mrr), 3, mark),
                cell(Some(&r.hit_at_k), 3, mark),
                cell(r.zscore.as_ref(), 2, ""),
                cell(r.ndcg.as_ref(), 3, pad(r.ndcg_marker())),
            ]);
        }
        let widths: Vec<usize> = (0..head.len())
            .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, l) in lines.iter().enumerate() {
            let row: Vec<String> = l
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, &w))| {
                    let pad = w - s.chars().count();
                    if c == 0 {
                        format!("{s}{}", " ".repeat(pad))
                    } else {
                        format!("{}{s}", " ".repeat(pad))
                    }
                })
                .collect();
            writeln!(out, "{}", row.join("  ")).unwrap();
            if i == 0 {
                let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                writeln!(out, "{}", "-".repeat(total)).unwrap();
            }
        }
        if let Some(b) = &self.baseline {
            writeln!(out, "\n* p < 0.05, † p < 0.01 (Wilcoxon signed-rank against {b})").unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub label: String,
    pub method: Method,
    pub stats: MatrixStats,
}

/// Distribution summary of each matrix, zero threshold chosen per method.
pub fn stats_table(matrices: &[ExpertiseMatrix]) -> Result<Vec<StatsRow>> {
    matrices
        .iter()
        .map(|m| {
            Ok(StatsRow {
                label: m.label().to_string(),
                method: m.method(),
                stats: matrix_stats(m, m.method().zero_threshold())?,
            })
        })
        .collect()
}

pub fn write_stats_csv<W: Write>(rows: &[StatsRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::parse("stats csv", "write", e);
    w.write_record(["label", "method", "pct_zeros", "min", "q25", "median", "q75", "max"])
        .map_err(err)?;
    for r in rows {
        let s = &r.stats;
        let mut rec = vec![r.label.clone(), r.method.to_string()];
        rec.extend([s.pct_zeros, s.min, s.q25, s.median, s.q75, s.max].map(|x| x.to_string()));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("stats csv", e))
}

pub fn stats_text(rows: &[StatsRow]) -> String {
    let mut out = format!(
        "{:<20} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "Method", "% zeros", "min", "25%", "median", "75%", "max"
    );
    for r in rows {
        let s = &r.stats;
        writeln!(
            out,
            "{:<20} {:>8.2} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            r.label, s.pct_zeros, s.min, s.q25, s.median, s.q75, s.max
        )
        .unwrap();
    }
    out
}

/// Matrix CSV with reviewer columns reordered so that the designated
/// reviewers of the proposals come first, in proposal order; a perfect
/// method then shows a bright diagonal.
pub fn write_heatmap_csv<W: Write>(
    matrix: &ExpertiseMatrix,
    designated: &[(String, String)],
    out: W,
) -> Result<()> {
    let designated_of: HashMap<&str, &str> = designated
        .iter()
        .map(|(p, r)| (p.as_str(), r.as_str()))
        .collect();
    let mut order: Vec<usize> = Vec::with_capacity(matrix.n_reviewers());
    let mut placed = vec![false; matrix.n_reviewers()];
    for pid in matrix.proposal_ids() {
        if let Some(r) = designated_of.get(pid.as_str()) {
            let j = matrix.reviewer_index(r)?;
            if !placed[j] {
                placed[j] = true;
                order.push(j);
            }
        }
    }
    order.extend((0..matrix.n_reviewers()).filter(|&j| !placed[j]));

    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::parse("heatmap csv", "write", e);
    let mut head = vec!["proposal_id".to_string()];
    head.extend(order.iter().map(|&j| matrix.reviewer_ids()[j].clone()));
    w.write_record(&head).map_err(err)?;
    for (i, pid) in matrix.proposal_ids().iter().enumerate() {
        let row = matrix.row(i);
        let mut rec = vec![pid.clone()];
        rec.extend(order.iter().map(|&j| row[j].to_string()));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("heatmap csv", e))
}

/// Long-format designated-reviewer ranks of every report, for rank
/// distribution plots.
pub fn write_rank_distribution_csv<W: Write>(reports: &[EvalReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::parse("rank csv", "write", e);
    w.write_record(["label", "method", "proposal_id", "reviewer_id", "rank", "tie_count", "similarity"])
        .map_err(err)?;
    for r in reports {
        for x in &r.ranks {
            w.write_record([
                r.label.clone(),
                r.method.to_string(),
                x.proposal_id.clone(),
                x.designated_reviewer_id.clone(),
                x.rank.to_string(),
                x.tie_count.to_string(),
                x.similarity.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io("rank csv", e))
}
