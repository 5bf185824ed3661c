//! Grids of named configurations (publication query × method × parameters),
//! each rebuilt and evaluated from scratch.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{Corpus, QueryConfig};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, EvalReport};
use crate::pipeline::{run_method, MethodSpec, RunContext};
use crate::similarity::Method;

/// One named configuration as written in a grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub name: String,
    #[serde(default)]
    pub query_config: QueryConfig,
    pub method: Method,
    #[serde(default)]
    pub method_params: serde_json::Value,
}

impl GridCell {
    pub fn new(name: impl Into<String>, query_config: QueryConfig, method: Method, method_params: serde_json::Value) -> Self {
        Self {
            name: name.into(),
            query_config,
            method,
            method_params,
        }
    }
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Vec<GridCell>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cells: Vec<GridCell> =
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), "root", e))?;
    validate_grid(&cells)?;
    Ok(cells)
}

pub fn validate_grid(cells: &[GridCell]) -> Result<()> {
    if cells.is_empty() {
        return Err(Error::Empty("ablation grid"));
    }
    let mut names = HashSet::new();
    for c in cells {
        if !names.insert(c.name.as_str()) {
            return Err(Error::Validation(format!("duplicate grid cell name `{}`", c.name)));
        }
    }
    Ok(())
}

/// The publication-query variants: the default profile plus the three
/// alternative windows.
pub fn query_variants() -> Vec<(&'static str, QueryConfig)> {
    vec![
        ("25-papers-5y", QueryConfig::new(25, 5, false)),
        ("12-papers-2y", QueryConfig::new(12, 2, false)),
        ("50-papers-10y", QueryConfig::new(50, 10, false)),
        ("10-first-author-5y", QueryConfig::new(10, 5, true)),
    ]
}

/// Every query variant crossed with every `(method, params)` entry.
pub fn query_grid(methods: &[(Method, serde_json::Value)]) -> Vec<GridCell> {
    let mut out = Vec::new();
    for (qname, q) in query_variants() {
        for (m, params) in methods {
            out.push(GridCell::new(format!("{m}/{qname}"), q, *m, params.clone()));
        }
    }
    out
}

/// LDA at each topic count under the default query.
pub fn topic_grid(topic_counts: &[usize], base_params: &serde_json::Value) -> Vec<GridCell> {
    topic_counts
        .iter()
        .map(|&k| {
            let mut params = base_params.clone();
            if !params.is_object() {
                params = json!({});
            }
            params["topics"] = json!(k);
            GridCell::new(format!("lda/k{k}"), QueryConfig::default(), Method::Lda, params)
        })
        .collect()
}

/// Mean and max pooling of each embedding file under the default query.
pub fn pooling_grid(files: &[PathBuf]) -> Vec<GridCell> {
    let mut out = Vec::new();
    for f in files {
        let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for pooling in ["mean", "max"] {
            out.push(GridCell::new(
                format!("embedding/{stem}/{pooling}"),
                QueryConfig::default(),
                Method::Embedding,
                json!({ "path": f, "pooling": pooling }),
            ));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub method: Method,
    pub seed: u64,
    pub query: QueryConfig,
    pub spec: Option<MethodSpec>,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub seed: u64,
    pub eval: EvalConfig,
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::parse(path.display().to_string(), "root", e))
    }

    pub fn reports(&self) -> impl Iterator<Item = &EvalReport> {
        self.rows.iter().filter_map(|r| r.report.as_ref())
    }

    pub fn failures(&self) -> impl Iterator<Item = &AblationRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }
}

/// Run settings for `cell`: its own query and a seed derived from the global
/// seed and the cell name. Evaluation uses the same derived seed.
pub fn cell_context(cell: &GridCell, base: &RunContext, eval: &EvalConfig) -> (RunContext, EvalConfig) {
    let seed = derive_seed(base.seed, &cell.name);
    (
        RunContext {
            query: cell.query_config,
            seed,
            stopwords: base.stopwords.clone(),
        },
        EvalConfig { seed, ..eval.clone() },
    )
}

/// Evaluates every cell independently. A failing cell yields a row carrying
/// its error; the rest still run.
pub fn run_ablation(corpus: &Corpus, cells: &[GridCell], base: &RunContext, eval: &EvalConfig) -> Result<AblationTable> {
    validate_grid(cells)?;
    let rows = cells
        .par_iter()
        .map(|cell| {
            let (ctx, eval) = cell_context(cell, base, eval);
            let spec = MethodSpec::from_parts(cell.method, &cell.method_params);
            let outcome = match &spec {
                Ok(spec) => run_method(corpus, spec, &ctx, &eval).map(|(_, mut report)| {
                    report.label = cell.name.clone();
                    report
                }),
                Err(e) => Err(Error::Config(e.to_string())),
            };
            if let Err(e) = &outcome {
                log::warn!("grid cell `{}` failed: {e}", cell.name);
            }
            let (report, error) = match outcome {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            };
            AblationRow {
                name: cell.name.clone(),
                method: cell.method,
                seed: ctx.seed,
                query: cell.query_config,
                spec: spec.ok(),
                report,
                error,
            }
        })
        .collect();
    Ok(AblationTable {
        seed: base.seed,
        eval: eval.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::tiny;

    fn base() -> (RunContext, EvalConfig) {
        let ctx = RunContext {
            seed: 11,
            ..RunContext::default()
        };
        let eval = EvalConfig {
            bootstrap_resamples: 200,
            ..EvalConfig::default()
        };
        (ctx, eval)
    }

    #[test]
    fn single_cell_matches_standalone_run() {
        let c = tiny();
        let (ctx, eval) = base();
        let cell = GridCell::new("tfidf-default", QueryConfig::default(), Method::Tfidf, json!({}));
        let table = run_ablation(&c, std::slice::from_ref(&cell), &ctx, &eval).unwrap();
        assert_eq!(table.rows.len(), 1);

        let (cctx, ceval) = cell_context(&cell, &ctx, &eval);
        let spec = MethodSpec::from_parts(Method::Tfidf, &json!({})).unwrap();
        let (_, mut standalone) = run_method(&c, &spec, &cctx, &ceval).unwrap();
        standalone.label = cell.name.clone();
        assert_eq!(table.rows[0].report.as_ref().unwrap(), &standalone);
    }

    #[test]
    fn topic_sweep_rows_keep_their_k() {
        let c = tiny();
        let (ctx, eval) = base();
        let cells = topic_grid(&[2, 3], &json!({"iterations": 40, "burn_in": 20}));
        let table = run_ablation(&c, &cells, &ctx, &eval).unwrap();
        let ks: Vec<usize> = table
            .rows
            .iter()
            .map(|r| match &r.spec {
                Some(MethodSpec::Lda(cfg)) => cfg.topics,
                other => panic!("{other:?}"),
            })
            .collect();
        assert_eq!(ks, vec![2, 3]);
        assert_ne!(table.rows[0].seed, table.rows[1].seed);
    }

    #[test]
    fn failing_cell_is_recorded() {
        let c = tiny();
        let (ctx, eval) = base();
        let cells = vec![
            GridCell::new("ok", QueryConfig::default(), Method::Keywords, json!(null)),
            GridCell::new("bad", QueryConfig::default(), Method::Embedding, json!({"path": "/nonexistent.jsonl"})),
        ];
        let table = run_ablation(&c, &cells, &ctx, &eval).unwrap();
        assert!(table.rows[0].report.is_some());
        assert!(table.rows[1].error.as_deref().unwrap().contains("nonexistent"));
        assert_eq!(table.failures().count(), 1);
    }

    #[test]
    fn duplicate_names_rejected() {
        let cell = GridCell::new("a", QueryConfig::default(), Method::Keywords, json!({}));
        assert!(validate_grid(&[cell.clone(), cell]).is_err());
        assert_eq!(query_grid(&[(Method::Tfidf, json!({}))]).len(), 4);
    }
}
