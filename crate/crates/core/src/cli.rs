//! Command-line interface. [`run`] takes the full argument vector and returns
//! the process exit code, so it can be driven from tests.
//!
//! Settings resolve in three layers: built-in defaults, then the optional
//! `expertmatch.toml`, then flags.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::ablation::{load_grid, run_ablation, AblationTable};
use crate::corpus::{load_corpus, read_labels, Corpus, QueryConfig};
use crate::embedding::import_embeddings;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, EvalReport};
use crate::pipeline::{build_representation, expertise_matrix, merge_params, score_representation, MethodSpec, Representation, RunContext};
use crate::report::{results_table, stats_table, stats_text, write_heatmap_csv, write_rank_distribution_csv, write_stats_csv, Format};
use crate::similarity::{ExpertiseMatrix, Method};
use crate::synth::{generate_synthetic_corpus, self_retrieval_corpus, AdsClient, SynthConfig, SynthSource, DEFAULT_ADS_ENDPOINT};

pub const CONFIG_FILE: &str = "expertmatch.toml";
pub const PROVENANCE_FILE: &str = "provenance.json";

#[derive(Parser, Debug)]
#[command(name = "expertmatch", version, about = "Expert reviewer retrieval benchmark")]
struct Cli {
    /// Settings file; `expertmatch.toml` in the working directory is read when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a corpus directory and summarize it.
    Ingest {
        dir: PathBuf,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Generate a synthetic corpus from cached or live search responses.
    Synth(SynthArgs),
    /// Validate an embedding file, optionally against a corpus.
    EmbedImport {
        file: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Build proposal and reviewer vectors for one method.
    Represent {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compute an expertise matrix from a corpus or a saved representation.
    Score {
        #[arg(long, required_unless_present = "representation")]
        corpus: Option<PathBuf>,
        #[arg(long, conflicts_with = "corpus")]
        representation: Option<PathBuf>,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the matrix as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Score a matrix against designated reviewers and self-reported labels.
    Evaluate {
        #[arg(long)]
        matrix: PathBuf,
        /// Corpus providing the designated pairs (and labels unless --labels is given).
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run every cell of a configuration grid.
    Ablate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Tables and plotting CSVs from saved reports, ablation tables and matrices.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
struct QueryArgs {
    #[arg(long)]
    max_papers: Option<usize>,
    #[arg(long)]
    window_years: Option<u32>,
    #[arg(long)]
    first_author_only: bool,
    #[arg(long)]
    reference_year: Option<i32>,
}

#[derive(Args, Debug)]
struct MethodArgs {
    #[arg(long)]
    method: Option<Method>,
    /// Method parameters as a JSON object, e.g. '{"topics": 25}'.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    topics: Option<usize>,
    #[arg(long)]
    ngram_max: Option<usize>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    pooling: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    resamples: Option<usize>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    size: usize,
    /// Directory of cached responses (offline).
    #[arg(long, conflicts_with = "live")]
    fixture: Option<PathBuf>,
    /// Directory holding proposals.json; missing responses are fetched and cached there.
    #[arg(long)]
    live: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_ADS_ENDPOINT)]
    endpoint: String,
    #[arg(long)]
    reference_year: Option<i32>,
    /// Replace reviewer publications with their designated proposal abstracts.
    #[arg(long)]
    self_retrieval: bool,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long, default_value = "text")]
    format: Format,
    /// Evaluation reports or ablation tables.
    #[arg(long = "input", num_args = 1..)]
    inputs: Vec<PathBuf>,
    /// Label of the row other rows are tested against.
    #[arg(long)]
    baseline: Option<String>,
    /// Matrices for the distribution-statistics table.
    #[arg(long = "matrix", num_args = 1..)]
    matrices: Vec<PathBuf>,
    /// Write a heatmap CSV of the first --matrix (needs --corpus).
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Write the designated-rank distribution of every input.
    #[arg(long)]
    ranks: Option<PathBuf>,
    /// Table destination; stdout when omitted.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl clap::builder::ValueParserFactory for Method {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<Method>().map_err(|e| e.to_string()))
    }
}

impl clap::builder::ValueParserFactory for Format {
    type Parser = clap::builder::ValueParser;

    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<Format>().map_err(|e| e.to_string()))
    }
}

/// Contents of `expertmatch.toml`. Every table is optional and partial.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    #[serde(default)]
    query: Value,
    #[serde(default)]
    eval: Value,
    #[serde(default)]
    keywords: Value,
    #[serde(default)]
    tfidf: Value,
    #[serde(default)]
    lda: Value,
    #[serde(default)]
    embedding: Value,
    #[serde(default)]
    llm: Value,
}

impl FileConfig {
    fn load(explicit: Option<&Path>) -> Result<Self> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None if Path::new(CONFIG_FILE).exists() => PathBuf::from(CONFIG_FILE),
            None => return Ok(Self::default()),
        };
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        toml::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), "root", e))
    }

    fn method_table(&self, m: Method) -> &Value {
        match m {
            Method::Keywords => &self.keywords,
            Method::Tfidf => &self.tfidf,
            Method::Lda => &self.lda,
            Method::Embedding => &self.embedding,
            Method::Llm => &self.llm,
        }
    }
}

fn overlay(base: &mut Value, top: &Value) {
    if let Some(t) = top.as_object() {
        if !base.is_object() {
            *base = json!({});
        }
        let b = base.as_object_mut().unwrap();
        for (k, v) in t {
            b.insert(k.clone(), v.clone());
        }
    }
}

struct Resolved {
    file: FileConfig,
    seed: u64,
}

impl Resolved {
    fn query(&self, args: &QueryArgs) -> Result<QueryConfig> {
        let mut v = self.file.query.clone();
        let mut flags = json!({});
        if let Some(x) = args.max_papers {
            flags["max_papers"] = json!(x);
        }
        if let Some(x) = args.window_years {
            flags["window_years"] = json!(x);
        }
        if args.first_author_only {
            flags["first_author_only"] = json!(true);
        }
        if let Some(x) = args.reference_year {
            flags["reference_year"] = json!(x);
        }
        overlay(&mut v, &flags);
        let q: QueryConfig = merge_params(QueryConfig::default(), &v)?;
        q.validate()?;
        Ok(q)
    }

    fn eval(&self, args: &EvalArgs) -> Result<EvalConfig> {
        let mut v = self.file.eval.clone();
        let mut flags = json!({ "seed": self.seed });
        if let Some(k) = args.k {
            flags["k"] = json!(k);
        }
        if let Some(n) = args.resamples {
            flags["bootstrap_resamples"] = json!(n);
        }
        overlay(&mut v, &flags);
        let cfg: EvalConfig = merge_params(EvalConfig::default(), &v)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn method(&self, args: &MethodArgs) -> Result<MethodSpec> {
        let method = args
            .method
            .ok_or_else(|| Error::Config("--method is required".into()))?;
        let mut params = self.file.method_table(method).clone();
        if let Some(p) = &args.params {
            let v: Value = serde_json::from_str(p).map_err(|e| Error::Config(format!("--params: {e}")))?;
            overlay(&mut params, &v);
        }
        let mut flags = json!({});
        if let Some(k) = args.topics {
            flags["topics"] = json!(k);
        }
        if let Some(n) = args.ngram_max {
            flags["ngram_max"] = json!(n);
        }
        if let Some(p) = &args.embeddings {
            flags["path"] = json!(p);
        }
        if let Some(p) = &args.pooling {
            flags["pooling"] = json!(p);
        }
        overlay(&mut params, &flags);
        MethodSpec::from_parts(method, &params)
    }

    fn context(&self, query: QueryConfig) -> RunContext {
        RunContext {
            query,
            seed: self.seed,
            ..RunContext::default()
        }
    }
}

/// Parses `argv` (program name first) and runs the command. Usage errors
/// return 2, runtime failures 1.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let r = Resolved { file, seed };
    match cli.command {
        Command::Ingest { dir, query } => ingest(&r, &dir, &query),
        Command::Synth(args) => synth(&r, &args),
        Command::EmbedImport { file, corpus } => embed_import(&file, corpus.as_deref()),
        Command::Represent {
            corpus,
            method,
            query,
            out,
        } => {
            let corpus = load_corpus(&corpus)?;
            let rep = build_representation(&corpus, &r.method(&method)?, &r.context(r.query(&query)?))?;
            rep.save(&out)?;
            println!("{} vectors for {} proposals and {} reviewers -> {}", rep.label, rep.proposal_ids.len(), rep.reviewer_ids.len(), out.display());
            Ok(())
        }
        Command::Score {
            corpus,
            representation,
            method,
            query,
            out,
            csv,
        } => {
            let matrix = match (representation, corpus) {
                (Some(rep), _) => score_representation(&Representation::load(rep)?)?,
                (None, Some(corpus)) => {
                    let corpus = load_corpus(&corpus)?;
                    expertise_matrix(&corpus, &r.method(&method)?, &r.context(r.query(&query)?))?
                }
                (None, None) => unreachable!("clap requires one source"),
            };
            matrix.save(&out)?;
            if let Some(path) = csv {
                let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                matrix.write_csv(f)?;
            }
            println!("{} x {} {} matrix -> {}", matrix.n_proposals(), matrix.n_reviewers(), matrix.label(), out.display());
            Ok(())
        }
        Command::Evaluate {
            matrix,
            corpus,
            labels,
            eval,
            out,
        } => {
            let m = ExpertiseMatrix::load(&matrix)?;
            let corpus = load_corpus(&corpus)?;
            let labels = match labels {
                Some(p) => read_labels(&p)?,
                None => corpus.labels.clone(),
            };
            let report = evaluate(&m, &corpus.designated_pairs(), &labels, &r.eval(&eval)?)?;
            report.save(&out)?;
            println!(
                "{}: MRR {:.4}, median rank {}, Hit@{} {:.4} -> {}",
                report.label,
                report.summary.mrr.point,
                report.summary.median_rank.point,
                report.config.k,
                report.summary.hit_at_k.point,
                out.display()
            );
            Ok(())
        }
        Command::Ablate { corpus, grid, eval, out } => {
            let corpus = load_corpus(&corpus)?;
            let cells = load_grid(&grid)?;
            let table = run_ablation(&corpus, &cells, &r.context(QueryConfig::default()), &r.eval(&eval)?)?;
            table.save(&out)?;
            let failed = table.failures().count();
            println!("{} cells, {failed} failed -> {}", table.rows.len(), out.display());
            for row in table.failures() {
                eprintln!("cell `{}`: {}", row.name, row.error.as_deref().unwrap_or(""));
            }
            Ok(())
        }
        Command::Report(args) => report(&args),
    }
}

fn ingest(r: &Resolved, dir: &Path, query: &QueryArgs) -> Result<()> {
    let corpus = load_corpus(dir)?;
    let docs = corpus.build_reviewer_documents(&r.query(query)?)?;
    println!(
        "{}: {} proposals, {} reviewers, {} designated pairs, {} labels",
        dir.display(),
        corpus.proposals.len(),
        corpus.reviewers.len(),
        corpus.designated_pairs().len(),
        corpus.labels.len()
    );
    if !docs.empty.is_empty() {
        println!("reviewers without publications under the query: {}", docs.empty.join(", "));
    }
    Ok(())
}

fn synth(r: &Resolved, args: &SynthArgs) -> Result<()> {
    let mut config = SynthConfig::new(args.size, r.seed);
    if let Some(y) = args.reference_year {
        config.reference_year = y;
    }
    let source = match (&args.fixture, &args.live) {
        (Some(dir), _) => SynthSource::fixture(dir),
        (None, Some(dir)) => SynthSource::live(dir, AdsClient::from_env(&args.endpoint)?),
        (None, None) => return Err(Error::Config("synth needs --fixture DIR or --live DIR".into())),
    };
    let mut corpus = generate_synthetic_corpus(&source, &config)?;
    if args.self_retrieval {
        corpus = self_retrieval_corpus(&corpus, config.reference_year)?;
    }
    save_with_provenance(&corpus, &args.out, json!({
        "synth": config,
        "source": source.dir(),
        "live": args.live.is_some(),
        "self_retrieval": args.self_retrieval,
    }))?;
    println!("{} proposals, {} reviewers -> {}", corpus.proposals.len(), corpus.reviewers.len(), args.out.display());
    Ok(())
}

fn save_with_provenance(corpus: &Corpus, dir: &Path, provenance: Value) -> Result<()> {
    corpus.save(dir)?;
    let path = dir.join(PROVENANCE_FILE);
    fs::write(&path, serde_json::to_vec_pretty(&provenance)?).map_err(|e| Error::io(&path, e))
}

fn embed_import(file: &Path, corpus: Option<&Path>) -> Result<()> {
    let emb = import_embeddings(file)?;
    println!("{}: model {}, dim {}, {} records", file.display(), emb.header.model, emb.header.dim, emb.header.count);
    if let Some(dir) = corpus {
        let corpus = load_corpus(dir)?;
        let mut missing: Vec<String> = corpus
            .proposals
            .iter()
            .filter(|p| emb.get(&p.id).is_none())
            .map(|p| p.id.clone())
            .collect();
        for rv in &corpus.reviewers {
            for i in 0..rv.publications.len() {
                let id = crate::embedding::publication_id(&rv.id, i);
                if emb.get(&id).is_none() {
                    missing.push(id);
                }
            }
        }
        if !missing.is_empty() {
            return Err(Error::Validation(format!(
                "{} corpus abstracts have no embedding, first `{}`",
                missing.len(),
                missing[0]
            )));
        }
        println!("covers every abstract of {}", dir.display());
    }
    Ok(())
}

/// An input file is either one evaluation report or an ablation table.
fn load_reports(path: &Path) -> Result<Vec<EvalReport>> {
    if let Ok(table) = AblationTable::load(path) {
        return Ok(table.reports().cloned().collect());
    }
    Ok(vec![EvalReport::load(path)?])
}

fn report(args: &ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    for p in &args.inputs {
        reports.extend(load_reports(p)?);
    }
    let matrices = args
        .matrices
        .iter()
        .map(ExpertiseMatrix::load)
        .collect::<Result<Vec<_>>>()?;
    if reports.is_empty() && matrices.is_empty() {
        return Err(Error::Config("report needs --input or --matrix files".into()));
    }

    let mut body = Vec::new();
    if !reports.is_empty() {
        let table = results_table(&reports, args.baseline.as_deref())?;
        match args.format {
            Format::Csv => table.write_csv(&mut body)?,
            Format::Text => body.extend(table.to_text().into_bytes()),
        }
    }
    if !matrices.is_empty() {
        let rows = stats_table(&matrices)?;
        if !body.is_empty() {
            body.push(b'\n');
        }
        match args.format {
            Format::Csv => write_stats_csv(&rows, &mut body)?,
            Format::Text => body.extend(stats_text(&rows).into_bytes()),
        }
    }
    match &args.out {
        Some(path) => fs::write(path, &body).map_err(|e| Error::io(path, e))?,
        None => std::io::stdout()
            .write_all(&body)
            .map_err(|e| Error::io("stdout", e))?,
    }

    if let Some(path) = &args.heatmap {
        let m = matrices
            .first()
            .ok_or_else(|| Error::Config("--heatmap needs a --matrix".into()))?;
        let corpus = args
            .corpus
            .as_ref()
            .ok_or_else(|| Error::Config("--heatmap needs --corpus".into()))?;
        let corpus = load_corpus(corpus)?;
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_heatmap_csv(m, &corpus.designated_pairs(), f)?;
    }
    if let Some(path) = &args.ranks {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_rank_distribution_csv(&reports, f)?;
    }
    Ok(())
}
