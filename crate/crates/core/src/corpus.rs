//! Distributed-peer-review corpus: proposals, reviewer profiles, self-reported
//! labels and the keyword vocabulary.
//!
//! On disk a corpus is a directory holding four files:
//!
//! ```text
//! proposals.jsonl   {"id", "abstract", "keywords": [{"kw", "rank"}]}
//! reviewers.jsonl   {"id", "designated_proposals", "keywords", "publications": [{"title", "abstract", "year", "first_author"}]}
//! labels.csv        proposal_id,reviewer_id,grade
//! keywords.json     {"vocabulary": [...], "categories": {keyword: category}}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROPOSALS_FILE: &str = "proposals.jsonl";
pub const REVIEWERS_FILE: &str = "reviewers.jsonl";
pub const LABELS_FILE: &str = "labels.csv";
pub const KEYWORDS_FILE: &str = "keywords.json";

/// Upper bound on the number of ranked keywords an entity may select.
pub const MAX_KEYWORDS: usize = 5;
pub const MIN_PROPOSAL_KEYWORDS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedKeyword {
    #[serde(rename = "kw")]
    pub keyword: String,
    pub rank: u8,
}

impl RankedKeyword {
    pub fn new(keyword: impl Into<String>, rank: u8) -> Self {
        Self {
            keyword: keyword.into(),
            rank,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub id: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub keywords: Vec<RankedKeyword>,
    /// Distinct categories of `keywords`, in order of first appearance.
    #[serde(skip)]
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: i32,
    pub first_author: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewerProfile {
    pub id: String,
    #[serde(rename = "designated_proposals")]
    pub designated_proposal_ids: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<RankedKeyword>,
    #[serde(default)]
    pub publications: Vec<PublicationRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Grade {
    Expert,
    Intermediate,
    NonExpert,
}

impl Grade {
    pub const ALL: [Grade; 3] = [Grade::Expert, Grade::Intermediate, Grade::NonExpert];

    pub fn as_str(self) -> &'static str {
        match self {
            Grade::Expert => "Expert",
            Grade::Intermediate => "Intermediate",
            Grade::NonExpert => "NonExpert",
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Grade {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        match norm.as_str() {
            "expert" => Ok(Grade::Expert),
            "intermediate" => Ok(Grade::Intermediate),
            "nonexpert" => Ok(Grade::NonExpert),
            _ => Err(format!("unknown grade `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfReportedLabel {
    pub proposal_id: String,
    pub reviewer_id: String,
    pub grade: Grade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KeywordFile {
    vocabulary: Vec<String>,
    categories: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub proposals: Vec<Proposal>,
    pub reviewers: Vec<ReviewerProfile>,
    pub labels: Vec<SelfReportedLabel>,
    pub keyword_vocabulary: Vec<String>,
    pub category_map: BTreeMap<String, String>,
}

/// Which publications of a reviewer make up their text profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryConfig {
    pub max_papers: usize,
    pub window_years: u32,
    #[serde(default)]
    pub first_author_only: bool,
    /// Last year of the window; defaults to the newest publication year in
    /// the corpus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_year: Option<i32>,
}

impl QueryConfig {
    pub fn new(max_papers: usize, window_years: u32, first_author_only: bool) -> Self {
        Self {
            max_papers,
            window_years,
            first_author_only,
            reference_year: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_papers == 0 || self.window_years == 0 {
            return Err(Error::Validation(
                "query config: max_papers and window_years must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for QueryConfig {
    /// 25 papers over the last five years, any author position.
    fn default() -> Self {
        Self::new(25, 5, false)
    }
}

/// Concatenated text profile of every reviewer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReviewerDocuments {
    pub documents: BTreeMap<String, String>,
    /// Reviewers left with no publication after filtering.
    pub empty: Vec<String>,
}

impl Corpus {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        load_corpus(dir)
    }

    pub fn proposal(&self, id: &str) -> Option<&Proposal> {
        self.proposals.iter().find(|p| p.id == id)
    }

    pub fn reviewer(&self, id: &str) -> Option<&ReviewerProfile> {
        self.reviewers.iter().find(|r| r.id == id)
    }

    /// Every (proposal, designated reviewer) pair, sorted by proposal then
    /// reviewer id.
    pub fn designated_pairs(&self) -> Vec<(String, String)> {
        let mut pairs: Vec<(String, String)> = self
            .reviewers
            .iter()
            .flat_map(|r| {
                r.designated_proposal_ids
                    .iter()
                    .map(move |p| (p.clone(), r.id.clone()))
            })
            .collect();
        pairs.sort();
        pairs.dedup();
        pairs
    }

    pub fn latest_publication_year(&self) -> Option<i32> {
        self.reviewers
            .iter()
            .flat_map(|r| r.publications.iter().map(|p| p.year))
            .max()
    }

    fn resolve_reference_year(&self, config: &QueryConfig) -> i32 {
        config
            .reference_year
            .or_else(|| self.latest_publication_year())
            .unwrap_or_else(current_year)
    }

    /// Categories of an ordered keyword list, deduplicated by first appearance.
    pub fn categories_of(&self, keywords: &[RankedKeyword]) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for kw in keywords {
            if let Some(cat) = self.category_map.get(&kw.keyword) {
                if seen.insert(cat.as_str()) {
                    out.push(cat.clone());
                }
            }
        }
        out
    }

    fn derive_categories(&mut self) {
        let cats: Vec<Vec<String>> = self
            .proposals
            .iter()
            .map(|p| self.categories_of(&p.keywords))
            .collect();
        for (p, c) in self.proposals.iter_mut().zip(cats) {
            p.categories = c;
        }
    }

    /// Publications of `reviewer` kept under `config`, most recent first,
    /// paired with their index in the reviewer's publication list.
    pub fn select_publications<'a>(
        &self,
        reviewer: &'a ReviewerProfile,
        config: &QueryConfig,
    ) -> Vec<(usize, &'a PublicationRecord)> {
        select_publications(reviewer, config, self.resolve_reference_year(config))
    }

    pub fn build_reviewer_documents(&self, config: &QueryConfig) -> Result<ReviewerDocuments> {
        config.validate()?;
        let reference_year = self.resolve_reference_year(config);
        let mut out = ReviewerDocuments::default();
        for reviewer in &self.reviewers {
            let selected = select_publications(reviewer, config, reference_year);
            if selected.is_empty() {
                out.empty.push(reviewer.id.clone());
            }
            let doc = selected
                .iter()
                .map(|(_, p)| p.abstract_text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            out.documents.insert(reviewer.id.clone(), doc);
        }
        out.empty.sort();
        if !out.empty.is_empty() {
            log::warn!(
                "{} reviewer(s) have no publications under {:?}: {:?}",
                out.empty.len(),
                config,
                out.empty
            );
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let vocab: HashSet<&str> = self.keyword_vocabulary.iter().map(String::as_str).collect();
        if vocab.len() != self.keyword_vocabulary.len() {
            return Err(Error::Validation("duplicate keyword in vocabulary".into()));
        }
        for kw in &self.keyword_vocabulary {
            if !self.category_map.contains_key(kw) {
                return Err(Error::Validation(format!(
                    "keyword `{kw}` has no category"
                )));
            }
        }

        let mut proposal_ids = HashSet::new();
        for p in &self.proposals {
            if !proposal_ids.insert(p.id.as_str()) {
                return Err(Error::Validation(format!("duplicate proposal id `{}`", p.id)));
            }
            if p.abstract_text.trim().is_empty() {
                return Err(Error::Validation(format!("proposal `{}`: empty abstract", p.id)));
            }
            if !(MIN_PROPOSAL_KEYWORDS..=MAX_KEYWORDS).contains(&p.keywords.len()) {
                return Err(Error::Validation(format!(
                    "proposal `{}`: keyword count out of [2,5]",
                    p.id
                )));
            }
            check_keywords(&format!("proposal `{}`", p.id), &p.keywords, &vocab)?;
        }

        let max_year = current_year();
        let mut reviewer_ids = HashSet::new();
        for r in &self.reviewers {
            let what = format!("reviewer `{}`", r.id);
            if !reviewer_ids.insert(r.id.as_str()) {
                return Err(Error::Validation(format!("duplicate reviewer id `{}`", r.id)));
            }
            if r.designated_proposal_ids.is_empty() {
                return Err(Error::Validation(format!("{what}: no designated proposal")));
            }
            for pid in &r.designated_proposal_ids {
                if !proposal_ids.contains(pid.as_str()) {
                    return Err(Error::DanglingReference(format!(
                        "{what} designates unknown proposal `{pid}`"
                    )));
                }
            }
            if r.keywords.len() > MAX_KEYWORDS {
                return Err(Error::Validation(format!("{what}: keyword count out of [0,5]")));
            }
            if r.keywords.is_empty() && r.publications.is_empty() {
                return Err(Error::Validation(format!(
                    "{what}: neither keywords nor publications"
                )));
            }
            check_keywords(&what, &r.keywords, &vocab)?;
            for (i, p) in r.publications.iter().enumerate() {
                if p.abstract_text.trim().is_empty() {
                    return Err(Error::Validation(format!(
                        "{what}: publication {i} has an empty abstract"
                    )));
                }
                if !(1900..=max_year).contains(&p.year) {
                    return Err(Error::Validation(format!(
                        "{what}: publication {i} year {} outside [1900, {max_year}]",
                        p.year
                    )));
                }
            }
        }

        let mut seen = HashSet::new();
        let mut per_proposal: HashMap<&str, usize> = HashMap::new();
        for l in &self.labels {
            if !proposal_ids.contains(l.proposal_id.as_str()) {
                return Err(Error::DanglingReference(format!(
                    "label references unknown proposal `{}`",
                    l.proposal_id
                )));
            }
            if !reviewer_ids.contains(l.reviewer_id.as_str()) {
                return Err(Error::DanglingReference(format!(
                    "label references unknown reviewer `{}`",
                    l.reviewer_id
                )));
            }
            if !seen.insert((l.proposal_id.as_str(), l.reviewer_id.as_str())) {
                return Err(Error::Validation(format!(
                    "duplicate label ({}, {})",
                    l.proposal_id, l.reviewer_id
                )));
            }
            *per_proposal.entry(l.proposal_id.as_str()).or_default() += 1;
        }
        if !self.labels.is_empty() {
            let expected = per_proposal.values().copied().max().unwrap_or(0);
            for p in &self.proposals {
                let n = per_proposal.get(p.id.as_str()).copied().unwrap_or(0);
                if n != expected {
                    return Err(Error::Validation(format!(
                        "proposal `{}` has {n} labels, expected {expected}",
                        p.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes the four corpus files into `dir`, creating it if needed.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        write_jsonl(&dir.join(PROPOSALS_FILE), &self.proposals)?;
        write_jsonl(&dir.join(REVIEWERS_FILE), &self.reviewers)?;

        let path = dir.join(LABELS_FILE);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_io(&path, e))?;
        w.write_record(["proposal_id", "reviewer_id", "grade"])
            .map_err(|e| csv_io(&path, e))?;
        for l in &self.labels {
            w.write_record([l.proposal_id.as_str(), l.reviewer_id.as_str(), l.grade.as_str()])
                .map_err(|e| csv_io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(KEYWORDS_FILE);
        let kf = KeywordFile {
            vocabulary: self.keyword_vocabulary.clone(),
            categories: self.category_map.clone(),
        };
        let text = serde_json::to_string_pretty(&kf)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

fn check_keywords(what: &str, keywords: &[RankedKeyword], vocab: &HashSet<&str>) -> Result<()> {
    let mut distinct = BTreeSet::new();
    for (i, kw) in keywords.iter().enumerate() {
        if usize::from(kw.rank) != i + 1 {
            return Err(Error::Validation(format!(
                "{what}: keyword ranks must run 1..{} without gaps",
                keywords.len()
            )));
        }
        if !vocab.contains(kw.keyword.as_str()) {
            return Err(Error::Validation(format!(
                "{what}: keyword `{}` not in vocabulary",
                kw.keyword
            )));
        }
        if !distinct.insert(kw.keyword.as_str()) {
            return Err(Error::Validation(format!(
                "{what}: keyword `{}` selected twice",
                kw.keyword
            )));
        }
    }
    Ok(())
}

pub(crate) fn current_year() -> i32 {
    chrono::Utc::now().year()
}

fn select_publications<'a>(
    reviewer: &'a ReviewerProfile,
    config: &QueryConfig,
    reference_year: i32,
) -> Vec<(usize, &'a PublicationRecord)> {
    let earliest = reference_year - config.window_years as i32 + 1;
    let mut kept: Vec<(usize, &PublicationRecord)> = reviewer
        .publications
        .iter()
        .enumerate()
        .filter(|(_, p)| p.year >= earliest && p.year <= reference_year)
        .filter(|(_, p)| !config.first_author_only || p.first_author)
        .collect();
    kept.sort_by(|(ia, a), (ib, b)| {
        b.year
            .cmp(&a.year)
            .then_with(|| a.title.cmp(&b.title))
            .then_with(|| a.abstract_text.cmp(&b.abstract_text))
            .then_with(|| ia.cmp(ib))
    });
    kept.truncate(config.max_papers);
    kept
}

const SHIPPED_KEYWORDS: &str = include_str!("../data/keywords.json");

/// The bundled observatory keyword vocabulary and its keyword → category map.
pub fn shipped_keywords() -> (Vec<String>, BTreeMap<String, String>) {
    let kf: KeywordFile = serde_json::from_str(SHIPPED_KEYWORDS).expect("bundled keywords.json is valid");
    (kf.vocabulary, kf.categories)
}

/// Loads and validates a corpus directory.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    let proposals: Vec<Proposal> = read_jsonl(&dir.join(PROPOSALS_FILE))?;
    let reviewers: Vec<ReviewerProfile> = read_jsonl(&dir.join(REVIEWERS_FILE))?;
    let labels = read_labels(&dir.join(LABELS_FILE))?;

    let path = dir.join(KEYWORDS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let kf: KeywordFile = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), "root", e))?;

    let mut corpus = Corpus {
        proposals,
        reviewers,
        labels,
        keyword_vocabulary: kf.vocabulary,
        category_map: kf.categories,
    };
    corpus.validate()?;
    corpus.derive_categories();
    Ok(corpus)
}

/// Builds a corpus from parts, validating it and deriving proposal categories.
pub fn assemble_corpus(
    proposals: Vec<Proposal>,
    reviewers: Vec<ReviewerProfile>,
    labels: Vec<SelfReportedLabel>,
    keyword_vocabulary: Vec<String>,
    category_map: BTreeMap<String, String>,
) -> Result<Corpus> {
    let mut corpus = Corpus {
        proposals,
        reviewers,
        labels,
        keyword_vocabulary,
        category_map,
    };
    corpus.validate()?;
    corpus.derive_categories();
    Ok(corpus)
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| {
            Error::parse(path.display().to_string(), format!("line {}", i + 1), e)
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a `proposal_id,reviewer_id,grade` file.
pub fn read_labels(path: &Path) -> Result<Vec<SelfReportedLabel>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let file = path.display().to_string();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(&file, format!("row {}", i + 1), e))?;
        if rec.len() != 3 {
            return Err(Error::parse(
                &file,
                format!("row {}", i + 1),
                format!("expected 3 fields, got {}", rec.len()),
            ));
        }
        let grade = rec[2]
            .parse()
            .map_err(|e| Error::parse(&file, format!("row {}", i + 1), e))?;
        out.push(SelfReportedLabel {
            proposal_id: rec[0].to_string(),
            reviewer_id: rec[1].to_string(),
            grade,
        });
    }
    Ok(out)
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::parse(path.display().to_string(), "csv", e)
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn reviewer_with(pubs: Vec<PublicationRecord>) -> Corpus {
        let mut c = tiny();
        c.reviewers[0].publications = pubs;
        c
    }

    #[test]
    fn save_then_load_round_trips() {
        let corpus = tiny();
        let dir = tempfile::tempdir().unwrap();
        corpus.save(dir.path()).unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        assert_eq!(loaded, corpus);
        assert_eq!(loaded.proposals.len(), 2);
        assert_eq!(loaded.proposals[1].categories, vec!["Galaxies", "Cosmology"]);
    }

    #[test]
    fn one_keyword_proposal_is_rejected() {
        let mut c = tiny();
        c.proposals[0].keywords.truncate(1);
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("keyword count out of [2,5]"), "{err}");
    }

    #[test]
    fn unknown_designated_proposal_is_dangling() {
        let mut c = tiny();
        c.reviewers[1].designated_proposal_ids.push("P9".into());
        assert!(matches!(c.validate(), Err(Error::DanglingReference(_))));
    }

    #[test]
    fn rank_gaps_are_rejected() {
        let mut c = tiny();
        c.proposals[0].keywords[1].rank = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn unbalanced_labels_are_rejected() {
        let mut c = tiny();
        c.labels.pop();
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_error_names_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        tiny().save(dir.path()).unwrap();
        fs::write(dir.path().join(PROPOSALS_FILE), "{\"id\": 3}\n").unwrap();
        let err = load_corpus(dir.path()).unwrap_err().to_string();
        assert!(err.contains("proposals.jsonl") && err.contains("line 1"), "{err}");
    }

    #[test]
    fn documents_below_cap_keep_recency_order() {
        let c = reviewer_with(vec![
            publication("b", 2020, false),
            publication("c", 2022, false),
            publication("a", 2021, false),
        ]);
        let docs = c.build_reviewer_documents(&QueryConfig::default()).unwrap();
        assert_eq!(docs.documents["R1"], "abstract of c abstract of a abstract of b");
        assert!(docs.empty.is_empty());
    }

    #[test]
    fn documents_capped_at_most_recent() {
        let pubs: Vec<_> = (0..30)
            .map(|i| publication(&format!("t{i:02}"), 2022 - (i % 3), false))
            .collect();
        let c = reviewer_with(pubs);
        let cfg = QueryConfig::new(25, 5, false);
        let sel = c.select_publications(&c.reviewers[0], &cfg);
        assert_eq!(sel.len(), 25);
        // all ten 2022 and ten 2021 papers survive, then five 2020 ones by title
        assert_eq!(sel.iter().filter(|(_, p)| p.year == 2020).count(), 5);
        assert!(sel.windows(2).all(|w| w[0].1.year >= w[1].1.year));
    }

    #[test]
    fn first_author_filter_and_window() {
        let c = reviewer_with(vec![
            publication("old", 2010, true),
            publication("mine", 2021, true),
            publication("theirs", 2022, false),
        ]);
        let docs = c.build_reviewer_documents(&QueryConfig::new(10, 5, true)).unwrap();
        assert_eq!(docs.documents["R1"], "abstract of mine");
    }

    #[test]
    fn reviewer_without_surviving_papers_is_reported() {
        let c = reviewer_with(vec![publication("old", 2001, false)]);
        let docs = c.build_reviewer_documents(&QueryConfig::default()).unwrap();
        assert_eq!(docs.documents["R1"], "");
        assert_eq!(docs.empty, vec!["R1".to_string()]);
    }

    #[test]
    fn zero_query_config_is_rejected() {
        assert!(tiny().build_reviewer_documents(&QueryConfig::new(0, 5, false)).is_err());
    }

    #[test]
    fn grade_parsing_is_case_insensitive() {
        assert_eq!("Non-expert".parse::<Grade>().unwrap(), Grade::NonExpert);
        assert_eq!("expert".parse::<Grade>().unwrap(), Grade::Expert);
        assert!("guru".parse::<Grade>().is_err());
    }
}
