//! Journal-name to discipline resolution.
//!
//! A reference's journal name goes through up to three stages, the first
//! success winning:
//!
//! 1. exact lookup of the normalized name in the journal list,
//! 2. abbreviation expansion followed by exact lookup of the full title,
//! 3. nearest journal-list title by edit distance, accepted when the
//!    length-normalized distance stays within a threshold.
//!
//! Indices are immutable once built and can be shared between threads.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discipline::{DisciplineId, DisciplineRegistry};
use crate::ingest::{ArticleRecord, FilterDecision, FilterError};

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed mapping file {path}: {message}")]
    Malformed { path: PathBuf, message: String },
}

/// Lowercase, drop periods and commas, collapse whitespace.
pub fn normalize_name(raw: &str) -> String {
    let lowered: String = raw
        .chars()
        .filter(|c| *c != '.' && *c != ',')
        .flat_map(char::to_lowercase)
        .collect();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Which edit operations count toward the distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EditOps {
    /// Unit-cost insert, delete and substitute.
    #[default]
    Levenshtein,
    /// Insert and delete only (a substitution costs two edits).
    InsertDelete,
}

impl FromStr for EditOps {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "levenshtein" => Ok(Self::Levenshtein),
            "insert-delete" | "insert_delete" => Ok(Self::InsertDelete),
            other => Err(format!("unknown edit ops `{other}` (expected levenshtein or insert-delete)")),
        }
    }
}

impl EditOps {
    fn substitution_cost(self) -> usize {
        match self {
            EditOps::Levenshtein => 1,
            EditOps::InsertDelete => 2,
        }
    }
}

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    bounded_distance(&a, &b, EditOps::Levenshtein, usize::MAX).expect("unbounded")
}

/// Distance under `ops`, or `None` as soon as it provably exceeds `bound`.
pub fn bounded_distance(a: &[char], b: &[char], ops: EditOps, bound: usize) -> Option<usize> {
    if a.len().abs_diff(b.len()) > bound {
        return None;
    }
    let sub = ops.substitution_cost();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        let mut row_min = cur[0];
        for (j, &cb) in b.iter().enumerate() {
            let replace = prev[j] + if ca == cb { 0 } else { sub };
            cur[j + 1] = replace.min(prev[j + 1] + 1).min(cur[j] + 1);
            row_min = row_min.min(cur[j + 1]);
        }
        if row_min > bound {
            return None;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let d = prev[b.len()];
    (d <= bound).then_some(d)
}

#[derive(Debug, Clone)]
struct Candidate {
    title: String,
    chars: Vec<char>,
    discipline: DisciplineId,
}

/// A journal listed under a second discipline; the first listing is kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ListingConflict {
    pub title: String,
    pub kept: DisciplineId,
    pub ignored: DisciplineId,
}

/// Normalized journal titles with their discipline.
#[derive(Debug, Clone, Default)]
pub struct JournalIndex {
    by_title: HashMap<String, DisciplineId>,
    /// Sorted by title.
    candidates: Vec<Candidate>,
    by_first_char: HashMap<char, Vec<usize>>,
    conflicts: Vec<ListingConflict>,
}

impl JournalIndex {
    /// Build from `(raw title, discipline)` pairs in listing order.
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, DisciplineId)>,
        S: AsRef<str>,
    {
        let mut by_title: HashMap<String, DisciplineId> = HashMap::new();
        let mut conflicts = Vec::new();
        for (raw, discipline) in entries {
            let title = normalize_name(raw.as_ref());
            if title.is_empty() {
                continue;
            }
            match by_title.get(&title) {
                Some(&kept) if kept != discipline => {
                    log::warn!("journal `{title}` listed under {kept} and {discipline}; keeping {kept}");
                    conflicts.push(ListingConflict {
                        title,
                        kept,
                        ignored: discipline,
                    });
                }
                Some(_) => {}
                None => {
                    by_title.insert(title, discipline);
                }
            }
        }
        let mut candidates: Vec<Candidate> = by_title
            .iter()
            .map(|(title, &discipline)| Candidate {
                title: title.clone(),
                chars: title.chars().collect(),
                discipline,
            })
            .collect();
        candidates.sort_by(|a, b| a.title.cmp(&b.title));
        let mut by_first_char: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, c) in candidates.iter().enumerate() {
            if let Some(&first) = c.chars.first() {
                by_first_char.entry(first).or_default().push(i);
            }
        }
        Self {
            by_title,
            candidates,
            by_first_char,
            conflicts,
        }
    }

    /// Load a delimiter-separated `title, discipline` file with a header row.
    /// Disciplines may be given by short or full name.
    pub fn load(path: &Path, registry: &DisciplineRegistry) -> Result<Self, MatcherError> {
        let rows = read_pairs(path)?;
        let mut entries = Vec::with_capacity(rows.len());
        for (line, title, discipline) in rows {
            let id = registry.find(&discipline).ok_or_else(|| MatcherError::Malformed {
                path: path.to_path_buf(),
                message: format!("line {line}: unknown discipline `{discipline}`"),
            })?;
            entries.push((title, id));
        }
        Ok(Self::from_entries(entries))
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn conflicts(&self) -> &[ListingConflict] {
        &self.conflicts
    }

    pub fn disciplines_present(&self) -> usize {
        let mut seen = [false; crate::discipline::DISCIPLINE_COUNT];
        for c in &self.candidates {
            seen[c.discipline.index()] = true;
        }
        seen.iter().filter(|s| **s).count()
    }
}

/// Abbreviation to full title, both normalized. Several abbreviations may
/// share one full title.
#[derive(Debug, Clone, Default)]
pub struct AbbrevIndex {
    map: HashMap<String, String>,
}

impl AbbrevIndex {
    pub fn from_entries<I, A, F>(entries: I) -> Self
    where
        I: IntoIterator<Item = (A, F)>,
        A: AsRef<str>,
        F: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (abbrev, full) in entries {
            let abbrev = normalize_name(abbrev.as_ref());
            let full = normalize_name(full.as_ref());
            if abbrev.is_empty() || full.is_empty() {
                continue;
            }
            map.entry(abbrev).or_insert(full);
        }
        Self { map }
    }

    /// Load a delimiter-separated `abbreviation, full_title` file with a header row.
    pub fn load(path: &Path) -> Result<Self, MatcherError> {
        let rows = read_pairs(path)?;
        Ok(Self::from_entries(rows.into_iter().map(|(_, a, f)| (a, f))))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv" | "tab" | "txt") => b'\t',
        _ => b',',
    }
}

fn read_pairs(path: &Path) -> Result<Vec<(usize, String, String)>, MatcherError> {
    let malformed = |message: String| MatcherError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|source| MatcherError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter_for(path))
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?;
    if headers.len() < 2 {
        return Err(malformed("header must name at least two columns".into()));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| malformed(e.to_string()))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() < 2 {
            return Err(malformed(format!("line {line}: expected two columns")));
        }
        rows.push((line, record[0].trim().to_string(), record[1].trim().to_string()));
    }
    Ok(rows)
}

pub fn match_direct(name_normalized: &str, journals: &JournalIndex) -> Option<DisciplineId> {
    journals.by_title.get(name_normalized).copied()
}

pub fn expand_abbreviation<'a>(name_normalized: &str, abbrevs: &'a AbbrevIndex) -> Option<&'a str> {
    abbrevs.map.get(name_normalized).map(String::as_str)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MatchStage {
    Direct,
    AbbrevExpansion,
    EditDistance,
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub discipline: Option<DisciplineId>,
    pub stage: MatchStage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalized_distance: Option<f64>,
    /// Journal-list title the name resolved to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_title: Option<String>,
}

impl MatchResult {
    pub fn unmatched() -> Self {
        Self {
            discipline: None,
            stage: MatchStage::Unmatched,
            distance: None,
            normalized_distance: None,
            matched_title: None,
        }
    }

    fn exact(stage: MatchStage, discipline: DisciplineId, title: &str) -> Self {
        Self {
            discipline: Some(discipline),
            stage,
            distance: None,
            normalized_distance: None,
            matched_title: Some(title.to_string()),
        }
    }

    pub fn is_matched(&self) -> bool {
        self.discipline.is_some()
    }
}

/// Nearest journal-list title by edit distance, ties broken by the
/// lexicographically smallest title.
///
/// Titles sharing the query's first character are scanned first to obtain
/// a distance bound; the full scan then prunes against that bound, so the
/// answer is the same as an exhaustive scan.
pub fn match_fuzzy(
    name_normalized: &str,
    journals: &JournalIndex,
    max_normalized_distance: f64,
    ops: EditOps,
) -> MatchResult {
    let query: Vec<char> = name_normalized.chars().collect();
    let Some(&first) = query.first() else {
        return MatchResult::unmatched();
    };
    if journals.is_empty() {
        return MatchResult::unmatched();
    }

    let mut best: Option<(usize, usize)> = None;
    let consider = |idx: usize, best: &mut Option<(usize, usize)>| {
        let cand = &journals.candidates[idx];
        let bound = best.map_or(usize::MAX, |(d, _)| d);
        if let Some(d) = bounded_distance(&query, &cand.chars, ops, bound) {
            let better = match *best {
                None => true,
                Some((bd, bi)) => d < bd || (d == bd && idx < bi),
            };
            if better {
                *best = Some((d, idx));
            }
        }
    };
    if let Some(bucket) = journals.by_first_char.get(&first) {
        for &idx in bucket {
            consider(idx, &mut best);
        }
    }
    for idx in 0..journals.candidates.len() {
        consider(idx, &mut best);
    }

    let (distance, idx) = best.expect("non-empty index always yields a candidate");
    let cand = &journals.candidates[idx];
    let longest = query.len().max(cand.chars.len());
    let normalized = distance as f64 / longest as f64;
    if normalized > max_normalized_distance {
        return MatchResult::unmatched();
    }
    MatchResult {
        discipline: Some(cand.discipline),
        stage: MatchStage::EditDistance,
        distance: Some(distance),
        normalized_distance: Some(normalized),
        matched_title: Some(cand.title.clone()),
    }
}

/// Subset of the three matching stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MatchStages {
    direct: bool,
    abbreviation: bool,
    fuzzy: bool,
}

impl MatchStages {
    pub const ALL: MatchStages = MatchStages {
        direct: true,
        abbreviation: true,
        fuzzy: true,
    };
    pub const DIRECT_ONLY: MatchStages = MatchStages {
        direct: true,
        abbreviation: false,
        fuzzy: false,
    };

    pub fn new(direct: bool, abbreviation: bool, fuzzy: bool) -> Option<Self> {
        (direct || abbreviation || fuzzy).then_some(Self {
            direct,
            abbreviation,
            fuzzy,
        })
    }

    pub fn contains(&self, stage: u8) -> bool {
        match stage {
            1 => self.direct,
            2 => self.abbreviation,
            3 => self.fuzzy,
            _ => false,
        }
    }
}

impl Default for MatchStages {
    fn default() -> Self {
        Self::ALL
    }
}

impl FromStr for MatchStages {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut flags = [false; 3];
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "1" | "2" | "3" => flags[part.as_bytes()[0] as usize - b'1' as usize] = true,
                other => return Err(format!("unknown match stage `{other}` (expected 1, 2 or 3)")),
            }
        }
        Self::new(flags[0], flags[1], flags[2]).ok_or_else(|| "at least one match stage required".to_string())
    }
}

impl TryFrom<String> for MatchStages {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<MatchStages> for String {
    fn from(s: MatchStages) -> String {
        s.to_string()
    }
}

impl fmt::Display for MatchStages {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [(self.direct, "1"), (self.abbreviation, "2"), (self.fuzzy, "3")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, s)| *s)
            .collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub stages: MatchStages,
    pub fuzzy_threshold: f64,
    pub edit_ops: EditOps,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            stages: MatchStages::ALL,
            fuzzy_threshold: 0.2,
            edit_ops: EditOps::Levenshtein,
        }
    }
}

/// Journal and abbreviation indices plus the cascade configuration.
#[derive(Debug, Clone)]
pub struct Matcher {
    pub journals: JournalIndex,
    pub abbrevs: AbbrevIndex,
    pub config: MatchConfig,
}

impl Matcher {
    pub fn new(journals: JournalIndex, abbrevs: AbbrevIndex, config: MatchConfig) -> Self {
        Self {
            journals,
            abbrevs,
            config,
        }
    }

    pub fn match_reference(&self, name_raw: &str) -> MatchResult {
        self.match_normalized(&normalize_name(name_raw))
    }

    pub fn match_normalized(&self, name: &str) -> MatchResult {
        if name.is_empty() {
            return MatchResult::unmatched();
        }
        let stages = self.config.stages;
        if stages.contains(1) {
            if let Some(d) = match_direct(name, &self.journals) {
                return MatchResult::exact(MatchStage::Direct, d, name);
            }
        }
        if stages.contains(2) {
            if let Some(full) = expand_abbreviation(name, &self.abbrevs) {
                if let Some(d) = match_direct(full, &self.journals) {
                    return MatchResult::exact(MatchStage::AbbrevExpansion, d, full);
                }
            }
        }
        if stages.contains(3) {
            return match_fuzzy(name, &self.journals, self.config.fuzzy_threshold, self.config.edit_ops);
        }
        MatchResult::unmatched()
    }
}

/// Keep an article when at least `threshold` of its references resolved to
/// a discipline.
pub fn discipline_coverage_filter(
    article: &ArticleRecord,
    threshold: f64,
) -> Result<FilterDecision, FilterError> {
    let total = article.references.len();
    if total == 0 {
        return Err(FilterError::NoReferences);
    }
    let covered = article
        .references
        .iter()
        .filter(|r| r.match_result.as_ref().is_some_and(MatchResult::is_matched))
        .count();
    let ratio = covered as f64 / total as f64;
    Ok(FilterDecision {
        keep: ratio >= threshold,
        ratio,
    })
}
