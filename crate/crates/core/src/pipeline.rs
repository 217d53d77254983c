//! End-to-end runs and the individually re-runnable stages.
//!
//! Each stage reads the previous stage's JSON-lines file from
//! `<output_dir>/work/`, writes its own, and leaves a small summary next to
//! it. [`run_pipeline`] simply calls the stages in order, so a run made of
//! separate stage invocations produces the same bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discipline::DisciplineRegistry;
use crate::grid::{parse_summaries, GridError, GridOptions, SectionGrid};
use crate::ingest::{
    journal_ratio_filter, parse_article, ArticleRecord, ParseWarnings, RatioComparator, SentenceGuards,
    SourceTypeAliases,
};
use crate::matcher::{
    discipline_coverage_filter, AbbrevIndex, EditOps, JournalIndex, MatchConfig, MatchStage, MatchStages, Matcher,
    MatcherError,
};
use crate::metrics::{MetricsError, MetricsTable, SkipTally};
use crate::report::{
    analyze_groups, analyze_summaries, analyze_table, emit_tables, pretty_json, sha256_hex, write_file,
    ReportError, StatsReport,
};
use crate::sections::{classify_heading, KeywordRules, RulesError, SectionType};
use crate::stats::ReportedAnova;

pub const WORK_DIR: &str = "work";
pub const REPORTS_DIR: &str = "reports";

const INGESTED: &str = "ingested.jsonl";
const REJECTS: &str = "rejects.jsonl";
const INGEST_SUMMARY: &str = "ingest_summary.json";
const MATCHED: &str = "matched.jsonl";
const MATCH_SUMMARY: &str = "match_summary.json";
const MATCH_REVIEW: &str = "match_review.csv";
const CLASSIFIED: &str = "classified.jsonl";
const CLASSIFY_SUMMARY: &str = "classify_summary.json";
const METRICS: &str = "metrics_table.json";
const ANOVA: &str = "anova_report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("input missing: {0}")]
    InputMissing(String),
    #[error("mapping file malformed: {0}")]
    MappingFileMalformed(String),
    #[error("grid malformed: {0}")]
    GridMalformed(#[from] GridError),
    #[error("stage input {path} unreadable: {message}")]
    StageInput { path: PathBuf, message: String },
    #[error("I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl From<MatcherError> for PipelineError {
    fn from(e: MatcherError) -> Self {
        match e {
            MatcherError::Io { path, .. } => Self::InputMissing(format!("cannot read {}", path.display())),
            other => Self::MappingFileMalformed(other.to_string()),
        }
    }
}

impl From<RulesError> for PipelineError {
    fn from(e: RulesError) -> Self {
        Self::MappingFileMalformed(format!("rules: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub journals_path: PathBuf,
    pub abbrevs_path: Option<PathBuf>,
    pub registry_path: Option<PathBuf>,
    pub rules_path: Option<PathBuf>,
    pub guards_path: Option<PathBuf>,
    pub journal_ratio_threshold: f64,
    pub journal_ratio_comparator: RatioComparator,
    pub coverage_threshold: f64,
    pub match_stages: MatchStages,
    pub fuzzy_threshold: f64,
    pub edit_ops: EditOps,
    pub worker_count: usize,
}

impl PipelineConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>, journals_path: impl Into<PathBuf>) -> Self {
        Self {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            journals_path: journals_path.into(),
            abbrevs_path: None,
            registry_path: None,
            rules_path: None,
            guards_path: None,
            journal_ratio_threshold: 0.8,
            journal_ratio_comparator: RatioComparator::Strict,
            coverage_threshold: 0.8,
            match_stages: MatchStages::ALL,
            fuzzy_threshold: 0.2,
            edit_ops: EditOps::Levenshtein,
            worker_count: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(PipelineError::ConfigInvalid(format!("{name} must be in (0, 1], got {v}")))
            }
        };
        unit("journal_ratio_threshold", self.journal_ratio_threshold)?;
        unit("coverage_threshold", self.coverage_threshold)?;
        if !(0.0..=1.0).contains(&self.fuzzy_threshold) {
            return Err(PipelineError::ConfigInvalid(format!(
                "fuzzy_threshold must be in [0, 1], got {}",
                self.fuzzy_threshold
            )));
        }
        if self.worker_count == 0 {
            return Err(PipelineError::ConfigInvalid("worker_count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn work_dir(&self) -> PathBuf {
        self.output_dir.join(WORK_DIR)
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.output_dir.join(REPORTS_DIR)
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            journal_ratio_threshold: self.journal_ratio_threshold,
            journal_ratio_comparator: self.journal_ratio_comparator,
            coverage_threshold: self.coverage_threshold,
            match_stages: self.match_stages.to_string(),
            fuzzy_threshold: self.fuzzy_threshold,
            edit_ops: self.edit_ops,
            custom_abbreviations: self.abbrevs_path.is_some(),
            custom_registry: self.registry_path.is_some(),
            custom_rules: self.rules_path.is_some(),
            custom_guards: self.guards_path.is_some(),
        }
    }
}

/// Settings that shape the results. Paths and worker count are left out
/// because they cannot change any output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub journal_ratio_threshold: f64,
    pub journal_ratio_comparator: RatioComparator,
    pub coverage_threshold: f64,
    pub match_stages: String,
    pub fuzzy_threshold: f64,
    pub edit_ops: EditOps,
    pub custom_abbreviations: bool,
    pub custom_registry: bool,
    pub custom_rules: bool,
    pub custom_guards: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub kept: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub files_seen: u64,
    pub parsed: u64,
    pub rejected: BTreeMap<String, u64>,
    pub warnings: ParseWarnings,
    pub journal_ratio_filter: FilterCounts,
    /// sha256 of every input file, keyed by file name.
    pub input_digests: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTally {
    pub direct: u64,
    pub abbreviation: u64,
    pub edit_distance: u64,
    pub unmatched: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub articles: u64,
    pub references_total: u64,
    pub journal_references: u64,
    pub stages: StageTally,
    /// References with a discipline after stage 1, stages 1-2, stages 1-3.
    pub cumulative_matched: [u64; 3],
    /// The same as percentages of all references.
    pub cumulative_percent: [f64; 3],
    pub disciplines_matched: u64,
    pub coverage_filter: FilterCounts,
}

impl MatchSummary {
    pub fn matched(&self) -> u64 {
        self.cumulative_matched[2]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SectionSummary {
    pub sections: u64,
    pub by_type: BTreeMap<String, u64>,
    /// Share of sections assigned one of the six counted types.
    pub counted_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MentionSummary {
    pub articles: u64,
    pub counted: u64,
    pub skipped: SkipTally,
    pub disciplines_with_citations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub ingest: IngestSummary,
    pub matching: MatchSummary,
    pub sections: SectionSummary,
    pub mentions: MentionSummary,
    pub config: ConfigEcho,
    /// sha256 of the mapping files in effect.
    pub mapping_digests: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkItem {
    pub source: String,
    pub article: ArticleRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Reject {
    source: String,
    kind: String,
    message: String,
}

// --- io helpers ------------------------------------------------------------

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), PipelineError> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(ReportError::from)?;
        buf.push(b'\n');
    }
    write_file(path, &buf)?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = read_stage_file(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(k, line)| {
            serde_json::from_str(line).map_err(|e| PipelineError::StageInput {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", k + 1),
            })
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    write_file(path, pretty_json(value)?.as_bytes())?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = read_stage_file(path)?;
    serde_json::from_str(&text).map_err(|e| PipelineError::StageInput {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_stage_file(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::StageInput {
        path: path.to_path_buf(),
        message: format!("{e} (has the previous stage run?)"),
    })
}

fn read_mapping(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::InputMissing(format!("{}: {e}", path.display())))
}

fn pool(config: &PipelineConfig) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))
}

fn registry(config: &PipelineConfig) -> Result<DisciplineRegistry, PipelineError> {
    match &config.registry_path {
        None => Ok(DisciplineRegistry::default()),
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| PipelineError::InputMissing(format!("{}: {e}", p.display())))?;
            DisciplineRegistry::from_reader(file)
                .map_err(|e| PipelineError::MappingFileMalformed(format!("{}: {e}", p.display())))
        }
    }
}

fn guards(config: &PipelineConfig) -> Result<SentenceGuards, PipelineError> {
    Ok(match &config.guards_path {
        None => SentenceGuards::default(),
        Some(p) => SentenceGuards::parse_list(&read_mapping(p)?),
    })
}

fn rules(config: &PipelineConfig) -> Result<KeywordRules, PipelineError> {
    match &config.rules_path {
        None => Ok(KeywordRules::default()),
        Some(p) => Ok(read_mapping(p)?.parse()?),
    }
}

fn input_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| PipelineError::InputMissing(format!("input directory {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(io_err(dir))?.path();
        let xml = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("xml") || e.eq_ignore_ascii_case("nxml"));
        if xml && path.is_file() {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(PipelineError::InputMissing(format!(
            "no .xml or .nxml files in {}",
            dir.display()
        )));
    }
    files.sort();
    Ok(files)
}

// --- stages ----------------------------------------------------------------

enum IngestOutcome {
    Kept(WorkItem, ParseWarnings),
    Dropped(ParseWarnings),
    Rejected(Reject),
}

/// Parse every input file and apply the journal-ratio filter.
pub fn stage_ingest(config: &PipelineConfig) -> Result<IngestSummary, PipelineError> {
    config.validate()?;
    let files = input_files(&config.input_dir)?;
    let guards = guards(config)?;
    let aliases = SourceTypeAliases::default();

    let results: Vec<(String, String, IngestOutcome)> = pool(config)?.install(|| {
        files
            .par_iter()
            .map(|path| {
                let source = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
                let bytes = match fs::read(path) {
                    Ok(b) => b,
                    Err(e) => {
                        let reject = Reject {
                            source: source.clone(),
                            kind: "Io".into(),
                            message: e.to_string(),
                        };
                        return (source, String::new(), IngestOutcome::Rejected(reject));
                    }
                };
                let digest = sha256_hex(&bytes);
                let outcome = match parse_article(&bytes, &guards) {
                    Err(e) => IngestOutcome::Rejected(Reject {
                        source: source.clone(),
                        kind: e.kind().into(),
                        message: e.to_string(),
                    }),
                    Ok(parsed) => {
                        let keep = journal_ratio_filter(
                            &parsed.article,
                            config.journal_ratio_threshold,
                            config.journal_ratio_comparator,
                            &aliases,
                        )
                        .map(|d| d.keep)
                        .unwrap_or(false);
                        if keep {
                            IngestOutcome::Kept(
                                WorkItem {
                                    source: source.clone(),
                                    article: parsed.article,
                                },
                                parsed.warnings,
                            )
                        } else {
                            IngestOutcome::Dropped(parsed.warnings)
                        }
                    }
                };
                (source, digest, outcome)
            })
            .collect()
    });

    let mut summary = IngestSummary {
        files_seen: files.len() as u64,
        ..IngestSummary::default()
    };
    let mut kept = Vec::new();
    let mut rejects = Vec::new();
    let mut add_warnings = |w: &ParseWarnings| {
        summary.warnings.dangling_markers += w.dangling_markers;
        summary.warnings.duplicate_ref_ids += w.duplicate_ref_ids;
        summary.warnings.marker_only_mentions += w.marker_only_mentions;
    };
    let mut digests = BTreeMap::new();
    for (source, digest, outcome) in results {
        if !digest.is_empty() {
            digests.insert(source, digest);
        }
        match outcome {
            IngestOutcome::Kept(item, w) => {
                add_warnings(&w);
                kept.push(item);
            }
            IngestOutcome::Dropped(w) => {
                add_warnings(&w);
                summary.journal_ratio_filter.dropped += 1;
            }
            IngestOutcome::Rejected(r) => {
                log::warn!("rejected {}: {}", r.source, r.message);
                *summary.rejected.entry(r.kind.clone()).or_default() += 1;
                rejects.push(r);
            }
        }
    }
    summary.input_digests = digests;
    summary.journal_ratio_filter.kept = kept.len() as u64;
    summary.parsed = summary.journal_ratio_filter.kept + summary.journal_ratio_filter.dropped;

    let work = config.work_dir();
    write_jsonl(&work.join(INGESTED), &kept)?;
    write_jsonl(&work.join(REJECTS), &rejects)?;
    write_json(&work.join(INGEST_SUMMARY), &summary)?;
    log::info!(
        "ingest: {} files, {} parsed, {} kept by journal ratio",
        summary.files_seen,
        summary.parsed,
        summary.journal_ratio_filter.kept
    );
    Ok(summary)
}

fn load_matcher(config: &PipelineConfig, registry: &DisciplineRegistry) -> Result<Matcher, PipelineError> {
    if !config.journals_path.is_file() {
        return Err(PipelineError::InputMissing(format!(
            "journal list {}",
            config.journals_path.display()
        )));
    }
    let journals = JournalIndex::load(&config.journals_path, registry)?;
    let abbrevs = match &config.abbrevs_path {
        Some(p) => AbbrevIndex::load(p)?,
        None => AbbrevIndex::default(),
    };
    Ok(Matcher::new(
        journals,
        abbrevs,
        MatchConfig {
            stages: config.match_stages,
            fuzzy_threshold: config.fuzzy_threshold,
            edit_ops: config.edit_ops,
        },
    ))
}

/// Resolve journal-type references to disciplines and apply the coverage filter.
pub fn stage_match(config: &PipelineConfig) -> Result<MatchSummary, PipelineError> {
    config.validate()?;
    let registry = registry(config)?;
    let matcher = load_matcher(config, &registry)?;
    let aliases = SourceTypeAliases::default();
    let items: Vec<WorkItem> = read_jsonl(&config.work_dir().join(INGESTED))?;

    let matched: Vec<WorkItem> = pool(config)?.install(|| {
        items
            .into_par_iter()
            .map(|mut item| {
                for r in &mut item.article.references {
                    r.match_result = Some(if aliases.is_journal(&r.source_type_raw) {
                        matcher.match_normalized(&r.journal_name_normalized)
                    } else {
                        crate::matcher::MatchResult::unmatched()
                    });
                }
                item
            })
            .collect()
    });

    let mut summary = MatchSummary {
        articles: matched.len() as u64,
        ..MatchSummary::default()
    };
    let mut disciplines = BTreeSet::new();
    let mut review = String::from("source,ref_id,journal_name,stage,matched_title,discipline,normalized_distance\n");
    let mut kept = Vec::new();
    for item in matched {
        for r in &item.article.references {
            summary.references_total += 1;
            if !aliases.is_journal(&r.source_type_raw) {
                continue;
            }
            summary.journal_references += 1;
            let m = r.match_result.as_ref().expect("set above");
            match m.stage {
                MatchStage::Direct => summary.stages.direct += 1,
                MatchStage::AbbrevExpansion => summary.stages.abbreviation += 1,
                MatchStage::EditDistance => summary.stages.edit_distance += 1,
                MatchStage::Unmatched => summary.stages.unmatched += 1,
            }
            if let Some(d) = m.discipline {
                disciplines.insert(d);
            }
            if m.stage != MatchStage::Direct {
                review.push_str(&format!(
                    "{},{},{},{:?},{},{},{}\n",
                    csv_cell(&item.source),
                    csv_cell(&r.ref_id),
                    csv_cell(&r.journal_name_raw),
                    m.stage,
                    csv_cell(m.matched_title.as_deref().unwrap_or("")),
                    m.discipline.map(|d| registry.short_name(d).to_string()).unwrap_or_default(),
                    m.normalized_distance.map(|d| format!("{d:.4}")).unwrap_or_default(),
                ));
            }
        }
        let keep = discipline_coverage_filter(&item.article, config.coverage_threshold)
            .map(|d| d.keep)
            .unwrap_or(false);
        if keep {
            summary.coverage_filter.kept += 1;
            kept.push(item);
        } else {
            summary.coverage_filter.dropped += 1;
        }
    }
    let s = &summary.stages;
    summary.cumulative_matched = [s.direct, s.direct + s.abbreviation, s.direct + s.abbreviation + s.edit_distance];
    if summary.references_total > 0 {
        for k in 0..3 {
            summary.cumulative_percent[k] =
                (summary.cumulative_matched[k] as f64 / summary.references_total as f64 * 10_000.0).round() / 100.0;
        }
    }
    summary.disciplines_matched = disciplines.len() as u64;

    let work = config.work_dir();
    write_jsonl(&work.join(MATCHED), &kept)?;
    write_file(&work.join(MATCH_REVIEW), review.as_bytes())?;
    write_json(&work.join(MATCH_SUMMARY), &summary)?;
    log::info!(
        "match: {} of {} references resolved, {} articles kept by coverage",
        summary.matched(),
        summary.references_total,
        summary.coverage_filter.kept
    );
    Ok(summary)
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Assign a section type to every section.
pub fn stage_classify(config: &PipelineConfig) -> Result<SectionSummary, PipelineError> {
    config.validate()?;
    let rules = rules(config)?;
    let items: Vec<WorkItem> = read_jsonl(&config.work_dir().join(MATCHED))?;
    let classified: Vec<WorkItem> = pool(config)?.install(|| {
        items
            .into_par_iter()
            .map(|mut item| {
                for s in &mut item.article.sections {
                    s.section_type = Some(classify_heading(&s.normalized_heading, &rules));
                }
                item
            })
            .collect()
    });

    let mut summary = SectionSummary::default();
    let mut counted = 0u64;
    for s in classified.iter().flat_map(|i| &i.article.sections) {
        let t = s.section_type.unwrap_or(SectionType::Unclassified);
        summary.sections += 1;
        *summary.by_type.entry(t.label().to_string()).or_default() += 1;
        if t.column().is_some() {
            counted += 1;
        }
    }
    if summary.sections > 0 {
        summary.counted_fraction = counted as f64 / summary.sections as f64;
    }
    let work = config.work_dir();
    write_jsonl(&work.join(CLASSIFIED), &classified)?;
    write_json(&work.join(CLASSIFY_SUMMARY), &summary)?;
    Ok(summary)
}

/// Accumulate the discipline × section grid.
pub fn stage_metrics(config: &PipelineConfig) -> Result<MetricsTable, PipelineError> {
    config.validate()?;
    let items: Vec<WorkItem> = read_jsonl(&config.work_dir().join(CLASSIFIED))?;
    let shards: Vec<Result<MetricsTable, MetricsError>> = pool(config)?.install(|| {
        items
            .par_iter()
            .map(|item| {
                let mut t = MetricsTable::new();
                t.accumulate_article(&item.article)?;
                Ok(t)
            })
            .collect()
    });
    let mut table = MetricsTable::new();
    for shard in shards {
        table.merge_from(&shard?)?;
    }
    write_json(&config.work_dir().join(METRICS), &table)?;
    Ok(table)
}

/// ANOVA, Levene and LSD on the accumulated grid.
pub fn stage_stats(config: &PipelineConfig) -> Result<String, PipelineError> {
    config.validate()?;
    let registry = registry(config)?;
    let path = config.work_dir().join(METRICS);
    let table: MetricsTable = read_json(&path)?;
    table.check_shape()?;
    let digest = sha256_hex(read_stage_file(&path)?.as_bytes());
    let mut report = analyze_table(&table, &registry);
    for r in [
        &mut report.proportions_by_section,
        &mut report.cited_intensity_by_discipline,
        &mut report.citation_length_by_discipline,
    ] {
        r.input_sha256 = Some(digest.clone());
    }
    let json = pretty_json(&report)?;
    write_file(&config.work_dir().join(ANOVA), json.as_bytes())?;
    Ok(json)
}

/// Write the report directory and the run manifest.
pub fn stage_report(config: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let registry = registry(config)?;
    let work = config.work_dir();
    let table: MetricsTable = read_json(&work.join(METRICS))?;
    table.check_shape()?;
    let anova_json = read_stage_file(&work.join(ANOVA))?;
    let reports = config.reports_dir();
    emit_tables(&table, &registry, &anova_json, &reports)?;

    let mut mapping_digests = BTreeMap::new();
    let mut digest = |key: &str, path: &Path| -> Result<(), PipelineError> {
        let bytes = fs::read(path).map_err(|e| PipelineError::InputMissing(format!("{}: {e}", path.display())))?;
        mapping_digests.insert(key.to_string(), sha256_hex(&bytes));
        Ok(())
    };
    digest("journals", &config.journals_path)?;
    for (key, path) in [
        ("abbreviations", &config.abbrevs_path),
        ("registry", &config.registry_path),
        ("rules", &config.rules_path),
        ("guards", &config.guards_path),
    ] {
        if let Some(p) = path {
            digest(key, p)?;
        }
    }

    let totals = table.grand_totals();
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        ingest: read_json(&work.join(INGEST_SUMMARY))?,
        matching: read_json(&work.join(MATCH_SUMMARY))?,
        sections: read_json(&work.join(CLASSIFY_SUMMARY))?,
        mentions: MentionSummary {
            articles: table.article_count,
            counted: totals.mentions,
            skipped: table.skipped,
            disciplines_with_citations: table.disciplines_with_citations().len() as u64,
        },
        config: config.echo(),
        mapping_digests,
    };
    write_json(&reports.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// All stages in order.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    stage_ingest(config)?;
    stage_match(config)?;
    stage_classify(config)?;
    stage_metrics(config)?;
    stage_stats(config)?;
    stage_report(config)
}

/// Articles after a given stage, for inspection and tests.
pub fn load_work_items(config: &PipelineConfig, stage: &str) -> Result<Vec<WorkItem>, PipelineError> {
    let name = match stage {
        "ingest" => INGESTED,
        "match" => MATCHED,
        "classify" => CLASSIFIED,
        other => return Err(PipelineError::ConfigInvalid(format!("no article file for stage `{other}`"))),
    };
    read_jsonl(&config.work_dir().join(name))
}

// --- statistics on external grids -------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    /// One group per row (discipline).
    #[default]
    Rows,
    /// One group per section column.
    Columns,
}

/// Run the statistics battery on a labelled grid file and write
/// `<output_dir>/anova_report.json`.
pub fn run_stats_only(
    grid_path: &Path,
    output_dir: &Path,
    options: GridOptions,
    group_by: GroupBy,
) -> Result<StatsReport, PipelineError> {
    let bytes = fs::read(grid_path).map_err(|e| PipelineError::InputMissing(format!("{}: {e}", grid_path.display())))?;
    let text = String::from_utf8_lossy(&bytes);
    let grid = SectionGrid::parse(&text, options)?;
    let groups = match group_by {
        GroupBy::Rows => grid.row_groups(),
        GroupBy::Columns => grid.column_groups(),
    };
    let title = grid_path
        .file_name()
        .map_or_else(|| "grid".to_string(), |n| n.to_string_lossy().into_owned());
    let report = analyze_groups(&title, &groups).with_digest(sha256_hex(&bytes));
    write_json(&output_dir.join(ANOVA), &report)?;
    Ok(report)
}

/// ANOVA and LSD from a `label,n,mean,sd` file, optionally auditing a
/// printed ANOVA table given as JSON.
pub fn run_stats_from_summaries(
    summaries_path: &Path,
    reported_path: Option<&Path>,
    output_dir: &Path,
) -> Result<StatsReport, PipelineError> {
    let bytes = fs::read(summaries_path)
        .map_err(|e| PipelineError::InputMissing(format!("{}: {e}", summaries_path.display())))?;
    let summaries = parse_summaries(&String::from_utf8_lossy(&bytes))?;
    let reported: Option<ReportedAnova> = match reported_path {
        Some(p) => Some(
            serde_json::from_str(&read_mapping(p)?)
                .map_err(|e| PipelineError::MappingFileMalformed(format!("{}: {e}", p.display())))?,
        ),
        None => None,
    };
    let title = summaries_path
        .file_name()
        .map_or_else(|| "summaries".to_string(), |n| n.to_string_lossy().into_owned());
    let report = analyze_summaries(&title, &summaries, reported.as_ref()).with_digest(sha256_hex(&bytes));
    write_json(&output_dir.join(ANOVA), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let ok = PipelineConfig::new("in", "out", "j.csv");
        ok.validate().unwrap();
        for bad in [
            PipelineConfig {
                journal_ratio_threshold: 0.0,
                ..ok.clone()
            },
            PipelineConfig {
                coverage_threshold: 1.5,
                ..ok.clone()
            },
            PipelineConfig {
                fuzzy_threshold: -0.1,
                ..ok.clone()
            },
            PipelineConfig {
                worker_count: 0,
                ..ok.clone()
            },
        ] {
            assert!(matches!(bad.validate(), Err(PipelineError::ConfigInvalid(_))));
        }
        let one = PipelineConfig {
            journal_ratio_threshold: 1.0,
            ..ok
        };
        one.validate().unwrap();
    }

    #[test]
    fn missing_or_empty_input_dir() {
        let out = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::new(out.path().join("nope"), out.path(), "j.csv");
        assert!(matches!(run_pipeline(&cfg), Err(PipelineError::InputMissing(_))));
        let empty = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::new(empty.path(), out.path(), "j.csv");
        assert!(matches!(run_pipeline(&cfg), Err(PipelineError::InputMissing(_))));
    }

    #[test]
    fn later_stage_without_earlier_output() {
        let out = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::new(out.path(), out.path(), "j.csv");
        assert!(matches!(stage_metrics(&cfg), Err(PipelineError::StageInput { .. })));
    }

    #[test]
    fn malformed_rules_file_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let rules = dir.path().join("rules.txt");
        fs::write(&rules, "[roles]\nI = intro\nM = intro\n").unwrap();
        let cfg = PipelineConfig {
            rules_path: Some(rules),
            ..PipelineConfig::new(dir.path(), dir.path(), "j.csv")
        };
        assert!(matches!(super::rules(&cfg), Err(PipelineError::MappingFileMalformed(_))));
    }

    #[test]
    fn constant_grid_is_degenerate() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("Discipline,I,M,R,D,MR,RD\n");
        for k in 0..27 {
            text.push_str(&format!("d{k},1.5,1.5,1.5,1.5,1.5,1.5\n"));
        }
        let grid = dir.path().join("grid.csv");
        fs::write(&grid, text).unwrap();
        let report = run_stats_only(&grid, dir.path(), GridOptions::default(), GroupBy::Rows).unwrap();
        assert!(report.anova.unwrap().degenerate);
        assert!(dir.path().join(ANOVA).exists());
    }
}
