//! Statistics reports and the exported tables, JSON and charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chart::{render_bar_chart, ChartError};
use crate::discipline::{DisciplineId, DisciplineRegistry, DISCIPLINE_COUNT};
use crate::grid::{AVERAGE_ROW, SD_ROW};
use crate::metrics::{MetricsError, MetricsTable};
use crate::sections::SectionType;
use crate::stats::{
    audit_reported_anova, levene_test, one_way_anova, one_way_anova_from_summaries, pairwise_lsd,
    pairwise_lsd_from_summaries, summarize_groups, AnovaResult, GroupSamples, GroupSummary, Inconsistency,
    LeveneCenter, LeveneResult, PairwiseComparison, ReportedAnova,
};

/// Relative tolerance when auditing printed ANOVA tables.
pub const AUDIT_REL_TOL: f64 = 0.05;

/// Sections compared in the proportion ANOVA. MR and RD carry too few
/// citations to form meaningful groups.
pub const PROPORTION_SECTIONS: [SectionType; 4] = [SectionType::I, SectionType::M, SectionType::R, SectionType::D];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serializing report: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeveneEntry {
    pub method: &'static str,
    #[serde(flatten)]
    pub result: LeveneResult<f64>,
}

fn levene_method(center: LeveneCenter) -> &'static str {
    match center {
        LeveneCenter::Mean => "based on mean",
        LeveneCenter::Median => "based on median",
        LeveneCenter::MedianAdjustedDf => "based on median, Satterthwaite-style adjusted df (implementation choice)",
    }
}

/// ANOVA, Levene and LSD results for one set of groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub title: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
    pub observations: usize,
    pub groups: Vec<GroupSummary<f64>>,
    /// Groups left out for having fewer than two defined values.
    pub excluded_groups: Vec<String>,
    pub anova: Option<AnovaResult<f64>>,
    pub levene: Vec<LeveneEntry>,
    pub pairwise: Vec<PairwiseComparison<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reported_anova_audit: Vec<Inconsistency>,
    pub notes: Vec<String>,
}

impl StatsReport {
    fn empty(title: &str) -> Self {
        Self {
            title: title.to_string(),
            input_sha256: None,
            observations: 0,
            groups: Vec::new(),
            excluded_groups: Vec::new(),
            anova: None,
            levene: Vec::new(),
            pairwise: Vec::new(),
            reported_anova_audit: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_digest(mut self, digest: String) -> Self {
        self.input_sha256 = Some(digest);
        self
    }

    pub fn levene(&self, center: LeveneCenter) -> Option<&LeveneResult<f64>> {
        self.levene.iter().map(|e| &e.result).find(|r| r.center == center)
    }
}

/// Run the full battery on raw groups. Never fails: problems land in `notes`.
pub fn analyze_groups(title: &str, groups: &[GroupSamples<f64>]) -> StatsReport {
    let mut report = StatsReport::empty(title);
    let (included, excluded): (Vec<_>, Vec<_>) = groups.iter().cloned().partition(|g| g.values.len() >= 2);
    report.excluded_groups = excluded.into_iter().map(|g| g.label).collect();
    report.observations = included.iter().map(|g| g.values.len()).sum();
    if included.len() < 2 {
        report
            .notes
            .push(format!("only {} group(s) have two or more values; no test run", included.len()));
        return report;
    }
    match summarize_groups(&included) {
        Ok(s) => report.groups = s,
        Err(e) => report.notes.push(e.to_string()),
    }
    match one_way_anova(&included) {
        Ok(anova) => {
            if anova.degenerate {
                report.notes.push("degenerate groups: within-group variation is zero".into());
            }
            match pairwise_lsd(&included, &anova) {
                Ok(p) => report.pairwise = p,
                Err(e) => report.notes.push(e.to_string()),
            }
            report.anova = Some(anova);
        }
        Err(e) => report.notes.push(e.to_string()),
    }
    for center in LeveneCenter::ALL {
        match levene_test(&included, center) {
            Ok(result) => report.levene.push(LeveneEntry {
                method: levene_method(center),
                result,
            }),
            Err(e) => report.notes.push(format!("levene ({}): {e}", levene_method(center))),
        }
    }
    report
}

/// ANOVA and LSD from published group summaries, auditing a printed table if given.
pub fn analyze_summaries(title: &str, summaries: &[GroupSummary<f64>], reported: Option<&ReportedAnova>) -> StatsReport {
    let mut report = StatsReport::empty(title);
    report.groups = summaries.to_vec();
    report.observations = summaries.iter().map(|s| s.n).sum();
    report
        .notes
        .push("Levene tests need raw values and are not computed from summaries".into());
    match one_way_anova_from_summaries(summaries) {
        Ok(anova) => {
            match pairwise_lsd_from_summaries(summaries, anova.ms_within, anova.df_within) {
                Ok(p) => report.pairwise = p,
                Err(e) => report.notes.push(e.to_string()),
            }
            if let Some(r) = reported {
                report.reported_anova_audit = audit_reported_anova(r, Some(&anova), AUDIT_REL_TOL);
            }
            report.anova = Some(anova);
        }
        Err(e) => report.notes.push(e.to_string()),
    }
    if report.anova.is_none() {
        if let Some(r) = reported {
            report.reported_anova_audit = audit_reported_anova::<f64>(r, None, AUDIT_REL_TOL);
        }
    }
    report
}

/// The three analyses run on a metrics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaReport {
    pub proportions_by_section: StatsReport,
    pub cited_intensity_by_discipline: StatsReport,
    pub citation_length_by_discipline: StatsReport,
}

/// Per-section proportion groups (one value per discipline with citations).
pub fn proportion_groups(table: &MetricsTable) -> Vec<GroupSamples<f64>> {
    let cited = table.disciplines_with_citations();
    PROPORTION_SECTIONS
        .iter()
        .map(|&j| {
            let values = cited
                .iter()
                .filter_map(|&i| table.proportion_section::<f64>(i, j).ok())
                .collect();
            GroupSamples::new(j.label(), values)
        })
        .collect()
}

/// Per-discipline groups of defined cell ratios, rows in registry order.
pub fn ratio_groups(
    table: &MetricsTable,
    registry: &DisciplineRegistry,
    ratio: fn(&MetricsTable, DisciplineId, SectionType) -> Result<f64, MetricsError>,
) -> Vec<GroupSamples<f64>> {
    registry
        .alphabetical()
        .into_iter()
        .map(|i| {
            let values = SectionType::COUNTED
                .iter()
                .filter_map(|&j| ratio(table, i, j).ok())
                .collect();
            GroupSamples::new(registry.short_name(i), values)
        })
        .collect()
}

fn aci_cell(t: &MetricsTable, i: DisciplineId, j: SectionType) -> Result<f64, MetricsError> {
    t.avg_cited_intensity(i, Some(j))
}

fn acl_cell(t: &MetricsTable, i: DisciplineId, j: SectionType) -> Result<f64, MetricsError> {
    t.avg_citation_length(i, Some(j))
}

pub fn analyze_table(table: &MetricsTable, registry: &DisciplineRegistry) -> AnovaReport {
    AnovaReport {
        proportions_by_section: analyze_groups("proportion of citations by section", &proportion_groups(table)),
        cited_intensity_by_discipline: analyze_groups(
            "average cited intensity by discipline",
            &ratio_groups(table, registry, aci_cell),
        ),
        citation_length_by_discipline: analyze_groups(
            "average citation length by discipline",
            &ratio_groups(table, registry, acl_cell),
        ),
    }
}

// --- tables ----------------------------------------------------------------

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Five decimals with trailing zeros dropped, as in the appendix tables.
fn fmt_sd(v: f64) -> String {
    let s = format!("{v:.5}");
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}

fn rendered(v: Option<f64>) -> f64 {
    fmt2(v.unwrap_or(0.0)).parse().unwrap_or(0.0)
}

fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Percent of each discipline's citations per section; undefined rows print as zeros.
pub fn render_proportions_csv(table: &MetricsTable, registry: &DisciplineRegistry) -> String {
    let mut out = String::from("Discipline");
    for j in SectionType::COUNTED {
        let _ = write!(out, ",Section {j} (%)");
    }
    out.push_str(",Total (%)\n");
    for i in registry.alphabetical() {
        out.push_str(&csv_field(registry.short_name(i)));
        let mut total = 0.0;
        for j in SectionType::COUNTED {
            let p = table.proportion_section::<f64>(i, j).map(|p| p * 100.0).unwrap_or(0.0);
            total += p;
            let _ = write!(out, ",{}", fmt2(p));
        }
        let _ = writeln!(out, ",{}", fmt2(total));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioKind {
    CitedIntensity,
    CitationLength,
}

/// Intensity or length grid with per-row ratio and spread, an all-records
/// row and a bottom row of column spreads.
pub fn render_ratio_csv(table: &MetricsTable, registry: &DisciplineRegistry, kind: RatioKind) -> String {
    let (unit, total_col) = match kind {
        RatioKind::CitedIntensity => ("", "ACI_i"),
        RatioKind::CitationLength => (" (words)", "ACL_i (words)"),
    };
    let cell = |i: DisciplineId, j: Option<SectionType>| -> Option<f64> {
        match kind {
            RatioKind::CitedIntensity => table.avg_cited_intensity(i, j).ok(),
            RatioKind::CitationLength => table.avg_citation_length(i, j).ok(),
        }
    };
    let overall = |j: Option<SectionType>| -> Option<f64> {
        match kind {
            RatioKind::CitedIntensity => table.overall_cited_intensity(j).ok(),
            RatioKind::CitationLength => table.overall_citation_length(j).ok(),
        }
    };

    let mut out = String::from("Discipline");
    for j in SectionType::COUNTED {
        let _ = write!(out, ",Section {j}{unit}");
    }
    let _ = writeln!(out, ",{total_col},Standard Deviations");

    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(DISCIPLINE_COUNT); SectionType::COUNTED.len() + 1];
    let push_row = |out: &mut String, label: &str, values: Vec<f64>, total: f64| {
        out.push_str(&csv_field(label));
        for v in &values {
            let _ = write!(out, ",{}", fmt2(*v));
        }
        let _ = writeln!(out, ",{},{}", fmt2(total), fmt_sd(sample_sd(&values)));
    };
    for i in registry.alphabetical() {
        let values: Vec<f64> = SectionType::COUNTED.iter().map(|&j| rendered(cell(i, Some(j)))).collect();
        let total = rendered(cell(i, None));
        for (col, v) in values.iter().chain(std::iter::once(&total)).enumerate() {
            columns[col].push(*v);
        }
        push_row(&mut out, registry.short_name(i), values, total);
    }
    let values: Vec<f64> = SectionType::COUNTED.iter().map(|&j| rendered(overall(Some(j)))).collect();
    push_row(&mut out, AVERAGE_ROW, values, rendered(overall(None)));

    out.push_str(SD_ROW);
    for col in &columns {
        let se = sample_sd(col) / (col.len() as f64).sqrt();
        let _ = write!(out, ",{}", fmt_sd(se));
    }
    out.push_str(",\n");
    out
}

/// Disciplines ranked by share of all citations.
pub fn render_discipline_totals_csv(table: &MetricsTable, registry: &DisciplineRegistry) -> String {
    let mut ids: Vec<DisciplineId> = DisciplineId::all().collect();
    ids.sort_by(|a, b| {
        table
            .discipline_mentions(*b)
            .cmp(&table.discipline_mentions(*a))
            .then_with(|| registry.short_name(*a).cmp(registry.short_name(*b)))
    });
    let opt = |r: Result<f64, MetricsError>, scale: f64| r.map(|v| fmt2(v * scale)).unwrap_or_default();
    let mut out = String::from("rank,discipline,citations,percent,distinct_references,words,aci,acl\n");
    for (rank, i) in ids.into_iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            rank + 1,
            csv_field(registry.short_name(i)),
            table.discipline_mentions(i),
            opt(table.proportion_discipline_overall(i), 100.0),
            table.discipline_refs(i),
            table.discipline_words(i),
            opt(table.avg_cited_intensity(i, None), 1.0),
            opt(table.avg_citation_length(i, None), 1.0),
        );
    }
    out
}

pub fn render_section_totals_csv(table: &MetricsTable) -> String {
    let opt = |r: Result<f64, MetricsError>, scale: f64| r.map(|v| fmt2(v * scale)).unwrap_or_default();
    let mut out = String::from("section,citations,percent,distinct_references,words,aci,acl\n");
    for j in SectionType::COUNTED {
        let totals = table.section_totals(j).unwrap_or_default();
        let _ = writeln!(
            out,
            "{j},{},{},{},{},{},{}",
            totals.mentions,
            opt(table.proportion_section_overall(j), 100.0),
            totals.distinct_refs,
            totals.words,
            opt(table.overall_cited_intensity(Some(j)), 1.0),
            opt(table.overall_citation_length(Some(j)), 1.0),
        );
    }
    out
}

#[derive(Debug, Serialize)]
struct CellJson {
    mentions: u64,
    distinct_refs: u64,
    words: u64,
    proportion: Option<f64>,
    aci: Option<f64>,
    acl: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DisciplineJson {
    id: DisciplineId,
    name: String,
    mentions: u64,
    distinct_refs: u64,
    words: u64,
    proportion_overall: Option<f64>,
    aci: Option<f64>,
    acl: Option<f64>,
    sections: std::collections::BTreeMap<&'static str, CellJson>,
}

#[derive(Debug, Serialize)]
struct SectionJson {
    section: &'static str,
    mentions: u64,
    distinct_refs: u64,
    words: u64,
    proportion_overall: Option<f64>,
    aci: Option<f64>,
    acl: Option<f64>,
}

#[derive(Debug, Serialize)]
struct MetricsJson<'a> {
    article_count: u64,
    skipped: &'a crate::metrics::SkipTally,
    total_mentions: u64,
    total_words: u64,
    overall_aci: Option<f64>,
    overall_acl: Option<f64>,
    disciplines: Vec<DisciplineJson>,
    sections: Vec<SectionJson>,
}

/// Full-precision companion to the CSV grids; undefined ratios are `null`.
pub fn render_metrics_json(table: &MetricsTable, registry: &DisciplineRegistry) -> Result<String, ReportError> {
    let disciplines = DisciplineId::all()
        .map(|i| DisciplineJson {
            id: i,
            name: registry.short_name(i).to_string(),
            mentions: table.discipline_mentions(i),
            distinct_refs: table.discipline_refs(i),
            words: table.discipline_words(i),
            proportion_overall: table.proportion_discipline_overall(i).ok(),
            aci: table.avg_cited_intensity(i, None).ok(),
            acl: table.avg_citation_length(i, None).ok(),
            sections: SectionType::COUNTED
                .iter()
                .map(|&j| {
                    let c = table.cell(i, j).unwrap_or_default();
                    (
                        j.label(),
                        CellJson {
                            mentions: c.mentions,
                            distinct_refs: c.distinct_refs,
                            words: c.words,
                            proportion: table.proportion_section(i, j).ok(),
                            aci: table.avg_cited_intensity(i, Some(j)).ok(),
                            acl: table.avg_citation_length(i, Some(j)).ok(),
                        },
                    )
                })
                .collect(),
        })
        .collect();
    let sections = SectionType::COUNTED
        .iter()
        .map(|&j| {
            let c = table.section_totals(j).unwrap_or_default();
            SectionJson {
                section: j.label(),
                mentions: c.mentions,
                distinct_refs: c.distinct_refs,
                words: c.words,
                proportion_overall: table.proportion_section_overall(j).ok(),
                aci: table.overall_cited_intensity(Some(j)).ok(),
                acl: table.overall_citation_length(Some(j)).ok(),
            }
        })
        .collect();
    let totals = table.grand_totals();
    let doc = MetricsJson {
        article_count: table.article_count,
        skipped: &table.skipped,
        total_mentions: totals.mentions,
        total_words: totals.words,
        overall_aci: table.overall_cited_intensity(None).ok(),
        overall_acl: table.overall_citation_length(None).ok(),
        disciplines,
        sections,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Chart files and their SVG text.
pub fn render_charts(table: &MetricsTable, registry: &DisciplineRegistry) -> Result<Vec<(String, String)>, ReportError> {
    let mut charts = Vec::new();

    let mut shares: Vec<(String, f64)> = table
        .disciplines_with_citations()
        .into_iter()
        .filter_map(|i| {
            table
                .proportion_discipline_overall::<f64>(i)
                .ok()
                .map(|p| (registry.short_name(i).to_string(), p * 100.0))
        })
        .collect();
    sort_desc(&mut shares);
    if !shares.is_empty() {
        charts.push((
            "discipline_share.svg".to_string(),
            render_bar_chart("Share of citations by discipline", "percent of citations", &shares)?,
        ));
    }

    let sections: Vec<(String, f64)> = SectionType::COUNTED
        .iter()
        .filter_map(|&j| table.proportion_section_overall::<f64>(j).ok().map(|p| (j.to_string(), p * 100.0)))
        .collect();
    if !sections.is_empty() {
        charts.push((
            "section_share.svg".to_string(),
            render_bar_chart("Share of citations by section", "percent of citations", &sections)?,
        ));
    }

    let lengths: Vec<(String, f64)> = SectionType::COUNTED
        .iter()
        .filter_map(|&j| table.overall_citation_length::<f64>(Some(j)).ok().map(|v| (j.to_string(), v)))
        .collect();
    if !lengths.is_empty() {
        charts.push((
            "acl_by_section.svg".to_string(),
            render_bar_chart("Average citation length by section", "words", &lengths)?,
        ));
    }

    for j in SectionType::COUNTED {
        let mut top: Vec<(String, f64)> = DisciplineId::all()
            .filter_map(|i| {
                table
                    .avg_cited_intensity::<f64>(i, Some(j))
                    .ok()
                    .map(|v| (registry.short_name(i).to_string(), v))
            })
            .collect();
        sort_desc(&mut top);
        top.truncate(10);
        if !top.is_empty() {
            charts.push((
                format!("aci_top10_{}.svg", j.label().to_lowercase()),
                render_bar_chart(&format!("Top disciplines by cited intensity, section {j}"), "ACI", &top)?,
            ));
        }
    }
    Ok(charts)
}

fn sort_desc(series: &mut [(String, f64)]) {
    series.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

/// Pretty JSON with a trailing newline, the format of every emitted JSON file.
pub fn pretty_json<S: Serialize>(report: &S) -> Result<String, ReportError> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

/// Write every table, JSON report and chart under `reports_dir`.
/// `anova_report_json` is copied verbatim so a persisted report stays byte-identical.
/// Returns the written paths relative to `reports_dir`, sorted.
pub fn emit_tables(
    table: &MetricsTable,
    registry: &DisciplineRegistry,
    anova_report_json: &str,
    reports_dir: &Path,
) -> Result<Vec<String>, ReportError> {
    let mut files: Vec<(String, String)> = vec![
        ("proportions.csv".into(), render_proportions_csv(table, registry)),
        ("aci.csv".into(), render_ratio_csv(table, registry, RatioKind::CitedIntensity)),
        ("acl.csv".into(), render_ratio_csv(table, registry, RatioKind::CitationLength)),
        ("discipline_totals.csv".into(), render_discipline_totals_csv(table, registry)),
        ("section_totals.csv".into(), render_section_totals_csv(table)),
        ("metrics.json".into(), render_metrics_json(table, registry)?),
        ("anova_report.json".into(), anova_report_json.to_string()),
    ];
    for (name, svg) in render_charts(table, registry)? {
        files.push((format!("charts/{name}"), svg));
    }
    // stale charts from an earlier run would break byte-identical directories
    let chart_dir = reports_dir.join("charts");
    if chart_dir.exists() {
        std::fs::remove_dir_all(&chart_dir).map_err(|source| ReportError::Io {
            path: chart_dir.clone(),
            source,
        })?;
    }
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        write_file(&reports_dir.join(&name), contents.as_bytes())?;
        written.push(name);
    }
    written.sort();
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridOptions, SectionGrid};
    use crate::metrics::MetricsCell;

    fn id(n: u8) -> DisciplineId {
        DisciplineId::new(n).unwrap()
    }

    fn sample_table() -> MetricsTable {
        let mut t = MetricsTable::new();
        let cells = [
            (1, SectionType::I, 3, 2, 40),
            (1, SectionType::D, 5, 3, 70),
            (1, SectionType::M, 1, 1, 9),
            (6, SectionType::M, 4, 2, 50),
            (6, SectionType::R, 2, 2, 33),
            (2, SectionType::RD, 1, 1, 12),
        ];
        for (d, j, n, r, l) in cells {
            t.set_cell(
                id(d),
                j,
                MetricsCell {
                    mentions: n,
                    distinct_refs: r,
                    words: l,
                },
            )
            .unwrap();
        }
        t.set_discipline_refs(id(1), 4);
        t.set_discipline_refs(id(6), 3);
        t.set_discipline_refs(id(2), 1);
        t
    }

    #[test]
    fn sd_formatting_follows_appendix() {
        assert_eq!(fmt_sd(0.102700), "0.1027");
        assert_eq!(fmt_sd(0.089091), "0.08909");
        assert_eq!(fmt_sd(0.0), "0");
        assert_eq!(fmt_sd(1.101012), "1.10101");
    }

    #[test]
    fn proportion_rows_sum_to_hundred() {
        let r = DisciplineRegistry::default();
        let csv = render_proportions_csv(&sample_table(), &r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 28);
        assert!(lines[0].starts_with("Discipline,Section I (%)"));
        for line in &lines[1..] {
            let cells: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
            let sum: f64 = cells[..6].iter().sum();
            assert!(sum == 0.0 || (sum - 100.0).abs() <= 0.03, "{line}");
        }
        let medicine = lines.iter().find(|l| l.starts_with("Medicine,")).unwrap();
        assert_eq!(*medicine, "Medicine,33.33,11.11,0.00,55.56,0.00,0.00,100.00");
    }

    #[test]
    fn ratio_grid_round_trips_through_reader() {
        let r = DisciplineRegistry::default();
        let t = sample_table();
        let csv = render_ratio_csv(&t, &r, RatioKind::CitedIntensity);
        let g = SectionGrid::parse(&csv, GridOptions::default()).unwrap();
        assert_eq!(g.rows.len(), 27);
        let math = g.rows.iter().find(|row| row.label == "Mathematics").unwrap();
        assert_eq!(math.values, [None, Some(2.0), Some(1.0), None, None, None]);
        for row in &g.rows {
            let i = r.find(&row.label).unwrap();
            for (k, j) in SectionType::COUNTED.iter().enumerate() {
                let expected = t.avg_cited_intensity::<f64>(i, Some(*j)).ok();
                match (expected, row.values[k]) {
                    (Some(e), Some(v)) => assert!((e - v).abs() <= 0.005 + 1e-12),
                    (None, None) => {}
                    other => panic!("{other:?}"),
                }
            }
        }
        let avg = csv.lines().find(|l| l.starts_with(AVERAGE_ROW)).unwrap();
        // ACI_I over all = 3/2
        assert!(avg.starts_with("Average of all records,1.50,"));
        let sd = csv.lines().last().unwrap();
        assert!(sd.starts_with(SD_ROW) && sd.ends_with(','));
        assert_eq!(sd.split(',').count(), 9);
    }

    #[test]
    fn empty_table_exports_are_valid() {
        let r = DisciplineRegistry::default();
        let t = MetricsTable::new();
        let csv = render_ratio_csv(&t, &r, RatioKind::CitationLength);
        assert!(csv.lines().nth(1).unwrap().ends_with(",0.00,0.00,0.00,0.00,0.00,0.00,0.00,0"));
        let json = render_metrics_json(&t, &r).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v["overall_aci"].is_null());
        assert!(render_charts(&t, &r).unwrap().is_empty());
        let report = analyze_table(&t, &r);
        assert!(report.proportions_by_section.anova.is_none());
        assert!(!report.proportions_by_section.notes.is_empty());
    }

    #[test]
    fn totals_csvs() {
        let r = DisciplineRegistry::default();
        let t = sample_table();
        let d = render_discipline_totals_csv(&t, &r);
        assert_eq!(d.lines().nth(1).unwrap(), "1,Medicine,9,56.25,4,119,2.25,13.22");
        assert_eq!(d.lines().count(), 28);
        let s = render_section_totals_csv(&t);
        assert_eq!(s.lines().nth(2).unwrap(), "M,5,31.25,3,59,1.67,11.80");
    }

    #[test]
    fn groups_with_one_value_are_excluded() {
        let groups = vec![
            GroupSamples::new("a", vec![1.0, 2.0, 3.0]),
            GroupSamples::new("b", vec![2.0, 4.0]),
            GroupSamples::new("c", vec![5.0]),
        ];
        let rep = analyze_groups("t", &groups);
        assert_eq!(rep.excluded_groups, ["c"]);
        assert_eq!(rep.observations, 5);
        assert_eq!(rep.anova.as_ref().unwrap().df_between, 1);
        assert_eq!(rep.levene.len(), 3);
        assert_eq!(rep.pairwise.len(), 1);
        assert!(rep.levene(LeveneCenter::MedianAdjustedDf).is_some());
    }

    #[test]
    fn constant_groups_are_flagged_degenerate() {
        let groups = vec![GroupSamples::new("a", vec![1.0, 1.0]), GroupSamples::new("b", vec![1.0, 1.0])];
        let rep = analyze_groups("t", &groups);
        assert!(rep.anova.as_ref().unwrap().degenerate);
        assert!(rep.notes.iter().any(|n| n.contains("degenerate")));
        serde_json::to_string(&rep).unwrap();
    }

    #[test]
    fn emit_writes_expected_layout() {
        let dir = tempfile::tempdir().unwrap();
        let r = DisciplineRegistry::default();
        let t = sample_table();
        let json = pretty_json(&analyze_table(&t, &r)).unwrap();
        let files = emit_tables(&t, &r, &json, dir.path()).unwrap();
        for name in [
            "proportions.csv",
            "aci.csv",
            "acl.csv",
            "discipline_totals.csv",
            "section_totals.csv",
            "metrics.json",
            "anova_report.json",
            "charts/discipline_share.svg",
            "charts/section_share.svg",
        ] {
            assert!(files.iter().any(|f| f == name), "{name}");
            assert!(dir.path().join(name).exists());
        }
    }
}
