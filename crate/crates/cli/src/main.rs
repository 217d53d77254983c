//! `cca`: command-line front end for the citation content analysis pipeline.
//!
//! Settings resolve in this order: command-line flag, `CCA_*` environment
//! variable, `--config` file, built-in default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cca_core::grid::GridOptions;
use cca_core::ingest::RatioComparator;
use cca_core::matcher::{EditOps, MatchStages};
use cca_core::pipeline::{
    run_pipeline, run_stats_from_summaries, run_stats_only, stage_classify, stage_ingest, stage_match,
    stage_metrics, stage_report, stage_stats, GroupBy, PipelineConfig,
};
use cca_core::report::StatsReport;
use cca_core::LeveneCenter;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cca", version, about = "Citation content analysis over JATS full-text corpora")]
struct Cli {
    #[command(flatten)]
    settings: Settings,

    #[command(subcommand)]
    command: Command,
}

/// Pipeline settings. Every one can also come from the environment or the
/// config file, so none carries a clap default.
#[derive(Debug, Default, Args)]
struct Settings {
    /// Key=value file mirroring the long flag names.
    #[arg(long, global = true, env = "CCA_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory of .xml/.nxml articles.
    #[arg(long, global = true, env = "CCA_INPUT", value_name = "DIR")]
    input: Option<PathBuf>,

    /// Directory for work/ and reports/.
    #[arg(long, global = true, env = "CCA_OUTPUT", value_name = "DIR")]
    output: Option<PathBuf>,

    /// Journal list, `title,discipline`.
    #[arg(long, global = true, env = "CCA_JOURNALS", value_name = "PATH")]
    journals: Option<PathBuf>,

    /// Abbreviation list, `abbreviation,full_title`.
    #[arg(long, global = true, env = "CCA_ABBREVS", value_name = "PATH")]
    abbrevs: Option<PathBuf>,

    /// Discipline registry override, `id,full_name,short_name`.
    #[arg(long, global = true, env = "CCA_REGISTRY", value_name = "PATH")]
    registry: Option<PathBuf>,

    /// Section keyword rules.
    #[arg(long, global = true, env = "CCA_RULES", value_name = "PATH")]
    rules: Option<PathBuf>,

    /// Extra sentence-split guard terms, one per line.
    #[arg(long, global = true, env = "CCA_GUARDS", value_name = "PATH")]
    guards: Option<PathBuf>,

    /// Minimum share of journal-type references [default: 0.8].
    #[arg(long, global = true, env = "CCA_JOURNAL_RATIO", value_name = "X")]
    journal_ratio: Option<f64>,

    /// strict (share must exceed the threshold) or inclusive [default: strict].
    #[arg(long, global = true, env = "CCA_JOURNAL_RATIO_COMPARATOR", value_name = "MODE")]
    journal_ratio_comparator: Option<RatioComparator>,

    /// Minimum share of references resolved to a discipline [default: 0.8].
    #[arg(long, global = true, env = "CCA_COVERAGE", value_name = "X")]
    coverage: Option<f64>,

    /// Matching stages to run: 1 direct, 2 abbreviation, 3 edit distance [default: 1,2,3].
    #[arg(long, global = true, env = "CCA_MATCH_STAGES", value_name = "LIST")]
    match_stages: Option<MatchStages>,

    /// Largest accepted normalized edit distance [default: 0.2].
    #[arg(long, global = true, env = "CCA_FUZZY_THRESHOLD", value_name = "X")]
    fuzzy_threshold: Option<f64>,

    /// levenshtein or insert-delete [default: levenshtein].
    #[arg(long, global = true, env = "CCA_EDIT_OPS", value_name = "OPS")]
    edit_ops: Option<EditOps>,

    /// Worker threads [default: available cores].
    #[arg(long, global = true, env = "CCA_WORKERS", value_name = "N")]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Every stage, ingest through report.
    Run,
    /// Parse articles and apply the journal-ratio filter.
    Ingest,
    /// Resolve references to disciplines and apply the coverage filter.
    Match,
    /// Type section headings.
    Classify,
    /// Accumulate the discipline by section table.
    Metrics,
    /// Significance tests, on pipeline output or on an external file.
    Stats(StatsArgs),
    /// Write tables, charts and the run manifest.
    Report,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Labelled discipline by section grid (CSV or TSV).
    #[arg(long, value_name = "PATH", conflicts_with = "summaries")]
    grid: Option<PathBuf>,

    /// Group summaries, `label,n,mean,sd`.
    #[arg(long, value_name = "PATH")]
    summaries: Option<PathBuf>,

    /// Printed ANOVA table (JSON) to audit against the summaries.
    #[arg(long, value_name = "PATH", requires = "summaries")]
    reported: Option<PathBuf>,

    /// Grid grouping: one group per row or per section column.
    #[arg(long, value_enum, default_value_t = Grouping::Rows, requires = "grid")]
    group_by: Grouping,

    /// Treat 0 cells in the grid as observations instead of undefined.
    #[arg(long, requires = "grid")]
    keep_zeros: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Grouping {
    Rows,
    Columns,
}

const CONFIG_KEYS: [&str; 14] = [
    "input",
    "output",
    "journals",
    "abbrevs",
    "registry",
    "rules",
    "guards",
    "journal-ratio",
    "journal-ratio-comparator",
    "coverage",
    "match-stages",
    "fuzzy-threshold",
    "edit-ops",
    "workers",
];

/// Read `key = value` lines; `#` starts a comment, `_` and `-` are interchangeable in keys.
fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("config file {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key = value", path.display(), k + 1);
        };
        let key = key.trim().replace('_', "-").to_ascii_lowercase();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            bail!("{}:{}: unknown key `{key}`", path.display(), k + 1);
        }
        let value = value.trim().trim_matches('"').to_string();
        out.insert(key, value);
    }
    Ok(out)
}

fn parse_value<T>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("config key `{key}` = `{v}`: {e}")))
        .transpose()
}

impl Settings {
    /// Fill every unset field from the config file, if there is one.
    fn with_file(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let f = read_config_file(&path)?;
        // relative paths in the file are taken relative to the file itself
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let p = |key: &str| f.get(key).map(|v| base.join(v));
        self.input = self.input.or_else(|| p("input"));
        self.output = self.output.or_else(|| p("output"));
        self.journals = self.journals.or_else(|| p("journals"));
        self.abbrevs = self.abbrevs.or_else(|| p("abbrevs"));
        self.registry = self.registry.or_else(|| p("registry"));
        self.rules = self.rules.or_else(|| p("rules"));
        self.guards = self.guards.or_else(|| p("guards"));
        self.journal_ratio = self.journal_ratio.or(parse_value(&f, "journal-ratio")?);
        self.journal_ratio_comparator = self
            .journal_ratio_comparator
            .or(parse_value(&f, "journal-ratio-comparator")?);
        self.coverage = self.coverage.or(parse_value(&f, "coverage")?);
        self.match_stages = self.match_stages.or(parse_value(&f, "match-stages")?);
        self.fuzzy_threshold = self.fuzzy_threshold.or(parse_value(&f, "fuzzy-threshold")?);
        self.edit_ops = self.edit_ops.or(parse_value(&f, "edit-ops")?);
        self.workers = self.workers.or(parse_value(&f, "workers")?);
        Ok(self)
    }

    fn output_dir(&self) -> Result<PathBuf> {
        self.output.clone().context("--output (or CCA_OUTPUT / config `output`) is required")
    }

    /// Later stages only read work/, so they may leave input and journals unset.
    fn pipeline_config(&self, need: Needs) -> Result<PipelineConfig> {
        let input = match (&self.input, need.input) {
            (Some(p), _) => p.clone(),
            (None, false) => PathBuf::new(),
            (None, true) => bail!("--input (or CCA_INPUT / config `input`) is required"),
        };
        let journals = match (&self.journals, need.journals) {
            (Some(p), _) => p.clone(),
            (None, false) => PathBuf::new(),
            (None, true) => bail!("--journals (or CCA_JOURNALS / config `journals`) is required"),
        };
        let mut c = PipelineConfig::new(input, self.output_dir()?, journals);
        c.abbrevs_path = self.abbrevs.clone();
        c.registry_path = self.registry.clone();
        c.rules_path = self.rules.clone();
        c.guards_path = self.guards.clone();
        if let Some(v) = self.journal_ratio {
            c.journal_ratio_threshold = v;
        }
        if let Some(v) = self.journal_ratio_comparator {
            c.journal_ratio_comparator = v;
        }
        if let Some(v) = self.coverage {
            c.coverage_threshold = v;
        }
        if let Some(v) = self.match_stages {
            c.match_stages = v;
        }
        if let Some(v) = self.fuzzy_threshold {
            c.fuzzy_threshold = v;
        }
        if let Some(v) = self.edit_ops {
            c.edit_ops = v;
        }
        if let Some(v) = self.workers {
            c.worker_count = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Copy)]
struct Needs {
    input: bool,
    journals: bool,
}

const EVERYTHING: Needs = Needs { input: true, journals: true };
const INPUT: Needs = Needs { input: true, journals: false };
const JOURNALS: Needs = Needs { input: false, journals: true };
const WORK_ONLY: Needs = Needs { input: false, journals: false };

fn print_stats(report: &StatsReport) {
    println!("{}: {} observations in {} groups", report.title, report.observations, report.groups.len());
    if let Some(a) = &report.anova {
        println!(
            "  ANOVA F({}, {}) = {:.4}, p = {:.4}",
            a.df_between, a.df_within, a.f_statistic, a.p_value
        );
    }
    for center in LeveneCenter::ALL {
        if let Some(l) = report.levene(center) {
            println!("  Levene ({center:?}) W = {:.4}, p = {:.4}", l.statistic, l.p_value);
        }
    }
    for flag in &report.reported_anova_audit {
        println!(
            "  printed {} = {} disagrees with {} = {:.4}",
            flag.field, flag.printed, flag.basis, flag.expected
        );
    }
    for note in &report.notes {
        println!("  note: {note}");
    }
}

fn run(cli: Cli) -> Result<()> {
    let settings = cli.settings.with_file()?;
    match cli.command {
        Command::Run => {
            let config = settings.pipeline_config(EVERYTHING)?;
            log::debug!("{config:?}");
            let m = run_pipeline(&config)?;
            println!(
                "{} files, {} parsed, {} kept after filters, {} counted mentions; reports in {}",
                m.ingest.files_seen,
                m.ingest.parsed,
                m.matching.coverage_filter.kept,
                m.mentions.counted,
                config.reports_dir().display()
            );
        }
        Command::Ingest => {
            let s = stage_ingest(&settings.pipeline_config(INPUT)?)?;
            println!(
                "{} files, {} parsed, {} kept by journal ratio, {} rejected",
                s.files_seen,
                s.parsed,
                s.journal_ratio_filter.kept,
                s.rejected.values().sum::<u64>()
            );
        }
        Command::Match => {
            let s = stage_match(&settings.pipeline_config(JOURNALS)?)?;
            println!(
                "{} of {} journal references matched (direct {}, abbreviation {}, edit distance {}); {} articles kept by coverage",
                s.matched(),
                s.journal_references,
                s.stages.direct,
                s.stages.abbreviation,
                s.stages.edit_distance,
                s.coverage_filter.kept
            );
        }
        Command::Classify => {
            let s = stage_classify(&settings.pipeline_config(WORK_ONLY)?)?;
            println!("{} sections, {:.1}% counted", s.sections, s.counted_fraction * 100.0);
        }
        Command::Metrics => {
            let t = stage_metrics(&settings.pipeline_config(WORK_ONLY)?)?;
            println!(
                "{} articles, {} counted mentions",
                t.article_count,
                t.grand_totals().mentions
            );
        }
        Command::Stats(args) => {
            if let Some(grid) = &args.grid {
                let options = GridOptions {
                    zero_is_undefined: !args.keep_zeros,
                };
                let group_by = match args.group_by {
                    Grouping::Rows => GroupBy::Rows,
                    Grouping::Columns => GroupBy::Columns,
                };
                print_stats(&run_stats_only(grid, &settings.output_dir()?, options, group_by)?);
            } else if let Some(summaries) = &args.summaries {
                print_stats(&run_stats_from_summaries(
                    summaries,
                    args.reported.as_deref(),
                    &settings.output_dir()?,
                )?);
            } else {
                stage_stats(&settings.pipeline_config(WORK_ONLY)?)?;
                println!("statistics written to {}", settings.output_dir()?.join("work").display());
            }
        }
        Command::Report => {
            let config = settings.pipeline_config(WORK_ONLY)?;
            stage_report(&config)?;
            println!("reports in {}", config.reports_dir().display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CCA_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
