//! Citation content analysis across disciplines and article sections.
//!
//! The pipeline parses JATS full texts, resolves each cited journal to a
//! subject discipline, classifies section headings, accumulates citation
//! counts and citing-sentence lengths per discipline and section, and runs
//! one-way ANOVA, Levene and pairwise LSD tests on the resulting tables.

pub mod chart;
pub mod discipline;
pub mod grid;
pub mod ingest;
pub mod matcher;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod sections;
pub mod special;
pub mod stats;

pub use discipline::{DisciplineId, DisciplineRegistry, DISCIPLINE_COUNT};
pub use ingest::{ArticleRecord, CitationMention, ReferenceRecord, SectionRecord};
pub use matcher::{MatchConfig, MatchResult, MatchStage, Matcher};
pub use metrics::{MetricsCell, MetricsError, MetricsTable};
pub use scalar::Scalar;
pub use sections::{KeywordRules, SectionType};
pub use stats::{LeveneCenter, StatsError};

pub type AnovaResult = stats::AnovaResult<f64>;
pub type GroupSummary = stats::GroupSummary<f64>;
pub type GroupSamples = stats::GroupSamples<f64>;
pub type LeveneResult = stats::LeveneResult<f64>;
pub type PairwiseComparison = stats::PairwiseComparison<f64>;
