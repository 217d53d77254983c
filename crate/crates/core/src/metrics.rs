//! Discipline × section citation grid and the ratios derived from it.
//!
//! Each cell holds three exact integer counts: citation mentions `N`,
//! distinct cited references `n` (article-scoped) and summed citation
//! sentence words `L`. Proportions, cited intensity (`N / n`) and
//! citation length (`L / N`) are computed from those counts on demand.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discipline::{DisciplineId, DISCIPLINE_COUNT};
use crate::ingest::ArticleRecord;
use crate::scalar::Scalar;
use crate::sections::SectionType;

pub const SECTION_COLUMNS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("discipline {0} has no citations")]
    ZeroCitations(DisciplineId),
    #[error("table holds no citations")]
    EmptyTable,
    #[error("ratio undefined: zero denominator")]
    Undefined,
    #[error("article `{0}` has sections that were never classified")]
    UnclassifiedArticle(String),
    #[error("table dimensions differ: {0}")]
    DimensionMismatch(String),
    #[error("{0} is not a counted section type")]
    NotCounted(SectionType),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsCell {
    /// Citation mentions, `N_ij`.
    pub mentions: u64,
    /// Distinct references, counted once per article, `n_ij`.
    pub distinct_refs: u64,
    /// Words over all citation sentences, `L_ij`.
    pub words: u64,
}

impl MetricsCell {
    fn add(&mut self, other: &MetricsCell) {
        self.mentions += other.mentions;
        self.distinct_refs += other.distinct_refs;
        self.words += other.words;
    }
}

/// Mentions left out of the grid, by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipTally {
    pub unmatched_reference: u64,
    pub excluded_section: u64,
    pub unclassified_section: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsTable {
    cells: Vec<[MetricsCell; SECTION_COLUMNS]>,
    /// `n_i`: distinct references per discipline over all counted sections.
    /// Not the row sum of `n_ij`, since one reference may be cited in
    /// several sections of the same article.
    discipline_refs: Vec<u64>,
    pub skipped: SkipTally,
    pub article_count: u64,
}

impl Default for MetricsTable {
    fn default() -> Self {
        Self {
            cells: vec![[MetricsCell::default(); SECTION_COLUMNS]; DISCIPLINE_COUNT],
            discipline_refs: vec![0; DISCIPLINE_COUNT],
            skipped: SkipTally::default(),
            article_count: 0,
        }
    }
}

fn column(j: SectionType) -> Result<usize, MetricsError> {
    j.column().ok_or(MetricsError::NotCounted(j))
}

fn ratio<T: Scalar>(num: u64, den: u64) -> Result<T, MetricsError> {
    if den == 0 {
        Err(MetricsError::Undefined)
    } else {
        Ok(T::from_count(num) / T::from_count(den))
    }
}

impl MetricsTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one article's mentions. Sections must already carry a type.
    pub fn accumulate_article(&mut self, article: &ArticleRecord) -> Result<(), MetricsError> {
        if article.sections.iter().any(|s| s.section_type.is_none()) {
            return Err(MetricsError::UnclassifiedArticle(article.doi.clone()));
        }
        let mut staged = MetricsTable::default();
        let mut cell_keys: HashSet<(usize, usize, &str)> = HashSet::new();
        let mut row_keys: HashSet<(usize, &str)> = HashSet::new();
        for m in &article.mentions {
            let discipline = article
                .references
                .iter()
                .find(|r| r.ref_id == m.ref_id)
                .and_then(|r| r.match_result.as_ref())
                .and_then(|mr| mr.discipline);
            let Some(discipline) = discipline else {
                staged.skipped.unmatched_reference += 1;
                continue;
            };
            let section_type = article
                .sections
                .get(m.section_index)
                .and_then(|s| s.section_type)
                .unwrap_or(SectionType::Unclassified);
            let col = match section_type {
                SectionType::Excluded => {
                    staged.skipped.excluded_section += 1;
                    continue;
                }
                SectionType::Unclassified => {
                    staged.skipped.unclassified_section += 1;
                    continue;
                }
                counted => column(counted)?,
            };
            let row = discipline.index();
            let cell = &mut staged.cells[row][col];
            cell.mentions += 1;
            cell.words += u64::from(m.word_count);
            if cell_keys.insert((row, col, m.ref_id.as_str())) {
                cell.distinct_refs += 1;
            }
            if row_keys.insert((row, m.ref_id.as_str())) {
                staged.discipline_refs[row] += 1;
            }
        }
        staged.article_count = 1;
        self.merge_from(&staged)
    }

    /// Cell-wise sum. Distinct-reference counts add because they are article-scoped.
    pub fn merge(&self, other: &MetricsTable) -> Result<MetricsTable, MetricsError> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    pub fn merge_from(&mut self, other: &MetricsTable) -> Result<(), MetricsError> {
        self.check_shape()?;
        other.check_shape()?;
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            for (x, y) in a.iter_mut().zip(b) {
                x.add(y);
            }
        }
        for (a, b) in self.discipline_refs.iter_mut().zip(&other.discipline_refs) {
            *a += b;
        }
        self.skipped.unmatched_reference += other.skipped.unmatched_reference;
        self.skipped.excluded_section += other.skipped.excluded_section;
        self.skipped.unclassified_section += other.skipped.unclassified_section;
        self.article_count += other.article_count;
        Ok(())
    }

    /// Tables read back from disk may have the wrong shape.
    pub fn check_shape(&self) -> Result<(), MetricsError> {
        if self.cells.len() != DISCIPLINE_COUNT || self.discipline_refs.len() != DISCIPLINE_COUNT {
            return Err(MetricsError::DimensionMismatch(format!(
                "{} rows and {} reference totals, expected {DISCIPLINE_COUNT}",
                self.cells.len(),
                self.discipline_refs.len()
            )));
        }
        Ok(())
    }

    pub fn cell(&self, i: DisciplineId, j: SectionType) -> Result<MetricsCell, MetricsError> {
        Ok(self.cells[i.index()][column(j)?])
    }

    /// `N_i`.
    pub fn discipline_mentions(&self, i: DisciplineId) -> u64 {
        self.cells[i.index()].iter().map(|c| c.mentions).sum()
    }

    /// `n_i`.
    pub fn discipline_refs(&self, i: DisciplineId) -> u64 {
        self.discipline_refs[i.index()]
    }

    /// `L_i`.
    pub fn discipline_words(&self, i: DisciplineId) -> u64 {
        self.cells[i.index()].iter().map(|c| c.words).sum()
    }

    /// Column totals `(N_j, n_j, L_j)`.
    pub fn section_totals(&self, j: SectionType) -> Result<MetricsCell, MetricsError> {
        let col = column(j)?;
        let mut total = MetricsCell::default();
        for row in &self.cells {
            total.add(&row[col]);
        }
        Ok(total)
    }

    /// Grand totals over the whole grid; `distinct_refs` is `Σ n_i`.
    pub fn grand_totals(&self) -> MetricsCell {
        let mut total = MetricsCell::default();
        for row in &self.cells {
            for c in row {
                total.mentions += c.mentions;
                total.words += c.words;
            }
        }
        total.distinct_refs = self.discipline_refs.iter().sum();
        total
    }

    /// Disciplines with at least one counted citation.
    pub fn disciplines_with_citations(&self) -> Vec<DisciplineId> {
        DisciplineId::all().filter(|&i| self.discipline_mentions(i) > 0).collect()
    }

    /// `P_ij = N_ij / N_i`, the share of a discipline's citations in section `j`.
    pub fn proportion_section<T: Scalar>(&self, i: DisciplineId, j: SectionType) -> Result<T, MetricsError> {
        let n_i = self.discipline_mentions(i);
        if n_i == 0 {
            return Err(MetricsError::ZeroCitations(i));
        }
        ratio(self.cell(i, j)?.mentions, n_i)
    }

    /// `P_i = N_i / N`.
    pub fn proportion_discipline_overall<T: Scalar>(&self, i: DisciplineId) -> Result<T, MetricsError> {
        let total = self.grand_totals().mentions;
        if total == 0 {
            return Err(MetricsError::EmptyTable);
        }
        ratio(self.discipline_mentions(i), total)
    }

    /// `P_j = N_j / N`.
    pub fn proportion_section_overall<T: Scalar>(&self, j: SectionType) -> Result<T, MetricsError> {
        let total = self.grand_totals().mentions;
        if total == 0 {
            return Err(MetricsError::EmptyTable);
        }
        ratio(self.section_totals(j)?.mentions, total)
    }

    /// `ACI_i = N_i / n_i`, or `ACI_ij = N_ij / n_ij` when `j` is given.
    pub fn avg_cited_intensity<T: Scalar>(&self, i: DisciplineId, j: Option<SectionType>) -> Result<T, MetricsError> {
        match j {
            Some(j) => {
                let c = self.cell(i, j)?;
                ratio(c.mentions, c.distinct_refs)
            }
            None => ratio(self.discipline_mentions(i), self.discipline_refs(i)),
        }
    }

    /// `ACL_i = L_i / N_i`, or `ACL_ij = L_ij / N_ij` when `j` is given.
    pub fn avg_citation_length<T: Scalar>(&self, i: DisciplineId, j: Option<SectionType>) -> Result<T, MetricsError> {
        match j {
            Some(j) => {
                let c = self.cell(i, j)?;
                ratio(c.words, c.mentions)
            }
            None => ratio(self.discipline_words(i), self.discipline_mentions(i)),
        }
    }

    /// Corpus-level cited intensity, for one section or over everything.
    pub fn overall_cited_intensity<T: Scalar>(&self, j: Option<SectionType>) -> Result<T, MetricsError> {
        let c = match j {
            Some(j) => self.section_totals(j)?,
            None => self.grand_totals(),
        };
        ratio(c.mentions, c.distinct_refs)
    }

    /// Corpus-level citation length, for one section or over everything.
    pub fn overall_citation_length<T: Scalar>(&self, j: Option<SectionType>) -> Result<T, MetricsError> {
        let c = match j {
            Some(j) => self.section_totals(j)?,
            None => self.grand_totals(),
        };
        ratio(c.words, c.mentions)
    }

    /// Set a cell directly. Used to build tables from external counts.
    pub fn set_cell(&mut self, i: DisciplineId, j: SectionType, cell: MetricsCell) -> Result<(), MetricsError> {
        self.cells[i.index()][column(j)?] = cell;
        Ok(())
    }

    pub fn set_discipline_refs(&mut self, i: DisciplineId, n: u64) {
        self.discipline_refs[i.index()] = n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{CitationMention, ReferenceRecord, SectionRecord};
    use crate::matcher::{MatchResult, MatchStage};
    use proptest::prelude::*;

    fn id(n: u8) -> DisciplineId {
        DisciplineId::new(n).unwrap()
    }

    fn reference(ref_id: &str, discipline: Option<u8>) -> ReferenceRecord {
        ReferenceRecord {
            ref_id: ref_id.into(),
            source_type_raw: "journal".into(),
            journal_name_raw: String::new(),
            journal_name_normalized: String::new(),
            match_result: Some(match discipline {
                Some(d) => MatchResult {
                    discipline: Some(id(d)),
                    stage: MatchStage::Direct,
                    distance: None,
                    normalized_distance: None,
                    matched_title: None,
                },
                None => MatchResult::unmatched(),
            }),
        }
    }

    fn section(index: usize, t: Option<SectionType>) -> SectionRecord {
        SectionRecord {
            index,
            raw_heading: String::new(),
            normalized_heading: String::new(),
            body_text: String::new(),
            section_type: t,
        }
    }

    fn mention(ref_id: &str, section_index: usize, words: u32) -> CitationMention {
        CitationMention {
            ref_id: ref_id.into(),
            section_index,
            sentence_text: String::new(),
            span: [0, 0],
            word_count: words,
            marker_only: false,
        }
    }

    fn article(types: &[SectionType], refs: Vec<ReferenceRecord>, mentions: Vec<CitationMention>) -> ArticleRecord {
        ArticleRecord {
            doi: "10.1/x".into(),
            title: String::new(),
            sections: types.iter().enumerate().map(|(i, t)| section(i, Some(*t))).collect(),
            references: refs,
            mentions,
        }
    }

    #[test]
    fn one_reference_cited_three_times() {
        let a = article(
            &[SectionType::D],
            vec![reference("r1", Some(1))],
            vec![mention("r1", 0, 4), mention("r1", 0, 6), mention("r1", 0, 8)],
        );
        let mut t = MetricsTable::new();
        t.accumulate_article(&a).unwrap();
        let c = t.cell(id(1), SectionType::D).unwrap();
        assert_eq!((c.mentions, c.distinct_refs, c.words), (3, 1, 18));
        assert_eq!(t.avg_cited_intensity::<f64>(id(1), Some(SectionType::D)), Ok(3.0));
        assert_eq!(t.avg_citation_length::<f64>(id(1), None), Ok(6.0));
        assert_eq!(t.article_count, 1);
    }

    #[test]
    fn empty_article_changes_nothing_but_the_count() {
        let mut t = MetricsTable::new();
        t.accumulate_article(&article(&[SectionType::I], vec![reference("r", Some(1))], vec![]))
            .unwrap();
        assert_eq!(t.grand_totals(), MetricsCell::default());
        assert_eq!(t.proportion_discipline_overall::<f64>(id(1)), Err(MetricsError::EmptyTable));
    }

    #[test]
    fn unclassified_article_is_rejected() {
        let mut a = article(&[SectionType::I], vec![reference("r", Some(1))], vec![mention("r", 0, 3)]);
        a.sections[0].section_type = None;
        assert!(matches!(
            MetricsTable::new().accumulate_article(&a),
            Err(MetricsError::UnclassifiedArticle(_))
        ));
    }

    #[test]
    fn skipped_mentions_are_tallied() {
        let a = article(
            &[SectionType::I, SectionType::Excluded, SectionType::Unclassified],
            vec![reference("r1", Some(2)), reference("r2", None)],
            vec![mention("r1", 0, 3), mention("r2", 0, 3), mention("r1", 1, 3), mention("r1", 2, 3)],
        );
        let mut t = MetricsTable::new();
        t.accumulate_article(&a).unwrap();
        assert_eq!(
            t.skipped,
            SkipTally {
                unmatched_reference: 1,
                excluded_section: 1,
                unclassified_section: 1
            }
        );
        assert_eq!(t.grand_totals().mentions, 1);
    }

    #[test]
    fn proportions_by_hand() {
        // counts (2,1,1,0,0,0) over I..RD
        let a = article(
            &[SectionType::I, SectionType::M, SectionType::R],
            vec![reference("a", Some(6)), reference("b", Some(6))],
            vec![mention("a", 0, 5), mention("b", 0, 5), mention("a", 1, 5), mention("b", 2, 5)],
        );
        let mut t = MetricsTable::new();
        t.accumulate_article(&a).unwrap();
        let p: Vec<f64> = SectionType::COUNTED
            .iter()
            .map(|&j| t.proportion_section(id(6), j).unwrap())
            .collect();
        assert_eq!(p, [0.5, 0.25, 0.25, 0.0, 0.0, 0.0]);
        assert_eq!(t.proportion_section::<f64>(id(1), SectionType::I), Err(MetricsError::ZeroCitations(id(1))));
        // n_i counts each reference once even when cited in three sections
        assert_eq!(t.discipline_refs(id(6)), 2);
        assert_eq!(t.avg_cited_intensity::<f64>(id(6), None), Ok(2.0));
    }

    #[test]
    fn overall_proportions_by_hand() {
        let refs = vec![reference("m", Some(1)), reference("x", Some(6))];
        let mut mentions: Vec<_> = (0..6).map(|_| mention("m", 0, 2)).collect();
        mentions.extend((0..4).map(|_| mention("x", 0, 2)));
        let mut t = MetricsTable::new();
        t.accumulate_article(&article(&[SectionType::R], refs, mentions)).unwrap();
        assert_eq!(t.proportion_discipline_overall::<f64>(id(1)), Ok(0.6));
        assert_eq!(t.proportion_discipline_overall::<f64>(id(6)), Ok(0.4));
        assert_eq!(t.proportion_section_overall::<f64>(SectionType::R), Ok(1.0));
    }

    #[test]
    fn intensity_and_length_by_hand() {
        // three references appearing 1, 2 and 3 times -> ACI 2
        let refs = vec![reference("a", Some(3)), reference("b", Some(3)), reference("c", Some(3))];
        let mentions = vec![
            mention("a", 0, 4),
            mention("b", 0, 6),
            mention("b", 0, 4),
            mention("c", 0, 6),
            mention("c", 0, 4),
            mention("c", 0, 6),
        ];
        let mut t = MetricsTable::new();
        t.accumulate_article(&article(&[SectionType::M], refs, mentions)).unwrap();
        assert_eq!(t.avg_cited_intensity::<f64>(id(3), None), Ok(2.0));
        assert_eq!(t.avg_citation_length::<f64>(id(3), Some(SectionType::M)), Ok(5.0));
        assert_eq!(t.avg_cited_intensity::<f32>(id(3), Some(SectionType::M)), Ok(2.0_f32));
        assert_eq!(
            t.avg_cited_intensity::<f64>(id(3), Some(SectionType::I)),
            Err(MetricsError::Undefined)
        );
        assert_eq!(t.overall_citation_length::<f64>(None), Ok(5.0));
    }

    #[test]
    fn same_reference_in_two_articles_counts_twice() {
        let a = article(&[SectionType::I], vec![reference("r1", Some(1))], vec![mention("r1", 0, 3)]);
        let mut t = MetricsTable::new();
        t.accumulate_article(&a).unwrap();
        t.accumulate_article(&a).unwrap();
        assert_eq!(t.cell(id(1), SectionType::I).unwrap().distinct_refs, 2);
        assert_eq!(t.discipline_refs(id(1)), 2);
    }

    #[test]
    fn excluded_types_have_no_cell() {
        let t = MetricsTable::new();
        assert_eq!(
            t.cell(id(1), SectionType::Excluded),
            Err(MetricsError::NotCounted(SectionType::Excluded))
        );
    }

    #[test]
    fn shape_is_checked_after_deserialization() {
        let mut json: serde_json::Value = serde_json::to_value(MetricsTable::new()).unwrap();
        json["cells"].as_array_mut().unwrap().pop();
        let broken: MetricsTable = serde_json::from_value(json).unwrap();
        assert!(matches!(
            MetricsTable::new().merge(&broken),
            Err(MetricsError::DimensionMismatch(_))
        ));
    }

    prop_compose! {
        fn arb_table()(counts in prop::collection::vec((0u64..20, 0u64..20, 0u64..200), DISCIPLINE_COUNT * SECTION_COLUMNS),
                       refs in prop::collection::vec(0u64..50, DISCIPLINE_COUNT),
                       articles in 0u64..100) -> MetricsTable {
            let mut t = MetricsTable::new();
            for (k, (big_n, small_n, l)) in counts.into_iter().enumerate() {
                let small_n = if big_n == 0 { 0 } else { small_n.clamp(1, big_n) };
                let cell = MetricsCell { mentions: big_n, distinct_refs: small_n, words: l.max(big_n) };
                t.set_cell(DisciplineId::from_index(k / SECTION_COLUMNS).unwrap(), SectionType::COUNTED[k % SECTION_COLUMNS], cell).unwrap();
            }
            for (k, n) in refs.into_iter().enumerate() {
                t.set_discipline_refs(DisciplineId::from_index(k).unwrap(), n);
            }
            t.article_count = articles;
            t
        }
    }

    proptest! {
        #[test]
        fn merge_is_commutative_and_associative(a in arb_table(), b in arb_table(), c in arb_table()) {
            prop_assert_eq!(a.merge(&b).unwrap(), b.merge(&a).unwrap());
            prop_assert_eq!(a.merge(&b).unwrap().merge(&c).unwrap(), a.merge(&b.merge(&c).unwrap()).unwrap());
            prop_assert_eq!(a.merge(&MetricsTable::new()).unwrap(), a.clone());
        }

        #[test]
        fn section_proportions_sum_to_one(t in arb_table()) {
            for i in t.disciplines_with_citations() {
                let s: f64 = SectionType::COUNTED.iter().map(|&j| t.proportion_section::<f64>(i, j).unwrap()).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
            if t.grand_totals().mentions > 0 {
                let s: f64 = DisciplineId::all().map(|i| t.proportion_discipline_overall::<f64>(i).unwrap()).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                let s: f64 = SectionType::COUNTED.iter().map(|&j| t.proportion_section_overall::<f64>(j).unwrap()).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn totals_are_additive(t in arb_table()) {
            let mut n = 0;
            for i in DisciplineId::all() {
                let row_n: u64 = SectionType::COUNTED.iter().map(|&j| t.cell(i, j).unwrap().mentions).sum();
                let row_l: u64 = SectionType::COUNTED.iter().map(|&j| t.cell(i, j).unwrap().words).sum();
                prop_assert_eq!(t.discipline_mentions(i), row_n);
                prop_assert_eq!(t.discipline_words(i), row_l);
                n += row_n;
            }
            prop_assert_eq!(t.grand_totals().mentions, n);
        }

        #[test]
        fn defined_cell_ratios_are_at_least_one(t in arb_table()) {
            for i in DisciplineId::all() {
                for &j in &SectionType::COUNTED {
                    let c = t.cell(i, j).unwrap();
                    if c.distinct_refs > 0 {
                        prop_assert!(t.avg_cited_intensity::<f64>(i, Some(j)).unwrap() >= 1.0);
                    }
                    if c.mentions > 0 {
                        prop_assert!(t.avg_citation_length::<f64>(i, Some(j)).unwrap() >= 1.0);
                    }
                }
            }
        }
    }
}
