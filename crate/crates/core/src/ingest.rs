//! JATS full-text parsing into [`ArticleRecord`]s.
//!
//! Only first-level `<sec>` elements become sections; text of nested
//! subsections is folded into their enclosing first-level section. Every
//! `<xref ref-type="bibr">` marker yields one [`CitationMention`] per
//! referenced id, carrying the sentence that contains the marker.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use roxmltree::{Document, Node, ParsingOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcher::{normalize_name, MatchResult};
use crate::sections::{normalize_heading, SectionType};

/// Byte range of one citation marker in the flattened text and the ids it cites.
type MarkerSpan = (Range<usize>, Vec<String>);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("article has no <body>")]
    MissingBody,
    #[error("article has no references in its back matter")]
    MissingReferences,
    #[error("sentence is empty once citation markers are removed")]
    EmptyAfterStripping,
}

impl IngestError {
    /// Stable name used in the rejects log and the run manifest.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::MalformedXml(_) => "MalformedXml",
            Self::MissingBody => "MissingBody",
            Self::MissingReferences => "MissingReferences",
            Self::EmptyAfterStripping => "EmptyAfterStripping",
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FilterError {
    #[error("article has no references")]
    NoReferences,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub keep: bool,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub doi: String,
    pub title: String,
    pub sections: Vec<SectionRecord>,
    pub references: Vec<ReferenceRecord>,
    pub mentions: Vec<CitationMention>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRecord {
    pub index: usize,
    pub raw_heading: String,
    pub normalized_heading: String,
    pub body_text: String,
    /// `None` until the section classifier has run.
    pub section_type: Option<SectionType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub ref_id: String,
    pub source_type_raw: String,
    pub journal_name_raw: String,
    pub journal_name_normalized: String,
    #[serde(rename = "match", default)]
    pub match_result: Option<MatchResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationMention {
    pub ref_id: String,
    pub section_index: usize,
    pub sentence_text: String,
    /// Byte range of the sentence inside the section's `body_text`.
    pub span: [usize; 2],
    pub word_count: u32,
    /// The sentence held nothing but citation markers; `word_count` was set to 1.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub marker_only: bool,
}

impl ArticleRecord {
    pub fn mentions_in_section(&self, index: usize) -> usize {
        self.mentions.iter().filter(|m| m.section_index == index).count()
    }

    /// Check the structural invariants; returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut ids = HashSet::new();
        for r in &self.references {
            if !ids.insert(r.ref_id.as_str()) {
                return Err(format!("duplicate reference id `{}`", r.ref_id));
            }
            if r.journal_name_normalized != normalize_name(&r.journal_name_raw) {
                return Err(format!("reference `{}` has a stale normalized name", r.ref_id));
            }
        }
        for (i, s) in self.sections.iter().enumerate() {
            if s.index != i {
                return Err(format!("section {i} carries index {}", s.index));
            }
            if s.normalized_heading.chars().any(|c| c.is_numeric() || c.is_uppercase()) {
                return Err(format!("section {i} heading not normalized"));
            }
        }
        for m in &self.mentions {
            if !ids.contains(m.ref_id.as_str()) {
                return Err(format!("mention cites unknown reference `{}`", m.ref_id));
            }
            let section = self
                .sections
                .get(m.section_index)
                .ok_or_else(|| format!("mention addresses missing section {}", m.section_index))?;
            let [start, end] = m.span;
            if section.body_text.get(start..end) != Some(m.sentence_text.as_str()) {
                return Err(format!("mention span {start}..{end} does not match its sentence"));
            }
            if m.word_count == 0 {
                return Err("mention with zero words".into());
            }
        }
        Ok(())
    }
}

/// Per-article counts that do not reject the article.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarnings {
    pub dangling_markers: usize,
    pub duplicate_ref_ids: usize,
    pub marker_only_mentions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedArticle {
    pub article: ArticleRecord,
    pub warnings: ParseWarnings,
}

/// Abbreviations that do not end a sentence when followed by a period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceGuards {
    /// Lowercase, without the trailing period; multi-word entries allowed.
    terms: Vec<Vec<String>>,
}

impl Default for SentenceGuards {
    fn default() -> Self {
        Self::from_terms([
            "fig", "figs", "et al", "e.g", "i.e", "vs", "no", "eq", "eqs", "ref", "refs", "approx", "cf", "ca", "sp",
            "spp", "vol", "dr",
        ])
    }
}

impl SentenceGuards {
    pub fn from_terms<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let terms = terms
            .into_iter()
            .filter_map(|t| {
                let t = t.as_ref().trim().trim_end_matches('.').to_lowercase();
                let words: Vec<String> = t.split_whitespace().map(str::to_string).collect();
                (!words.is_empty()).then_some(words)
            })
            .collect();
        Self { terms }
    }

    /// One term per line; blank lines and `#` comments are skipped.
    pub fn parse_list(text: &str) -> Self {
        Self::from_terms(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    fn guards(&self, before_period: &str) -> bool {
        let tokens: Vec<&str> = before_period.split_whitespace().collect();
        self.terms.iter().any(|term| {
            if term.len() > tokens.len() {
                return false;
            }
            let tail = &tokens[tokens.len() - term.len()..];
            tail.iter().zip(term).enumerate().all(|(k, (tok, word))| {
                let tok = if k == 0 {
                    tok.trim_start_matches(['(', '[', '"', '\u{201c}'])
                } else {
                    tok
                };
                tok.eq_ignore_ascii_case(word)
            })
        })
    }
}

fn is_closer(c: char) -> bool {
    matches!(c, ')' | ']' | '"' | '\'' | '\u{201d}' | '\u{2019}')
}

/// Split text into sentences.
///
/// A sentence ends at `.`, `?` or `!` (plus any closing brackets or quotes)
/// followed by whitespace or the end of text, unless the word before a
/// period is a guarded abbreviation. A blank line always ends a sentence.
/// Returned spans are trimmed byte ranges covering every non-whitespace
/// character exactly once.
pub fn segment_sentences<'a>(text: &'a str, guards: &SentenceGuards) -> Vec<(&'a str, Range<usize>)> {
    let mut cuts: Vec<usize> = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentence_start = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c == '\n' && chars.get(i + 1).is_some_and(|&(_, n)| n == '\n') {
            cuts.push(pos);
            sentence_start = pos;
            i += 2;
            continue;
        }
        if matches!(c, '.' | '?' | '!') {
            let mut j = i + 1;
            while j < chars.len() && is_closer(chars[j].1) {
                j += 1;
            }
            let at_boundary = j == chars.len() || chars[j].1.is_whitespace();
            let guarded = c == '.' && guards.guards(&text[sentence_start..pos]);
            if at_boundary && !guarded {
                let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
                cuts.push(end);
                sentence_start = end;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    cuts.push(text.len());

    let mut out = Vec::new();
    let mut start = 0;
    for cut in cuts {
        let piece = &text[start..cut];
        let trimmed_start = piece.len() - piece.trim_start().len();
        let trimmed = piece.trim();
        if !trimmed.is_empty() {
            let s = start + trimmed_start;
            out.push((trimmed, s..s + trimmed.len()));
        }
        start = cut;
    }
    out
}

fn marker_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\[\s*\d+(?:\s*[-\u{2013},;]\s*\[?\s*\d+\s*\]?)*\s*\]|\([^()]*?\b(?:1[89]|20)\d{2}[a-z]?\s*\)",
        )
        .expect("valid marker regex")
    })
}

fn count_tokens(text: &str) -> u32 {
    let n = text
        .split_whitespace()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .count();
    u32::try_from(n).unwrap_or(u32::MAX)
}

/// Words in a citation sentence once citation markers are removed.
///
/// Markers recognized here are bracketed numeric citations (`[1]`,
/// `[2,5]`, `[3]–[6]`) and parenthesized author-year citations. A word is
/// a whitespace-delimited token with at least one alphanumeric character.
pub fn count_words(sentence_text: &str) -> Result<u32, IngestError> {
    let stripped = marker_pattern().replace_all(sentence_text, " ");
    match count_tokens(&stripped) {
        0 => Err(IngestError::EmptyAfterStripping),
        n => Ok(n),
    }
}

/// Like [`count_words`], but removing the exact marker byte ranges given.
fn count_words_masked(sentence: &str, offset: usize, markers: &[Range<usize>]) -> Result<u32, IngestError> {
    let mut kept = String::with_capacity(sentence.len());
    let mut cursor = 0;
    let mut local: Vec<Range<usize>> = markers
        .iter()
        .filter_map(|m| {
            let s = m.start.max(offset).saturating_sub(offset);
            let e = m.end.min(offset + sentence.len()).saturating_sub(offset);
            (s < e).then_some(s..e)
        })
        .collect();
    local.sort_by_key(|r| r.start);
    for r in local {
        if r.start > cursor {
            kept.push_str(&sentence[cursor..r.start]);
        }
        kept.push(' ');
        cursor = cursor.max(r.end);
    }
    kept.push_str(&sentence[cursor.min(sentence.len())..]);
    let stripped = marker_pattern().replace_all(&kept, " ");
    match count_tokens(&stripped) {
        0 => Err(IngestError::EmptyAfterStripping),
        n => Ok(n),
    }
}

/// Lowercase, trim, drop surrounding punctuation, then apply alias spellings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceTypeAliases {
    map: HashMap<String, String>,
}

impl Default for SourceTypeAliases {
    fn default() -> Self {
        let journal = [
            "jounal",
            "jornal",
            "joural",
            "journl",
            "jurnal",
            "journall",
            "journals",
            "journal article",
            "journal-article",
        ];
        Self {
            map: journal.iter().map(|a| (a.to_string(), "journal".to_string())).collect(),
        }
    }
}

impl SourceTypeAliases {
    pub fn with_alias(mut self, spelling: &str, canonical: &str) -> Self {
        self.map.insert(spelling.to_lowercase(), canonical.to_lowercase());
        self
    }

    pub fn normalize(&self, raw: &str) -> String {
        let cleaned = raw
            .trim()
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        self.map.get(&cleaned).cloned().unwrap_or(cleaned)
    }

    pub fn is_journal(&self, raw: &str) -> bool {
        self.normalize(raw) == "journal"
    }
}

/// Whether the journal share must exceed or may equal the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioComparator {
    #[default]
    Strict,
    Inclusive,
}

impl RatioComparator {
    pub fn passes(self, ratio: f64, threshold: f64) -> bool {
        match self {
            Self::Strict => ratio > threshold,
            Self::Inclusive => ratio >= threshold,
        }
    }
}

impl std::str::FromStr for RatioComparator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strict" | ">" => Ok(Self::Strict),
            "inclusive" | ">=" => Ok(Self::Inclusive),
            other => Err(format!("unknown comparator `{other}` (expected strict or inclusive)")),
        }
    }
}

/// Keep articles whose journal-type references make up more than `threshold`
/// of all references (or at least `threshold` with [`RatioComparator::Inclusive`]).
pub fn journal_ratio_filter(
    article: &ArticleRecord,
    threshold: f64,
    comparator: RatioComparator,
    aliases: &SourceTypeAliases,
) -> Result<FilterDecision, FilterError> {
    let total = article.references.len();
    if total == 0 {
        return Err(FilterError::NoReferences);
    }
    let journals = article
        .references
        .iter()
        .filter(|r| aliases.is_journal(&r.source_type_raw))
        .count();
    let ratio = journals as f64 / total as f64;
    Ok(FilterDecision {
        keep: comparator.passes(ratio, threshold),
        ratio,
    })
}

// --- XML walking -----------------------------------------------------------

const SKIPPED: &[&str] = &["title", "label", "table", "graphic", "media", "tex-math", "math", "object-id"];
const BLOCKS: &[&str] = &[
    "p",
    "sec",
    "list",
    "list-item",
    "fig",
    "caption",
    "table-wrap",
    "table-wrap-foot",
    "disp-quote",
    "boxed-text",
    "def-list",
    "def-item",
    "disp-formula",
    "supplementary-material",
    "statement",
    "fn",
];

#[derive(Default)]
struct SectionText {
    buf: String,
    pending_space: bool,
    markers: Vec<(Range<usize>, Vec<String>)>,
}

impl SectionText {
    fn at_para_start(&self) -> bool {
        self.buf.is_empty() || self.buf.ends_with("\n\n")
    }

    fn flush_space(&mut self) {
        if self.pending_space && !self.at_para_start() {
            self.buf.push(' ');
        }
        self.pending_space = false;
    }

    fn push_text(&mut self, text: &str) {
        for c in text.chars() {
            if c.is_whitespace() {
                self.pending_space = true;
            } else {
                self.flush_space();
                self.buf.push(c);
            }
        }
    }

    fn para_break(&mut self) {
        self.pending_space = false;
        if !self.at_para_start() {
            self.buf.push_str("\n\n");
        }
    }

    fn walk(&mut self, node: Node<'_, '_>) {
        for child in node.children() {
            if child.is_text() {
                self.push_text(child.text().unwrap_or(""));
                continue;
            }
            if !child.is_element() {
                continue;
            }
            let name = child.tag_name().name();
            if SKIPPED.contains(&name) {
                continue;
            }
            if name == "xref" && child.attribute("ref-type") == Some("bibr") {
                self.flush_space();
                let start = self.buf.len();
                self.walk(child);
                let rids: Vec<String> = child
                    .attribute("rid")
                    .unwrap_or("")
                    .split_whitespace()
                    .map(str::to_string)
                    .collect();
                self.markers.push((start..self.buf.len(), rids));
                continue;
            }
            let block = BLOCKS.contains(&name);
            if block {
                self.para_break();
            }
            self.walk(child);
            if block {
                self.para_break();
            }
        }
    }

    fn finish(mut self) -> (String, Vec<MarkerSpan>) {
        while self.buf.ends_with('\n') {
            self.buf.pop();
        }
        let len = self.buf.len();
        for (r, _) in &mut self.markers {
            r.start = r.start.min(len);
            r.end = r.end.min(len);
        }
        (self.buf, self.markers)
    }
}

fn collapsed_text(node: Node<'_, '_>) -> String {
    let mut t = SectionText::default();
    for d in node.descendants().filter(|d| d.is_text()) {
        t.push_text(d.text().unwrap_or(""));
    }
    t.buf
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn descendant<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.descendants().find(|c| c.is_element() && c.tag_name().name() == name)
}

struct RawSection<'a, 'i> {
    heading: String,
    nodes: Vec<Node<'a, 'i>>,
}

/// Parse one JATS article.
pub fn parse_article(xml_document: &[u8], guards: &SentenceGuards) -> Result<ParsedArticle, IngestError> {
    let text = std::str::from_utf8(xml_document).map_err(|e| IngestError::MalformedXml(e.to_string()))?;
    let options = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    let doc = Document::parse_with_options(text, options).map_err(|e| IngestError::MalformedXml(e.to_string()))?;
    let root = doc.root_element();
    let mut warnings = ParseWarnings::default();

    let meta = descendant(root, "article-meta");
    let doi = meta
        .and_then(|m| {
            m.children()
                .find(|c| c.tag_name().name() == "article-id" && c.attribute("pub-id-type") == Some("doi"))
        })
        .map(collapsed_text)
        .unwrap_or_default();
    let title = meta
        .and_then(|m| descendant(m, "article-title"))
        .map(collapsed_text)
        .unwrap_or_default();

    let body = descendant(root, "body").ok_or(IngestError::MissingBody)?;

    let mut references: Vec<ReferenceRecord> = Vec::new();
    let mut seen_ids = HashSet::new();
    if let Some(back) = descendant(root, "back") {
        for r in back
            .descendants()
            .filter(|n| n.is_element() && n.tag_name().name() == "ref")
        {
            let ref_id = r.attribute("id").unwrap_or("").to_string();
            if !seen_ids.insert(ref_id.clone()) {
                warnings.duplicate_ref_ids += 1;
                continue;
            }
            let citation = r.descendants().find(|c| {
                matches!(
                    c.tag_name().name(),
                    "element-citation" | "mixed-citation" | "citation" | "nlm-citation"
                )
            });
            let source_type_raw = citation
                .and_then(|c| c.attribute("publication-type").or_else(|| c.attribute("citation-type")))
                .unwrap_or("")
                .to_string();
            let journal_name_raw = citation
                .and_then(|c| descendant(c, "source"))
                .map(collapsed_text)
                .unwrap_or_default();
            references.push(ReferenceRecord {
                ref_id,
                source_type_raw,
                journal_name_normalized: normalize_name(&journal_name_raw),
                journal_name_raw,
                match_result: None,
            });
        }
    }
    if references.is_empty() {
        return Err(IngestError::MissingReferences);
    }

    // Group body children into first-level sections; loose content between
    // sections forms an untitled section of its own.
    let mut raw_sections: Vec<RawSection<'_, '_>> = Vec::new();
    let mut loose = false;
    for c in body.children().filter(|c| c.is_element()) {
        if c.tag_name().name() == "sec" {
            let heading = child(c, "title").map(collapsed_text).unwrap_or_default();
            raw_sections.push(RawSection {
                heading,
                nodes: vec![c],
            });
            loose = false;
        } else {
            if !loose {
                raw_sections.push(RawSection {
                    heading: String::new(),
                    nodes: Vec::new(),
                });
                loose = true;
            }
            raw_sections.last_mut().expect("just pushed").nodes.push(c);
        }
    }

    let ref_ids: HashSet<&str> = references.iter().map(|r| r.ref_id.as_str()).collect();
    let mut sections = Vec::with_capacity(raw_sections.len());
    let mut mentions = Vec::new();
    for (index, raw) in raw_sections.into_iter().enumerate() {
        let mut text = SectionText::default();
        for node in raw.nodes {
            if node.tag_name().name() == "sec" {
                text.walk(node);
            } else {
                text.para_break();
                text.walk(node);
                text.para_break();
            }
        }
        let (body_text, markers) = text.finish();
        let sentences = segment_sentences(&body_text, guards);
        let marker_ranges: Vec<Range<usize>> = markers.iter().map(|(r, _)| r.clone()).collect();

        for (range, rids) in &markers {
            let Some((sentence, span)) = locate_sentence(&sentences, range.start) else {
                warnings.dangling_markers += rids.len();
                continue;
            };
            let (word_count, marker_only) = match count_words_masked(sentence, span.start, &marker_ranges) {
                Ok(n) => (n, false),
                Err(_) => (1, true),
            };
            for rid in rids {
                if !ref_ids.contains(rid.as_str()) {
                    warnings.dangling_markers += 1;
                    continue;
                }
                if marker_only {
                    warnings.marker_only_mentions += 1;
                }
                mentions.push(CitationMention {
                    ref_id: rid.clone(),
                    section_index: index,
                    sentence_text: sentence.to_string(),
                    span: [span.start, span.end],
                    word_count,
                    marker_only,
                });
            }
        }

        sections.push(SectionRecord {
            index,
            normalized_heading: normalize_heading(&raw.heading),
            raw_heading: raw.heading,
            body_text,
            section_type: None,
        });
    }

    Ok(ParsedArticle {
        article: ArticleRecord {
            doi,
            title,
            sections,
            references,
            mentions,
        },
        warnings,
    })
}

fn locate_sentence<'a>(
    sentences: &[(&'a str, Range<usize>)],
    pos: usize,
) -> Option<(&'a str, Range<usize>)> {
    sentences
        .iter()
        .find(|(_, r)| r.start <= pos && pos < r.end)
        .or_else(|| sentences.iter().rev().find(|(_, r)| r.start <= pos))
        .or_else(|| sentences.first())
        .map(|(s, r)| (*s, r.clone()))
}

/// Distinct reference ids cited anywhere in the article.
pub fn cited_reference_ids(article: &ArticleRecord) -> BTreeSet<&str> {
    article.mentions.iter().map(|m| m.ref_id.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jats(body: &str, refs: &str) -> String {
        format!(
            r#"<?xml version="1.0" encoding="UTF-8"?>
<!DOCTYPE article PUBLIC "-//NLM//DTD Journal Publishing DTD v3.0 20080202//EN" "journalpublishing3.dtd">
<article xmlns:xlink="http://www.w3.org/1999/xlink" article-type="research-article">
  <front><article-meta>
    <article-id pub-id-type="doi">10.1371/journal.pone.0000001</article-id>
    <title-group><article-title>A  test
      article</article-title></title-group>
  </article-meta></front>
  <body>{body}</body>
  <back><ref-list><title>References</title>{refs}</ref-list></back>
</article>"#
        )
    }

    fn journal_ref(id: &str, kind: &str, source: &str) -> String {
        format!(
            r#"<ref id="{id}"><label>1</label><mixed-citation publication-type="{kind}"><person-group><name><surname>Doe</surname></name></person-group> (2001) Title. <source>{source}</source> 1: 2-3.</mixed-citation></ref>"#
        )
    }

    fn parse(xml: &str) -> ParsedArticle {
        parse_article(xml.as_bytes(), &SentenceGuards::default()).unwrap()
    }

    #[test]
    fn minimal_article() {
        let xml = jats(
            r#"<sec id="s1"><title>Introduction</title><p>Cells were cultured as described [<xref ref-type="bibr" rid="B1">1</xref>].</p></sec>"#,
            &journal_ref("B1", "journal", "Lancet"),
        );
        let a = parse(&xml).article;
        assert_eq!(a.doi, "10.1371/journal.pone.0000001");
        assert_eq!(a.title, "A test article");
        assert_eq!(a.sections.len(), 1);
        assert_eq!(a.sections[0].raw_heading, "Introduction");
        assert_eq!(a.sections[0].normalized_heading, "introduction");
        assert_eq!(a.references[0].journal_name_raw, "Lancet");
        assert_eq!(a.references[0].journal_name_normalized, "lancet");
        assert_eq!(a.mentions.len(), 1);
        let m = &a.mentions[0];
        assert_eq!(m.sentence_text, "Cells were cultured as described [1].");
        assert!(m.sentence_text.contains("[1]"));
        assert_eq!(m.word_count, 5);
        a.check_invariants().unwrap();
    }

    #[test]
    fn misspelled_source_type_is_preserved() {
        let xml = jats(
            r#"<sec><title>Intro</title><p>X [<xref ref-type="bibr" rid="B1">1</xref>].</p></sec>"#,
            &journal_ref("B1", "journal ", "Cell"),
        );
        let a = parse(&xml).article;
        assert_eq!(a.references[0].source_type_raw, "journal ");
        assert!(SourceTypeAliases::default().is_journal(&a.references[0].source_type_raw));
    }

    #[test]
    fn two_markers_in_one_sentence() {
        let xml = jats(
            r#"<sec><title>Discussion</title><p>First claim here. Both studies agree [<xref ref-type="bibr" rid="B1">1</xref>], [<xref ref-type="bibr" rid="B2">2</xref>]. Last one.</p></sec>"#,
            &(journal_ref("B1", "journal", "Cell") + &journal_ref("B2", "journal", "Nature")),
        );
        let a = parse(&xml).article;
        assert_eq!(a.mentions.len(), 2);
        assert_eq!(a.mentions[0].sentence_text, a.mentions[1].sentence_text);
        assert_eq!(a.mentions[0].sentence_text, "Both studies agree [1], [2].");
        assert_eq!(a.mentions[0].word_count, 3);
        assert_eq!((a.mentions[0].ref_id.as_str(), a.mentions[1].ref_id.as_str()), ("B1", "B2"));
    }

    #[test]
    fn multi_rid_marker_and_dangling_ids() {
        let xml = jats(
            r#"<sec><title>Results</title><p>Shown before <xref ref-type="bibr" rid="B1 B2 B9">[1,2]</xref>. See <xref ref-type="fig" rid="g1">Fig 1</xref>.</p></sec>"#,
            &(journal_ref("B1", "journal", "Cell") + &journal_ref("B2", "book", "Some Book")),
        );
        let p = parse(&xml);
        assert_eq!(p.article.mentions.len(), 2);
        assert_eq!(p.warnings.dangling_markers, 1);
        assert_eq!(p.article.mentions[0].word_count, 2);
    }

    #[test]
    fn nested_subsections_fold_into_first_level() {
        let xml = jats(
            r#"<sec><title>1. Methods</title><p>Overview text.</p><sec><title>1.1 Cell culture</title><p>Cells grew <xref ref-type="bibr" rid="B1">[1]</xref>.</p></sec></sec><sec><title>Acknowledgments</title><p>Thanks.</p></sec>"#,
            &journal_ref("B1", "journal", "Cell"),
        );
        let a = parse(&xml).article;
        assert_eq!(a.sections.len(), 2);
        assert_eq!(a.sections[0].normalized_heading, "methods");
        assert_eq!(a.sections[0].body_text, "Overview text.\n\nCells grew [1].");
        assert_eq!(a.mentions[0].section_index, 0);
        assert_eq!(a.mentions[0].sentence_text, "Cells grew [1].");
        a.check_invariants().unwrap();
    }

    #[test]
    fn loose_body_paragraphs_form_untitled_section() {
        let xml = jats(
            r#"<p>Preface <xref ref-type="bibr" rid="B1">[1]</xref>.</p><sec><title>Results</title><p>R.</p></sec>"#,
            &journal_ref("B1", "journal", "Cell"),
        );
        let a = parse(&xml).article;
        assert_eq!(a.sections.len(), 2);
        assert_eq!(a.sections[0].raw_heading, "");
        assert_eq!(a.mentions[0].section_index, 0);
    }

    #[test]
    fn rejects() {
        let g = SentenceGuards::default();
        assert!(matches!(parse_article(b"<article><body>", &g), Err(IngestError::MalformedXml(_))));
        assert!(matches!(parse_article(&[0xff, 0xfe], &g), Err(IngestError::MalformedXml(_))));
        let no_body = "<article><front/><back><ref-list><ref id=\"a\"/></ref-list></back></article>";
        assert_eq!(parse_article(no_body.as_bytes(), &g).unwrap_err(), IngestError::MissingBody);
        let no_refs = jats("<sec><title>I</title><p>x.</p></sec>", "");
        assert_eq!(parse_article(no_refs.as_bytes(), &g).unwrap_err(), IngestError::MissingReferences);
        assert_eq!(IngestError::MissingBody.kind(), "MissingBody");
    }

    #[test]
    fn marker_only_sentence_gets_one_word() {
        let xml = jats(
            r#"<sec><title>Intro</title><p>Text here. <xref ref-type="bibr" rid="B1">[1]</xref></p></sec>"#,
            &journal_ref("B1", "journal", "Cell"),
        );
        let p = parse(&xml);
        assert_eq!(p.article.mentions[0].word_count, 1);
        assert!(p.article.mentions[0].marker_only);
        assert_eq!(p.warnings.marker_only_mentions, 1);
    }

    #[test]
    fn segmentation_examples() {
        let g = SentenceGuards::default();
        let s: Vec<&str> = segment_sentences("A b. C d.", &g).into_iter().map(|x| x.0).collect();
        assert_eq!(s, ["A b.", "C d."]);
        let s = segment_sentences("See Fig. 2 for results [1].", &g);
        assert_eq!(s.len(), 1);
        let s = segment_sentences("no delimiter here", &g);
        assert_eq!(s.len(), 1);
        let s: Vec<&str> = segment_sentences("Smith et al. showed it (e.g. mice). Then? Yes!", &g)
            .into_iter()
            .map(|x| x.0)
            .collect();
        assert_eq!(s, ["Smith et al. showed it (e.g. mice).", "Then?", "Yes!"]);
        let s: Vec<&str> = segment_sentences("Values were 3.5 mM (\"high\"). Next one", &g)
            .into_iter()
            .map(|x| x.0)
            .collect();
        assert_eq!(s, ["Values were 3.5 mM (\"high\").", "Next one"]);
        let s: Vec<&str> = segment_sentences("Heading without stop\n\nNew para.", &g)
            .into_iter()
            .map(|x| x.0)
            .collect();
        assert_eq!(s, ["Heading without stop", "New para."]);
    }

    #[test]
    fn guard_list_file() {
        let g = SentenceGuards::parse_list("# guards\nfig\n\nEt al.\n");
        assert_eq!(segment_sentences("Jones et al. found. Fig. 1 shows.", &g).len(), 2);
        let none = SentenceGuards::from_terms(Vec::<String>::new());
        assert_eq!(segment_sentences("See Fig. 2 now.", &none).len(), 2);
    }

    #[test]
    fn word_count_examples() {
        assert_eq!(count_words("Cells were cultured as described [1]."), Ok(5));
        assert_eq!(count_words("X"), Ok(1));
        assert_eq!(count_words("a  b   c"), Ok(3));
        assert_eq!(count_words("Prior work (Smith et al., 2010; Lee 2012) agrees."), Ok(3));
        assert_eq!(count_words("Ranges [3]\u{2013}[6] too."), Ok(2));
        assert_eq!(count_words("[1], [2]."), Err(IngestError::EmptyAfterStripping));
    }

    fn article_with_types(types: &[&str]) -> ArticleRecord {
        ArticleRecord {
            doi: String::new(),
            title: String::new(),
            sections: Vec::new(),
            references: types
                .iter()
                .enumerate()
                .map(|(i, t)| ReferenceRecord {
                    ref_id: format!("r{i}"),
                    source_type_raw: t.to_string(),
                    journal_name_raw: String::new(),
                    journal_name_normalized: String::new(),
                    match_result: None,
                })
                .collect(),
            mentions: Vec::new(),
        }
    }

    fn with_ratio(journals: usize, total: usize) -> ArticleRecord {
        let mut t = vec!["journal"; journals];
        t.extend(std::iter::repeat_n("book", total - journals));
        article_with_types(&t)
    }

    #[test]
    fn ratio_filter_boundaries() {
        let aliases = SourceTypeAliases::default();
        let f = |a: &ArticleRecord, c| journal_ratio_filter(a, 0.8, c, &aliases).unwrap();
        assert!(f(&with_ratio(9, 10), RatioComparator::Strict).keep);
        let d = f(&with_ratio(8, 10), RatioComparator::Strict);
        assert!(!d.keep);
        assert!((d.ratio - 0.8).abs() < 1e-15);
        assert!(f(&with_ratio(8, 10), RatioComparator::Inclusive).keep);
        assert_eq!(
            journal_ratio_filter(&with_ratio(0, 0), 0.8, RatioComparator::Strict, &aliases),
            Err(FilterError::NoReferences)
        );
    }

    #[test]
    fn ratio_filter_fixture_corpus() {
        // ratios 1.0, 0.9, 0.8, 0.5, 0.81 -> brute force: only > 0.8 survive
        let corpus = [with_ratio(10, 10), with_ratio(9, 10), with_ratio(4, 5), with_ratio(1, 2), with_ratio(81, 100)];
        let expected = corpus
            .iter()
            .filter(|a| {
                let j = a.references.iter().filter(|r| r.source_type_raw == "journal").count();
                j * 100 > 80 * a.references.len()
            })
            .count();
        assert_eq!(expected, 3);
        let aliases = SourceTypeAliases::default();
        let kept = corpus
            .iter()
            .filter(|a| journal_ratio_filter(a, 0.8, RatioComparator::Strict, &aliases).unwrap().keep)
            .count();
        assert_eq!(kept, expected);
    }

    #[test]
    fn source_type_normalization() {
        let a = SourceTypeAliases::default();
        assert_eq!(a.normalize(" Journal. "), "journal");
        assert_eq!(a.normalize("jounal"), "journal");
        assert_eq!(a.normalize("Book"), "book");
        assert!(!a.is_journal("other"));
        assert!(a.clone().with_alias("jrnl", "journal").is_journal("JRNL"));
    }

    #[test]
    fn json_round_trip_is_idempotent() {
        let xml = jats(
            r#"<sec><title>2. Results &amp; Discussion</title><p>We saw it [<xref ref-type="bibr" rid="B1">1</xref>]. Again [<xref ref-type="bibr" rid="B1">1</xref>].</p></sec>"#,
            &journal_ref("B1", "journal", "J. Biol. Chem."),
        );
        let a = parse(&xml).article;
        let json = serde_json::to_string(&a).unwrap();
        let back: ArticleRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    proptest! {
        #[test]
        fn sentences_partition_non_whitespace(text in "[a-zA-Z .?!\n]{1,80}") {
            let g = SentenceGuards::default();
            let spans = segment_sentences(&text, &g);
            let mut covered = vec![false; text.len()];
            let mut last_end = 0;
            for (s, r) in &spans {
                prop_assert!(r.start >= last_end);
                prop_assert_eq!(*s, &text[r.clone()]);
                prop_assert!(!s.is_empty());
                for b in r.clone() { covered[b] = true; }
                last_end = r.end;
            }
            for (i, c) in text.char_indices() {
                if !c.is_whitespace() { prop_assert!(covered[i]); }
            }
        }

        #[test]
        fn word_count_is_positive_token_count(words in prop::collection::vec("[a-z]{1,6}", 1..12)) {
            let s = words.join("  ");
            prop_assert_eq!(count_words(&s), Ok(words.len() as u32));
        }
    }
}
