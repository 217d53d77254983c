//! First-level section heading normalization and section-type rules.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Section type of a first-level section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SectionType {
    I,
    M,
    R,
    D,
    MR,
    RD,
    /// Matched the invalid-heading stoplist.
    Excluded,
    /// No role keyword, or a role combination with no type.
    Unclassified,
}

impl SectionType {
    /// The six types metrics are computed for, in table column order.
    pub const COUNTED: [SectionType; 6] = [Self::I, Self::M, Self::R, Self::D, Self::MR, Self::RD];

    /// Column index for counted types.
    pub fn column(self) -> Option<usize> {
        Self::COUNTED.iter().position(|t| *t == self)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::I => "I",
            Self::M => "M",
            Self::R => "R",
            Self::D => "D",
            Self::MR => "MR",
            Self::RD => "RD",
            Self::Excluded => "Excluded",
            Self::Unclassified => "Unclassified",
        }
    }
}

impl fmt::Display for SectionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Lowercase, drop digits and punctuation, collapse whitespace.
///
/// Apostrophes are deleted outright; other punctuation becomes a space so
/// `Results/Discussion` keeps two words.
pub fn normalize_heading(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars().flat_map(char::to_lowercase) {
        if c == '\'' || c == '\u{2019}' || c.is_numeric() {
            continue;
        } else if c.is_alphabetic() && !c.is_uppercase() {
            out.push(c);
        } else {
            out.push(' ');
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RulesError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("keyword `{keyword}` assigned to both {first} and {second}")]
    Overlap {
        keyword: String,
        first: char,
        second: char,
    },
    #[error("keyword `{0}` must be lowercase")]
    NotLowercase(String),
}

/// Role keywords and the invalid-heading stoplist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeywordRules {
    pub i_keywords: BTreeSet<String>,
    pub m_keywords: BTreeSet<String>,
    pub r_keywords: BTreeSet<String>,
    pub d_keywords: BTreeSet<String>,
    pub invalid_headings: BTreeSet<String>,
}

fn set(words: &[&str]) -> BTreeSet<String> {
    words.iter().map(|w| w.to_string()).collect()
}

impl Default for KeywordRules {
    fn default() -> Self {
        Self {
            i_keywords: set(&["introduction", "overview", "background"]),
            m_keywords: set(&["methods", "materials"]),
            r_keywords: set(&["results", "findings"]),
            d_keywords: set(&["discussion", "conclusion", "conclusions"]),
            invalid_headings: set(&[
                "funding",
                "funding supporting information",
                "supporting information",
                "acknowledgments",
                "acknowledgements",
                "appendix",
                "references",
                "author contributions",
            ]),
        }
    }
}

impl KeywordRules {
    pub fn new(
        i_keywords: BTreeSet<String>,
        m_keywords: BTreeSet<String>,
        r_keywords: BTreeSet<String>,
        d_keywords: BTreeSet<String>,
        invalid_headings: BTreeSet<String>,
    ) -> Result<Self, RulesError> {
        let rules = Self {
            i_keywords,
            m_keywords,
            r_keywords,
            d_keywords,
            invalid_headings,
        };
        rules.validate()?;
        Ok(rules)
    }

    fn roles(&self) -> [(char, &BTreeSet<String>); 4] {
        [
            ('I', &self.i_keywords),
            ('M', &self.m_keywords),
            ('R', &self.r_keywords),
            ('D', &self.d_keywords),
        ]
    }

    fn validate(&self) -> Result<(), RulesError> {
        let roles = self.roles();
        for (_, words) in roles.iter().chain([('-', &self.invalid_headings)].iter()) {
            if let Some(w) = words.iter().find(|w| w.chars().any(char::is_uppercase)) {
                return Err(RulesError::NotLowercase(w.clone()));
            }
        }
        for (a, (ra, wa)) in roles.iter().enumerate() {
            for (rb, wb) in &roles[a + 1..] {
                if let Some(k) = wa.intersection(wb).next() {
                    return Err(RulesError::Overlap {
                        keyword: k.clone(),
                        first: *ra,
                        second: *rb,
                    });
                }
            }
        }
        Ok(())
    }

    /// Heading is normalized before lookup; callers may pass either form.
    pub fn classify(&self, heading: &str) -> SectionType {
        classify_heading(&normalize_heading(heading), self)
    }
}

/// Parse the rules text format:
///
/// ```text
/// [roles]
/// I = introduction, overview, background
/// M = methods, materials
/// R = results, findings
/// D = discussion, conclusion, conclusions
///
/// [stoplist]
/// acknowledgments
/// appendix
/// ```
///
/// `#` starts a comment. A role omitted from the file keeps no keywords.
impl FromStr for KeywordRules {
    type Err = RulesError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        #[derive(PartialEq)]
        enum Block {
            None,
            Roles,
            Stoplist,
        }
        let mut block = Block::None;
        let mut roles: [BTreeSet<String>; 4] = Default::default();
        let mut stoplist = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| RulesError::Syntax {
                line: line_no,
                message: message.to_string(),
            };
            if line.starts_with('[') && line.ends_with(']') {
                block = match line[1..line.len() - 1].trim() {
                    "roles" => Block::Roles,
                    "stoplist" => Block::Stoplist,
                    _ => return Err(syntax("unknown block (expected [roles] or [stoplist])")),
                };
                continue;
            }
            match block {
                Block::None => return Err(syntax("entry outside a block")),
                Block::Stoplist => {
                    stoplist.insert(normalize_heading(line));
                }
                Block::Roles => {
                    let (key, value) = line.split_once('=').ok_or_else(|| syntax("expected ROLE = words"))?;
                    let slot = match key.trim() {
                        "I" => 0,
                        "M" => 1,
                        "R" => 2,
                        "D" => 3,
                        _ => return Err(syntax("role must be one of I, M, R, D")),
                    };
                    for word in value.split(',').map(str::trim).filter(|w| !w.is_empty()) {
                        if word.chars().any(char::is_uppercase) {
                            return Err(RulesError::NotLowercase(word.to_string()));
                        }
                        roles[slot].insert(word.to_string());
                    }
                }
            }
        }
        let [i, m, r, d] = roles;
        Self::new(i, m, r, d, stoplist)
    }
}

fn contains_phrase(tokens: &[&str], phrase: &str) -> bool {
    let needle: Vec<&str> = phrase.split_whitespace().collect();
    !needle.is_empty() && tokens.windows(needle.len()).any(|w| w == needle.as_slice())
}

/// Assign a section type to a normalized heading.
///
/// Stoplisted headings are `Excluded`. Otherwise the roles whose keywords
/// occur as whole words decide: M+R gives `MR`, R+D gives `RD` (MR wins
/// when both apply), a single role gives that role, anything else is
/// `Unclassified`.
pub fn classify_heading(normalized_heading: &str, rules: &KeywordRules) -> SectionType {
    if normalized_heading.is_empty() {
        return SectionType::Unclassified;
    }
    if rules.invalid_headings.contains(normalized_heading) {
        return SectionType::Excluded;
    }
    let tokens: Vec<&str> = normalized_heading.split_whitespace().collect();
    let hit = |words: &BTreeSet<String>| words.iter().any(|w| contains_phrase(&tokens, w));
    let (i, m, r, d) = (
        hit(&rules.i_keywords),
        hit(&rules.m_keywords),
        hit(&rules.r_keywords),
        hit(&rules.d_keywords),
    );
    if m && r {
        return SectionType::MR;
    }
    if r && d {
        return SectionType::RD;
    }
    match (i, m, r, d) {
        (true, false, false, false) => SectionType::I,
        (false, true, false, false) => SectionType::M,
        (false, false, true, false) => SectionType::R,
        (false, false, false, true) => SectionType::D,
        _ => SectionType::Unclassified,
    }
}
